//! Frequent itemset selection: baskets of tokens become a sparse universe
//! over all size-`r` itemsets of the vocabulary.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::audit::NeighborPair;
use crate::error::{Error, Result};
use crate::quality::QualityUniverse;

/// Where the vocabulary (and hence the universe) came from. Only an
/// a-priori vocabulary makes the exponential mechanism end-to-end private;
/// the large margin mechanism never needs the universe in advance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniverseSource {
    DataDerived,
    APriori,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasketDataset {
    baskets: Vec<Vec<String>>,
    vocabulary: Vec<String>,
    max_basket_len: usize,
    source: UniverseSource,
}

fn normalize<S: AsRef<str>>(basket: impl IntoIterator<Item = S>) -> Vec<String> {
    basket
        .into_iter()
        .map(|s| s.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

impl BasketDataset {
    /// Vocabulary taken from the tokens that occur in the data.
    pub fn from_baskets<B, S>(baskets: impl IntoIterator<Item = B>) -> Result<Self>
    where
        B: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let baskets: Vec<Vec<String>> = baskets.into_iter().map(normalize).collect();
        if baskets.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let vocabulary = baskets
            .iter()
            .flatten()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let max_basket_len = baskets.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Self {
            baskets,
            vocabulary,
            max_basket_len,
            source: UniverseSource::DataDerived,
        })
    }

    /// Vocabulary fixed in advance; every basket token must belong to it.
    pub fn with_vocabulary<B, S>(
        baskets: impl IntoIterator<Item = B>,
        vocabulary: impl IntoIterator<Item = S>,
    ) -> Result<Self>
    where
        B: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut d = Self::from_baskets(baskets)?;
        let vocabulary = normalize(vocabulary);
        if let Some(t) = d
            .vocabulary
            .iter()
            .find(|t| vocabulary.binary_search(t).is_err())
        {
            return Err(Error::InvalidParameter(format!(
                "token '{t}' not in the vocabulary"
            )));
        }
        d.vocabulary = vocabulary;
        d.source = UniverseSource::APriori;
        Ok(d)
    }

    /// One basket per line, whitespace-separated tokens. Blank lines are
    /// skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let baskets: Vec<Vec<&str>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split_whitespace().collect())
            .collect();
        Self::from_baskets(baskets)
    }

    /// Adds `count` tokens that occur in no basket. This enlarges the
    /// universe without changing any score.
    pub fn with_unused_tokens(mut self, count: usize) -> Self {
        let mut vocab: BTreeSet<String> = self.vocabulary.into_iter().collect();
        let mut next = 0usize;
        let mut added = 0;
        while added < count {
            if vocab.insert(format!("~unused{next:08}")) {
                added += 1;
            }
            next += 1;
        }
        self.vocabulary = vocab.into_iter().collect();
        self
    }

    /// Raises the declared basket-length bound `B`.
    pub fn with_max_basket_len(mut self, b: usize) -> Result<Self> {
        if b < self.max_basket_len {
            return Err(Error::InvalidParameter(format!(
                "bound {b} below the longest basket ({})",
                self.max_basket_len
            )));
        }
        self.max_basket_len = b;
        Ok(self)
    }

    pub fn n(&self) -> u64 {
        self.baskets.len() as u64
    }

    pub fn baskets(&self) -> &[Vec<String>] {
        &self.baskets
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn max_basket_len(&self) -> usize {
        self.max_basket_len
    }

    pub fn source(&self) -> UniverseSource {
        self.source
    }

    fn token_index(&self, token: &str) -> Option<u64> {
        self.vocabulary
            .binary_search_by(|t| t.as_str().cmp(token))
            .ok()
            .map(|i| i as u64)
    }
}

pub fn load_baskets(path: impl AsRef<Path>) -> Result<BasketDataset> {
    BasketDataset::parse(&std::fs::read_to_string(path)?)
}

/// `C(n, k)`, or `None` on `u64` overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // c * (n - i) / (i + 1) stays integral at every step.
        c = c.checked_mul((n - i) as u128)? / (i + 1) as u128;
        if c > u64::MAX as u128 {
            return None;
        }
    }
    Some(c as u64)
}

/// Lexicographic combination ranking over `[0, v)`, offset to ids from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CombinationIndex {
    v: u64,
    r: u64,
    total: u64,
}

impl CombinationIndex {
    pub fn new(v: u64, r: u64) -> Result<Self> {
        if r == 0 || r > v {
            return Err(Error::InvalidParameter(format!(
                "itemset size {r} outside [1, {v}]"
            )));
        }
        let total = binomial(v, r)
            .ok_or_else(|| Error::InvalidParameter(format!("C({v}, {r}) overflows u64")))?;
        Ok(Self { v, r, total })
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Id of a strictly increasing index tuple.
    pub fn id_of(&self, combo: &[u64]) -> u64 {
        debug_assert_eq!(combo.len() as u64, self.r);
        let tail: u64 = combo
            .iter()
            .enumerate()
            .map(|(i, &c)| binomial(self.v - 1 - c, self.r - i as u64).expect("bounded by total"))
            .sum();
        self.total - tail
    }

    pub fn combo_of(&self, id: u64) -> Result<Vec<u64>> {
        if id == 0 || id > self.total {
            return Err(Error::RankOutOfRange {
                rank: id,
                max: self.total,
            });
        }
        let mut rest = id - 1;
        let mut combo = Vec::with_capacity(self.r as usize);
        let mut c = 0;
        for i in 0..self.r {
            loop {
                let block = binomial(self.v - 1 - c, self.r - 1 - i).expect("bounded by total");
                if rest < block {
                    break;
                }
                rest -= block;
                c += 1;
            }
            combo.push(c);
            c += 1;
        }
        Ok(combo)
    }
}

/// Sparse universe of size-`r` itemsets scored by supporting-basket
/// fraction, with the decoding tables needed to map ids back to tokens.
#[derive(Debug, Clone)]
pub struct ItemsetUniverse {
    pub universe: QualityUniverse,
    pub r: u64,
    pub index: CombinationIndex,
    /// No itemset of size `r` occurs in the data (`r > B`).
    pub no_support: bool,
    pub source: UniverseSource,
    vocabulary: Vec<String>,
}

impl ItemsetUniverse {
    pub fn decode(&self, id: u64) -> Result<Vec<String>> {
        Ok(self
            .index
            .combo_of(id)?
            .into_iter()
            .map(|c| self.vocabulary[c as usize].clone())
            .collect())
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Result<u64> {
        let mut combo = tokens
            .iter()
            .map(|t| {
                let t = t.as_ref();
                self.vocabulary
                    .binary_search_by(|v| v.as_str().cmp(t))
                    .map(|i| i as u64)
                    .map_err(|_| Error::InvalidParameter(format!("unknown token '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        combo.sort_unstable();
        combo.dedup();
        if combo.len() as u64 != self.r {
            return Err(Error::InvalidParameter(format!(
                "itemset must have {} distinct tokens",
                self.r
            )));
        }
        Ok(self.index.id_of(&combo))
    }

    /// Number of itemsets with nonzero support.
    pub fn support_len(&self) -> u64 {
        self.universe.explicit_len()
    }
}

pub fn itemset_quality(d: &BasketDataset, r: u64) -> Result<ItemsetUniverse> {
    let index = CombinationIndex::new(d.vocabulary.len() as u64, r)?;
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for basket in &d.baskets {
        let idx: Vec<u64> = basket
            .iter()
            .map(|t| d.token_index(t).expect("vocabulary covers baskets"))
            .collect();
        for combo in idx.into_iter().combinations(r as usize) {
            *counts.entry(index.id_of(&combo)).or_default() += 1;
        }
    }
    let n = d.n();
    let no_support = counts.is_empty();
    let entries = counts
        .into_iter()
        .map(|(id, c)| (id, c as f64 / n as f64))
        .collect();
    Ok(ItemsetUniverse {
        universe: QualityUniverse::sparse(index.len(), n, entries, 0.0)?,
        r,
        index,
        no_support,
        source: d.source,
        vocabulary: d.vocabulary.clone(),
    })
}

/// Replaces basket `index`. The vocabulary is kept, so both datasets index
/// the same universe.
pub fn basket_neighbor<S: AsRef<str>>(
    d: &BasketDataset,
    index: usize,
    replacement: &[S],
) -> Result<BasketDataset> {
    if index >= d.baskets.len() {
        return Err(Error::InvalidParameter(format!(
            "basket index {index} out of range"
        )));
    }
    let basket = normalize(replacement);
    if basket.len() > d.max_basket_len {
        return Err(Error::InvalidParameter(format!(
            "replacement has {} tokens, above the bound {}",
            basket.len(),
            d.max_basket_len
        )));
    }
    if let Some(t) = basket.iter().find(|t| d.token_index(t).is_none()) {
        return Err(Error::InvalidParameter(format!(
            "token '{t}' not in the vocabulary"
        )));
    }
    let mut out = d.clone();
    out.baskets[index] = basket;
    Ok(out)
}

/// Itemset universes of `d` and its neighbor as a checked neighbor pair.
pub fn basket_neighbor_pair<S: AsRef<str>>(
    d: &BasketDataset,
    index: usize,
    replacement: &[S],
    r: u64,
) -> Result<NeighborPair> {
    let other = basket_neighbor(d, index, replacement)?;
    NeighborPair::new(
        itemset_quality(d, r)?.universe,
        itemset_quality(&other, r)?.universe,
        format!("basket {index} replaced"),
    )
}
