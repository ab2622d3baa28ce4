//! Quality universes, order statistics, margin predicates and the
//! rank-indexed thresholds consumed by the selection mechanisms.
//!
//! Items are identified by 1-based ids in `[1, K]`. A universe carries
//! the per-item scores `f(i, D)` together with the dataset size `n`; every
//! score is assumed to have sensitivity `1/n`, which the library trusts
//! rather than re-deriving from any dataset.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Privacy parameters `(alpha, delta)` for a single mechanism invocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub alpha: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    /// Budget for an approximate-DP mechanism: `alpha > 0`, `0 < delta < 1`.
    pub fn approximate(alpha: f64, delta: f64) -> Result<Self> {
        let budget = Self { alpha, delta };
        budget.require_approximate()?;
        Ok(budget)
    }

    /// Budget for a pure-DP mechanism (`delta = 0`).
    pub fn pure(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha, delta: 0.0 })
    }

    pub fn is_pure(&self) -> bool {
        self.delta == 0.0
    }

    pub(crate) fn require_approximate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidBudget(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// Accepts both pure (`delta = 0`) and approximate budgets.
    pub(crate) fn require_valid(&self) -> Result<()> {
        if self.delta == 0.0 {
            check_alpha(self.alpha)
        } else {
            self.require_approximate()
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidBudget(format!(
            "alpha must be positive and finite, got {alpha}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Dense {
        values: Vec<f64>,
        /// Zero-based indices sorted by (value desc, id asc).
        order: Vec<usize>,
    },
    Sparse {
        /// Explicit entries sorted by (value desc, id asc).
        ranked: Vec<(u64, f64)>,
        /// Explicit entries sorted by id.
        by_id: Vec<(u64, f64)>,
        fill: f64,
    },
}

/// Per-item quality scores `f(i, D)` over the universe `[1, K]`.
///
/// Sparse universes store `L <= K` explicit entries and an implicit fill
/// value for the remaining `K - L` items, so universes of combinatorial
/// size never materialize `K` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UniverseDoc", into = "UniverseDoc")]
pub struct QualityUniverse {
    k: u64,
    n: u64,
    repr: Repr,
}

impl QualityUniverse {
    /// Dense universe: item `i` has score `values[i - 1]`.
    pub fn dense(n: u64, values: Vec<f64>) -> Result<Self> {
        check_n(n)?;
        if values.is_empty() {
            return Err(Error::InvalidUniverse(
                "universe must contain at least one item".into(),
            ));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidUniverse(format!(
                "value of item {} is not finite",
                pos + 1
            )));
        }
        let mut order: Vec<usize> = (0..values.len()).collect();
        // Stable sort keeps ascending ids within ties.
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        Ok(Self {
            k: values.len() as u64,
            n,
            repr: Repr::Dense { values, order },
        })
    }

    /// Sparse universe from explicit `(id, value)` entries; every other item
    /// in `[1, k]` takes `fill`.
    pub fn sparse(k: u64, n: u64, entries: Vec<(u64, f64)>, fill: f64) -> Result<Self> {
        check_n(n)?;
        if k == 0 {
            return Err(Error::InvalidUniverse(
                "universe must contain at least one item".into(),
            ));
        }
        if !fill.is_finite() {
            return Err(Error::InvalidUniverse("fill value must be finite".into()));
        }
        if entries.len() as u64 > k {
            return Err(Error::InvalidUniverse(format!(
                "{} explicit entries exceed universe size {k}",
                entries.len()
            )));
        }
        for &(id, value) in &entries {
            if id == 0 || id > k {
                return Err(Error::InvalidUniverse(format!(
                    "item id {id} outside [1, {k}]"
                )));
            }
            if !value.is_finite() {
                return Err(Error::InvalidUniverse(format!(
                    "value of item {id} is not finite"
                )));
            }
            if value < fill {
                return Err(Error::InvalidUniverse(format!(
                    "explicit value {value} of item {id} is below the fill value {fill}"
                )));
            }
        }
        let mut by_id = entries;
        by_id.sort_by_key(|&(id, _)| id);
        if let Some(w) = by_id.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidUniverse(format!(
                "duplicate item id {}",
                w[0].0
            )));
        }
        let mut ranked = by_id.clone();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        Ok(Self {
            k,
            n,
            repr: Repr::Sparse {
                ranked,
                by_id,
                fill,
            },
        })
    }

    /// Sparse universe whose explicit values belong to items `1..=L` in
    /// order. The values must already be sorted in descending order.
    pub fn sparse_ranked(k: u64, n: u64, nonzeros: Vec<f64>, fill: f64) -> Result<Self> {
        if nonzeros.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidUniverse(
                "sparse values must be sorted in descending order".into(),
            ));
        }
        let entries = nonzeros
            .into_iter()
            .enumerate()
            .map(|(i, v)| (i as u64 + 1, v))
            .collect();
        Self::sparse(k, n, entries, fill)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("universe serialization is infallible")
    }

    /// Universe size `K`.
    pub fn k(&self) -> u64 {
        self.k
    }

    /// Dataset size `n`.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Declared sensitivity of every score, `1/n`.
    pub fn sensitivity(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.repr, Repr::Sparse { .. })
    }

    /// Number of explicitly stored values (`K` for dense universes).
    pub fn explicit_len(&self) -> u64 {
        match &self.repr {
            Repr::Dense { values, .. } => values.len() as u64,
            Repr::Sparse { ranked, .. } => ranked.len() as u64,
        }
    }

    /// Fill value of a sparse universe.
    pub fn fill(&self) -> Option<f64> {
        match &self.repr {
            Repr::Dense { .. } => None,
            Repr::Sparse { fill, .. } => Some(*fill),
        }
    }

    /// Number of items that take the implicit fill value.
    pub fn implicit_len(&self) -> u64 {
        self.k - self.explicit_len()
    }

    /// Dense score vector, if the universe is dense.
    pub fn dense_values(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Dense { values, .. } => Some(values),
            Repr::Sparse { .. } => None,
        }
    }

    /// Explicit entries sorted by (value desc, id asc). For dense
    /// universes this is every item.
    pub fn ranked_entries(&self) -> Vec<(u64, f64)> {
        match &self.repr {
            Repr::Dense { values, order } => {
                order.iter().map(|&i| (i as u64 + 1, values[i])).collect()
            }
            Repr::Sparse { ranked, .. } => ranked.clone(),
        }
    }

    /// Score of item `id`.
    pub fn value(&self, id: u64) -> Result<f64> {
        if id == 0 || id > self.k {
            return Err(Error::RankOutOfRange {
                rank: id,
                max: self.k,
            });
        }
        Ok(match &self.repr {
            Repr::Dense { values, .. } => values[(id - 1) as usize],
            Repr::Sparse { by_id, fill, .. } => match by_id.binary_search_by_key(&id, |e| e.0) {
                Ok(pos) => by_id[pos].1,
                Err(_) => *fill,
            },
        })
    }

    /// The `r`-th highest score, with `order_stat(K + 1) = -inf`.
    pub fn order_stat(&self, r: u64) -> Result<f64> {
        if r == 0 || r > self.k + 1 {
            return Err(Error::RankOutOfRange {
                rank: r,
                max: self.k + 1,
            });
        }
        if r == self.k + 1 {
            return Ok(f64::NEG_INFINITY);
        }
        let idx = (r - 1) as usize;
        Ok(match &self.repr {
            Repr::Dense { values, order } => values[order[idx]],
            Repr::Sparse { ranked, fill, .. } => ranked.get(idx).map_or(*fill, |e| e.1),
        })
    }

    /// Highest score, `order_stat(1)`.
    pub fn max_value(&self) -> f64 {
        self.order_stat(1).expect("rank 1 is always valid")
    }

    /// Whether `order_stat(ell + 1) < order_stat(1) - gamma`.
    pub fn satisfies_margin(&self, ell: u64, gamma: f64) -> Result<bool> {
        self.check_rank(ell)?;
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "margin width must be positive, got {gamma}"
            )));
        }
        Ok(self.order_stat(ell + 1)? < self.max_value() - gamma)
    }

    /// The `ell` highest-scoring item ids, in descending score order with
    /// ties broken by lowest id.
    pub fn top_set(&self, ell: u64) -> Result<Vec<u64>> {
        self.check_rank(ell)?;
        let ell = ell as usize;
        match &self.repr {
            Repr::Dense { order, .. } => Ok(order[..ell].iter().map(|&i| i as u64 + 1).collect()),
            Repr::Sparse {
                ranked,
                by_id,
                fill,
            } => {
                let above = ranked.partition_point(|e| e.1 > *fill);
                let mut out: Vec<u64> = ranked[..above.min(ell)].iter().map(|e| e.0).collect();
                // Remaining slots go to fill-valued items (explicit or
                // implicit) in ascending id order.
                let mut id = 1u64;
                while out.len() < ell {
                    let strictly_above = by_id
                        .binary_search_by_key(&id, |e| e.0)
                        .map(|pos| by_id[pos].1 > *fill)
                        .unwrap_or(false);
                    if !strictly_above {
                        out.push(id);
                    }
                    id += 1;
                }
                Ok(out)
            }
        }
    }

    /// Id of the `j`-th (zero-based, ascending) item without an explicit
    /// entry in a sparse universe.
    pub fn nth_implicit_id(&self, j: u64) -> Option<u64> {
        match &self.repr {
            Repr::Dense { .. } => None,
            Repr::Sparse { by_id, .. } => {
                if j >= self.implicit_len() {
                    return None;
                }
                // Explicit ids below position i leave (id - 1 - i) gaps.
                let (mut lo, mut hi) = (0usize, by_id.len());
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if by_id[mid].0 - 1 - mid as u64 <= j {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                Some(j + 1 + lo as u64)
            }
        }
    }

    /// Materialize every score as a dense universe (ids preserved).
    pub fn densify(&self) -> Result<Self> {
        match &self.repr {
            Repr::Dense { .. } => Ok(self.clone()),
            Repr::Sparse { .. } => {
                let k = usize::try_from(self.k)
                    .map_err(|_| Error::InvalidUniverse("universe too large to densify".into()))?;
                let values = (1..=k as u64).map(|id| self.value(id).unwrap()).collect();
                Self::dense(self.n, values)
            }
        }
    }

    pub(crate) fn check_rank(&self, r: u64) -> Result<()> {
        if r == 0 || r > self.k {
            Err(Error::RankOutOfRange {
                rank: r,
                max: self.k,
            })
        } else {
            Ok(())
        }
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidUniverse(
            "dataset size n must be positive".into(),
        ))
    } else {
        Ok(())
    }
}

/// On-disk JSON form of a universe.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UniverseDoc {
    Dense {
        k: u64,
        n: u64,
        values: Vec<f64>,
    },
    Sparse {
        k: u64,
        n: u64,
        nonzeros: Vec<f64>,
        fill: f64,
        /// Ids of the explicit values; defaults to `1..=L`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ids: Option<Vec<u64>>,
    },
}

impl TryFrom<UniverseDoc> for QualityUniverse {
    type Error = Error;

    fn try_from(doc: UniverseDoc) -> Result<Self> {
        match doc {
            UniverseDoc::Dense { k, n, values } => {
                if values.len() as u64 != k {
                    return Err(Error::InvalidUniverse(format!(
                        "k = {k} but {} values supplied",
                        values.len()
                    )));
                }
                Self::dense(n, values)
            }
            UniverseDoc::Sparse {
                k,
                n,
                nonzeros,
                fill,
                ids: None,
            } => Self::sparse_ranked(k, n, nonzeros, fill),
            UniverseDoc::Sparse {
                k,
                n,
                nonzeros,
                fill,
                ids: Some(ids),
            } => {
                if ids.len() != nonzeros.len() {
                    return Err(Error::LengthMismatch {
                        expected: nonzeros.len(),
                        got: ids.len(),
                    });
                }
                if nonzeros.windows(2).any(|w| w[0] < w[1]) {
                    return Err(Error::InvalidUniverse(
                        "sparse values must be sorted in descending order".into(),
                    ));
                }
                Self::sparse(k, n, ids.into_iter().zip(nonzeros).collect(), fill)
            }
        }
    }
}

impl From<QualityUniverse> for UniverseDoc {
    fn from(u: QualityUniverse) -> Self {
        match u.repr {
            Repr::Dense { values, .. } => UniverseDoc::Dense {
                k: u.k,
                n: u.n,
                values,
            },
            Repr::Sparse { ranked, fill, .. } => {
                let canonical = ranked.iter().enumerate().all(|(i, e)| e.0 == i as u64 + 1);
                let (ids, nonzeros): (Vec<u64>, Vec<f64>) = ranked.into_iter().unzip();
                UniverseDoc::Sparse {
                    k: u.k,
                    n: u.n,
                    nonzeros,
                    fill,
                    ids: (!canonical).then_some(ids),
                }
            }
        }
    }
}

/// Witness that a universe satisfied the `(ell, gamma)`-margin condition:
/// at most `ell` items score within `gamma` of the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginCertificate {
    pub ell: u64,
    pub gamma: f64,
}

impl MarginCertificate {
    /// Issue a certificate if `u` satisfies the condition.
    pub fn issue(u: &QualityUniverse, ell: u64, gamma: f64) -> Result<Option<Self>> {
        Ok(u.satisfies_margin(ell, gamma)?
            .then_some(Self { ell, gamma }))
    }

    pub fn holds_on(&self, u: &QualityUniverse) -> bool {
        u.satisfies_margin(self.ell, self.gamma).unwrap_or(false)
    }
}

/// Margin width `t` and search threshold `T` for rank `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    pub r: u64,
    pub margin_width: f64,
    pub search_threshold: f64,
}

/// Rank-`r` thresholds of the large margin mechanism for `(n, alpha, delta)`:
///
/// ```text
/// t(r) = (6/n) (1 + ln(3r/delta) / alpha)
/// T(r) = 3/(n alpha) ln(3/(2 delta)) + 6/(n alpha) ln(3/delta)
///      + 12/(n alpha) ln(3 r (r+1)/delta) + t(r)
/// ```
pub fn compute_thresholds(n: u64, budget: &PrivacyBudget, r: u64) -> Result<ThresholdPair> {
    budget.require_approximate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if r == 0 {
        return Err(Error::RankOutOfRange {
            rank: 0,
            max: u64::MAX,
        });
    }
    let PrivacyBudget { alpha, delta } = *budget;
    let n = n as f64;
    let rf = r as f64;
    let na = n * alpha;
    let margin_width = 6.0 / n * (1.0 + (3.0 * rf / delta).ln() / alpha);
    let search_threshold = 3.0 / na * (3.0 / (2.0 * delta)).ln()
        + 6.0 / na * (3.0 / delta).ln()
        + 12.0 / na * (3.0 * rf * (rf + 1.0) / delta).ln()
        + margin_width;
    Ok(ThresholdPair {
        r,
        margin_width,
        search_threshold,
    })
}

/// Selected item plus the diagnostics a mechanism exposes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismOutcome {
    pub item: u64,
    /// Noisy maximum estimate (large margin mechanism only).
    pub m: Option<f64>,
    /// Certified rank (large margin mechanism only).
    pub ell: Option<u64>,
    /// False when the large margin mechanism fell back to the plain
    /// exponential mechanism after exhausting its search cap.
    pub certified: bool,
    pub budget_used: PrivacyBudget,
}

impl MechanismOutcome {
    pub(crate) fn plain(item: u64, budget_used: PrivacyBudget) -> Self {
        Self {
            item,
            m: None,
            ell: None,
            certified: true,
            budget_used,
        }
    }

    /// The `(ell, t(ell))` margin claim behind a certified run.
    pub fn certificate(&self, n: u64) -> Option<MarginCertificate> {
        let ell = self.ell?;
        if !self.certified {
            return None;
        }
        let pair = compute_thresholds(n, &self.budget_used, ell).ok()?;
        Some(MarginCertificate {
            ell,
            gamma: pair.margin_width,
        })
    }

    pub fn to_record(&self, seed: u64) -> OutcomeRecord {
        OutcomeRecord {
            item: self.item,
            m: self.m,
            ell: self.ell,
            certified: self.certified,
            alpha: self.budget_used.alpha,
            delta: self.budget_used.delta,
            seed,
        }
    }
}

/// Serialized outcome:
/// `{"item", "m", "ell", "certified", "alpha", "delta", "seed"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub item: u64,
    pub m: Option<f64>,
    pub ell: Option<u64>,
    pub certified: bool,
    pub alpha: f64,
    pub delta: f64,
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense(values: &[f64]) -> QualityUniverse {
        QualityUniverse::dense(10, values.to_vec()).unwrap()
    }

    #[test]
    fn order_stat_examples() {
        let u = dense(&[0.5, 0.9, 0.9, 0.1]);
        assert_eq!(u.order_stat(2).unwrap(), 0.9);
        assert_eq!(u.order_stat(5).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(u.order_stat(0), Err(Error::RankOutOfRange { .. })));
        assert!(matches!(u.order_stat(6), Err(Error::RankOutOfRange { .. })));

        let s = QualityUniverse::sparse_ranked(1000, 10, vec![0.7, 0.4], 0.0).unwrap();
        assert_eq!(s.order_stat(1).unwrap(), 0.7);
        assert_eq!(s.order_stat(3).unwrap(), 0.0);
        assert_eq!(s.order_stat(1000).unwrap(), 0.0);
        assert_eq!(s.order_stat(1001).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn margin_examples() {
        assert!(dense(&[0.9, 0.9, 0.5, 0.1])
            .satisfies_margin(2, 0.3)
            .unwrap());
        assert!(!dense(&[0.9, 0.9]).satisfies_margin(1, 0.1).unwrap());
        let u = dense(&[0.3, 0.3, 0.3]);
        assert!(u.satisfies_margin(3, 1e9).unwrap());
        assert!(u.satisfies_margin(0, 0.1).is_err());
        assert!(u.satisfies_margin(1, 0.0).is_err());
    }

    #[test]
    fn top_set_examples() {
        assert_eq!(dense(&[0.1, 0.9, 0.9]).top_set(2).unwrap(), vec![2, 3]);
        assert_eq!(dense(&[0.5, 0.5, 0.5]).top_set(1).unwrap(), vec![1]);
        assert_eq!(dense(&[0.2, 0.5, 0.1]).top_set(3).unwrap(), vec![2, 1, 3]);
        assert!(dense(&[0.2]).top_set(2).is_err());
    }

    #[test]
    fn sparse_top_set_interleaves_fill_ties_by_id() {
        // item 5 explicit at the fill value, item 3 explicit above it
        let u = QualityUniverse::sparse(6, 4, vec![(3, 0.8), (5, 0.1)], 0.1).unwrap();
        assert_eq!(u.top_set(4).unwrap(), vec![3, 1, 2, 4]);
        assert_eq!(u.top_set(6).unwrap(), vec![3, 1, 2, 4, 5, 6]);
    }

    #[test]
    fn sparse_validation() {
        assert!(QualityUniverse::sparse_ranked(1, 5, vec![0.2, 0.1], 0.0).is_err());
        assert!(QualityUniverse::sparse_ranked(5, 5, vec![0.1, 0.2], 0.0).is_err());
        assert!(QualityUniverse::sparse(5, 5, vec![(1, -0.1)], 0.0).is_err());
        assert!(QualityUniverse::sparse(5, 5, vec![(1, 0.3), (1, 0.2)], 0.0).is_err());
        assert!(QualityUniverse::sparse(5, 5, vec![(6, 0.3)], 0.0).is_err());
        assert!(QualityUniverse::dense(5, vec![f64::NAN]).is_err());
        assert!(QualityUniverse::dense(0, vec![1.0]).is_err());
    }

    #[test]
    fn implicit_ids_skip_explicit_entries() {
        let u = QualityUniverse::sparse(8, 4, vec![(2, 0.5), (3, 0.4), (6, 0.2)], 0.0).unwrap();
        let implicit: Vec<u64> = (0..5).map(|j| u.nth_implicit_id(j).unwrap()).collect();
        assert_eq!(implicit, vec![1, 4, 5, 7, 8]);
        assert_eq!(u.nth_implicit_id(5), None);
    }

    #[test]
    fn json_forms() {
        let d = QualityUniverse::from_json_str(r#"{"k": 3, "n": 10, "values": [0.1, 0.3, 0.2]}"#)
            .unwrap();
        assert_eq!(d.top_set(1).unwrap(), vec![2]);
        let s = QualityUniverse::from_json_str(
            r#"{"k": 100, "n": 10, "nonzeros": [0.5, 0.2], "fill": 0.0}"#,
        )
        .unwrap();
        assert_eq!(s.order_stat(2).unwrap(), 0.2);
        assert_eq!(s.value(2).unwrap(), 0.2);
        assert_eq!(
            QualityUniverse::from_json_str(&s.to_json_string()).unwrap(),
            s
        );
        assert!(QualityUniverse::from_json_str(r#"{"k": 2, "n": 10, "values": [0.1]}"#).is_err());
    }

    #[test]
    fn thresholds_match_high_precision_oracle() {
        // Frozen from a 40-digit evaluation of the closed forms.
        let b = PrivacyBudget::approximate(1.0, 0.1).unwrap();
        let p = compute_thresholds(100, &b, 1).unwrap();
        let rel = |x: f64, y: f64| ((x - y) / y).abs();
        assert!(rel(p.margin_width, 0.264_071_842_899_729_32) < 1e-12);
        assert!(rel(p.search_threshold, 1.040_706_539_299_177) < 1e-12);

        let b = PrivacyBudget::approximate(1.0, 0.05).unwrap();
        let expected = [
            (0.061_132_134_746_665_207, 0.245_571_255_610_072_45),
            (0.069_449_900_913_384_56, 0.280_255_716_704_826_4),
            (0.074_315_482_210_682_53, 0.301_756_830_335_563_1),
        ];
        for (r, (t, big)) in (1..).zip(expected) {
            let p = compute_thresholds(500, &b, r).unwrap();
            assert!(rel(p.margin_width, t) < 1e-12);
            assert!(rel(p.search_threshold, big) < 1e-12);
        }
    }

    #[test]
    fn thresholds_reject_bad_budgets() {
        let bad = PrivacyBudget {
            alpha: 1.0,
            delta: 0.0,
        };
        assert!(compute_thresholds(10, &bad, 1).is_err());
        let bad = PrivacyBudget {
            alpha: -1.0,
            delta: 0.1,
        };
        assert!(compute_thresholds(10, &bad, 1).is_err());
        assert!(PrivacyBudget::approximate(1.0, 1.0).is_err());
        assert!(PrivacyBudget::pure(0.0).is_err());
    }

    fn values_strategy() -> impl Strategy<Value = Vec<f64>> {
        // Coarse grid so ties are common.
        prop::collection::vec((0u8..6).prop_map(|v| v as f64 / 5.0), 1..12)
    }

    proptest! {
        #[test]
        fn order_stat_nonincreasing(values in values_strategy()) {
            let u = dense(&values);
            let k = u.k();
            for r in 1..=k {
                prop_assert!(u.order_stat(r).unwrap() >= u.order_stat(r + 1).unwrap());
            }
            prop_assert_eq!(u.order_stat(k + 1).unwrap(), f64::NEG_INFINITY);
        }

        #[test]
        fn margin_is_monotone(values in values_strategy(), ell in 1u64..12, gamma in 0.01f64..1.0) {
            let u = dense(&values);
            let ell = ell.min(u.k());
            if u.satisfies_margin(ell, gamma).unwrap() {
                for wider in ell..=u.k() {
                    prop_assert!(u.satisfies_margin(wider, gamma).unwrap());
                    prop_assert!(u.satisfies_margin(wider, gamma / 2.0).unwrap());
                }
            }
        }

        #[test]
        fn top_set_is_stable_descending_prefix(values in values_strategy(), ell in 1u64..12) {
            let u = dense(&values);
            let ell = ell.min(u.k());
            let top = u.top_set(ell).unwrap();
            let mut ids: Vec<u64> = (1..=u.k()).collect();
            ids.sort_by(|a, b| values[(*b - 1) as usize].total_cmp(&values[(*a - 1) as usize]));
            prop_assert_eq!(&top[..], &ids[..ell as usize]);
            for i in &top {
                for j in (1..=u.k()).filter(|j| !top.contains(j)) {
                    prop_assert!(u.value(*i).unwrap() >= u.value(j).unwrap());
                }
            }
        }

        #[test]
        fn dense_and_sparse_agree(
            mut explicit in prop::collection::vec((1u8..6).prop_map(|v| v as f64 / 5.0), 0..6),
            tail in 0u64..6,
            ell in 1u64..12,
            gamma in 0.01f64..1.0,
        ) {
            explicit.sort_by(|a, b| b.total_cmp(a));
            let k = explicit.len() as u64 + tail;
            prop_assume!(k >= 1);
            let sparse = QualityUniverse::sparse_ranked(k, 10, explicit.clone(), 0.0).unwrap();
            let mut values = explicit;
            values.resize(k as usize, 0.0);
            let dense = dense(&values);
            let ell = ell.min(k);
            for r in 1..=k + 1 {
                prop_assert_eq!(sparse.order_stat(r).unwrap(), dense.order_stat(r).unwrap());
            }
            prop_assert_eq!(sparse.satisfies_margin(ell, gamma).unwrap(), dense.satisfies_margin(ell, gamma).unwrap());
            prop_assert_eq!(sparse.top_set(ell).unwrap(), dense.top_set(ell).unwrap());
            prop_assert_eq!(sparse.densify().unwrap(), dense);
        }

        #[test]
        fn thresholds_monotone_and_scale(n in 1u64..10_000, alpha in 0.01f64..5.0, delta in 0.001f64..0.99, r in 1u64..1000) {
            let b = PrivacyBudget::approximate(alpha, delta).unwrap();
            let p = compute_thresholds(n, &b, r).unwrap();
            let q = compute_thresholds(n, &b, r + 1).unwrap();
            prop_assert!(p.search_threshold >= p.margin_width && p.margin_width > 0.0);
            prop_assert!(q.margin_width > p.margin_width);
            prop_assert!(q.search_threshold > p.search_threshold);
            let h = compute_thresholds(2 * n, &b, r).unwrap();
            prop_assert!((h.margin_width * 2.0 - p.margin_width).abs() <= 1e-12 * p.margin_width);
            prop_assert!((h.search_threshold * 2.0 - p.search_threshold).abs() <= 1e-12 * p.search_threshold);
        }
    }
}
