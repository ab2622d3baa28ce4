//! Dataset constructions used as audit fixtures and utility benchmarks.

use std::collections::BTreeSet;

use super::NeighborPair;
use crate::error::{Error, Result};
use crate::quality::{compute_thresholds, PrivacyBudget, QualityUniverse};

/// Scores `f(i, D) = |{j : D_j >= i}| / n` over items `[1, K]`, where each
/// dataset entry is an item id. Scores are nonincreasing in `i`.
pub fn build_threshold_example(k: u64, entries: &[u64]) -> Result<QualityUniverse> {
    if entries.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(&bad) = entries.iter().find(|&&e| e == 0 || e > k) {
        return Err(Error::InvalidParameter(format!(
            "entry {bad} outside [1, {k}]"
        )));
    }
    let n = entries.len() as u64;
    let top = *entries.iter().max().unwrap();
    let mut sorted = entries.to_vec();
    sorted.sort_unstable();
    let values = (1..=top)
        .map(|i| {
            let below = sorted.partition_point(|&e| e < i);
            (entries.len() - below) as f64 / n as f64
        })
        .collect();
    QualityUniverse::sparse_ranked(k, n, values, 0.0)
}

/// Neighbor pair obtained by replacing entry `index` of a threshold-example
/// dataset.
pub fn threshold_example_pair(
    k: u64,
    entries: &[u64],
    index: usize,
    replacement: u64,
) -> Result<NeighborPair> {
    let old = *entries
        .get(index)
        .ok_or_else(|| Error::InvalidParameter(format!("entry index {index} out of range")))?;
    let mut changed = entries.to_vec();
    changed[index] = replacement;
    NeighborPair::new(
        build_threshold_example(k, entries)?,
        build_threshold_example(k, &changed)?,
        format!("threshold example: entry {index} changed from {old} to {replacement}"),
    )
}

/// A family of `ell` universes, each with a unique maximizer, any two of
/// which come from datasets differing in exactly `m` records.
#[derive(Debug, Clone)]
pub struct Lb2Family {
    pub ell: u64,
    pub n: u64,
    pub alpha: f64,
    pub k: u64,
    /// Number of records in which any two members differ.
    pub m: u64,
    pub members: Vec<QualityUniverse>,
}

/// Builds the family over items `[1, k]`: member `i` comes from the dataset
/// whose first `n/2` records are `[ell]`, the next `n/2 - m` are empty and
/// the last `m` are `{i}`, with `f(j, D)` the fraction of records
/// containing `j` and `m = floor(min(n/2, ln((ell-1)/2)/alpha))`.
pub fn build_lb2_family(ell: u64, n: u64, alpha: f64, k: u64) -> Result<Lb2Family> {
    if ell < 2 {
        return Err(Error::InvalidParameter(
            "family size ell must be at least 2".into(),
        ));
    }
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "n must be even and at least 2, got {n}"
        )));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if k < ell {
        return Err(Error::InvalidParameter(format!(
            "universe size {k} below family size {ell}"
        )));
    }
    let m_real = ((n / 2) as f64).min(((ell - 1) as f64 / 2.0).ln() / alpha);
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
    if !(m_real >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "degenerate family: m = floor({m_real}) < 1"
        )));
    }
    let m = m_real.floor() as u64;
    let mut family = Lb2Family {
        ell,
        n,
        alpha,
        k,
        m,
        members: Vec::with_capacity(ell as usize),
    };
    for i in 1..=ell {
        family
            .members
            .push(quality_from_records(k, &family.records(i))?);
    }
    Ok(family)
}

impl Lb2Family {
    /// Records of dataset `D^i` as item sets.
    pub fn records(&self, i: u64) -> Vec<BTreeSet<u64>> {
        let half = (self.n / 2) as usize;
        let all: BTreeSet<u64> = (1..=self.ell).collect();
        let mut records = vec![all; half];
        records.extend(std::iter::repeat_n(BTreeSet::new(), half - self.m as usize));
        records.extend(std::iter::repeat_n(BTreeSet::from([i]), self.m as usize));
        records
    }

    pub fn member(&self, i: u64) -> &QualityUniverse {
        &self.members[(i - 1) as usize]
    }

    /// Whether `delta <= (1 - e^-alpha) / (2 (ell - 1))`, the regime in
    /// which no `(alpha, delta)`-DP mechanism can succeed on every member.
    pub fn delta_in_hard_regime(&self, delta: f64) -> bool {
        delta <= (1.0 - (-self.alpha).exp()) / (2.0 * (self.ell - 1) as f64)
    }
}

/// `f(i, D)` = fraction of records containing item `i`.
pub fn quality_from_records(k: u64, records: &[BTreeSet<u64>]) -> Result<QualityUniverse> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut counts = std::collections::BTreeMap::<u64, u64>::new();
    for id in records.iter().flatten() {
        *counts.entry(*id).or_default() += 1;
    }
    let n = records.len() as u64;
    let entries = counts
        .into_iter()
        .map(|(id, c)| (id, c as f64 / n as f64))
        .collect();
    QualityUniverse::sparse(k, n, entries, 0.0)
}

/// Four-item neighbor pairs whose score gaps sit on the search thresholds
/// `T(1..3)`, so the margin search stops at different ranks with
/// non-negligible probability and top-set membership changes across the
/// pair.
pub fn margin_boundary_pairs(n: u64, budget: &PrivacyBudget) -> Result<Vec<NeighborPair>> {
    let t = |r| compute_thresholds(n, budget, r).map(|p| p.search_threshold);
    let (t1, t2, t3) = (t(1)?, t(2)?, t(3)?);
    let s = 1.0 / n as f64;
    let top = t3 + 1.0;
    let base = vec![top, top - t1, top - t2, top - t3];
    let dense = |v: Vec<f64>| QualityUniverse::dense(n, v);

    let shrink = vec![base[0] - s, base[1] + s, base[2] + s, base[3] + s];
    let widen = vec![base[0], base[1] - s, base[2], base[3]];
    let cross_left = vec![top, top - t1, top - t1 - s / 2.0, top - t3];
    let cross_right = vec![top, top - t1 - s, top - t1 + s / 2.0, top - t3];
    let tie_left = vec![top, top, top - t2, top - t3];
    let tie_right = vec![top, top - s, top - t2, top - t3];
    // Top three within the final draw's temperature, so the output is
    // genuinely random, with the rank-3 margin on T(3).
    let spread_left = vec![top, top - 2.0 * s, top - 4.0 * s, top - t3];
    let spread_right = vec![top - s, top - s, top - 3.0 * s, top - t3 + s];

    Ok(vec![
        NeighborPair::new(
            dense(base.clone())?,
            dense(shrink)?,
            "gaps on T(r); neighbor shrinks every gap by 2/n",
        )?,
        NeighborPair::new(
            dense(base)?,
            dense(widen)?,
            "gaps on T(r); neighbor widens the rank-1 gap by 1/n",
        )?,
        NeighborPair::new(
            dense(cross_left)?,
            dense(cross_right)?,
            "items 2 and 3 swap order across the pair",
        )?,
        NeighborPair::new(
            dense(tie_left)?,
            dense(tie_right)?,
            "tie at the top broken by the neighbor",
        )?,
        NeighborPair::new(
            dense(spread_left)?,
            dense(spread_right)?,
            "near-tied top three; rank-3 margin on T(3) shrinks",
        )?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_example_values() {
        let u = build_threshold_example(5, &[1, 1, 1]).unwrap();
        let values: Vec<f64> = (1..=5).map(|i| u.value(i).unwrap()).collect();
        assert_eq!(values, vec![1.0, 0.0, 0.0, 0.0, 0.0]);

        let u = build_threshold_example(4, &[4, 4]).unwrap();
        assert!((1..=4).all(|i| u.value(i).unwrap() == 1.0));

        let u = build_threshold_example(2, &[1, 2]).unwrap();
        assert_eq!((u.value(1).unwrap(), u.value(2).unwrap()), (1.0, 0.5));

        assert!(build_threshold_example(3, &[4]).is_err());
        assert!(build_threshold_example(3, &[0]).is_err());
        assert!(build_threshold_example(3, &[]).is_err());
    }

    #[test]
    fn threshold_example_neighbors_are_lipschitz() {
        let pair = threshold_example_pair(6, &[1, 2, 2, 5], 0, 6).unwrap();
        assert_eq!(pair.right().value(6).unwrap(), 0.25);
        assert!(threshold_example_pair(6, &[1], 3, 2).is_err());
    }

    #[test]
    fn lb2_family_values_and_margin() {
        let fam = build_lb2_family(9, 20, 0.5, 12).unwrap();
        assert_eq!(fam.m, 2);
        let d1 = fam.member(1);
        assert_eq!(d1.value(1).unwrap(), 0.6);
        assert!((2..=9).all(|j| d1.value(j).unwrap() == 0.5));
        assert!((10..=12).all(|j| d1.value(j).unwrap() == 0.0));
        let margin = fam.m as f64 / fam.n as f64;
        for i in 1..=fam.ell {
            let u = fam.member(i);
            assert_eq!(u.value(i).unwrap(), u.max_value());
            assert_eq!(u.top_set(1).unwrap(), vec![i]);
            // (ell, m/n)-margin: f(ell+1) = 0 < 0.6 - 0.1
            assert!(u.satisfies_margin(fam.ell, margin).unwrap());
        }
    }

    #[test]
    fn lb2_members_differ_in_exactly_m_records() {
        let fam = build_lb2_family(9, 20, 0.5, 9).unwrap();
        for i in 1..=fam.ell {
            for j in 1..=fam.ell {
                let diff = fam
                    .records(i)
                    .iter()
                    .zip(fam.records(j))
                    .filter(|(a, b)| *a != b)
                    .count();
                assert_eq!(diff as u64, if i == j { 0 } else { fam.m });
            }
        }
    }

    #[test]
    fn lb2_rejects_degenerate_inputs() {
        assert!(build_lb2_family(3, 20, 0.5, 3).is_err()); // ln(1) = 0
        assert!(build_lb2_family(9, 21, 0.5, 9).is_err());
        assert!(build_lb2_family(9, 20, 0.5, 8).is_err());
        assert!(build_lb2_family(1, 20, 0.5, 8).is_err());
        // n/2 caps m
        assert_eq!(build_lb2_family(1000, 4, 0.1, 1000).unwrap().m, 2);
    }

    #[test]
    fn boundary_pairs_are_valid_neighbors() {
        let b = PrivacyBudget::approximate(0.5, 0.05).unwrap();
        let pairs = margin_boundary_pairs(10, &b).unwrap();
        assert_eq!(pairs.len(), 5);
        let cross = &pairs[2];
        assert_eq!(cross.left().top_set(2).unwrap(), vec![1, 2]);
        assert_eq!(cross.right().top_set(2).unwrap(), vec![1, 3]);
    }
}
