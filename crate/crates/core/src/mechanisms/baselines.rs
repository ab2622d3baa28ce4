//! Baselines: report-noisy-max over Laplace noise and a gap-testing
//! mechanism that either releases the maximizer or fails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::Release;
use crate::noise::{laplace_from_uniform, NoiseSource};
use crate::quality::{check_alpha, MechanismOutcome, PrivacyBudget, QualityUniverse};

/// Adds independent `Lap(2/(n alpha))` noise to every score and returns
/// the noisy argmax (lowest id on ties).
///
/// For sparse universes the `K - L` fill-valued items are handled as a
/// block: their noisy maximum is drawn directly from the distribution of
/// the maximum of `K - L` iid Laplace variates, and the winning item is
/// uniform within the block. This has the same output distribution as
/// noising every item. Draw order: explicit items by ascending id, then the
/// block maximum, then the block index.
pub fn max_of_laplaces(
    u: &QualityUniverse,
    alpha: f64,
    src: &mut NoiseSource,
) -> Result<MechanismOutcome> {
    check_alpha(alpha)?;
    let budget = PrivacyBudget::pure(alpha)?;
    if src.is_zero_override() {
        return Ok(MechanismOutcome::plain(u.top_set(1)?[0], budget));
    }
    let scale = 2.0 / (u.n() as f64 * alpha);

    let mut best: (u64, f64) = (0, f64::NEG_INFINITY);
    let mut consider = |id: u64, noisy: f64| {
        if noisy > best.1 || (noisy == best.1 && id < best.0) {
            best = (id, noisy);
        }
    };

    if let Some(values) = u.dense_values() {
        for (i, v) in values.iter().enumerate() {
            consider(i as u64 + 1, v + src.laplace(scale));
        }
        return Ok(MechanismOutcome::plain(best.0, budget));
    }

    let mut by_id = u.ranked_entries();
    by_id.sort_by_key(|e| e.0);
    for (id, v) in by_id {
        consider(id, v + src.laplace(scale));
    }
    let block = u.implicit_len();
    if block > 0 {
        let noisy = u.fill().unwrap_or(0.0) + max_of_iid_laplace(block, scale, src.uniform());
        let offset = ((src.uniform() * block as f64) as u64).min(block - 1);
        let id = u.nth_implicit_id(offset).expect("offset within block");
        consider(id, noisy);
    }
    Ok(MechanismOutcome::plain(best.0, budget))
}

/// Maximum of `count` iid `Lap(scale)` variates from one uniform, via the
/// quantile of `F^count`.
fn max_of_iid_laplace(count: u64, scale: f64, u: f64) -> f64 {
    // Upper-tail probability 1 - u^(1/count), kept accurate for huge counts.
    let tail = -(u.ln() / count as f64).exp_m1();
    if tail < 0.5 {
        -scale * (2.0 * tail).ln()
    } else {
        laplace_from_uniform(1.0 - tail, scale)
    }
}

/// Constants of the gap mechanism. The noise has scale
/// `noise_scale_multiplier / (n alpha)` and the release threshold is
/// `fail_threshold_multiplier * ln(1/delta) / (n alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapMechanismConfig {
    pub noise_scale_multiplier: f64,
    pub fail_threshold_multiplier: f64,
}

impl Default for GapMechanismConfig {
    fn default() -> Self {
        Self {
            noise_scale_multiplier: 2.0,
            fail_threshold_multiplier: 2.0,
        }
    }
}

impl GapMechanismConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if ok(self.noise_scale_multiplier) && ok(self.fail_threshold_multiplier) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "gap mechanism multipliers must be positive".into(),
            ))
        }
    }

    pub fn threshold(&self, n: u64, budget: &PrivacyBudget) -> f64 {
        self.fail_threshold_multiplier * (1.0 / budget.delta).ln() / (n as f64 * budget.alpha)
    }
}

/// Releases the maximizer when the noisy gap between the two highest
/// scores exceeds the configured threshold, otherwise [`Release::Fail`].
pub fn gap_max_st13(
    u: &QualityUniverse,
    budget: &PrivacyBudget,
    cfg: &GapMechanismConfig,
    src: &mut NoiseSource,
) -> Result<Release> {
    budget.require_approximate()?;
    cfg.validate()?;
    let n = u.n();
    // order_stat(2) is -inf when K = 1, so a lone item always clears.
    let gap = u.max_value() - u.order_stat(2)?;
    let noisy = gap + src.laplace(cfg.noise_scale_multiplier / (n as f64 * budget.alpha));
    if noisy > cfg.threshold(n, budget) {
        Ok(Release::Selected(MechanismOutcome::plain(
            u.top_set(1)?[0],
            *budget,
        )))
    } else {
        Ok(Release::Fail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mol_zero_override_is_argmax() {
        let u = QualityUniverse::dense(10, vec![0.1, 0.8, 0.8, 0.3]).unwrap();
        let out = max_of_laplaces(&u, 1.0, &mut NoiseSource::zero_override()).unwrap();
        assert_eq!(out.item, 2);
    }

    #[test]
    fn block_maximum_matches_brute_force_maximum() {
        // Median of the max of N iid Lap(1): F(x)^N = 1/2.
        for count in [1u64, 2, 10, 1000] {
            let x = max_of_iid_laplace(count, 1.0, 0.5);
            let cdf = if x < 0.0 {
                0.5 * x.exp()
            } else {
                1.0 - 0.5 * (-x).exp()
            };
            assert!((cdf.powf(count as f64) - 0.5).abs() < 1e-12);
        }
        // Tiny tails for enormous blocks stay finite.
        assert!(max_of_iid_laplace(1 << 60, 1.0, 0.5).is_finite());
    }

    #[test]
    fn sparse_mol_mostly_picks_clear_winner() {
        let u = QualityUniverse::sparse_ranked(1_000_000, 500, vec![1.0], 0.0).unwrap();
        let mut src = NoiseSource::seeded(9);
        let hits = (0..200)
            .filter(|_| max_of_laplaces(&u, 1.0, &mut src).unwrap().item == 1)
            .count();
        assert_eq!(hits, 200);
    }

    #[test]
    fn gap_mechanism_examples() {
        let b = PrivacyBudget::approximate(1.0, 0.05).unwrap();
        let cfg = GapMechanismConfig::default();
        let mut zero = NoiseSource::zero_override();
        let wide = QualityUniverse::dense(100, vec![0.1, 5.0, 0.2]).unwrap();
        assert_eq!(
            gap_max_st13(&wide, &b, &cfg, &mut zero).unwrap().item(),
            Some(2)
        );
        let tied = QualityUniverse::dense(100, vec![0.5, 0.5, 0.2]).unwrap();
        assert_eq!(
            gap_max_st13(&tied, &b, &cfg, &mut zero).unwrap(),
            Release::Fail
        );
        let single = QualityUniverse::dense(100, vec![0.5]).unwrap();
        assert_eq!(
            gap_max_st13(&single, &b, &cfg, &mut NoiseSource::seeded(1))
                .unwrap()
                .item(),
            Some(1)
        );
        let bad = GapMechanismConfig {
            noise_scale_multiplier: 0.0,
            ..cfg
        };
        assert!(gap_max_st13(&wide, &b, &bad, &mut zero).is_err());
    }
}
