use std::collections::BTreeMap;

use super::{Outcome, OutcomeDistribution};
use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::quality::QualityUniverse;

const MAX_EXACT_ITEMS: u64 = 1 << 20;

/// Closed-form output distribution, for mechanisms that have one
/// (exponential, restricted exponential, gap mechanism).
pub fn exact_distribution(
    mechanism: &Mechanism,
    u: &QualityUniverse,
) -> Result<OutcomeDistribution> {
    if u.k() > MAX_EXACT_ITEMS {
        return Err(Error::InvalidParameter(format!(
            "exact distributions are limited to {MAX_EXACT_ITEMS} items"
        )));
    }
    match *mechanism {
        Mechanism::Exponential { alpha } => {
            Ok(softmax_over(u, &(1..=u.k()).collect::<Vec<_>>(), alpha))
        }
        Mechanism::RestrictedExponential { alpha, ell } => {
            Ok(softmax_over(u, &u.top_set(ell)?, alpha))
        }
        Mechanism::GapMax { budget, config } => {
            budget.require_approximate()?;
            let n = u.n() as f64;
            let gap = u.max_value() - u.order_stat(2)?;
            let scale = config.noise_scale_multiplier / (n * budget.alpha);
            // P(gap + Lap(scale) > threshold)
            let x = config.threshold(u.n(), &budget) - gap;
            let select = if x >= 0.0 {
                0.5 * (-x / scale).exp()
            } else {
                1.0 - 0.5 * (x / scale).exp()
            };
            let mut probabilities = BTreeMap::new();
            probabilities.insert(Outcome::Item(u.top_set(1)?[0]), select);
            probabilities.insert(Outcome::Fail, 1.0 - select);
            Ok(OutcomeDistribution::exact(probabilities))
        }
        _ => Err(Error::InvalidParameter(format!(
            "no closed-form distribution for mechanism '{}'",
            mechanism.name()
        ))),
    }
}

fn softmax_over(u: &QualityUniverse, ids: &[u64], alpha: f64) -> OutcomeDistribution {
    let scale = u.n() as f64 * alpha / 2.0;
    let values: Vec<f64> = ids
        .iter()
        .map(|&id| u.value(id).expect("id from universe"))
        .collect();
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = values.iter().map(|v| (scale * (v - top)).exp()).collect();
    let total: f64 = weights.iter().sum();
    OutcomeDistribution::exact(
        ids.iter()
            .zip(weights)
            .map(|(&id, w)| (Outcome::Item(id), w / total))
            .collect(),
    )
}
