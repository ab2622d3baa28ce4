//! The exponential mechanism and its restriction to the top-`ell` items.
//!
//! Weights are `exp(n * alpha * f(i) / 2)`. All exponentiation happens
//! after subtracting the largest exponent, so `n * alpha * f` may exceed
//! the floating-point exponent range without overflow.

use crate::error::Result;
use crate::noise::NoiseSource;
use crate::quality::{check_alpha, MechanismOutcome, PrivacyBudget, QualityUniverse};

/// Index drawn with probability proportional to `exp(log_weights[i])`.
///
/// Uses one uniform. Under zero-override the first maximal index is
/// returned.
pub fn sample_log_weights(log_weights: &[f64], src: &mut NoiseSource) -> usize {
    assert!(!log_weights.is_empty());
    let (argmax, top) = first_max(log_weights);
    if src.is_zero_override() {
        return argmax;
    }
    let total: f64 = log_weights.iter().map(|w| (w - top).exp()).sum();
    let target = src.uniform() * total;
    let mut acc = 0.0;
    for (i, w) in log_weights.iter().enumerate() {
        acc += (w - top).exp();
        if target < acc {
            return i;
        }
    }
    // Rounding left the target at the very end of the mass.
    log_weights.len() - 1
}

fn first_max(xs: &[f64]) -> (usize, f64) {
    xs.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| {
            if x > best.1 {
                (i, x)
            } else {
                best
            }
        })
}

/// Exponent multiplier `n * alpha / 2` for a universe.
pub(crate) fn weight_scale(u: &QualityUniverse, alpha: f64) -> f64 {
    u.n() as f64 * alpha / 2.0
}

/// Sample item `i` with probability proportional to `exp(n alpha f(i) / 2)`.
pub fn exponential_mechanism(
    u: &QualityUniverse,
    alpha: f64,
    src: &mut NoiseSource,
) -> Result<MechanismOutcome> {
    check_alpha(alpha)?;
    let budget = PrivacyBudget::pure(alpha)?;
    if src.is_zero_override() {
        return Ok(MechanismOutcome::plain(u.top_set(1)?[0], budget));
    }
    let scale = weight_scale(u, alpha);
    let top = scale * u.max_value();

    if let Some(values) = u.dense_values() {
        let log_weights: Vec<f64> = values.iter().map(|v| scale * v).collect();
        let idx = sample_log_weights(&log_weights, src);
        return Ok(MechanismOutcome::plain(idx as u64 + 1, budget));
    }

    // Sparse: explicit entries plus a block of K - L items sharing the
    // fill weight.
    let entries = u.ranked_entries();
    let fill = u.fill().unwrap_or(0.0);
    let implicit = u.implicit_len();
    let fill_each = (scale * fill - top).exp();
    let explicit_mass: f64 = entries.iter().map(|e| (scale * e.1 - top).exp()).sum();
    let total = explicit_mass + implicit as f64 * fill_each;
    let target = src.uniform() * total;

    let mut acc = 0.0;
    for &(id, v) in &entries {
        acc += (scale * v - top).exp();
        if target < acc {
            return Ok(MechanismOutcome::plain(id, budget));
        }
    }
    if implicit == 0 {
        return Ok(MechanismOutcome::plain(entries.last().unwrap().0, budget));
    }
    let offset = ((target - explicit_mass).max(0.0) / fill_each).floor() as u64;
    let id = u
        .nth_implicit_id(offset.min(implicit - 1))
        .expect("offset is within the implicit block");
    Ok(MechanismOutcome::plain(id, budget))
}

/// Exact `E[f_max - f(I)]` under the exponential mechanism, summed term by
/// term so tiny gaps survive.
pub fn expected_gap(u: &QualityUniverse, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let scale = weight_scale(u, alpha);
    let top = u.max_value();
    let mut terms: Vec<(f64, f64)> = match u.dense_values() {
        Some(values) => values.iter().map(|&v| (1.0, v)).collect(),
        None => u
            .ranked_entries()
            .into_iter()
            .map(|(_, v)| (1.0, v))
            .collect(),
    };
    if u.is_sparse() && u.implicit_len() > 0 {
        terms.push((u.implicit_len() as f64, u.fill().unwrap_or(0.0)));
    }
    let mass = |(count, v): (f64, f64)| count * (scale * (v - top)).exp();
    let total: f64 = terms.iter().copied().map(mass).sum();
    Ok(terms.iter().map(|&t| mass(t) * (top - t.1)).sum::<f64>() / total)
}

/// Exponential mechanism over `top_set(u, ell)`; items outside the set get
/// probability exactly zero.
pub fn restricted_exponential(
    u: &QualityUniverse,
    ell: u64,
    alpha: f64,
    src: &mut NoiseSource,
) -> Result<MechanismOutcome> {
    check_alpha(alpha)?;
    let budget = PrivacyBudget::pure(alpha)?;
    let ids = u.top_set(ell)?;
    let scale = weight_scale(u, alpha);
    let log_weights = ids
        .iter()
        .map(|&id| u.value(id).map(|v| scale * v))
        .collect::<Result<Vec<f64>>>()?;
    let idx = sample_log_weights(&log_weights, src);
    Ok(MechanismOutcome::plain(ids[idx], budget))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_gap_closed_form() {
        // All-ones instance: gap = 1 - P(item 1).
        let sparse = QualityUniverse::sparse_ranked(100, 20, vec![1.0], 0.0).unwrap();
        let gap = expected_gap(&sparse, 0.5).unwrap();
        assert!((gap - (1.0 - 0.5998596018130347)).abs() < 1e-14);
        let dense = sparse.densify().unwrap();
        assert!((expected_gap(&dense, 0.5).unwrap() - gap).abs() < 1e-14);
        // Far-tail gaps stay positive instead of cancelling to zero.
        let wide = QualityUniverse::sparse_ranked(1 << 40, 1000, vec![0.6], 0.0).unwrap();
        let g = expected_gap(&wide, 1.0).unwrap();
        assert!(g > 0.0 && g < 1e-100);
    }

    #[test]
    fn single_item_is_certain() {
        let u = QualityUniverse::dense(5, vec![0.3]).unwrap();
        let mut src = NoiseSource::seeded(1);
        for _ in 0..20 {
            assert_eq!(exponential_mechanism(&u, 1.0, &mut src).unwrap().item, 1);
            assert_eq!(
                restricted_exponential(&u, 1, 1.0, &mut src).unwrap().item,
                1
            );
        }
    }

    #[test]
    fn huge_exponents_do_not_overflow() {
        let u = QualityUniverse::dense(1_000_000, vec![1000.0, 999.999, 0.0]).unwrap();
        let mut src = NoiseSource::seeded(3);
        let item = exponential_mechanism(&u, 10.0, &mut src).unwrap().item;
        assert_eq!(item, 1);
    }

    #[test]
    fn restricted_never_leaves_top_set() {
        let u = QualityUniverse::dense(2, vec![0.0, 1.0, 0.5, 0.9]).unwrap();
        let top = u.top_set(2).unwrap();
        let mut src = NoiseSource::seeded(11);
        for _ in 0..2000 {
            let item = restricted_exponential(&u, 2, 0.1, &mut src).unwrap().item;
            assert!(top.contains(&item));
        }
    }

    #[test]
    fn zero_override_picks_lowest_id_max() {
        let u = QualityUniverse::dense(5, vec![0.1, 0.7, 0.7]).unwrap();
        let mut src = NoiseSource::zero_override();
        assert_eq!(exponential_mechanism(&u, 1.0, &mut src).unwrap().item, 2);
        assert_eq!(
            restricted_exponential(&u, 3, 1.0, &mut src).unwrap().item,
            2
        );
    }

    #[test]
    fn sparse_tail_draws_land_on_implicit_ids() {
        // Flat universe: the explicit entry carries 1/K of the mass.
        let u = QualityUniverse::sparse(1000, 4, vec![(500, 0.0)], 0.0).unwrap();
        let mut src = NoiseSource::seeded(5);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..5000 {
            let item = exponential_mechanism(&u, 1.0, &mut src).unwrap().item;
            assert!((1..=1000).contains(&item));
            seen.insert(item);
        }
        assert!(seen.len() > 900);
    }

    #[test]
    fn rejects_bad_inputs() {
        let u = QualityUniverse::dense(5, vec![0.1, 0.2]).unwrap();
        let mut src = NoiseSource::seeded(0);
        assert!(exponential_mechanism(&u, 0.0, &mut src).is_err());
        assert!(restricted_exponential(&u, 3, 1.0, &mut src).is_err());
        assert!(restricted_exponential(&u, 0, 1.0, &mut src).is_err());
    }
}
