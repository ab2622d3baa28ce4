//! The large margin mechanism and its three stages.
//!
//! A run splits the budget `alpha` into thirds:
//!
//! 1. [`noisy_max_estimate`] releases `m = f(1) + Z/n`, `Z ~ Lap(3/alpha)`.
//! 2. [`margin_search`] scans ranks `r = 1, 2, ...` and stops at the first
//!    `r` where `m - f(r+1) > (Z_r + G)/n + T(r)`, with
//!    `G ~ Lap(6/alpha)` and `Z_r ~ Lap(12/alpha)`.
//! 3. [`restricted_exponential`] samples from the top `ell` items with
//!    weights `exp(n alpha f / 6)`.
//!
//! Noise is consumed in the order `Z`, `G`, `Z_1`, `Z_2`, ..., then the
//! uniform of the final draw. `Z_r` is drawn only when rank `r` is tested.

use crate::error::{Error, Result};
use crate::mechanisms::exponential::{exponential_mechanism, restricted_exponential};
use crate::noise::NoiseSource;
use crate::quality::{
    check_alpha, compute_thresholds, MechanismOutcome, PrivacyBudget, QualityUniverse,
};

/// `f(1) + Z/n` with `Z ~ Lap(1/alpha)`.
pub fn noisy_max_estimate(u: &QualityUniverse, alpha: f64, src: &mut NoiseSource) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(u.max_value() + src.laplace(1.0 / alpha) / u.n() as f64)
}

/// Sparse-vector scan for the first rank whose margin clears its threshold.
///
/// `thresholds[r - 1]` is the threshold for rank `r`; exactly
/// `min(cap, K) - 1` of them must be supplied. Returns `K` when every rank
/// below `K` is tested without success. When a cap below `K` is reached
/// first, returns [`Error::CapExhausted`].
pub fn margin_search(
    u: &QualityUniverse,
    alpha: f64,
    m: f64,
    thresholds: &[f64],
    src: &mut NoiseSource,
    cap: Option<u64>,
) -> Result<u64> {
    check_alpha(alpha)?;
    let k = u.k();
    let limit = match cap {
        None => k,
        Some(c) if c >= 1 && c <= k => c,
        Some(c) => {
            return Err(Error::InvalidParameter(format!(
                "search cap {c} outside [1, {k}]"
            )));
        }
    };
    let expected = (limit - 1) as usize;
    if thresholds.len() != expected {
        return Err(Error::ThresholdCount {
            expected,
            got: thresholds.len(),
        });
    }
    let n = u.n() as f64;
    let g = src.laplace(2.0 / alpha);
    for (r, &theta) in (1..limit).zip(thresholds) {
        let z = src.laplace(4.0 / alpha);
        if m - u.order_stat(r + 1)? > (z + g) / n + theta {
            return Ok(r);
        }
    }
    if limit == k {
        Ok(k)
    } else {
        Err(Error::CapExhausted { cap: limit })
    }
}

/// Rank cap used when the caller does not supply one: `min(K, L + 1)` for
/// sparse universes, `K` for dense ones.
pub fn default_cap(u: &QualityUniverse) -> u64 {
    if u.is_sparse() {
        u.k().min(u.explicit_len() + 1)
    } else {
        u.k()
    }
}

/// Search thresholds `T(1), ..., T(limit - 1)` for the full budget.
pub fn search_thresholds(n: u64, budget: &PrivacyBudget, limit: u64) -> Result<Vec<f64>> {
    (1..limit)
        .map(|r| compute_thresholds(n, budget, r).map(|p| p.search_threshold))
        .collect()
}

/// Run the large margin mechanism with `(alpha, delta)`.
///
/// If the search reaches `cap` (see [`default_cap`]) without certifying a
/// margin, the item is drawn by the plain exponential mechanism over the
/// whole universe with the remaining `alpha/3`, and the outcome is marked
/// uncertified.
pub fn large_margin_mechanism(
    u: &QualityUniverse,
    budget: &PrivacyBudget,
    src: &mut NoiseSource,
    cap: Option<u64>,
) -> Result<MechanismOutcome> {
    budget.require_approximate()?;
    let limit = match cap {
        None => default_cap(u),
        Some(0) => {
            return Err(Error::InvalidParameter(
                "search cap must be at least 1".into(),
            ))
        }
        Some(c) => c.min(u.k()),
    };
    let thresholds = search_thresholds(u.n(), budget, limit)?;
    let third = budget.alpha / 3.0;

    let m = noisy_max_estimate(u, third, src)?;
    match margin_search(u, third, m, &thresholds, src, Some(limit)) {
        Ok(ell) => {
            let item = restricted_exponential(u, ell, third, src)?.item;
            Ok(MechanismOutcome {
                item,
                m: Some(m),
                ell: Some(ell),
                certified: true,
                budget_used: *budget,
            })
        }
        Err(Error::CapExhausted { .. }) => {
            let item = exponential_mechanism(u, third, src)?.item;
            Ok(MechanismOutcome {
                item,
                m: Some(m),
                ell: None,
                certified: false,
                budget_used: *budget,
            })
        }
        Err(e) => Err(e),
    }
}

/// Margin width under which a run is guaranteed (with probability
/// `1 - eta`) to stop at a rank no larger than `ell`:
/// `21/(n alpha) ln(3/eta) + T(ell)`.
pub fn utility_margin(n: u64, budget: &PrivacyBudget, eta: f64, ell: u64) -> Result<f64> {
    check_eta(eta)?;
    let pair = compute_thresholds(n, budget, ell)?;
    Ok(21.0 / (n as f64 * budget.alpha) * (3.0 / eta).ln() + pair.search_threshold)
}

/// Quality loss `6 ln(2 ell / eta) / (n alpha)` that holds with probability
/// `1 - eta` when the universe satisfies the `utility_margin` at `ell`.
pub fn utility_gap(n: u64, alpha: f64, eta: f64, ell: u64) -> Result<f64> {
    check_eta(eta)?;
    check_alpha(alpha)?;
    Ok(6.0 * (2.0 * ell as f64 / eta).ln() / (n as f64 * alpha))
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "eta must lie in (0, 1), got {eta}"
        )))
    }
}
