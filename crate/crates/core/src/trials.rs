//! Seeded Monte Carlo drivers.
//!
//! Trial `t` always receives `NoiseSource::for_trial(seed, t, mode)`, so
//! results do not depend on how trials are scheduled across threads.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::Result;
use crate::noise::{NoiseMode, NoiseSource};

/// Number of trials for which `event` returns true.
pub fn count_events<F>(trials: u64, seed: u64, mode: NoiseMode, event: F) -> Result<u64>
where
    F: Fn(&mut NoiseSource) -> Result<bool> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| event(&mut NoiseSource::for_trial(seed, t, mode)).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Frequency of `event` over `trials` runs.
pub fn frequency<F>(trials: u64, seed: u64, mode: NoiseMode, event: F) -> Result<f64>
where
    F: Fn(&mut NoiseSource) -> Result<bool> + Sync,
{
    Ok(count_events(trials, seed, mode, event)? as f64 / trials as f64)
}

/// Per-trial values in trial order.
pub fn collect<F, T>(trials: u64, seed: u64, mode: NoiseMode, run: F) -> Result<Vec<T>>
where
    F: Fn(&mut NoiseSource) -> Result<T> + Sync,
    T: Send,
{
    (0..trials)
        .into_par_iter()
        .map(|t| run(&mut NoiseSource::for_trial(seed, t, mode)))
        .collect()
}

/// Mean of per-trial values, summed in trial order.
pub fn mean<F>(trials: u64, seed: u64, mode: NoiseMode, run: F) -> Result<f64>
where
    F: Fn(&mut NoiseSource) -> Result<f64> + Sync,
{
    let values = collect(trials, seed, mode, run)?;
    Ok(values.iter().sum::<f64>() / trials as f64)
}

/// Occurrence counts of each per-trial key.
pub fn tally<F, K>(trials: u64, seed: u64, mode: NoiseMode, run: F) -> Result<BTreeMap<K, u64>>
where
    F: Fn(&mut NoiseSource) -> Result<K> + Sync,
    K: Ord + Send,
{
    (0..trials)
        .into_par_iter()
        .map(|t| run(&mut NoiseSource::for_trial(seed, t, mode)))
        .try_fold(BTreeMap::new, |mut acc, key| {
            *acc.entry(key?).or_insert(0) += 1;
            Ok(acc)
        })
        .try_reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            Ok(a)
        })
}
