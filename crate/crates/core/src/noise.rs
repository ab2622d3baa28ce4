//! Seedable noise streams and Laplace sampling.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    Sampled,
    /// NON-PRIVATE: every uniform draw is 1/2, so every Laplace draw is 0
    /// and categorical draws return the most likely item.
    ZeroOverride,
}

#[derive(Debug, Clone)]
enum Stream {
    Sampled(Box<ChaCha8Rng>),
    Zero,
    Scripted(VecDeque<f64>),
}

/// A single-owner stream of uniform variates in the open interval (0, 1).
///
/// Identical seeds yield identical streams. Mechanisms consume draws in a
/// fixed documented order so runs can be replayed exactly.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    seed: u64,
    stream: Stream,
}

impl NoiseSource {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            stream: Stream::Sampled(Box::new(ChaCha8Rng::seed_from_u64(seed))),
        }
    }

    pub fn zero_override() -> Self {
        Self {
            seed: 0,
            stream: Stream::Zero,
        }
    }

    /// Replays the given uniforms in order; panics once they run out.
    pub fn scripted(uniforms: impl IntoIterator<Item = f64>) -> Self {
        Self {
            seed: 0,
            stream: Stream::Scripted(uniforms.into_iter().collect()),
        }
    }

    pub fn new(seed: u64, mode: NoiseMode) -> Self {
        match mode {
            NoiseMode::Sampled => Self::seeded(seed),
            NoiseMode::ZeroOverride => Self {
                seed,
                stream: Stream::Zero,
            },
        }
    }

    /// Source for trial `trial` of a Monte Carlo run: seed `base ^ trial`.
    pub fn for_trial(base: u64, trial: u64, mode: NoiseMode) -> Self {
        Self::new(base ^ trial, mode)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_zero_override(&self) -> bool {
        matches!(self.stream, Stream::Zero)
    }

    /// One uniform variate in (0, 1); endpoints are never returned.
    pub fn uniform(&mut self) -> f64 {
        match &mut self.stream {
            Stream::Sampled(rng) => loop {
                let u: f64 = rng.gen();
                if u > 0.0 {
                    return u;
                }
            },
            Stream::Zero => 0.5,
            Stream::Scripted(queue) => {
                let u = queue.pop_front().expect("scripted noise stream exhausted");
                assert!(u > 0.0 && u < 1.0, "scripted uniform {u} outside (0, 1)");
                u
            }
        }
    }

    pub fn laplace(&mut self, scale: f64) -> f64 {
        sample_laplace(scale, self)
    }
}

/// Inverse CDF of `Lap(scale)` at `u`.
pub fn laplace_from_uniform(u: f64, scale: f64) -> f64 {
    // Equal to -scale * sgn(u - 1/2) * ln(1 - 2|u - 1/2|), arranged so
    // uniforms near 0 keep their precision.
    if u < 0.5 {
        scale * (2.0 * u).ln()
    } else if u > 0.5 {
        -scale * (2.0 * (1.0 - u)).ln()
    } else {
        0.0
    }
}

/// Draw from the Laplace distribution with mean 0 and the given scale.
pub fn sample_laplace(scale: f64, src: &mut NoiseSource) -> f64 {
    debug_assert!(scale > 0.0);
    laplace_from_uniform(src.uniform(), scale)
}
