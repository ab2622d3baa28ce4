//! Hypothesis selection: a finite class scored by empirical accuracy, and
//! the shell decomposition that governs how much privacy costs.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::utility_margin;
use crate::quality::{PrivacyBudget, QualityUniverse};

pub const DEFAULT_C0: f64 = 1.0;
pub const DEFAULT_DELTA0: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisClass {
    hypotheses: Vec<Vec<bool>>,
    labels: Vec<bool>,
    d: u32,
}

impl HypothesisClass {
    pub fn new(hypotheses: Vec<Vec<bool>>, labels: Vec<bool>, d: u32) -> Result<Self> {
        if hypotheses.is_empty() || labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(h) = hypotheses.iter().find(|h| h.len() != labels.len()) {
            return Err(Error::LengthMismatch {
                expected: labels.len(),
                got: h.len(),
            });
        }
        if d == 0 {
            return Err(Error::InvalidParameter("d must be at least 1".into()));
        }
        Ok(Self {
            hypotheses,
            labels,
            d,
        })
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn sample_size(&self) -> u64 {
        self.labels.len() as u64
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn hypotheses(&self) -> &[Vec<bool>] {
        &self.hypotheses
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    /// Misclassified fraction of each hypothesis on the sample.
    pub fn empirical_errors(&self) -> Vec<f64> {
        let n = self.labels.len() as f64;
        self.hypotheses
            .iter()
            .map(|h| h.iter().zip(&self.labels).filter(|(p, y)| p != y).count() as f64 / n)
            .collect()
    }
}

/// `f(h) = 1 - err_hat(h)`, one item per hypothesis in class order.
pub fn empirical_quality(h: &HypothesisClass) -> Result<QualityUniverse> {
    QualityUniverse::dense(
        h.sample_size(),
        h.empirical_errors().into_iter().map(|e| 1.0 - e).collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellDecomposition {
    /// `|H(t)|` for `t = 0..=R`.
    pub shell_sizes: Vec<u64>,
    pub width: f64,
    pub min_err: f64,
    pub c0: f64,
    pub r: u64,
    pub delta0: f64,
    pub d: f64,
    pub n: u64,
}

impl ShellDecomposition {
    pub fn size(&self, t: u64) -> u64 {
        self.shell_sizes[t.min(self.r) as usize]
    }
}

/// `R = ceil(sqrt(n / (d ln n)))`.
pub fn shell_count(d: f64, n: u64) -> u64 {
    ((n as f64 / (d * (n as f64).ln())).sqrt().ceil() as u64).max(1)
}

pub fn shell_decomposition(
    errors: &[f64],
    d: f64,
    n: u64,
    delta0: f64,
    c0: f64,
) -> Result<ShellDecomposition> {
    if errors.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(c0 > 0.0 && c0.is_finite())
        || !(d >= 1.0 && d.is_finite())
        || n <= 1
        || !(delta0 > 0.0 && delta0 < 1.0)
    {
        return Err(Error::InvalidParameter(format!(
            "shell parameters need C0 > 0, d >= 1, n > 1, delta0 in (0,1); got C0={c0}, d={d}, n={n}, delta0={delta0}"
        )));
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidParameter("errors must be finite".into()));
    }
    let min_err = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let width = c0 * (d * (n as f64 / delta0).ln() / n as f64).sqrt();
    let r = shell_count(d, n);
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let shell_sizes = (0..=r)
        .map(|t| {
            // Small slack so points placed exactly on a radius count as inside.
            let radius = min_err + t as f64 * width;
            let limit = radius + 1e-12 * radius.abs().max(1.0);
            sorted.partition_point(|&e| e <= limit) as u64
        })
        .collect();
    Ok(ShellDecomposition {
        shell_sizes,
        width,
        min_err,
        c0,
        r,
        delta0,
        d,
        n,
    })
}

/// Constant `C` in the shell criterion obtained from the large margin
/// utility bound with `eta = delta`: `gamma*(ell) = C ln(ell/delta)/(n alpha)`.
pub fn derived_constant(n: u64, budget: &PrivacyBudget, ell: u64) -> Result<f64> {
    let gamma = utility_margin(n, budget, budget.delta, ell)?;
    let log_term = (ell as f64 / budget.delta).ln();
    Ok(n as f64 * budget.alpha * gamma / log_term)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TStar {
    pub t: u64,
    /// No `t < R` met the criterion; `t` is `R`.
    pub exhausted: bool,
    pub c: f64,
}

/// Smallest `t >= 1` with `(ln|H(t+1)| + ln(1/delta)) / t <= C0 alpha sqrt(d n ln n) / C`.
///
/// When `c` is `None` it is derived per candidate `t` from the large margin
/// bound at `ell = |H(t+1)|`; the reported `c` is the one used at the
/// returned `t`.
pub fn t_star(s: &ShellDecomposition, budget: &PrivacyBudget, c: Option<f64>) -> Result<TStar> {
    budget.require_approximate()?;
    if let Some(c) = c {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "C must be positive, got {c}"
            )));
        }
    }
    let n = s.n as f64;
    let scale = s.c0 * budget.alpha * (s.d * n * n.ln()).sqrt();
    let constant = |ell: u64| match c {
        Some(c) => Ok(c),
        None => derived_constant(s.n, budget, ell.max(1)),
    };
    for t in 1..s.r {
        let size = s.size(t + 1);
        let c_t = constant(size)?;
        let lhs = ((size as f64).ln() + (1.0 / budget.delta).ln()) / t as f64;
        if lhs <= scale / c_t {
            return Ok(TStar {
                t,
                exhausted: false,
                c: c_t,
            });
        }
    }
    Ok(TStar {
        t: s.r,
        exhausted: true,
        c: constant(s.size(s.r))?,
    })
}

/// Synthetic class description read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticClassSpec {
    pub num_hypotheses: usize,
    pub n: u64,
    pub d: u32,
    /// Target error of each hypothesis; its length must be `num_hypotheses`.
    pub error_profile: Vec<f64>,
}

impl SyntheticClassSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_hypotheses == 0 || self.n == 0 {
            return Err(Error::EmptyDataset);
        }
        if self.error_profile.len() != self.num_hypotheses {
            return Err(Error::LengthMismatch {
                expected: self.num_hypotheses,
                got: self.error_profile.len(),
            });
        }
        if self.error_profile.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::InvalidParameter(
                "error_profile entries must lie in [0, 1]".into(),
            ));
        }
        if self.d == 0 {
            return Err(Error::InvalidParameter("d must be at least 1".into()));
        }
        Ok(())
    }

    /// Random labels; hypothesis `j` disagrees with exactly
    /// `round(error_profile[j] * n)` of them, at random positions. The
    /// true errors are the realised empirical errors.
    pub fn generate(&self, seed: u64) -> Result<HypothesisClass> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.n as usize;
        let labels: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let hypotheses = self
            .error_profile
            .iter()
            .map(|&e| {
                let wrong = ((e * n as f64).round() as usize).min(n);
                let positions = rand::seq::index::sample(&mut rng, n, wrong);
                let mut h = labels.clone();
                for p in positions {
                    h[p] = !h[p];
                }
                h
            })
            .collect();
        HypothesisClass::new(hypotheses, labels, self.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empirical_quality_examples() {
        let labels = vec![
            true, false, true, true, false, false, true, false, true, true,
        ];
        let perfect = labels.clone();
        let wrong: Vec<bool> = labels.iter().map(|y| !y).collect();
        let mut three = labels.clone();
        for i in [0, 4, 7] {
            three[i] = !three[i];
        }
        let h = HypothesisClass::new(vec![perfect, wrong, three], labels, 2).unwrap();
        let q = empirical_quality(&h).unwrap();
        assert_eq!(q.dense_values().unwrap(), [1.0, 0.0, 0.7]);
        assert_eq!(q.n(), 10);
        assert!(matches!(
            HypothesisClass::new(vec![vec![true]], vec![true, false], 1),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn shell_examples() {
        let s = shell_decomposition(&[0.3], 1.0, 1000, 0.05, 1.0).unwrap();
        assert!(s.shell_sizes.iter().all(|&x| x == 1));
        assert_eq!(s.r, 13);
        assert_eq!(s.shell_sizes.len(), 14);

        let s = shell_decomposition(&[0.2; 7], 1.0, 1000, 0.05, 1.0).unwrap();
        assert!(s.shell_sizes.iter().all(|&x| x == 7));

        let w = shell_decomposition(&[0.1], 1.0, 1000, 0.05, 1.0)
            .unwrap()
            .width;
        let s = shell_decomposition(&[0.1, 0.1 + 1.5 * w, 0.1 + 2.5 * w], 1.0, 1000, 0.05, 1.0)
            .unwrap();
        assert_eq!(&s.shell_sizes[..5], &[1, 1, 2, 3, 3]);
        assert!(shell_decomposition(&[0.1], 1.0, 1, 0.05, 1.0).is_err());
        assert!(shell_decomposition(&[0.1], 0.5, 100, 0.05, 1.0).is_err());
    }

    fn brute_force_t_star(s: &ShellDecomposition, b: &PrivacyBudget, c: f64) -> (u64, bool) {
        let rhs = s.c0 * b.alpha * (s.d * s.n as f64 * (s.n as f64).ln()).sqrt() / c;
        for t in 1..s.r {
            let lhs = ((s.shell_sizes[t as usize + 1] as f64).ln() - b.delta.ln()) / t as f64;
            if lhs <= rhs {
                return (t, false);
            }
        }
        (s.r, true)
    }

    #[test]
    fn t_star_examples() {
        let s = shell_decomposition(&[0.1, 0.15, 0.3, 0.5], 1.0, 1000, 0.05, 1.0).unwrap();
        let big = PrivacyBudget::approximate(1e6, 0.05).unwrap();
        assert_eq!(t_star(&s, &big, Some(1.0)).unwrap().t, 1);
        let tiny = PrivacyBudget::approximate(1e-6, 0.05).unwrap();
        let out = t_star(&s, &tiny, Some(1.0)).unwrap();
        assert!(out.exhausted);
        assert_eq!(out.t, s.r);
        let mid = PrivacyBudget::approximate(0.01, 0.05).unwrap();
        for c in [10.0, 50.0, 100.0, 400.0] {
            let out = t_star(&s, &mid, Some(c)).unwrap();
            assert_eq!((out.t, out.exhausted), brute_force_t_star(&s, &mid, c));
        }
        assert!(t_star(&s, &mid, Some(0.0)).is_err());
        assert!(t_star(&s, &mid, None).unwrap().c > 0.0);
    }

    #[test]
    fn derived_constant_matches_margin() {
        let b = PrivacyBudget::approximate(1.0, 0.05).unwrap();
        let c = derived_constant(500, &b, 3).unwrap();
        let gamma = utility_margin(500, &b, 0.05, 3).unwrap();
        assert!((c * (3.0f64 / 0.05).ln() / 500.0 - gamma).abs() < 1e-12);
    }

    #[test]
    fn synthetic_class_hits_profile() {
        let spec = SyntheticClassSpec::from_json_str(
            r#"{"num_hypotheses": 3, "n": 200, "d": 1, "error_profile": [0.0, 0.25, 0.5]}"#,
        )
        .unwrap();
        let h = spec.generate(4).unwrap();
        assert_eq!(h.empirical_errors(), vec![0.0, 0.25, 0.5]);
        assert_eq!(spec.generate(4).unwrap(), h);
        assert!(SyntheticClassSpec::from_json_str(
            r#"{"num_hypotheses": 2, "n": 5, "d": 1, "error_profile": [0.1]}"#
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn shells_nondecreasing_and_bounded(errors in prop::collection::vec(0.0f64..1.0, 1..40), n in 2u64..5000) {
            let s = shell_decomposition(&errors, 1.0, n, 0.05, 1.0).unwrap();
            prop_assert!(s.shell_sizes.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(*s.shell_sizes.last().unwrap() <= errors.len() as u64);
            prop_assert!(s.shell_sizes[0] >= 1);
        }
    }
}
