//! Statistical falsification of `(alpha, delta)`-DP claims.
//!
//! An audit estimates a mechanism's output distribution on two neighboring
//! universes and checks, for every singleton outcome and both orientations,
//! `P(i) <= e^alpha P'(i) + delta` up to a Hoeffding slack at the requested
//! confidence.
//!
//! A failing audit is a bug signal. A passing audit is evidence, not proof:
//! only singleton outcome sets are checked, and only at the resolution the
//! trial count allows.

mod exact;
mod generators;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use exact::exact_distribution;
pub use generators::{
    build_lb2_family, build_threshold_example, margin_boundary_pairs, threshold_example_pair,
    Lb2Family,
};

use crate::error::{Error, Result};
use crate::mechanisms::{Mechanism, Release};
use crate::noise::NoiseMode;
use crate::quality::{PrivacyBudget, QualityUniverse};
use crate::trials;

/// A point in a mechanism's output space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Item(u64),
    Fail,
}

impl From<&Release> for Outcome {
    fn from(r: &Release) -> Self {
        match r {
            Release::Selected(o) => Outcome::Item(o.item),
            Release::Fail => Outcome::Fail,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Item(id) => write!(f, "{id}"),
            Outcome::Fail => f.write_str("fail"),
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "fail" {
            return Ok(Outcome::Fail);
        }
        s.parse()
            .map(Outcome::Item)
            .map_err(serde::de::Error::custom)
    }
}

/// Probabilities over outcomes; `trials` is `None` for exact distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub probabilities: BTreeMap<Outcome, f64>,
    pub trials: Option<u64>,
}

impl OutcomeDistribution {
    pub fn exact(probabilities: BTreeMap<Outcome, f64>) -> Self {
        Self {
            probabilities,
            trials: None,
        }
    }

    pub fn prob(&self, outcome: Outcome) -> f64 {
        self.probabilities.get(&outcome).copied().unwrap_or(0.0)
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        let support: BTreeSet<Outcome> = self
            .probabilities
            .keys()
            .chain(other.probabilities.keys())
            .copied()
            .collect();
        0.5 * support
            .iter()
            .map(|&o| (self.prob(o) - other.prob(o)).abs())
            .sum::<f64>()
    }
}

/// Empirical distribution of `mechanism` on `u` over `trials` seeded runs.
pub fn estimate_distribution(
    mechanism: &Mechanism,
    u: &QualityUniverse,
    trials: u64,
    seed: u64,
    mode: NoiseMode,
) -> Result<OutcomeDistribution> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let counts = trials::tally(trials, seed, mode, |src| {
        mechanism.run(u, src).map(|r| Outcome::from(&r))
    })?;
    let probabilities = counts
        .into_iter()
        .map(|(o, c)| (o, c as f64 / trials as f64))
        .collect();
    Ok(OutcomeDistribution {
        probabilities,
        trials: Some(trials),
    })
}

/// Two universes over the same items whose scores differ by at most `1/n`
/// per item, as produced by a single-record change.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborPair {
    left: QualityUniverse,
    right: QualityUniverse,
    provenance: String,
}

impl NeighborPair {
    pub fn new(
        left: QualityUniverse,
        right: QualityUniverse,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        check_within(&left, &right, 1)?;
        Ok(Self {
            left,
            right,
            provenance: provenance.into(),
        })
    }

    pub fn left(&self) -> &QualityUniverse {
        &self.left
    }

    pub fn right(&self) -> &QualityUniverse {
        &self.right
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }
}

/// Checks same `K`, same `n`, and `|left(i) - right(i)| <= steps / n`.
fn check_within(left: &QualityUniverse, right: &QualityUniverse, steps: u64) -> Result<()> {
    if left.k() != right.k() || left.n() != right.n() {
        return Err(Error::InvalidNeighborPair(format!(
            "shape mismatch: (K, n) = ({}, {}) vs ({}, {})",
            left.k(),
            left.n(),
            right.k(),
            right.n()
        )));
    }
    let limit = steps as f64 / left.n() as f64;
    let tolerance = limit * (1.0 + 1e-9) + 1e-15;
    let ids: BTreeSet<u64> = left
        .ranked_entries()
        .into_iter()
        .chain(right.ranked_entries())
        .map(|e| e.0)
        .collect();
    let check = |id: u64| -> Result<()> {
        let (a, b) = (left.value(id)?, right.value(id)?);
        if (a - b).abs() > tolerance {
            return Err(Error::InvalidNeighborPair(format!(
                "item {id} moves by {} > {limit}",
                (a - b).abs()
            )));
        }
        Ok(())
    };
    for &id in &ids {
        check(id)?;
    }
    if (ids.len() as u64) < left.k() {
        let fill_id = (1..=left.k())
            .find(|id| !ids.contains(id))
            .expect("some id is implicit in both");
        check(fill_id)?;
    }
    Ok(())
}

/// Monte Carlo settings shared by the audits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditSettings {
    pub trials: u64,
    /// Joint confidence level of the Hoeffding slacks, e.g. 0.99.
    pub confidence: f64,
    pub seed: u64,
    /// Largest slack the caller is willing to accept; the report flags
    /// `insufficient_trials` when the computed slack is larger. Without it
    /// the flag is raised only when the slack is vacuous (at least 1).
    pub max_slack: Option<f64>,
}

impl AuditSettings {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            confidence: 0.99,
            seed,
            max_slack: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        Ok(())
    }
}

/// Two-sided Hoeffding radius: `P(|p_hat - p| > r) <= failure` for `r =
/// sqrt(ln(2/failure) / (2 trials))`.
pub fn hoeffding_radius(trials: u64, failure: f64) -> f64 {
    ((2.0 / failure).ln() / (2.0 * trials as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AuditKind {
    /// Row check: `max(p_left, p_right) <= bound + slack` with
    /// `bound = e^alpha min(p_left, p_right) + delta`.
    ApproximateDp,
    /// Row check: `min(p_left, p_right) >= bound - slack` with
    /// `bound = e^(-k alpha) max(p_left, p_right) - delta / (1 - e^-alpha)`.
    GroupPrivacy { k: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub outcome: Outcome,
    pub p_left: f64,
    pub p_right: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    #[serde(flatten)]
    pub kind: AuditKind,
    pub mechanism: String,
    pub alpha: f64,
    pub delta: f64,
    /// `None` when both distributions are exact.
    pub trials: Option<u64>,
    pub confidence: f64,
    pub provenance: String,
    pub insufficient_trials: bool,
    pub rows: Vec<AuditRow>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn violations(&self) -> impl Iterator<Item = &AuditRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    /// CSV with columns `outcome,p_left,p_right,bound,slack,pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("outcome,p_left,p_right,bound,slack,pass\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.outcome, r.p_left, r.p_right, r.bound, r.slack, r.pass
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

// Absorbs floating-point error in exact comparisons.
const EXACT_TOLERANCE: f64 = 1e-12;

/// Compare two distributions under a claimed budget.
pub fn compare_distributions(
    left: &OutcomeDistribution,
    right: &OutcomeDistribution,
    kind: AuditKind,
    claimed: &PrivacyBudget,
    confidence: f64,
    max_slack: Option<f64>,
) -> AuditRowsBuilder {
    let support: BTreeSet<Outcome> = left
        .probabilities
        .keys()
        .chain(right.probabilities.keys())
        .copied()
        .collect();
    let outcomes = support.len().max(1) as f64;
    // Bonferroni over every per-outcome estimate on both sides.
    let failure = (1.0 - confidence) / (2.0 * outcomes);
    let radius = |d: &OutcomeDistribution| d.trials.map_or(0.0, |t| hoeffding_radius(t, failure));
    let (r_left, r_right) = (radius(left), radius(right));
    let alpha = claimed.alpha;

    let mut rows = Vec::with_capacity(support.len());
    let mut worst_slack: f64 = 0.0;
    for outcome in support {
        let (p_left, p_right) = (left.prob(outcome), right.prob(outcome));
        let (hi, lo) = if p_left >= p_right {
            (p_left, p_right)
        } else {
            (p_right, p_left)
        };
        let (r_hi, r_lo) = if p_left >= p_right {
            (r_left, r_right)
        } else {
            (r_right, r_left)
        };
        let (bound, slack, pass) = match kind {
            AuditKind::ApproximateDp => {
                let bound = alpha.exp() * lo + claimed.delta;
                let slack = r_hi + alpha.exp() * r_lo;
                (bound, slack, hi <= bound + slack + EXACT_TOLERANCE)
            }
            AuditKind::GroupPrivacy { k } => {
                let shrink = (-(k as f64) * alpha).exp();
                let bound = shrink * hi - claimed.delta / (1.0 - (-alpha).exp());
                let slack = r_lo + shrink * r_hi;
                (bound, slack, lo >= bound - slack - EXACT_TOLERANCE)
            }
        };
        worst_slack = worst_slack.max(slack);
        rows.push(AuditRow {
            outcome,
            p_left,
            p_right,
            bound,
            slack,
            pass,
        });
    }
    let insufficient = match max_slack {
        Some(m) => worst_slack > m,
        None => worst_slack >= 1.0,
    };
    AuditRowsBuilder {
        kind,
        claimed: *claimed,
        trials: left.trials.or(right.trials),
        confidence,
        insufficient,
        rows,
    }
}

/// Rows of a comparison awaiting labels.
pub struct AuditRowsBuilder {
    kind: AuditKind,
    claimed: PrivacyBudget,
    trials: Option<u64>,
    confidence: f64,
    insufficient: bool,
    rows: Vec<AuditRow>,
}

impl AuditRowsBuilder {
    pub fn finish(self, mechanism: &str, provenance: &str) -> AuditReport {
        AuditReport {
            kind: self.kind,
            mechanism: mechanism.to_string(),
            alpha: self.claimed.alpha,
            delta: self.claimed.delta,
            trials: self.trials,
            confidence: self.confidence,
            provenance: provenance.to_string(),
            insufficient_trials: self.insufficient,
            rows: self.rows,
        }
    }
}

/// Monte Carlo check of `(alpha, delta)`-DP on a neighbor pair, both
/// orientations, singleton outcomes.
pub fn check_approx_dp(
    pair: &NeighborPair,
    mechanism: &Mechanism,
    claimed: &PrivacyBudget,
    settings: &AuditSettings,
) -> Result<AuditReport> {
    settings.validate()?;
    claimed.require_valid()?;
    let (left, right) = estimate_pair(pair.left(), pair.right(), mechanism, settings)?;
    Ok(compare_distributions(
        &left,
        &right,
        AuditKind::ApproximateDp,
        claimed,
        settings.confidence,
        settings.max_slack,
    )
    .finish(mechanism.name(), pair.provenance()))
}

/// Exact (sampling-free) DP check for mechanisms with closed-form output
/// distributions.
pub fn check_approx_dp_exact(
    pair: &NeighborPair,
    mechanism: &Mechanism,
    claimed: &PrivacyBudget,
) -> Result<AuditReport> {
    claimed.require_valid()?;
    let left = exact_distribution(mechanism, pair.left())?;
    let right = exact_distribution(mechanism, pair.right())?;
    Ok(compare_distributions(
        &left,
        &right,
        AuditKind::ApproximateDp,
        claimed,
        1.0 - f64::EPSILON,
        None,
    )
    .finish(mechanism.name(), pair.provenance()))
}

/// Monte Carlo check of the group-privacy consequence of `(alpha, delta)`-DP
/// for universes `k` records apart:
/// `P(S) >= e^(-k alpha) P'(S) - delta / (1 - e^-alpha)`, both orientations.
pub fn check_group_privacy(
    u_far: &QualityUniverse,
    u_near: &QualityUniverse,
    k: u64,
    mechanism: &Mechanism,
    claimed: &PrivacyBudget,
    settings: &AuditSettings,
    provenance: &str,
) -> Result<AuditReport> {
    settings.validate()?;
    claimed.require_valid()?;
    check_within(u_far, u_near, k)?;
    if k == 0 && u_far != u_near {
        return Err(Error::InvalidNeighborPair(
            "k = 0 requires identical universes".into(),
        ));
    }
    let (far, near) = estimate_pair(u_far, u_near, mechanism, settings)?;
    Ok(compare_distributions(
        &far,
        &near,
        AuditKind::GroupPrivacy { k },
        claimed,
        settings.confidence,
        settings.max_slack,
    )
    .finish(mechanism.name(), provenance))
}

fn estimate_pair(
    left: &QualityUniverse,
    right: &QualityUniverse,
    mechanism: &Mechanism,
    settings: &AuditSettings,
) -> Result<(OutcomeDistribution, OutcomeDistribution)> {
    // Independent streams per side.
    let right_seed = settings.seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    Ok((
        estimate_distribution(
            mechanism,
            left,
            settings.trials,
            settings.seed,
            NoiseMode::Sampled,
        )?,
        estimate_distribution(
            mechanism,
            right,
            settings.trials,
            right_seed,
            NoiseMode::Sampled,
        )?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(pairs: &[(Outcome, f64)], trials: Option<u64>) -> OutcomeDistribution {
        OutcomeDistribution {
            probabilities: pairs.iter().copied().collect(),
            trials,
        }
    }

    #[test]
    fn identical_pair_passes() {
        let u = QualityUniverse::dense(10, vec![0.2, 0.5, 0.4]).unwrap();
        let pair = NeighborPair::new(u.clone(), u, "identical").unwrap();
        let mech = Mechanism::Exponential { alpha: 1.0 };
        let claimed = PrivacyBudget::pure(0.01).unwrap();
        let report =
            check_approx_dp(&pair, &mech, &claimed, &AuditSettings::new(20_000, 1)).unwrap();
        assert!(report.passed(), "{}", report.to_csv());
        assert!(check_approx_dp_exact(&pair, &mech, &claimed)
            .unwrap()
            .passed());
    }

    #[test]
    fn disjoint_point_masses_violate_pure_dp() {
        let left = dist(&[(Outcome::Item(1), 1.0)], Some(100_000));
        let right = dist(&[(Outcome::Item(2), 1.0)], Some(100_000));
        let claimed = PrivacyBudget::pure(1.0).unwrap();
        let report = compare_distributions(
            &left,
            &right,
            AuditKind::ApproximateDp,
            &claimed,
            0.99,
            None,
        )
        .finish("test", "disjoint");
        assert!(!report.passed());
        assert_eq!(report.violations().count(), 2);
    }

    #[test]
    fn slack_shrinks_with_trials_and_flags_when_vacuous() {
        assert!(hoeffding_radius(1_000_000, 0.01) < hoeffding_radius(1000, 0.01));
        let left = dist(&[(Outcome::Item(1), 0.5), (Outcome::Item(2), 0.5)], Some(1));
        let claimed = PrivacyBudget::pure(1.0).unwrap();
        let report =
            compare_distributions(&left, &left, AuditKind::ApproximateDp, &claimed, 0.99, None)
                .finish("test", "tiny");
        assert!(report.insufficient_trials);
        let report = compare_distributions(
            &left,
            &left,
            AuditKind::ApproximateDp,
            &claimed,
            0.99,
            Some(0.0),
        )
        .finish("test", "tiny");
        assert!(report.insufficient_trials);
    }

    #[test]
    fn neighbor_pair_enforces_lipschitz_witness() {
        let a = QualityUniverse::dense(10, vec![0.5, 0.3]).unwrap();
        let b = QualityUniverse::dense(10, vec![0.6, 0.2]).unwrap();
        let c = QualityUniverse::dense(10, vec![0.7, 0.3]).unwrap();
        assert!(NeighborPair::new(a.clone(), b, "ok").is_ok());
        assert!(NeighborPair::new(a.clone(), c, "too far").is_err());
        let d = QualityUniverse::dense(20, vec![0.5, 0.3]).unwrap();
        assert!(NeighborPair::new(a, d, "n differs").is_err());

        let s1 = QualityUniverse::sparse_ranked(1 << 30, 10, vec![0.5], 0.0).unwrap();
        let s2 = QualityUniverse::sparse(1 << 30, 10, vec![(1, 0.4), (77, 0.1)], 0.0).unwrap();
        assert!(NeighborPair::new(s1.clone(), s2, "sparse ok").is_ok());
        let s3 = QualityUniverse::sparse_ranked(1 << 30, 10, vec![0.5], 0.2).unwrap();
        assert!(NeighborPair::new(s1, s3, "fill jump").is_err());
    }

    #[test]
    fn group_check_with_k_zero_is_equality_check() {
        let u = QualityUniverse::dense(10, vec![0.2, 0.5, 0.4]).unwrap();
        let mech = Mechanism::Exponential { alpha: 1.0 };
        let claimed = PrivacyBudget::pure(1.0).unwrap();
        let report = check_group_privacy(
            &u,
            &u,
            0,
            &mech,
            &claimed,
            &AuditSettings::new(20_000, 2),
            "same",
        )
        .unwrap();
        assert!(report.passed());
        assert!(matches!(report.kind, AuditKind::GroupPrivacy { k: 0 }));
        let v = QualityUniverse::dense(10, vec![0.3, 0.5, 0.4]).unwrap();
        assert!(
            check_group_privacy(&u, &v, 0, &mech, &claimed, &AuditSettings::new(10, 2), "x")
                .is_err()
        );
    }

    #[test]
    fn report_serializes() {
        let left = dist(&[(Outcome::Item(1), 0.6), (Outcome::Fail, 0.4)], Some(1000));
        let claimed = PrivacyBudget::approximate(1.0, 0.1).unwrap();
        let report =
            compare_distributions(&left, &left, AuditKind::ApproximateDp, &claimed, 0.99, None)
                .finish("st13", "demo");
        let csv = report.to_csv();
        assert!(csv.starts_with("outcome,p_left,p_right,bound,slack,pass\n1,0.6,0.6,"));
        assert!(csv.contains("\nfail,0.4,"));
        let back: AuditReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
    }
}
