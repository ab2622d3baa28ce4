//! Differentially private selection of a near-maximal item.
//!
//! The central piece is [`large_margin_mechanism`], whose privacy cost
//! depends on the number of items near the maximum rather than on the
//! universe size. Baselines, an empirical privacy auditor, adversarial
//! dataset generators and two application drivers sit around it.

pub mod applications;
pub mod audit;
pub mod error;
pub mod mechanisms;
pub mod noise;
pub mod quality;
pub mod trials;

pub use error::{Error, Result};
pub use mechanisms::{
    default_cap, expected_gap, exponential_mechanism, gap_max_st13, large_margin_mechanism,
    margin_search, max_of_laplaces, noisy_max_estimate, restricted_exponential, search_thresholds,
    utility_gap, utility_margin, GapMechanismConfig, Mechanism, MechanismKind, Release,
};
pub use noise::{NoiseMode, NoiseSource};
pub use quality::{
    compute_thresholds, MarginCertificate, MechanismOutcome, OutcomeRecord, PrivacyBudget,
    QualityUniverse, ThresholdPair,
};
