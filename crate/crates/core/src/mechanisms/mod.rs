//! Randomized selection mechanisms.

mod baselines;
mod exponential;
mod large_margin;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use baselines::{gap_max_st13, max_of_laplaces, GapMechanismConfig};
pub use exponential::{
    expected_gap, exponential_mechanism, restricted_exponential, sample_log_weights,
};
pub use large_margin::{
    default_cap, large_margin_mechanism, margin_search, noisy_max_estimate, search_thresholds,
    utility_gap, utility_margin,
};

use crate::error::{Error, Result};
use crate::noise::NoiseSource;
use crate::quality::{MechanismOutcome, PrivacyBudget, QualityUniverse};

/// What a mechanism releases: an item, or `Fail` for mechanisms that may
/// decline to answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Release {
    Selected(MechanismOutcome),
    Fail,
}

impl Release {
    pub fn item(&self) -> Option<u64> {
        self.outcome().map(|o| o.item)
    }

    pub fn outcome(&self) -> Option<&MechanismOutcome> {
        match self {
            Release::Selected(o) => Some(o),
            Release::Fail => None,
        }
    }
}

/// Registered mechanism names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MechanismKind {
    /// Exponential mechanism.
    Em,
    /// Max of Laplaces (report noisy max).
    Mol,
    /// Gap mechanism with a `Fail` outcome.
    St13,
    /// Large margin mechanism.
    Lmm,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 4] = [Self::Em, Self::Mol, Self::St13, Self::Lmm];

    pub fn name(self) -> &'static str {
        match self {
            Self::Em => "em",
            Self::Mol => "mol",
            Self::St13 => "st13",
            Self::Lmm => "lmm",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown mechanism '{s}' (expected em, mol, st13 or lmm)"
                ))
            })
    }
}

/// A fully parameterized mechanism, runnable against any universe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mechanism", rename_all = "snake_case")]
pub enum Mechanism {
    Exponential {
        alpha: f64,
    },
    RestrictedExponential {
        alpha: f64,
        ell: u64,
    },
    MaxOfLaplaces {
        alpha: f64,
    },
    GapMax {
        budget: PrivacyBudget,
        config: GapMechanismConfig,
    },
    LargeMargin {
        budget: PrivacyBudget,
        cap: Option<u64>,
    },
}

impl Mechanism {
    /// Build a registered mechanism. Pure-DP mechanisms use only `alpha`.
    pub fn from_kind(kind: MechanismKind, budget: PrivacyBudget, cap: Option<u64>) -> Self {
        match kind {
            MechanismKind::Em => Self::Exponential {
                alpha: budget.alpha,
            },
            MechanismKind::Mol => Self::MaxOfLaplaces {
                alpha: budget.alpha,
            },
            MechanismKind::St13 => Self::GapMax {
                budget,
                config: GapMechanismConfig::default(),
            },
            MechanismKind::Lmm => Self::LargeMargin { budget, cap },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Exponential { .. } => "em",
            Self::RestrictedExponential { .. } => "restricted_em",
            Self::MaxOfLaplaces { .. } => "mol",
            Self::GapMax { .. } => "st13",
            Self::LargeMargin { .. } => "lmm",
        }
    }

    /// The privacy guarantee the mechanism is designed to meet.
    pub fn budget(&self) -> PrivacyBudget {
        match *self {
            Self::Exponential { alpha }
            | Self::RestrictedExponential { alpha, .. }
            | Self::MaxOfLaplaces { alpha } => PrivacyBudget { alpha, delta: 0.0 },
            Self::GapMax { budget, .. } | Self::LargeMargin { budget, .. } => budget,
        }
    }

    pub fn run(&self, u: &QualityUniverse, src: &mut NoiseSource) -> Result<Release> {
        let selected = match *self {
            Self::Exponential { alpha } => exponential_mechanism(u, alpha, src)?,
            Self::RestrictedExponential { alpha, ell } => {
                restricted_exponential(u, ell, alpha, src)?
            }
            Self::MaxOfLaplaces { alpha } => max_of_laplaces(u, alpha, src)?,
            Self::GapMax { budget, config } => return gap_max_st13(u, &budget, &config, src),
            Self::LargeMargin { budget, cap } => large_margin_mechanism(u, &budget, src, cap)?,
        };
        Ok(Release::Selected(selected))
    }
}
