//! Asymptotic 2x2 losses, formally optimal shrinkers, hard thresholds and the
//! observable shrinkage rules built on them.

use core::fmt;
use core::str::FromStr;

use alloc::string::String;

use crate::error::{contract, Error, Result};
use crate::spike_maps::Framework;

mod loss;
mod optimal;
mod rule;
mod threshold;

pub use loss::{two_by_two_loss, Flavor, TwoByTwoLossInput};
pub use optimal::{optimal_eta_formal, optimal_loss_formal, rank_aware_loss, regret_and_improvement};
pub use rule::{shrink_eigenvalue, OperatorThreshold, RuleKind, ShrinkageRule, ThresholdChoice};
pub use threshold::{agnostic_threshold, optimal_threshold, threshold_crossing_spike};

/// Matrix norm applied to a pivot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Norm {
    Frobenius,
    Operator,
    Nuclear,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::Frobenius, Norm::Operator, Norm::Nuclear];

    pub fn letter(&self) -> &'static str {
        match self {
            Norm::Frobenius => "F",
            Norm::Operator => "O",
            Norm::Nuclear => "N",
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.letter())
    }
}

impl FromStr for Norm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f" | "fro" | "frobenius" => Ok(Norm::Frobenius),
            "o" | "op" | "operator" => Ok(Norm::Operator),
            "n" | "nuc" | "nuclear" => Ok(Norm::Nuclear),
            _ => Err(Error::Domain(String::from("unknown norm (expected F, O or N)"))),
        }
    }
}

/// A loss: a norm applied to one of the five pivots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LossSpec {
    pub norm: Norm,
    pivot: u8,
}

impl LossSpec {
    pub fn new(norm: Norm, pivot: u8) -> Result<Self> {
        if !(1..=5).contains(&pivot) {
            return Err(contract!("pivot must be in 1..=5, got {pivot}"));
        }
        Ok(LossSpec { norm, pivot })
    }

    pub fn pivot(&self) -> u8 {
        self.pivot
    }

    /// Pivots 2 to 5 are only meaningful in the proportional and `gamma -> 0`
    /// frameworks. Wigner signals are singular, so only pivot 1 applies there too.
    pub fn check_framework(&self, fw: Framework) -> Result<()> {
        match fw {
            Framework::DisproInf | Framework::Wigner if self.pivot != 1 => {
                Err(contract!("pivot {} is not defined in framework {fw}", self.pivot))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.norm, self.pivot)
    }
}

impl FromStr for LossSpec {
    type Err = Error;

    /// `F`, `O1`, `N3`, ... A bare norm means pivot 1.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let split = t.find(|c: char| c.is_ascii_digit()).unwrap_or(t.len());
        let norm: Norm = t[..split].parse()?;
        let pivot = if split == t.len() {
            1
        } else {
            t[split..].parse::<u8>().map_err(|_| contract!("invalid pivot in `{s}`"))?
        };
        LossSpec::new(norm, pivot)
    }
}
