use super::optimal::optimal_eta_formal;
use super::threshold::{agnostic_threshold, optimal_threshold};
use super::Norm;
use crate::error::{contract, domain, Result};
use crate::numeric::{check_finite, check_positive, sqrt};
use crate::spike_maps::{eigmap_inv, from_bar, from_hat, to_bar, to_hat, Framework, SpikeValue};

/// What a rule does to an eligible eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RuleKind {
    Identity,
    RankAware,
    Optimal(Norm),
    HardThreshold(ThresholdChoice),
    /// Proportional-regime optimal shrinker evaluated at the data's aspect ratio.
    Agnostic(Norm),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdChoice {
    /// Optimal threshold for the norm, mapped to the raw scale.
    Optimal(Norm),
    /// Threshold given directly on the raw eigenvalue scale.
    Explicit(f64),
}

/// How the `gamma -> 0` operator-norm rule separates spikes from the bulk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorThreshold {
    /// Keep `lam >= 1 + (2 + p^(-2/3 + eps)) sqrt(gamma) + gamma`. Needs `p`.
    Exponent(f64),
    /// Keep eigenvalues strictly above the bulk edge on the hat scale.
    BulkEdge,
}

impl Default for OperatorThreshold {
    fn default() -> Self {
        OperatorThreshold::Exponent(0.1)
    }
}

/// A fully specified shrinkage rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkageRule {
    pub kind: RuleKind,
    pub framework: Framework,
    /// Aspect ratio of the data at hand, used for coordinate maps.
    pub gamma_n: f64,
    /// Number of leading eigenvalues the rule may modify.
    pub rank_r: usize,
    pub operator_threshold: OperatorThreshold,
    /// Dimension of the data, needed by the exponent operator threshold.
    pub p: Option<usize>,
}

impl ShrinkageRule {
    pub fn new(kind: RuleKind, framework: Framework, gamma_n: f64) -> Self {
        ShrinkageRule { kind, framework, gamma_n, rank_r: 0, operator_threshold: OperatorThreshold::default(), p: None }
    }

    pub fn with_rank(mut self, rank_r: usize) -> Self {
        self.rank_r = rank_r;
        self
    }

    pub fn with_dimension(mut self, p: usize) -> Self {
        self.p = Some(p);
        self
    }

    pub fn with_operator_threshold(mut self, t: OperatorThreshold) -> Self {
        self.operator_threshold = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.framework.validate()?;
        check_positive("gamma_n", self.gamma_n)?;
        if let OperatorThreshold::Exponent(eps) = self.operator_threshold {
            check_positive("operator threshold exponent", eps)?;
        }
        if let RuleKind::HardThreshold(ThresholdChoice::Explicit(t)) = self.kind {
            check_finite("threshold", t)?;
        }
        Ok(())
    }

    /// Threshold on the raw scale (absolute value for Wigner) used by hard thresholding.
    pub fn raw_threshold(&self) -> Result<f64> {
        let choice = match self.kind {
            RuleKind::HardThreshold(c) => c,
            _ => return Err(contract!("rule {:?} has no threshold", self.kind)),
        };
        let norm = match choice {
            ThresholdChoice::Explicit(t) => return Ok(t),
            ThresholdChoice::Optimal(norm) => norm,
        };
        match self.framework {
            Framework::DisproZero => from_hat(optimal_threshold(norm, self.framework)?, self.gamma_n),
            Framework::DisproInf => from_bar(optimal_threshold(norm, self.framework)?, self.gamma_n),
            Framework::Wigner => optimal_threshold(norm, self.framework),
            Framework::Proportional { gamma } => agnostic_threshold(norm, gamma),
        }
    }

    fn null_value(&self) -> f64 {
        if self.framework == Framework::Wigner {
            0.0
        } else {
            1.0
        }
    }
}

/// Applies `rule` to one eligible eigenvalue.
pub fn shrink_eigenvalue(lam: f64, rule: &ShrinkageRule) -> Result<f64> {
    rule.validate()?;
    let lam = check_finite("eigenvalue", lam)?;
    if matches!(rule.kind, RuleKind::Identity | RuleKind::RankAware) {
        return Ok(lam);
    }
    let wigner = rule.framework == Framework::Wigner;
    if !wigner && lam < 0.0 {
        return Err(domain!("covariance eigenvalues must be nonnegative, got {lam}"));
    }
    let g = rule.gamma_n;
    match rule.kind {
        RuleKind::Identity | RuleKind::RankAware => unreachable!(),
        RuleKind::HardThreshold(_) => {
            let tau = rule.raw_threshold()?;
            let x = if wigner { lam.abs() } else { lam };
            Ok(if x >= tau { lam } else { rule.null_value() })
        }
        RuleKind::Agnostic(norm) => {
            let fw = Framework::Proportional { gamma: g };
            let spike = eigmap_inv(lam, fw)?;
            optimal_eta_formal(spike, norm, fw)
        }
        RuleKind::Optimal(norm) => match rule.framework {
            Framework::DisproZero => {
                let hat = to_hat(lam, g)?;
                if norm == Norm::Operator && !operator_keeps(lam, hat, rule)? {
                    return Ok(1.0);
                }
                let spike = eigmap_inv(hat, Framework::DisproZero)?;
                let eta = optimal_eta_formal(spike, norm, Framework::DisproZero)?;
                from_hat_eta(eta, g)
            }
            Framework::DisproInf => {
                let spike = (to_bar(lam, g)? - 1.0).max(0.0);
                let eta = optimal_eta_formal(SpikeValue::bar(spike), norm, Framework::DisproInf)?;
                from_bar(eta, g)
            }
            Framework::Wigner | Framework::Proportional { .. } => {
                let spike = eigmap_inv(lam, rule.framework)?;
                optimal_eta_formal(spike, norm, rule.framework)
            }
        },
    }
}

fn from_hat_eta(eta: f64, gamma: f64) -> Result<f64> {
    Ok(1.0 + sqrt(gamma) * eta)
}

fn operator_keeps(lam: f64, hat: f64, rule: &ShrinkageRule) -> Result<bool> {
    match rule.operator_threshold {
        OperatorThreshold::BulkEdge => Ok(hat > 2.0),
        OperatorThreshold::Exponent(eps) => {
            let p = rule.p.ok_or_else(|| contract!("the operator threshold needs the dimension p"))?;
            let offset = libm::pow(p as f64, -2.0 / 3.0 + eps);
            Ok(lam >= from_hat(2.0 + offset, rule.gamma_n)?)
        }
    }
}
