use super::loss::{two_by_two_loss, Flavor, TwoByTwoLossInput};
use super::Norm;
use crate::error::Result;
use crate::numeric::sqrt;
use crate::spike_maps::{cosine2, eigmap, spike_value, Framework, SpikeValue};

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

// Optimal descriptor for a spike on the hat scale (gamma -> 0), x >= 0.
fn dzero_eta(x: f64, norm: Norm) -> f64 {
    match norm {
        Norm::Frobenius => {
            if x > 1.0 {
                x - 1.0 / x
            } else {
                0.0
            }
        }
        Norm::Operator => {
            if x > 1.0 {
                x
            } else {
                0.0
            }
        }
        Norm::Nuclear => {
            if x > 1.0 {
                pos(x - 2.0 / x)
            } else {
                0.0
            }
        }
    }
}

fn dzero_loss(x: f64, norm: Norm) -> f64 {
    match norm {
        Norm::Frobenius => {
            if x > 1.0 {
                sqrt(2.0 - 1.0 / (x * x))
            } else {
                x
            }
        }
        Norm::Operator => {
            if x > 1.0 {
                1.0
            } else {
                x
            }
        }
        Norm::Nuclear => {
            if x * x > 2.0 {
                2.0 * sqrt(1.0 - 1.0 / (x * x))
            } else {
                x
            }
        }
    }
}

fn dinf_eta(x: f64, norm: Norm) -> f64 {
    match norm {
        Norm::Frobenius => x * x / (1.0 + x),
        Norm::Operator => x,
        Norm::Nuclear => x * pos((x - 1.0) / (x + 1.0)),
    }
}

fn dinf_loss(x: f64, norm: Norm) -> f64 {
    match norm {
        Norm::Frobenius => sqrt(x * x * (2.0 * x + 1.0)) / (x + 1.0),
        Norm::Operator => x / sqrt(1.0 + x),
        Norm::Nuclear => {
            if x <= 1.0 {
                x
            } else {
                2.0 * x * sqrt(x) / (x + 1.0)
            }
        }
    }
}

fn proportional_eta(l: f64, gamma: f64, norm: Norm) -> Result<f64> {
    let fw = Framework::Proportional { gamma };
    let c2 = cosine2(SpikeValue::raw(l), fw)?;
    let s2 = 1.0 - c2;
    Ok(match norm {
        Norm::Frobenius => 1.0 + (l - 1.0) * c2,
        Norm::Operator => {
            if c2 > 0.0 {
                l
            } else {
                1.0
            }
        }
        Norm::Nuclear => 1.0 + (l - 1.0) * pos(1.0 - 2.0 * s2),
    })
}

/// Formally optimal shrinker at a known spike, on the framework's normalized
/// scale (raw for proportional, hat, bar, or theta).
///
/// Where the minimizer is not unique (operator norm below the transition) the
/// canonical choice is the null value: 0 on normalized scales, 1 on the raw one.
pub fn optimal_eta_formal(spike: SpikeValue, norm: Norm, fw: Framework) -> Result<f64> {
    let x = spike_value(spike, fw)?;
    match fw {
        Framework::DisproZero => Ok(dzero_eta(x, norm)),
        Framework::Wigner => Ok(x.signum() * dzero_eta(x.abs(), norm)),
        Framework::DisproInf => Ok(dinf_eta(x, norm)),
        Framework::Proportional { gamma } => proportional_eta(x, gamma, norm),
    }
}

/// Asymptotic loss of the formally optimal shrinker.
pub fn optimal_loss_formal(spike: SpikeValue, norm: Norm, fw: Framework) -> Result<f64> {
    let x = spike_value(spike, fw)?;
    match fw {
        Framework::DisproZero => Ok(dzero_loss(x, norm)),
        Framework::Wigner => Ok(dzero_loss(x.abs(), norm)),
        Framework::DisproInf => Ok(dinf_loss(x, norm)),
        Framework::Proportional { gamma } => {
            let eta = proportional_eta(x, gamma, norm)?;
            let c2 = cosine2(spike, fw)?;
            two_by_two_loss(&TwoByTwoLossInput { spike: x, c2, eta, flavor: Flavor::ProportionalA }, norm)
        }
    }
}

/// Asymptotic loss of the rank-aware estimator, which keeps the top sample
/// eigenvalues unchanged.
pub fn rank_aware_loss(spike: SpikeValue, norm: Norm, fw: Framework) -> Result<f64> {
    let x = spike_value(spike, fw)?;
    match fw {
        Framework::DisproZero | Framework::Wigner => {
            let a = x.abs();
            Ok(match norm {
                Norm::Frobenius => {
                    if a < 1.0 {
                        sqrt(a * a + 4.0)
                    } else {
                        sqrt(2.0 + 3.0 / (a * a))
                    }
                }
                Norm::Operator => {
                    if a < 1.0 {
                        2.0
                    } else {
                        (1.0 + sqrt(5.0 + 4.0 * a * a)) / (2.0 * a)
                    }
                }
                Norm::Nuclear => {
                    if a < 1.0 {
                        a + 2.0
                    } else {
                        sqrt(4.0 + 5.0 / (a * a))
                    }
                }
            })
        }
        Framework::DisproInf => Ok(match norm {
            Norm::Frobenius => sqrt(1.0 + 2.0 * x),
            Norm::Operator => (1.0 + sqrt(1.0 + 4.0 * x)) / 2.0,
            Norm::Nuclear => sqrt(1.0 + 4.0 * x),
        }),
        Framework::Proportional { .. } => {
            let eta = eigmap(spike, fw)?;
            let c2 = cosine2(spike, fw)?;
            two_by_two_loss(&TwoByTwoLossInput { spike: x, c2, eta, flavor: Flavor::ProportionalA }, norm)
        }
    }
}

/// `(rank_aware - optimal, (rank_aware - optimal) / rank_aware)`.
pub fn regret_and_improvement(spike: SpikeValue, norm: Norm, fw: Framework) -> Result<(f64, f64)> {
    let ra = rank_aware_loss(spike, norm, fw)?;
    let opt = optimal_loss_formal(spike, norm, fw)?;
    let regret = ra - opt;
    let improvement = if ra > 0.0 { regret / ra } else { 0.0 };
    Ok((regret, improvement))
}
