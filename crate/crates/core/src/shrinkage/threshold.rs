use super::Norm;
use crate::error::{contract, Error, Result};
use crate::numeric::{bisect, check_positive, sqrt};
use crate::spike_maps::{cosine2, eigmap, transition, Framework, SpikeValue};

/// Spike at which the rank-aware loss equals the loss of the null rule.
///
/// Wigner uses the `gamma -> 0` values (the two settings share their maps).
pub fn threshold_crossing_spike(norm: Norm, fw: Framework) -> Result<f64> {
    let s2 = core::f64::consts::SQRT_2;
    let s5 = sqrt(5.0);
    match fw {
        Framework::DisproZero | Framework::Wigner => Ok(match norm {
            Norm::Frobenius => sqrt(3.0),
            Norm::Operator => sqrt(1.0 + s2),
            Norm::Nuclear => s5,
        }),
        Framework::DisproInf => Ok(match norm {
            Norm::Frobenius => 1.0 + s2,
            Norm::Operator => 2.0,
            Norm::Nuclear => 2.0 + s5,
        }),
        Framework::Proportional { .. } => {
            Err(contract!("optimal thresholds are tabulated for dzero, dinf and wigner only"))
        }
    }
}

/// Optimal hard threshold on the normalized eigenvalue scale.
pub fn optimal_threshold(norm: Norm, fw: Framework) -> Result<f64> {
    let s2 = core::f64::consts::SQRT_2;
    let s5 = sqrt(5.0);
    match fw {
        Framework::DisproZero | Framework::Wigner => Ok(match norm {
            Norm::Frobenius => 4.0 / sqrt(3.0),
            Norm::Operator => sqrt(2.0 * (1.0 + s2)),
            Norm::Nuclear => 6.0 / s5,
        }),
        Framework::DisproInf => Ok(match norm {
            Norm::Frobenius => 2.0 + s2,
            Norm::Operator => 3.0,
            Norm::Nuclear => 3.0 + s5,
        }),
        Framework::Proportional { .. } => threshold_crossing_spike(norm, fw),
    }
}

/// Framework-agnostic Frobenius threshold on the raw eigenvalue scale for
/// aspect ratio `gamma`.
///
/// Solves `(lam - 1)^2 - 2 (l - 1)(lam - 1) c^2 = 0` for the spike `l` above the
/// transition and returns `lam = eigmap(l)`.
pub fn agnostic_threshold(norm: Norm, gamma: f64) -> Result<f64> {
    if norm != Norm::Frobenius {
        return Err(contract!("the agnostic threshold is defined for the Frobenius norm only"));
    }
    let gamma = check_positive("gamma", gamma)?;
    let spike = agnostic_threshold_spike(gamma)?;
    eigmap(SpikeValue::raw(spike), Framework::Proportional { gamma })
}

/// Root of the agnostic threshold equation on the spike scale.
pub(crate) fn agnostic_threshold_spike(gamma: f64) -> Result<f64> {
    let fw = Framework::Proportional { gamma };
    // Dividing by lam - 1 > 0 leaves a function with a single sign change.
    let g = |l: f64| {
        let lam = eigmap(SpikeValue::raw(l), fw).unwrap_or(f64::NAN);
        let c2 = cosine2(SpikeValue::raw(l), fw).unwrap_or(f64::NAN);
        (lam - 1.0) - 2.0 * (l - 1.0) * c2
    };
    let lo = transition(gamma) + 1e-9 * (1.0 + sqrt(gamma));
    let hi = 1e3 * (1.0 + gamma);
    bisect(g, lo, hi)
        .ok_or_else(|| Error::Numeric(alloc::format!("agnostic threshold bracket failed for gamma = {gamma}")))
}
