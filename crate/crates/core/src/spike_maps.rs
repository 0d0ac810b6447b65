//! Eigenvalue bias maps, their partial inverses and eigenvector cosine laws.

use core::fmt;
use core::str::FromStr;

use alloc::string::String;

use crate::error::{domain, Error, Result};
use crate::numeric::{check_finite, check_positive, sqrt};

/// Asymptotic regime. Selects the maps and the normalized scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Framework {
    /// `p/n -> gamma` in `(0, inf)`; spikes and eigenvalues on the raw scale.
    Proportional { gamma: f64 },
    /// `p/n -> 0`; hat coordinates.
    DisproZero,
    /// `p/n -> inf`; bar coordinates.
    DisproInf,
    /// Spiked Wigner; spikes `theta` may have either sign.
    Wigner,
}

impl Framework {
    pub fn proportional(gamma: f64) -> Result<Self> {
        check_positive("gamma", gamma)?;
        Ok(Framework::Proportional { gamma })
    }

    /// Scale on which spikes for this framework are expressed.
    pub fn spike_scale(&self) -> Scale {
        match self {
            Framework::Proportional { .. } => Scale::Raw,
            Framework::DisproZero => Scale::Hat,
            Framework::DisproInf => Scale::Bar,
            Framework::Wigner => Scale::Theta,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if let Framework::Proportional { gamma } = self {
            check_positive("gamma", *gamma)?;
        }
        Ok(())
    }
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Framework::Proportional { gamma } => write!(f, "prop:{gamma}"),
            Framework::DisproZero => f.write_str("dzero"),
            Framework::DisproInf => f.write_str("dinf"),
            Framework::Wigner => f.write_str("wigner"),
        }
    }
}

impl FromStr for Framework {
    type Err = Error;

    /// Accepts `prop:<gamma>`, `dzero`, `dinf` and `wigner`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Some(g) = t.strip_prefix("prop:") {
            let gamma: f64 = g.trim().parse().map_err(|_| domain!("invalid gamma in framework `{s}`"))?;
            return Framework::proportional(gamma);
        }
        match t.to_ascii_lowercase().as_str() {
            "dzero" => Ok(Framework::DisproZero),
            "dinf" => Ok(Framework::DisproInf),
            "wigner" => Ok(Framework::Wigner),
            _ => Err(Error::Domain(String::from("unknown framework (expected prop:<gamma>, dzero, dinf or wigner)"))),
        }
    }
}

/// Coordinate system a number lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scale {
    Raw,
    Hat,
    Bar,
    Theta,
}

/// A spike strength tagged with its scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeValue {
    pub value: f64,
    pub scale: Scale,
}

impl SpikeValue {
    pub const fn raw(value: f64) -> Self {
        SpikeValue { value, scale: Scale::Raw }
    }
    pub const fn hat(value: f64) -> Self {
        SpikeValue { value, scale: Scale::Hat }
    }
    pub const fn bar(value: f64) -> Self {
        SpikeValue { value, scale: Scale::Bar }
    }
    pub const fn theta(value: f64) -> Self {
        SpikeValue { value, scale: Scale::Theta }
    }
    /// Spike on the natural scale of `fw`.
    pub fn for_framework(value: f64, fw: Framework) -> Self {
        SpikeValue { value, scale: fw.spike_scale() }
    }
}

/// Checks the scale tag and the sign constraints, returning the bare value.
pub(crate) fn spike_value(spike: SpikeValue, fw: Framework) -> Result<f64> {
    fw.validate()?;
    let expected = fw.spike_scale();
    if spike.scale != expected {
        return Err(Error::ScaleMismatch { expected, found: spike.scale });
    }
    let x = check_finite("spike", spike.value)?;
    if fw != Framework::Wigner && x < 0.0 {
        return Err(domain!("covariance spikes must be nonnegative, got {x}"));
    }
    Ok(x)
}

fn signum(x: f64) -> f64 {
    x.signum()
}

/// Upper edge of the MP bulk, `(1 + sqrt(gamma))^2`.
pub fn bulk_edge(gamma: f64) -> f64 {
    let r = sqrt(gamma);
    (1.0 + r) * (1.0 + r)
}

/// BBP transition on the raw scale, `1 + sqrt(gamma)`.
pub fn transition(gamma: f64) -> f64 {
    1.0 + sqrt(gamma)
}

/// Almost-sure limit of the leading eigenvalue for a given spike.
pub fn eigmap(spike: SpikeValue, fw: Framework) -> Result<f64> {
    let x = spike_value(spike, fw)?;
    Ok(match fw {
        Framework::Proportional { gamma } => {
            if x > transition(gamma) {
                x + gamma * x / (x - 1.0)
            } else {
                bulk_edge(gamma)
            }
        }
        Framework::DisproZero => {
            if x > 1.0 {
                x + 1.0 / x
            } else {
                2.0
            }
        }
        Framework::DisproInf => 1.0 + x,
        Framework::Wigner => {
            if x.abs() > 1.0 {
                x + 1.0 / x
            } else {
                2.0 * signum(x)
            }
        }
    })
}

/// Partial inverse of [`eigmap`]; eigenvalues inside the bulk map to the transition.
pub fn eigmap_inv(lam: f64, fw: Framework) -> Result<SpikeValue> {
    fw.validate()?;
    let l = check_finite("eigenvalue", lam)?;
    let v = match fw {
        Framework::Proportional { gamma } => {
            let r = sqrt(gamma);
            let (lo, hi) = ((1.0 - r) * (1.0 - r), (1.0 + r) * (1.0 + r));
            if l > hi {
                (l + 1.0 - gamma + sqrt((l - lo) * (l - hi))) / 2.0
            } else {
                1.0 + r
            }
        }
        Framework::DisproZero => {
            if l > 2.0 {
                (l + sqrt((l - 2.0) * (l + 2.0))) / 2.0
            } else {
                1.0
            }
        }
        Framework::DisproInf => l - 1.0,
        Framework::Wigner => {
            if l.abs() > 2.0 {
                (l + signum(l) * sqrt((l.abs() - 2.0) * (l.abs() + 2.0))) / 2.0
            } else {
                0.0
            }
        }
    };
    Ok(SpikeValue::for_framework(v, fw))
}

/// Limiting squared cosine between leading sample and population eigenvectors.
pub fn cosine2(spike: SpikeValue, fw: Framework) -> Result<f64> {
    let x = spike_value(spike, fw)?;
    Ok(match fw {
        Framework::Proportional { gamma } => {
            if x > transition(gamma) {
                let d = x - 1.0;
                (1.0 - gamma / (d * d)) / (1.0 + gamma / d)
            } else {
                0.0
            }
        }
        Framework::DisproZero | Framework::Wigner => {
            if x.abs() > 1.0 {
                1.0 - 1.0 / (x * x)
            } else {
                0.0
            }
        }
        Framework::DisproInf => x / (1.0 + x),
    })
}

/// Limit of the leading squared singular value in the signal-plus-noise model
/// with aspect ratio `beta = n/m` and signal strength `tau`.
pub fn spn_eigenvalue_limit(tau: f64, beta: f64) -> Result<f64> {
    let tau = check_positive("tau", tau)?;
    let beta = check_positive("beta", beta)?;
    let rb = sqrt(beta);
    if tau > 1.0 {
        let t2 = tau * tau;
        Ok(1.0 + (t2 + 1.0 / t2) * rb + beta)
    } else {
        Ok((1.0 + rb) * (1.0 + rb))
    }
}

/// Limiting squared cosines `(left, right)` of the leading singular vectors
/// in the signal-plus-noise model as `beta -> 0`.
pub fn spn_cosines(tau: f64) -> Result<(f64, f64)> {
    let tau = check_positive("tau", tau)?;
    let left = if tau > 1.0 { 1.0 - 1.0 / (tau * tau * tau * tau) } else { 0.0 };
    Ok((left, 0.0))
}

/// `(x - 1 - gamma) / sqrt(gamma)`.
pub fn to_hat(x: f64, gamma_n: f64) -> Result<f64> {
    let g = check_positive("gamma_n", gamma_n)?;
    Ok((x - 1.0 - g) / sqrt(g))
}

/// `1 + sqrt(gamma) x + gamma`.
pub fn from_hat(x: f64, gamma_n: f64) -> Result<f64> {
    let g = check_positive("gamma_n", gamma_n)?;
    Ok(1.0 + sqrt(g) * x + g)
}

/// `(x - 1) / sqrt(gamma)`, the hat scale for shrinker outputs.
pub fn psi_hat(x: f64, gamma_n: f64) -> Result<f64> {
    let g = check_positive("gamma_n", gamma_n)?;
    Ok((x - 1.0) / sqrt(g))
}

/// `(x - 1) / gamma`.
pub fn to_bar(x: f64, gamma_n: f64) -> Result<f64> {
    let g = check_positive("gamma_n", gamma_n)?;
    Ok((x - 1.0) / g)
}

/// `1 + gamma x`.
pub fn from_bar(x: f64, gamma_n: f64) -> Result<f64> {
    let g = check_positive("gamma_n", gamma_n)?;
    Ok(1.0 + g * x)
}
