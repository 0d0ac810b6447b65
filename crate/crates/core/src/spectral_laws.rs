//! Marchenko-Pastur and semicircle laws, their Stieltjes transforms, and the
//! `dbar` map of the signal-plus-noise model with its inverse.

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::numeric::{check_positive, sqrt};

/// A closed interval `[lower, upper]` on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportInterval {
    pub lower: f64,
    pub upper: f64,
}

impl SupportInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Support `[(1 - sqrt(gamma))^2, (1 + sqrt(gamma))^2]` of MP(gamma).
pub fn mp_support(gamma: f64) -> Result<SupportInterval> {
    let g = check_positive("gamma", gamma)?;
    let r = sqrt(g);
    Ok(SupportInterval { lower: (1.0 - r) * (1.0 - r), upper: (1.0 + r) * (1.0 + r) })
}

/// Continuous part of the MP(gamma) density. The atom at zero for
/// `gamma > 1` is given by [`mp_atom_at_zero`].
pub fn mp_density(x: f64, gamma: f64) -> Result<f64> {
    let s = mp_support(gamma)?;
    if !(x > s.lower && x < s.upper && x > 0.0) {
        return Ok(0.0);
    }
    Ok(sqrt((s.upper - x) * (x - s.lower)) / (2.0 * PI * gamma * x))
}

/// Mass of the MP(gamma) atom at zero, `max(0, 1 - 1/gamma)`.
pub fn mp_atom_at_zero(gamma: f64) -> Result<f64> {
    let g = check_positive("gamma", gamma)?;
    Ok((1.0 - 1.0 / g).max(0.0))
}

// sqrt(z - a) * sqrt(z - b) with principal roots. This is the branch of
// sqrt((z - a)(z - b)) that behaves like z at infinity, which is the one
// the Stieltjes transforms need on both sides of the support.
fn paired_sqrt(z: Complex64, a: f64, b: f64) -> Complex64 {
    (z - a).sqrt() * (z - b).sqrt()
}

/// Stieltjes transform `s(z) = int dF(x) / (x - z)` of MP(gamma).
///
/// Real `z` on `[lambda_-, lambda_+)` and `z = 0` are rejected; the upper edge
/// itself is accepted as a one-sided limit.
pub fn mp_stieltjes(z: Complex64, gamma: f64) -> Result<Complex64> {
    let s = mp_support(gamma)?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(domain!("z must be finite, got {z}"));
    }
    if z.im == 0.0 && z.re >= s.lower && z.re < s.upper {
        return Err(domain!("z = {} lies on the MP support [{}, {}]", z.re, s.lower, s.upper));
    }
    if z.im == 0.0 && z.re == 0.0 {
        return Err(domain!("z = 0 is a singular point of the MP transform"));
    }
    let root = paired_sqrt(z, s.lower, s.upper);
    // Two algebraically equal forms; take the one without cancellation.
    let w = 1.0 - gamma - z;
    if (w - root).norm() > (w + root).norm() {
        Ok(2.0 / (w - root))
    } else {
        Ok((w + root) / (2.0 * gamma * z))
    }
}

/// Semicircle density `(2 pi)^-1 sqrt((4 - x^2)_+)`.
pub fn semicircle_density(x: f64) -> f64 {
    let v = 4.0 - x * x;
    if v > 0.0 {
        sqrt(v) / (2.0 * PI)
    } else {
        0.0
    }
}

/// Stieltjes transform of the semicircle law, `(-z + sqrt(z^2 - 4)) / 2`.
///
/// The edges `z = +-2` are accepted as limits from outside the support.
pub fn semicircle_stieltjes(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(domain!("z must be finite, got {z}"));
    }
    if z.im == 0.0 && z.re > -2.0 && z.re < 2.0 {
        return Err(domain!("z = {} lies inside the semicircle support", z.re));
    }
    let root = paired_sqrt(z, 2.0, -2.0);
    if (z + root).norm() > (root - z).norm() {
        Ok(-2.0 / (z + root))
    } else {
        Ok((root - z) * 0.5)
    }
}

fn check_beta(beta: f64) -> Result<f64> {
    if beta.is_finite() && beta > 0.0 && beta < 1.0 {
        Ok(beta)
    } else {
        Err(domain!("beta must lie in (0, 1), got {beta}"))
    }
}

/// `Dbar(z) = -(1 + beta - z + sqrt((1 + beta - z)^2 - 4 beta)) / (2 beta)` for
/// `z >= (1 + sqrt(beta))^2`, a decreasing bijection onto `(0, beta^-1/2]`.
pub fn dbar(z: f64, beta: f64) -> Result<f64> {
    let beta = check_beta(beta)?;
    let rb = sqrt(beta);
    let lo = (1.0 - rb) * (1.0 - rb);
    let hi = (1.0 + rb) * (1.0 + rb);
    // the edge is accepted up to rounding in its computation
    if !(z >= hi * (1.0 - 1e-12)) || !z.is_finite() {
        return Err(domain!("dbar needs z >= {hi}, got {z}"));
    }
    // Rationalized to avoid cancellation for large z.
    let disc = sqrt(((z - lo) * (z - hi)).max(0.0));
    Ok(2.0 / ((z - 1.0 - beta) + disc))
}

/// Inverse of [`dbar`]: `(t + 1)(beta t + 1) / t` for `0 < t < beta^-1/2`.
pub fn dbar_inv(t: f64, beta: f64) -> Result<f64> {
    let beta = check_beta(beta)?;
    if !(t > 0.0 && t < 1.0 / sqrt(beta)) {
        return Err(domain!("dbar_inv needs 0 < t < {}, got {t}", 1.0 / sqrt(beta)));
    }
    Ok((t + 1.0) * (beta * t + 1.0) / t)
}
