use crate::error::{domain, Result};
use crate::numeric::Real;

/// Which 2x2 population matrix the loss compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// `A(l) = diag(l, 1)` against `B = I + (eta - 1) v v'` (proportional).
    ProportionalA,
    /// `A(l) = diag(l, 0)` against `B = eta v v'` (normalized frameworks).
    TildeA,
}

/// Arguments of [`two_by_two_loss`]. `v = (c, s)` with `c2 = c^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoByTwoLossInput<T = f64> {
    pub spike: T,
    pub c2: T,
    pub eta: T,
    pub flavor: Flavor,
}

/// Norm of the 2x2 pivot `A - B` for a single spike.
pub fn two_by_two_loss<T: Real>(input: &TwoByTwoLossInput<T>, norm: super::Norm) -> Result<T> {
    let zero = T::from_f64(0.0);
    let one = T::from_f64(1.0);
    let two = T::from_f64(2.0);
    let c2 = input.c2;
    if !(c2 >= zero && c2 <= one) {
        return Err(domain!("c2 must lie in [0, 1]"));
    }
    let s2 = one - c2;
    match input.flavor {
        Flavor::TildeA => {
            let (l, eta) = (input.spike, input.eta);
            let d = eta - l;
            let cross = eta * l * s2;
            let disc = (d * d + T::from_f64(4.0) * cross).max(zero).sqrt();
            Ok(match norm {
                super::Norm::Frobenius => (d * d + two * cross).max(zero).sqrt(),
                super::Norm::Operator => (d.abs() + disc) / two,
                super::Norm::Nuclear => d.abs().max(disc),
            })
        }
        Flavor::ProportionalA => {
            let c = c2.sqrt();
            let s = s2.sqrt();
            let e = input.eta - one;
            let a = input.spike - one - e * c2;
            let b = -(e * c * s);
            let dd = -(e * s2);
            let mean = (a + dd) / two;
            let half = (a - dd) / two;
            let rad = (half * half + b * b).sqrt();
            Ok(match norm {
                super::Norm::Frobenius => (a * a + two * b * b + dd * dd).sqrt(),
                super::Norm::Operator => mean.abs() + rad,
                super::Norm::Nuclear => two * mean.abs().max(rad),
            })
        }
    }
}
