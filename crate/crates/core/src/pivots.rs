//! Finite-matrix losses `||Delta_k(A, B)||` over the five pivots
//! `A - B`, `A^-1 - B^-1`, `A^-1 B - I`, `B^-1 A - I`, `A^-1/2 B A^-1/2 - I`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{domain, Error, Result};
use crate::estimators::check_symmetric;
use crate::numeric::sqrt;
use crate::shrinkage::{LossSpec, Norm};

const SINGULAR_RTOL: f64 = 1e-12;

fn symmetric_norm(m: DMatrix<f64>, norm: Norm) -> f64 {
    match norm {
        Norm::Frobenius => m.norm(),
        _ => {
            let ev = SymmetricEigen::new(m).eigenvalues;
            let abs = ev.iter().map(|x| x.abs());
            match norm {
                Norm::Operator => abs.fold(0.0, f64::max),
                _ => abs.sum(),
            }
        }
    }
}

fn general_norm(m: DMatrix<f64>, norm: Norm) -> f64 {
    match norm {
        Norm::Frobenius => m.norm(),
        _ => {
            let sv = m.singular_values();
            match norm {
                Norm::Operator => sv.iter().copied().fold(0.0, f64::max),
                _ => sv.iter().sum(),
            }
        }
    }
}

// Applies f to the eigenvalues of a symmetric matrix. Fails when the matrix is
// numerically singular, or when `positive` is set and it is not positive definite.
fn spectral_fn(m: &DMatrix<f64>, pivot: u8, positive: bool, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    for &v in eig.eigenvalues.iter() {
        if scale == 0.0 || v.abs() <= SINGULAR_RTOL * scale {
            return Err(Error::Singular { pivot });
        }
        if positive && v < 0.0 {
            return Err(domain!("pivot {pivot} needs a positive definite reference matrix"));
        }
    }
    let d = eig.eigenvalues.map(f);
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&d) * q.transpose())
}

fn dense_pivot_norm(a: &DMatrix<f64>, b: &DMatrix<f64>, spec: LossSpec) -> Result<f64> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let pivot = spec.pivot();
    Ok(match pivot {
        1 => symmetric_norm(a - b, spec.norm),
        2 => {
            let ai = spectral_fn(a, pivot, false, |x| 1.0 / x)?;
            let bi = spectral_fn(b, pivot, false, |x| 1.0 / x)?;
            symmetric_norm(ai - bi, spec.norm)
        }
        3 => {
            let ai = spectral_fn(a, pivot, false, |x| 1.0 / x)?;
            spectral_fn(b, pivot, false, |x| x)?;
            general_norm(ai * b - id, spec.norm)
        }
        4 => {
            let bi = spectral_fn(b, pivot, false, |x| 1.0 / x)?;
            spectral_fn(a, pivot, false, |x| x)?;
            general_norm(bi * a - id, spec.norm)
        }
        _ => {
            let ah = spectral_fn(a, pivot, true, |x| 1.0 / sqrt(x))?;
            spectral_fn(b, pivot, false, |x| x)?;
            let m = &ah * b * &ah;
            let m = (&m + m.transpose()) * 0.5;
            symmetric_norm(m - id, spec.norm)
        }
    })
}

/// `||Delta_k(A, B)||` for dense symmetric matrices of equal shape.
pub fn empirical_loss(a: &DMatrix<f64>, b: &DMatrix<f64>, spec: LossSpec) -> Result<f64> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(Error::Dimension(alloc::format!(
            "loss needs square matrices of equal shape, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let a = check_symmetric(a)?;
    let b = check_symmetric(b)?;
    dense_pivot_norm(&a, &b, spec)
}

/// `shift * I + sum_j coefs[j] w_j w_j'` with `w_j` the columns of `basis`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedLowRank {
    pub shift: f64,
    pub basis: DMatrix<f64>,
    pub coefs: Vec<f64>,
}

impl ShiftedLowRank {
    pub fn new(shift: f64, basis: DMatrix<f64>, coefs: Vec<f64>) -> Result<Self> {
        if basis.ncols() != coefs.len() {
            return Err(Error::Dimension(alloc::format!(
                "{} basis vectors but {} coefficients",
                basis.ncols(),
                coefs.len()
            )));
        }
        Ok(ShiftedLowRank { shift, basis, coefs })
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let p = self.dim();
        let mut m = DMatrix::<f64>::identity(p, p) * self.shift;
        for (j, &c) in self.coefs.iter().enumerate() {
            let w = self.basis.column(j);
            m += w * w.transpose() * c;
        }
        m
    }

    fn compress(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        let k = q.ncols();
        let proj = q.transpose() * &self.basis;
        let mut m = DMatrix::<f64>::identity(k, k) * self.shift;
        for (j, &c) in self.coefs.iter().enumerate() {
            let w = proj.column(j);
            m += w * w.transpose() * c;
        }
        m
    }
}

fn complement_pivot(sa: f64, sb: f64, pivot: u8) -> Result<f64> {
    if pivot >= 2 && (sa == 0.0 || sb == 0.0) {
        return Err(Error::Singular { pivot });
    }
    Ok(match pivot {
        1 => sa - sb,
        2 => 1.0 / sa - 1.0 / sb,
        3 => sb / sa - 1.0,
        4 => sa / sb - 1.0,
        _ => {
            if sa < 0.0 {
                return Err(domain!("pivot 5 needs a positive definite reference matrix"));
            }
            sb / sa - 1.0
        }
    })
}

/// [`empirical_loss`] for matrices of the form identity-times-scalar plus low
/// rank, computed on the span of the two bases. Cost is linear in the dimension.
pub fn empirical_loss_low_rank(a: &ShiftedLowRank, b: &ShiftedLowRank, spec: LossSpec) -> Result<f64> {
    let p = a.dim();
    if b.dim() != p {
        return Err(Error::Dimension(alloc::format!("dimensions {} and {}", p, b.dim())));
    }
    let k = a.basis.ncols() + b.basis.ncols();
    let q = if k == 0 {
        DMatrix::<f64>::zeros(p, 0)
    } else {
        let mut w = DMatrix::<f64>::zeros(p, k);
        w.columns_mut(0, a.basis.ncols()).copy_from(&a.basis);
        w.columns_mut(a.basis.ncols(), b.basis.ncols()).copy_from(&b.basis);
        let svd = w.svd(true, false);
        let u = svd.u.ok_or_else(|| Error::Numeric("SVD failed".into()))?;
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> =
            (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > 1e-10 * smax).collect();
        u.select_columns(&keep)
    };
    let kq = q.ncols();
    let inner = if kq > 0 { dense_pivot_norm(&a.compress(&q), &b.compress(&q), spec)? } else { 0.0 };
    let rest = p - kq;
    if rest == 0 {
        return Ok(inner);
    }
    let d = complement_pivot(a.shift, b.shift, spec.pivot())?.abs();
    Ok(match spec.norm {
        Norm::Frobenius => sqrt(inner * inner + rest as f64 * d * d),
        Norm::Operator => inner.max(d),
        Norm::Nuclear => inner + rest as f64 * d,
    })
}
