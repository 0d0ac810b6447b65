//! Matrix-level estimators: covariance shrinkage, Wigner denoising, spike
//! estimation for the signal-plus-noise model and noise calibration.

use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{contract, domain, Error, Result};
use crate::numeric::{compensated_sum, lower_median, sqrt};
use crate::shrinkage::{shrink_eigenvalue, Norm, RuleKind, ShrinkageRule};
use crate::spike_maps::{eigmap_inv, spn_cosines, to_hat, Framework};

/// Largest entrywise asymmetry accepted, relative to `max(1, max |a_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-8;
/// Orthonormality tolerance for externally supplied vectors.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Returns the symmetrized matrix, or an error if `m` is not symmetric.
pub fn check_symmetric(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::Dimension(alloc::format!("matrix is {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(domain!("matrix has non-finite entries"));
    }
    let scale = m.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
    let n = m.nrows();
    let mut asym = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok((m + m.transpose()) * 0.5)
}

fn check_orthonormal(v: &DMatrix<f64>) -> Result<()> {
    let g = v.transpose() * v;
    let k = g.nrows();
    let dev = (g - DMatrix::<f64>::identity(k, k)).amax();
    if dev > ORTHONORMAL_TOL {
        return Err(domain!("vectors are not orthonormal (deviation {dev:e})"));
    }
    Ok(())
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenSystem {
    /// Validates order and orthonormality of externally supplied data.
    pub fn new(values: Vec<f64>, vectors: DMatrix<f64>) -> Result<Self> {
        if vectors.ncols() != values.len() {
            return Err(Error::Dimension(alloc::format!("{} values but {} vectors", values.len(), vectors.ncols())));
        }
        if values.windows(2).any(|w| !(w[0] >= w[1])) {
            return Err(domain!("eigenvalues must be sorted in descending order"));
        }
        check_orthonormal(&vectors)?;
        Ok(EigenSystem { values, vectors })
    }

    /// Full eigendecomposition of a symmetric matrix.
    pub fn of_symmetric(m: &DMatrix<f64>) -> Result<Self> {
        let m = check_symmetric(m)?;
        let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
        Ok(Self::sorted(eig.eigenvalues.as_slice(), &eig.eigenvectors))
    }

    fn sorted(values: &[f64], vectors: &DMatrix<f64>) -> Self {
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        EigenSystem { values: idx.iter().map(|&i| values[i]).collect(), vectors: vectors.select_columns(&idx) }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `sum_i values[i] v_i v_i'`.
    pub fn reconstruct(&self, values: &[f64]) -> DMatrix<f64> {
        let v = &self.vectors;
        let mut scaled = v.clone();
        for (j, &d) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(d);
        }
        let m = scaled * v.transpose();
        (&m + m.transpose()) * 0.5
    }
}

/// Thin SVD with singular values in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdSystem {
    pub singular_values: Vec<f64>,
    pub left_vectors: DMatrix<f64>,
    pub right_vectors: DMatrix<f64>,
}

impl SvdSystem {
    pub fn new(singular_values: Vec<f64>, left: DMatrix<f64>, right: DMatrix<f64>) -> Result<Self> {
        let k = singular_values.len();
        if left.ncols() != k || right.ncols() != k {
            return Err(Error::Dimension("singular vector counts do not match".into()));
        }
        if singular_values.iter().any(|&s| !(s >= 0.0)) {
            return Err(domain!("singular values must be nonnegative"));
        }
        if singular_values.windows(2).any(|w| !(w[0] >= w[1])) {
            return Err(domain!("singular values must be sorted in descending order"));
        }
        check_orthonormal(&left)?;
        check_orthonormal(&right)?;
        Ok(SvdSystem { singular_values, left_vectors: left, right_vectors: right })
    }

    pub fn of_matrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(domain!("matrix has non-finite entries"));
        }
        let svd = nalgebra::SVD::try_new(m.clone(), true, true, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
        let (u, vt) = match (svd.u, svd.v_t) {
            (Some(u), Some(vt)) => (u, vt),
            _ => return Err(Error::Numeric("SVD returned no vectors".into())),
        };
        let s = svd.singular_values;
        let mut idx: Vec<usize> = (0..s.len()).collect();
        idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
        Ok(SvdSystem {
            singular_values: idx.iter().map(|&i| s[i]).collect(),
            left_vectors: u.select_columns(&idx),
            right_vectors: vt.transpose().select_columns(&idx),
        })
    }
}

/// `S = X X' / n` for data `X` with one observation per column, accumulated
/// with compensated sums.
pub fn sample_covariance(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (p, n) = x.shape();
    if n == 0 {
        return Err(domain!("data matrix has no observations"));
    }
    let mut s = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        for j in 0..=i {
            let v = compensated_sum((0..n).map(|k| x[(i, k)] * x[(j, k)])) / n as f64;
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    Ok(s)
}

/// Shrinks the top `rule.rank_r` eigenvalues of `s`, sets the rest to 1 and
/// rebuilds the matrix. Returns the estimate and its eigenvalues in the order of
/// the sample eigenvalues.
pub fn cov_shrink(s: &DMatrix<f64>, rule: &ShrinkageRule) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let eig = EigenSystem::of_symmetric(s)?;
    let shrunk = shrink_spectrum(&eig.values, rule)?;
    Ok((eig.reconstruct(&shrunk), shrunk))
}

/// Eigenvalue part of [`cov_shrink`].
pub fn shrink_spectrum(values: &[f64], rule: &ShrinkageRule) -> Result<Vec<f64>> {
    rule.validate()?;
    let p = values.len();
    if rule.rank_r > p {
        return Err(contract!("rank {} exceeds dimension {p}", rule.rank_r));
    }
    let pass_through = matches!(rule.kind, RuleKind::Identity | RuleKind::RankAware);
    let mut out = Vec::with_capacity(p);
    for (i, &lam) in values.iter().enumerate() {
        if i < rule.rank_r {
            let eta = shrink_eigenvalue(lam, rule)?;
            if !pass_through && eta < 0.0 {
                return Err(Error::Numeric(alloc::format!("rule produced negative value {eta}")));
            }
            out.push(eta);
        } else {
            out.push(1.0);
        }
    }
    Ok(out)
}

/// Optimal spiked-Wigner denoiser: shrinks the `r_plus` largest and `r_minus`
/// smallest eigenvalues of `y`, zeroes the others.
pub fn wigner_denoise(y: &DMatrix<f64>, norm: Norm, r_plus: usize, r_minus: usize) -> Result<DMatrix<f64>> {
    let eig = EigenSystem::of_symmetric(y)?;
    let shrunk = wigner_spectrum(&eig.values, norm, r_plus, r_minus)?;
    Ok(eig.reconstruct(&shrunk))
}

/// Eigenvalue part of [`wigner_denoise`], for values sorted descending.
pub fn wigner_spectrum(values: &[f64], norm: Norm, r_plus: usize, r_minus: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if r_plus + r_minus > n {
        return Err(contract!("r_plus + r_minus = {} exceeds dimension {n}", r_plus + r_minus));
    }
    let rule = ShrinkageRule::new(RuleKind::Optimal(norm), Framework::Wigner, 1.0);
    values
        .iter()
        .enumerate()
        .map(|(i, &lam)| if i < r_plus || i >= n - r_minus { shrink_eigenvalue(lam, &rule) } else { Ok(0.0) })
        .collect()
}

/// Estimated signal strength for one leading singular value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeEstimate {
    pub tau_hat: f64,
    pub lambda_observed: f64,
    /// `(lambda - 1 - beta) / sqrt(beta)`.
    pub normalized: f64,
    pub predicted_left_c2: f64,
    pub predicted_right_c2: f64,
    pub supercritical: bool,
}

/// Inverts the leading-eigenvalue limit of the signal-plus-noise model for the
/// top `r` singular values of `X / sqrt(m)` with `X` of shape `n x m`.
pub fn estimate_spikes(svd: &SvdSystem, n: usize, m: usize, r: usize) -> Result<Vec<SpikeEstimate>> {
    if n == 0 || m == 0 {
        return Err(domain!("matrix shape must be nonempty"));
    }
    if r > n.min(m) || r > svd.singular_values.len() {
        return Err(contract!("r = {r} exceeds the available singular values"));
    }
    let beta = n as f64 / m as f64;
    svd.singular_values[..r]
        .iter()
        .map(|&sigma| {
            let lam = sigma * sigma;
            let normalized = to_hat(lam, beta)?;
            let supercritical = normalized > 2.0 + 1e-12;
            let tau_hat = if supercritical { sqrt(eigmap_inv(normalized, Framework::DisproZero)?.value) } else { 1.0 };
            let left = if supercritical { spn_cosines(tau_hat)?.0 } else { 0.0 };
            Ok(SpikeEstimate {
                tau_hat,
                lambda_observed: lam,
                normalized,
                predicted_left_c2: left,
                predicted_right_c2: 0.0,
                supercritical,
            })
        })
        .collect()
}

/// Noise level from the median sample eigenvalue.
///
/// For `p <= n` this is the lower median of all eigenvalues. For `p > n` only the
/// `n` leading (nonzero) eigenvalues carry noise information; their median sits
/// near `gamma * sigma^2`, so it is divided by `gamma = p/n`.
pub fn calibrate_noise(values: &[f64], shape: (usize, usize)) -> Result<f64> {
    let (n, p) = shape;
    if values.is_empty() {
        return Err(domain!("no eigenvalues to calibrate from"));
    }
    if n == 0 || p == 0 {
        return Err(domain!("shape must be nonempty"));
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(domain!("eigenvalues must be finite"));
    }
    if p <= n {
        return Ok(lower_median(values).unwrap_or(f64::NAN));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v.truncate(n.min(p));
    let gamma = p as f64 / n as f64;
    Ok(lower_median(&v).unwrap_or(f64::NAN) / gamma)
}
