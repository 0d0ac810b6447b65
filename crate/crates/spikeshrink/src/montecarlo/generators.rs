use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ModelKind, SpikedModelSpec};
use crate::error::{Error, Result};

/// Seed of replicate `index`, a SplitMix64 finalizer over `(base, index)`.
pub fn replicate_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for one replicate. Gaussians come from `rand_distr::StandardNormal`
/// (ziggurat) driven by ChaCha8.
pub fn replicate_rng(spec: &SpikedModelSpec, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replicate_seed(spec.seed, index as u64))
}

pub(crate) fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Orthonormal `rows x k` frame from the QR factorization of a Gaussian
/// matrix, signs fixed so that `R` has a positive diagonal.
pub fn orthonormal_gaussian(rng: &mut impl Rng, rows: usize, k: usize) -> DMatrix<f64> {
    if k == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let qr = gaussian_matrix(rng, rows, k).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn coordinate_frame(rows: usize, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, k, |i, j| if i == j { 1.0 } else { 0.0 })
}

fn expect_kind(spec: &SpikedModelSpec, kind: ModelKind) -> Result<()> {
    spec.validate()?;
    if spec.kind != kind {
        return Err(Error::Usage(format!("expected a {kind:?} model, got {:?}", spec.kind)));
    }
    Ok(())
}

/// One draw of the spiked covariance model.
#[derive(Debug, Clone)]
pub struct CovarianceSample {
    /// `p x n`, one observation per column.
    pub data: DMatrix<f64>,
    /// Population spike directions, `p x r`.
    pub directions: DMatrix<f64>,
}

/// `X = Sigma^(1/2) Z` with `Sigma = I + sum_i (l_i - 1) u_i u_i'`.
///
/// The `u_i` are coordinate vectors unless `random_rotation` is set.
pub fn gen_spiked_cov_data(spec: &SpikedModelSpec, replicate: usize) -> Result<CovarianceSample> {
    expect_kind(spec, ModelKind::SpikedCovariance)?;
    let (n, p, r) = (spec.n, spec.p_or_m, spec.spikes.len());
    let mut rng = replicate_rng(spec, replicate);
    let u = if spec.random_rotation { orthonormal_gaussian(&mut rng, p, r) } else { coordinate_frame(p, r) };
    let mut x = gaussian_matrix(&mut rng, p, n);
    if r > 0 {
        let mut proj = u.transpose() * &x;
        for (i, &l) in spec.spikes.iter().enumerate() {
            proj.row_mut(i).scale_mut(l.sqrt() - 1.0);
        }
        x += &u * proj;
    }
    Ok(CovarianceSample { data: x, directions: u })
}

/// One draw of the signal-plus-noise model.
#[derive(Debug, Clone)]
pub struct SignalPlusNoiseSample {
    /// `X~ / sqrt(m) = sum_i theta_i u_i v_i' + X / sqrt(m)`, shape `n x m`.
    pub data: DMatrix<f64>,
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
}

/// Signal strengths are `theta_i = tau_i (n/m)^(1/4)`.
pub fn gen_signal_plus_noise(spec: &SpikedModelSpec, replicate: usize) -> Result<SignalPlusNoiseSample> {
    expect_kind(spec, ModelKind::SignalPlusNoise)?;
    let (n, m, r) = (spec.n, spec.p_or_m, spec.spikes.len());
    let mut rng = replicate_rng(spec, replicate);
    let u = orthonormal_gaussian(&mut rng, n, r);
    let v = orthonormal_gaussian(&mut rng, m, r);
    let mut y = gaussian_matrix(&mut rng, n, m) / (m as f64).sqrt();
    let scale = (n as f64 / m as f64).powf(0.25);
    for (i, &tau) in spec.spikes.iter().enumerate() {
        y += u.column(i) * v.column(i).transpose() * (tau * scale);
    }
    Ok(SignalPlusNoiseSample { data: y, left: u, right: v })
}

/// One draw of the spiked Wigner model.
#[derive(Debug, Clone)]
pub struct WignerSample {
    /// `Y = sum_i theta_i u_i u_i' + W / sqrt(n)`, exactly symmetric.
    pub data: DMatrix<f64>,
    pub directions: DMatrix<f64>,
}

/// `W` has independent `N(0, 1)` entries on and above the diagonal.
pub fn gen_spiked_wigner(spec: &SpikedModelSpec, replicate: usize) -> Result<WignerSample> {
    expect_kind(spec, ModelKind::SpikedWigner)?;
    let (n, r) = (spec.n, spec.spikes.len());
    let mut rng = replicate_rng(spec, replicate);
    let u = orthonormal_gaussian(&mut rng, n, r);
    let s = 1.0 / (n as f64).sqrt();
    let mut y = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let w: f64 = rng.sample(StandardNormal);
            y[(i, j)] = w * s;
            y[(j, i)] = w * s;
        }
    }
    for (i, &theta) in spec.spikes.iter().enumerate() {
        let c = u.column(i);
        for b in 0..n {
            for a in 0..n {
                let add = theta * c[a] * c[b];
                y[(a, b)] += add;
            }
        }
    }
    // keep exact symmetry after the rank-one updates
    for i in 0..n {
        for j in (i + 1)..n {
            y[(j, i)] = y[(i, j)];
        }
    }
    Ok(WignerSample { data: y, directions: u })
}
