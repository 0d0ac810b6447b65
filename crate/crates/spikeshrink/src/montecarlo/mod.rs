//! Seeded generators for the three spiked ensembles and the experiment runner.

mod generators;
mod report;
mod runner;

pub use generators::{
    gen_signal_plus_noise, gen_spiked_cov_data, gen_spiked_wigner, orthonormal_gaussian, replicate_rng, replicate_seed,
    CovarianceSample, SignalPlusNoiseSample, WignerSample,
};
pub use report::{
    Aggregate, LossRecord, LossStat, ModelSummary, ReplicateRecord, Seeds, SimulationReport, Stat, Theory, TheoryLoss,
};
pub use runner::{run_experiment, thread_cap_from_env, ExperimentConfig, NamedRule, THREADS_ENV};
pub use spikeshrink_core::pivots::{empirical_loss, empirical_loss_low_rank, ShiftedLowRank};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SpikedCovariance,
    SignalPlusNoise,
    SpikedWigner,
}

/// Generative description of a spiked ensemble.
///
/// `p_or_m` is the dimension `p` for covariance data, the column count `m` for
/// signal-plus-noise data, and ignored for Wigner matrices (which are `n x n`).
/// Spikes are raw `l` for covariance, `tau` for signal-plus-noise and `theta`
/// for Wigner.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikedModelSpec {
    pub kind: ModelKind,
    pub n: usize,
    pub p_or_m: usize,
    pub spikes: Vec<f64>,
    pub seed: u64,
    pub replicates: usize,
    /// Allows covariance spikes below 1.
    pub bilateral: bool,
    /// Draw Haar-random spike directions instead of coordinate axes (covariance only).
    pub random_rotation: bool,
}

impl SpikedModelSpec {
    pub fn new(kind: ModelKind, n: usize, p_or_m: usize, spikes: Vec<f64>, seed: u64, replicates: usize) -> Self {
        SpikedModelSpec { kind, n, p_or_m, spikes, seed, replicates, bilateral: false, random_rotation: false }
    }

    /// Dimension of the matrix whose spectrum is analysed.
    pub fn dim(&self) -> usize {
        match self.kind {
            ModelKind::SpikedCovariance => self.p_or_m,
            ModelKind::SignalPlusNoise | ModelKind::SpikedWigner => self.n,
        }
    }

    /// Collects every violated constraint.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n == 0 {
            out.push("model.n must be at least 1".to_string());
        }
        if self.kind != ModelKind::SpikedWigner && self.p_or_m == 0 {
            out.push("model dimension p (or m) must be at least 1".to_string());
        }
        if self.replicates == 0 {
            out.push("model.replicates must be at least 1".to_string());
        }
        if self.spikes.iter().any(|x| !x.is_finite()) {
            out.push("spikes must be finite".to_string());
        }
        if self.spikes.windows(2).any(|w| w[0] < w[1]) {
            out.push("spikes must be sorted in descending order".to_string());
        }
        let limit = match self.kind {
            ModelKind::SpikedCovariance => self.p_or_m,
            ModelKind::SignalPlusNoise => self.n.min(self.p_or_m),
            ModelKind::SpikedWigner => self.n,
        };
        if self.spikes.len() > limit {
            out.push(format!("{} spikes do not fit in dimension {limit}", self.spikes.len()));
        }
        match self.kind {
            ModelKind::SpikedCovariance => {
                if self.spikes.iter().any(|&l| l <= 0.0) {
                    out.push("covariance spikes must be positive".to_string());
                } else if !self.bilateral && self.spikes.iter().any(|&l| l < 1.0) {
                    out.push("covariance spikes must be >= 1 unless the model is bilateral".to_string());
                }
            }
            ModelKind::SignalPlusNoise => {
                if self.spikes.iter().any(|&t| t < 0.0) {
                    out.push("signal strengths tau must be nonnegative".to_string());
                }
            }
            ModelKind::SpikedWigner => {}
        }
        if self.random_rotation && self.kind != ModelKind::SpikedCovariance {
            out.push("random_rotation applies to covariance models only".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p))
        }
    }
}
