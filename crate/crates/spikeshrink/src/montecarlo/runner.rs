use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use spikeshrink_core::pivots::{empirical_loss_low_rank, ShiftedLowRank};
use spikeshrink_core::shrinkage::{
    optimal_eta_formal, optimal_threshold, shrink_eigenvalue, two_by_two_loss, Flavor, LossSpec, Norm,
    OperatorThreshold, RuleKind, ShrinkageRule, ThresholdChoice, TwoByTwoLossInput,
};
use spikeshrink_core::spike_maps::{
    cosine2, eigmap, spn_cosines, spn_eigenvalue_limit, to_bar, to_hat, Framework, SpikeValue,
};

use super::generators::{gen_signal_plus_noise, gen_spiked_cov_data, gen_spiked_wigner, replicate_seed};
use super::report::{
    Aggregate, LossRecord, ModelSummary, ReplicateRecord, Seeds, SimulationReport, Theory, TheoryLoss,
};
use super::{ModelKind, SpikedModelSpec};
use crate::error::{Error, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SPECTRAL_SHRINK_THREADS";

/// A shrinkage rule with the label it carries in reports.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedRule {
    pub name: String,
    pub kind: RuleKind,
}

impl NamedRule {
    pub fn new(name: impl Into<String>, kind: RuleKind) -> Self {
        NamedRule { name: name.into(), kind }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: SpikedModelSpec,
    /// Framework used for normalization and theory columns.
    pub framework: Framework,
    pub rules: Vec<NamedRule>,
    pub losses: Vec<LossSpec>,
    pub operator_threshold: OperatorThreshold,
    /// Requested worker threads; `SPECTRAL_SHRINK_THREADS` still caps it.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(model: SpikedModelSpec, framework: Framework) -> Self {
        ExperimentConfig {
            model,
            framework,
            rules: Vec::new(),
            losses: Vec::new(),
            operator_threshold: OperatorThreshold::default(),
            threads: None,
        }
    }

    /// Aspect ratio of the simulated data: `p/n`, `n/m`, or 1 for Wigner.
    pub fn gamma_n(&self) -> f64 {
        let m = &self.model;
        match m.kind {
            ModelKind::SpikedCovariance => m.p_or_m as f64 / m.n as f64,
            ModelKind::SignalPlusNoise => m.n as f64 / m.p_or_m as f64,
            ModelKind::SpikedWigner => 1.0,
        }
    }

    fn shrinkage_rule(&self, kind: RuleKind) -> ShrinkageRule {
        let gamma = if self.model.kind == ModelKind::SpikedWigner { 1.0 } else { self.gamma_n() };
        ShrinkageRule::new(kind, self.framework, gamma)
            .with_rank(self.model.spikes.len())
            .with_dimension(self.model.dim())
            .with_operator_threshold(self.operator_threshold)
    }

    /// Every violated constraint, so they can be reported together.
    pub fn problems(&self) -> Vec<String> {
        let mut out = self.model.problems();
        let fw = self.framework;
        let fw_ok = match self.model.kind {
            ModelKind::SpikedCovariance => fw != Framework::Wigner,
            ModelKind::SignalPlusNoise => fw == Framework::DisproZero,
            ModelKind::SpikedWigner => fw == Framework::Wigner,
        };
        if !fw_ok {
            out.push(format!("framework {fw} does not apply to {:?} models", self.model.kind));
        }
        if self.model.kind == ModelKind::SignalPlusNoise && !self.rules.is_empty() {
            out.push("shrinkage rules are not supported for signal-plus-noise models".into());
        }
        for loss in &self.losses {
            if let Err(e) = loss.check_framework(fw) {
                out.push(e.to_string());
            }
        }
        let mut names: Vec<&str> = self.rules.iter().map(|r| r.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            out.push("rule names must be unique".into());
        }
        if self.threads == Some(0) {
            out.push("threads must be at least 1".into());
        }
        if out.is_empty() {
            for rule in &self.rules {
                let sr = self.shrinkage_rule(rule.kind);
                if let Err(e) = sr.validate() {
                    out.push(format!("rule `{}`: {e}", rule.name));
                }
                if matches!(rule.kind, RuleKind::HardThreshold(_)) {
                    if let Err(e) = sr.raw_threshold() {
                        out.push(format!("rule `{}`: {e}", rule.name));
                    }
                }
                if fw == Framework::Wigner && matches!(rule.kind, RuleKind::Agnostic(_)) {
                    out.push(format!("rule `{}`: agnostic rules apply to covariance data only", rule.name));
                }
            }
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

/// Reads the thread cap from `SPECTRAL_SHRINK_THREADS`.
pub fn thread_cap_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(Error::Usage(format!("{THREADS_ENV} must be a positive integer, got `{s}`"))),
        },
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(_) => Err(Error::Usage(format!("{THREADS_ENV} is not valid unicode"))),
    }
}

/// Runs every replicate, in parallel when allowed, and assembles the report in
/// replicate order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SimulationReport> {
    config.validate()?;
    let cap = thread_cap_from_env()?;
    let threads = match (config.threads, cap) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker threads: {e}")))?;
    let reps = config.model.replicates;
    let rows: Vec<ReplicateRecord> =
        pool.install(|| (0..reps).into_par_iter().map(|i| run_replicate(config, i)).collect::<Result<Vec<_>>>())?;
    let aggregate = Aggregate::from_replicates(&rows);
    let seeds = Seeds {
        base: config.model.seed,
        replicates: (0..reps).map(|i| replicate_seed(config.model.seed, i as u64)).collect(),
    };
    Ok(SimulationReport {
        model: ModelSummary {
            kind: config.model.kind,
            n: config.model.n,
            p_or_m: config.model.p_or_m,
            spikes: config.model.spikes.clone(),
            framework: config.framework.to_string(),
            gamma_n: config.gamma_n(),
            replicates: reps,
        },
        seeds,
        per_replicate: rows,
        aggregate,
        theory: theory(config)?,
    })
}

struct Spectrum {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

fn sorted_eigen(m: DMatrix<f64>, k: usize) -> Spectrum {
    let eig = SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    idx.truncate(k);
    Spectrum {
        values: idx.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: eig.eigenvectors.select_columns(&idx),
    }
}

// Top-k eigenpairs of A A' / scale, through the smaller Gram matrix when A is tall.
fn top_left_pairs(a: &DMatrix<f64>, scale: f64, k: usize) -> Spectrum {
    let (rows, cols) = a.shape();
    if rows <= cols {
        sorted_eigen(a * a.transpose() / scale, k)
    } else {
        let small = sorted_eigen(a.transpose() * a / scale, k);
        let mut vectors = a * &small.vectors;
        for mut c in vectors.column_iter_mut() {
            let nrm = c.norm();
            if nrm > 0.0 {
                c /= nrm;
            }
        }
        Spectrum { values: small.values, vectors }
    }
}

fn cos2(a: nalgebra::DVectorView<f64>, b: nalgebra::DVectorView<f64>) -> f64 {
    let d = a.dot(&b);
    d * d
}

fn normalize(lam: f64, fw: Framework, gamma_n: f64) -> Result<f64> {
    Ok(match fw {
        Framework::DisproZero => to_hat(lam, gamma_n)?,
        Framework::DisproInf => to_bar(lam, gamma_n)?,
        Framework::Proportional { .. } | Framework::Wigner => lam,
    })
}

fn loss_factor(fw: Framework, gamma_n: f64) -> f64 {
    match fw {
        Framework::DisproZero => gamma_n.sqrt(),
        Framework::DisproInf => gamma_n,
        Framework::Proportional { .. } | Framework::Wigner => 1.0,
    }
}

fn run_replicate(cfg: &ExperimentConfig, idx: usize) -> Result<ReplicateRecord> {
    let spec = &cfg.model;
    let r = spec.spikes.len();
    let gamma_n = cfg.gamma_n();
    let fw = cfg.framework;
    let seed = replicate_seed(spec.seed, idx as u64);
    let mut rec = ReplicateRecord {
        replicate: idx,
        seed,
        eigenvalues: Vec::new(),
        left_cos2: Vec::new(),
        right_cos2: Vec::new(),
        losses: Vec::new(),
    };
    match spec.kind {
        ModelKind::SpikedCovariance => {
            let sample = gen_spiked_cov_data(spec, idx)?;
            let (p, n) = sample.data.shape();
            let k = r.max(1).min(p);
            let sp = top_left_pairs(&sample.data, n as f64, k);
            for &lam in &sp.values {
                rec.eigenvalues.push(normalize(lam, fw, gamma_n)?);
            }
            for i in 0..r {
                rec.left_cos2.push(cos2(sp.vectors.column(i), sample.directions.column(i)));
            }
            let truth =
                ShiftedLowRank::new(1.0, sample.directions.clone(), spec.spikes.iter().map(|l| l - 1.0).collect())?;
            let basis = sp.vectors.columns(0, r).into_owned();
            let factor = loss_factor(fw, gamma_n);
            for rule in &cfg.rules {
                let sr = cfg.shrinkage_rule(rule.kind);
                let etas = sp.values[..r]
                    .iter()
                    .map(|&lam| shrink_eigenvalue(lam, &sr).map(|e| e - 1.0))
                    .collect::<Result<Vec<_>, _>>()?;
                let est = ShiftedLowRank::new(1.0, basis.clone(), etas)?;
                for loss in &cfg.losses {
                    let v = empirical_loss_low_rank(&truth, &est, *loss)? / factor;
                    rec.losses.push(LossRecord { rule: rule.name.clone(), loss: loss.to_string(), value: v });
                }
            }
        }
        ModelKind::SignalPlusNoise => {
            let sample = gen_signal_plus_noise(spec, idx)?;
            let (n, m) = sample.data.shape();
            let k = r.max(1).min(n.min(m));
            let left = top_left_pairs(&sample.data, 1.0, k);
            for &lam in &left.values {
                rec.eigenvalues.push(to_hat(lam, gamma_n)?);
            }
            for i in 0..r {
                let u = left.vectors.column(i);
                let sigma = left.values[i].max(0.0).sqrt();
                let mut v: DVector<f64> = sample.data.transpose() * u;
                if sigma > 0.0 {
                    v /= sigma;
                }
                let nv = v.norm();
                if nv > 0.0 {
                    v /= nv;
                }
                rec.left_cos2.push(cos2(u, sample.left.column(i)));
                rec.right_cos2.push(cos2(v.column(0), sample.right.column(i)));
            }
        }
        ModelKind::SpikedWigner => {
            let sample = gen_spiked_wigner(spec, idx)?;
            let n = sample.data.nrows();
            let need_vectors = r > 0 || !cfg.rules.is_empty();
            if !need_vectors {
                rec.eigenvalues.push(top_eigenvalue(&sample.data, seed));
                return Ok(rec);
            }
            let sp = sorted_eigen(sample.data.clone(), n);
            let positions = wigner_positions(&spec.spikes, n);
            if r == 0 {
                rec.eigenvalues.push(sp.values[0]);
            }
            for (i, &pos) in positions.iter().enumerate() {
                rec.eigenvalues.push(sp.values[pos]);
                rec.left_cos2.push(cos2(sp.vectors.column(pos), sample.directions.column(i)));
            }
            let truth = ShiftedLowRank::new(0.0, sample.directions.clone(), spec.spikes.clone())?;
            let basis = sp.vectors.select_columns(&positions);
            for rule in &cfg.rules {
                let sr = cfg.shrinkage_rule(rule.kind);
                let etas = positions
                    .iter()
                    .map(|&pos| shrink_eigenvalue(sp.values[pos], &sr))
                    .collect::<Result<Vec<_>, _>>()?;
                let est = ShiftedLowRank::new(0.0, basis.clone(), etas)?;
                for loss in &cfg.losses {
                    let v = empirical_loss_low_rank(&truth, &est, *loss)?;
                    rec.losses.push(LossRecord { rule: rule.name.clone(), loss: loss.to_string(), value: v });
                }
            }
        }
    }
    Ok(rec)
}

/// Largest eigenvalue of a symmetric matrix by Lanczos with full
/// reorthogonalization; small matrices go to the dense solver.
pub(crate) fn top_eigenvalue(m: &DMatrix<f64>, seed: u64) -> f64 {
    let n = m.nrows();
    if n <= 200 {
        return m.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5851_f42d_4c95_7f2d);
    let mut v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    v /= v.norm();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut prev = f64::NAN;
    let ritz_top = |alpha: &[f64], beta: &[f64]| {
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        t.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    for j in 0..n {
        let mut w = m * &v;
        alpha.push(w.dot(&v));
        basis.push(v);
        for _ in 0..2 {
            for q in &basis {
                let c = w.dot(q);
                w.axpy(-c, q, 1.0);
            }
        }
        let b = w.norm();
        if (j + 1) % 10 == 0 || b <= 1e-12 || j + 1 == n {
            let top = ritz_top(&alpha, &beta);
            if b <= 1e-12 || j + 1 == n || (top - prev).abs() <= 1e-14 * top.abs().max(1.0) {
                return top;
            }
            prev = top;
        }
        beta.push(b);
        v = w / b;
    }
    prev
}

/// Eigenvalue index paired with each Wigner spike: nonnegative spikes take the
/// top eigenvalues, negative ones the bottom eigenvalues.
fn wigner_positions(spikes: &[f64], n: usize) -> Vec<usize> {
    let r = spikes.len();
    spikes.iter().enumerate().map(|(i, &t)| if t >= 0.0 { i } else { n - (r - i) }).collect()
}

fn theory(cfg: &ExperimentConfig) -> Result<Theory> {
    let spec = &cfg.model;
    let fw = cfg.framework;
    let gamma_n = cfg.gamma_n();
    let r = spec.spikes.len();
    let mut t = Theory { eigenvalues: Vec::new(), left_cos2: Vec::new(), right_cos2: Vec::new(), losses: Vec::new() };
    if spec.kind == ModelKind::SignalPlusNoise {
        for &tau in &spec.spikes {
            if tau > 0.0 {
                t.eigenvalues.push(to_hat(spn_eigenvalue_limit(tau, gamma_n)?, gamma_n)?);
                t.left_cos2.push(spn_cosines(tau)?.0);
            } else {
                t.eigenvalues.push(2.0);
                t.left_cos2.push(0.0);
            }
            t.right_cos2.push(0.0);
        }
        if r == 0 {
            t.eigenvalues.push(2.0);
        }
        return Ok(t);
    }
    let xs: Vec<f64> = spec
        .spikes
        .iter()
        .map(|&l| match (spec.kind, fw) {
            (ModelKind::SpikedWigner, _) => l,
            (_, Framework::DisproZero) => (l - 1.0) / gamma_n.sqrt(),
            (_, Framework::DisproInf) => (l - 1.0) / gamma_n,
            _ => l,
        })
        .collect();
    let sv = |x: f64| SpikeValue::for_framework(x, fw);
    for &x in &xs {
        // bilateral covariance spikes below 1 have no normalized limit law here
        let x0 = if spec.kind == ModelKind::SpikedWigner { x } else { x.max(0.0) };
        t.eigenvalues.push(eigmap(sv(x0), fw)?);
        t.left_cos2.push(cosine2(sv(x0), fw)?);
    }
    if r == 0 {
        t.eigenvalues.push(eigmap(sv(0.0), fw)?);
    }
    for rule in &cfg.rules {
        let sr = cfg.shrinkage_rule(rule.kind);
        for loss in &cfg.losses {
            let value = theory_loss(&xs, spec.kind, fw, gamma_n, &sr, *loss)?;
            t.losses.push(TheoryLoss { rule: rule.name.clone(), loss: loss.to_string(), value });
        }
    }
    Ok(t)
}

fn theory_loss(
    xs: &[f64],
    kind: ModelKind,
    fw: Framework,
    gamma_n: f64,
    rule: &ShrinkageRule,
    loss: LossSpec,
) -> Result<Option<f64>> {
    if loss.pivot() != 1 && fw != Framework::DisproZero {
        return Ok(None);
    }
    if kind != ModelKind::SpikedWigner && xs.iter().any(|&x| x < 0.0) {
        return Ok(None);
    }
    let mut parts = Vec::with_capacity(xs.len());
    for &x in xs {
        let s = SpikeValue::for_framework(x, fw);
        let c2 = cosine2(s, fw)?;
        let desc = asymptotic_descriptor(x, fw, gamma_n, rule)?;
        let flavor = match fw {
            Framework::Proportional { .. } => Flavor::ProportionalA,
            _ => Flavor::TildeA,
        };
        parts.push(two_by_two_loss(&TwoByTwoLossInput { spike: x, c2, eta: desc, flavor }, loss.norm)?);
    }
    Ok(Some(match loss.norm {
        Norm::Frobenius => parts.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Norm::Operator => parts.iter().copied().fold(0.0, f64::max),
        Norm::Nuclear => parts.iter().sum(),
    }))
}

/// Limit of the rule's output at the leading eigenvalue, on the framework's
/// normalized scale. In the proportional framework this is the rule itself.
fn asymptotic_descriptor(x: f64, fw: Framework, gamma_n: f64, rule: &ShrinkageRule) -> Result<f64> {
    let s = SpikeValue::for_framework(x, fw);
    let lam = eigmap(s, fw)?;
    if let Framework::Proportional { .. } = fw {
        return Ok(shrink_eigenvalue(lam, rule)?);
    }
    Ok(match rule.kind {
        RuleKind::Identity | RuleKind::RankAware => lam,
        RuleKind::Optimal(norm) | RuleKind::Agnostic(norm) => optimal_eta_formal(s, norm, fw)?,
        RuleKind::HardThreshold(choice) => {
            let tau = match choice {
                ThresholdChoice::Optimal(norm) => optimal_threshold(norm, fw)?,
                ThresholdChoice::Explicit(t) => normalize(t, fw, gamma_n)?,
            };
            let test = if fw == Framework::Wigner { lam.abs() } else { lam };
            if test >= tau {
                lam
            } else {
                0.0
            }
        }
    })
}
