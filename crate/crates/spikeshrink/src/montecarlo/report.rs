use serde::Serialize;

use super::ModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
}

impl Stat {
    /// Mean and standard error (sample standard deviation over `sqrt(k)`).
    pub fn of(values: &[f64]) -> Stat {
        let k = values.len();
        if k == 0 {
            return Stat { mean: f64::NAN, stderr: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        let stderr = if k > 1 {
            let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        } else {
            0.0
        };
        Stat { mean, stderr }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossRecord {
    pub rule: String,
    pub loss: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub seed: u64,
    /// Leading eigenvalues on the framework's normalized scale.
    pub eigenvalues: Vec<f64>,
    /// Squared cosines with the population (left) spike directions.
    pub left_cos2: Vec<f64>,
    /// Squared cosines with the right signal vectors (signal-plus-noise only).
    pub right_cos2: Vec<f64>,
    pub losses: Vec<LossRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossStat {
    pub rule: String,
    pub loss: String,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub eigenvalues: Vec<Stat>,
    pub left_cos2: Vec<Stat>,
    pub right_cos2: Vec<Stat>,
    pub losses: Vec<LossStat>,
}

impl Aggregate {
    /// Recomputes every statistic from the per-replicate rows.
    pub fn from_replicates(rows: &[ReplicateRecord]) -> Aggregate {
        let column = |get: &dyn Fn(&ReplicateRecord) -> &Vec<f64>| -> Vec<Stat> {
            let k = rows.first().map_or(0, |r| get(r).len());
            (0..k).map(|i| Stat::of(&rows.iter().map(|r| get(r)[i]).collect::<Vec<_>>())).collect()
        };
        let losses = rows
            .first()
            .map(|first| {
                first
                    .losses
                    .iter()
                    .enumerate()
                    .map(|(j, rec)| {
                        let s = Stat::of(&rows.iter().map(|r| r.losses[j].value).collect::<Vec<_>>());
                        LossStat { rule: rec.rule.clone(), loss: rec.loss.clone(), mean: s.mean, stderr: s.stderr }
                    })
                    .collect()
            })
            .unwrap_or_default();
        Aggregate {
            eigenvalues: column(&|r| &r.eigenvalues),
            left_cos2: column(&|r| &r.left_cos2),
            right_cos2: column(&|r| &r.right_cos2),
            losses,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryLoss {
    pub rule: String,
    pub loss: String,
    /// `None` where no asymptotic formula applies.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theory {
    pub eigenvalues: Vec<f64>,
    pub left_cos2: Vec<f64>,
    pub right_cos2: Vec<f64>,
    pub losses: Vec<TheoryLoss>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub kind: ModelKind,
    pub n: usize,
    pub p_or_m: usize,
    pub spikes: Vec<f64>,
    pub framework: String,
    pub gamma_n: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Seeds {
    pub base: u64,
    pub replicates: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub model: ModelSummary,
    pub seeds: Seeds,
    pub per_replicate: Vec<ReplicateRecord>,
    pub aggregate: Aggregate,
    pub theory: Theory,
}

impl SimulationReport {
    pub fn loss_stat(&self, rule: &str, loss: &str) -> Option<&LossStat> {
        self.aggregate.losses.iter().find(|s| s.rule == rule && s.loss == loss)
    }

    pub fn theory_loss(&self, rule: &str, loss: &str) -> Option<f64> {
        self.theory.losses.iter().find(|s| s.rule == rule && s.loss == loss).and_then(|s| s.value)
    }
}
