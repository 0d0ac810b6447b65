//! JSON experiment configurations.
//!
//! Structural problems (unknown keys) and semantic problems are each collected
//! in full before anything runs.

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use spikeshrink_core::shrinkage::{LossSpec, Norm, OperatorThreshold, RuleKind, ThresholdChoice};
use spikeshrink_core::spike_maps::Framework;

use crate::error::{Error, Result};
use crate::montecarlo::{ExperimentConfig, ModelKind, NamedRule, SimulationReport, SpikedModelSpec};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: ModelSection,
    pub framework: String,
    #[serde(default)]
    pub rules: Vec<RuleSection>,
    #[serde(default)]
    pub losses: Vec<String>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub operator_threshold: Option<OperatorThresholdSection>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub outputs: OutputsSection,
    #[serde(default)]
    pub assertions: Vec<AssertionSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: String,
    pub n: usize,
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub spikes: Vec<f64>,
    /// `raw` (default), `hat` or `bar`; covariance models only.
    #[serde(default)]
    pub spike_scale: Option<String>,
    pub seed: u64,
    pub replicates: usize,
    #[serde(default)]
    pub bilateral: bool,
    #[serde(default)]
    pub random_rotation: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSection {
    #[serde(default)]
    pub name: Option<String>,
    /// `identity`, `rank_aware`, `optimal`, `agnostic` or `threshold`.
    pub kind: String,
    #[serde(default)]
    pub norm: Option<String>,
    /// Explicit raw-scale threshold for `threshold` rules.
    #[serde(default)]
    pub threshold: Option<f64>,
}

/// Runs the model once per listed value, each time with that single spike.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub spikes: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorThresholdSection {
    /// `exponent` or `bulk_edge`.
    pub kind: String,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_replicates")]
    pub replicates_csv: String,
    #[serde(default = "default_curve")]
    pub curve_csv: String,
}

fn default_report() -> String {
    "report.json".into()
}
fn default_replicates() -> String {
    "replicates.csv".into()
}
fn default_curve() -> String {
    "curve.csv".into()
}

impl Default for OutputsSection {
    fn default() -> Self {
        OutputsSection { report: default_report(), replicates_csv: default_replicates(), curve_csv: default_curve() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssertionSection {
    /// `eigenvalue`, `left_cos2`, `right_cos2` or `loss`.
    pub quantity: String,
    #[serde(default)]
    pub index: usize,
    #[serde(default)]
    pub rule: Option<String>,
    #[serde(default)]
    pub loss: Option<String>,
    /// Restricts the check to the sweep run with this spike.
    #[serde(default)]
    pub spike: Option<f64>,
    pub target: TargetSection,
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// `within` (default), `below` or `above`.
    #[serde(default)]
    pub relation: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TargetSection {
    Number(f64),
    /// Only `"theory"` is accepted.
    Keyword(String),
    /// Mean loss of another rule under the same loss.
    Rule {
        rule: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    Eigenvalue,
    LeftCos2,
    RightCos2,
    Loss,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Number(f64),
    Theory,
    Rule(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Relation {
    Within,
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub quantity: Quantity,
    pub index: usize,
    pub rule: Option<String>,
    pub loss: Option<String>,
    pub spike: Option<f64>,
    pub target: Target,
    pub tolerance: f64,
    pub relation: Relation,
}

/// One run of a (possibly swept) configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    /// Sweep value as written in the config, if sweeping.
    pub spike: Option<f64>,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub runs: Vec<Run>,
    pub outputs: OutputsSection,
    pub assertions: Vec<Assertion>,
}

const TOP_KEYS: &[&str] =
    &["model", "framework", "rules", "losses", "sweep", "operator_threshold", "threads", "outputs", "assertions"];
const MODEL_KEYS: &[&str] =
    &["kind", "n", "p", "m", "spikes", "spike_scale", "seed", "replicates", "bilateral", "random_rotation"];
const RULE_KEYS: &[&str] = &["name", "kind", "norm", "threshold"];
const SWEEP_KEYS: &[&str] = &["spikes"];
const OPTHR_KEYS: &[&str] = &["kind", "epsilon"];
const OUTPUT_KEYS: &[&str] = &["report", "replicates_csv", "curve_csv"];
const ASSERT_KEYS: &[&str] = &["quantity", "index", "rule", "loss", "spike", "target", "tolerance", "relation"];

fn unknown_keys(v: &Value, path: &str, allowed: &[&str], out: &mut Vec<String>) {
    if let Value::Object(map) = v {
        for k in map.keys() {
            if !allowed.contains(&k.as_str()) {
                out.push(format!("unknown key `{path}{k}`"));
            }
        }
    }
}

fn schema_problems(v: &Value) -> Vec<String> {
    let mut out = Vec::new();
    if !v.is_object() {
        out.push("configuration must be a JSON object".into());
        return out;
    }
    unknown_keys(v, "", TOP_KEYS, &mut out);
    let sections =
        [("model", MODEL_KEYS), ("sweep", SWEEP_KEYS), ("operator_threshold", OPTHR_KEYS), ("outputs", OUTPUT_KEYS)];
    for (key, allowed) in sections {
        if let Some(s) = v.get(key) {
            unknown_keys(s, &format!("{key}."), allowed, &mut out);
        }
    }
    for (key, allowed) in [("rules", RULE_KEYS), ("assertions", ASSERT_KEYS)] {
        if let Some(Value::Array(items)) = v.get(key) {
            for (i, item) in items.iter().enumerate() {
                unknown_keys(item, &format!("{key}[{i}]."), allowed, &mut out);
            }
        }
    }
    out
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str, path: &Path) -> Result<Experiment> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
    let problems = schema_problems(&value);
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let file: ConfigFile = serde_json::from_value(value).map_err(|e| Error::Config(vec![e.to_string()]))?;
    file.into_experiment()
}

pub fn read_config(path: &Path) -> Result<Experiment> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

fn parse_norm(s: Option<&str>, what: &str, out: &mut Vec<String>) -> Option<Norm> {
    match s {
        None => {
            out.push(format!("{what}: `norm` is required"));
            None
        }
        Some(s) => s.parse().map_err(|e| out.push(format!("{what}: {e}"))).ok(),
    }
}

impl ConfigFile {
    fn into_experiment(self) -> Result<Experiment> {
        let mut out = Vec::new();
        let m = &self.model;
        let kind = match m.kind.as_str() {
            "spiked_covariance" => Some(ModelKind::SpikedCovariance),
            "signal_plus_noise" => Some(ModelKind::SignalPlusNoise),
            "spiked_wigner" => Some(ModelKind::SpikedWigner),
            other => {
                out.push(format!(
                    "model.kind `{other}` is not one of spiked_covariance, signal_plus_noise, spiked_wigner"
                ));
                None
            }
        };
        let p_or_m = match kind {
            Some(ModelKind::SpikedCovariance) => {
                if m.m.is_some() {
                    out.push("model.m applies to signal_plus_noise models; use model.p".into());
                }
                m.p.unwrap_or_else(|| {
                    out.push("model.p is required for spiked_covariance".into());
                    0
                })
            }
            Some(ModelKind::SignalPlusNoise) => {
                if m.p.is_some() {
                    out.push("model.p applies to covariance models; use model.m".into());
                }
                m.m.unwrap_or_else(|| {
                    out.push("model.m is required for signal_plus_noise".into());
                    0
                })
            }
            Some(ModelKind::SpikedWigner) => {
                if m.p.is_some() || m.m.is_some() {
                    out.push("spiked_wigner models take only model.n".into());
                }
                m.n
            }
            None => 0,
        };
        let framework: Option<Framework> = self.framework.parse().map_err(|e| out.push(format!("framework: {e}"))).ok();
        let scale = m.spike_scale.as_deref().unwrap_or("raw");
        if !matches!(scale, "raw" | "hat" | "bar") {
            out.push(format!("model.spike_scale `{scale}` is not one of raw, hat, bar"));
        } else if scale != "raw" && kind.is_some_and(|k| k != ModelKind::SpikedCovariance) {
            out.push("model.spike_scale applies to covariance models only".into());
        }
        let gamma = if m.n > 0 { p_or_m as f64 / m.n as f64 } else { f64::NAN };
        let to_raw = |x: f64| match scale {
            "hat" => 1.0 + x * gamma.sqrt(),
            "bar" => 1.0 + x * gamma,
            _ => x,
        };

        let mut rules = Vec::new();
        for (i, r) in self.rules.iter().enumerate() {
            let what = format!("rules[{i}]");
            let kind = match r.kind.as_str() {
                "identity" => Some(RuleKind::Identity),
                "rank_aware" => Some(RuleKind::RankAware),
                "optimal" => parse_norm(r.norm.as_deref(), &what, &mut out).map(RuleKind::Optimal),
                "agnostic" => parse_norm(r.norm.as_deref(), &what, &mut out).map(RuleKind::Agnostic),
                "threshold" => match (r.threshold, r.norm.as_deref()) {
                    (Some(t), None) => Some(RuleKind::HardThreshold(ThresholdChoice::Explicit(t))),
                    (None, n) => {
                        parse_norm(n, &what, &mut out).map(|n| RuleKind::HardThreshold(ThresholdChoice::Optimal(n)))
                    }
                    (Some(_), Some(_)) => {
                        out.push(format!("{what}: give either `norm` or `threshold`, not both"));
                        None
                    }
                },
                other => {
                    out.push(format!(
                        "{what}: kind `{other}` is not one of identity, rank_aware, optimal, agnostic, threshold"
                    ));
                    None
                }
            };
            if r.threshold.is_some() && r.kind != "threshold" {
                out.push(format!("{what}: `threshold` applies to threshold rules only"));
            }
            if r.norm.is_some() && matches!(r.kind.as_str(), "identity" | "rank_aware") {
                out.push(format!("{what}: `norm` does not apply to {} rules", r.kind));
            }
            if let Some(k) = kind {
                let name = r.name.clone().unwrap_or_else(|| default_rule_name(k));
                rules.push(NamedRule::new(name, k));
            }
        }

        let mut losses = Vec::new();
        for (i, l) in self.losses.iter().enumerate() {
            match l.parse::<LossSpec>() {
                Ok(spec) => losses.push(spec),
                Err(e) => out.push(format!("losses[{i}]: {e}")),
            }
        }
        if !rules.is_empty() && losses.is_empty() {
            out.push("rules are configured but `losses` is empty".into());
        }

        let operator_threshold = match &self.operator_threshold {
            None => OperatorThreshold::default(),
            Some(s) => match (s.kind.as_str(), s.epsilon) {
                ("exponent", e) => {
                    let eps = e.unwrap_or(0.1);
                    if !(eps.is_finite() && eps > 0.0 && eps < 2.0 / 3.0) {
                        out.push(format!("operator_threshold.epsilon must lie in (0, 2/3), got {eps}"));
                    }
                    OperatorThreshold::Exponent(eps)
                }
                ("bulk_edge", None) => OperatorThreshold::BulkEdge,
                ("bulk_edge", Some(_)) => {
                    out.push("operator_threshold.epsilon does not apply to bulk_edge".into());
                    OperatorThreshold::BulkEdge
                }
                (other, _) => {
                    out.push(format!("operator_threshold.kind `{other}` is not one of exponent, bulk_edge"));
                    OperatorThreshold::default()
                }
            },
        };

        let spike_sets: Vec<(Option<f64>, Vec<f64>)> = match &self.sweep {
            Some(s) => {
                if !m.spikes.is_empty() {
                    out.push("give either model.spikes or sweep.spikes, not both".into());
                }
                if s.spikes.is_empty() {
                    out.push("sweep.spikes is empty".into());
                }
                s.spikes.iter().map(|&x| (Some(x), vec![to_raw(x)])).collect()
            }
            None => vec![(None, m.spikes.iter().map(|&x| to_raw(x)).collect())],
        };

        let assertions = self
            .assertions
            .iter()
            .enumerate()
            .filter_map(|(i, a)| {
                let what = format!("assertions[{i}]");
                let before = out.len();
                let quantity = match a.quantity.as_str() {
                    "eigenvalue" => Quantity::Eigenvalue,
                    "left_cos2" => Quantity::LeftCos2,
                    "right_cos2" => Quantity::RightCos2,
                    "loss" => Quantity::Loss,
                    other => {
                        out.push(format!(
                            "{what}: quantity `{other}` is not one of eigenvalue, left_cos2, right_cos2, loss"
                        ));
                        Quantity::Eigenvalue
                    }
                };
                if quantity == Quantity::Loss {
                    match (&a.rule, &a.loss) {
                        (Some(r), Some(l)) => {
                            if !rules.iter().any(|x| &x.name == r) {
                                out.push(format!("{what}: no rule named `{r}`"));
                            }
                            match l.parse::<LossSpec>() {
                                Ok(s) if !losses.contains(&s) => {
                                    out.push(format!("{what}: loss {s} is not configured"))
                                }
                                Err(e) => out.push(format!("{what}: {e}")),
                                _ => {}
                            }
                        }
                        _ => out.push(format!("{what}: loss assertions need `rule` and `loss`")),
                    }
                } else if a.rule.is_some() || a.loss.is_some() {
                    out.push(format!("{what}: `rule` and `loss` apply to loss assertions only"));
                }
                let target = match &a.target {
                    TargetSection::Number(x) => Target::Number(*x),
                    TargetSection::Keyword(k) if k == "theory" => Target::Theory,
                    TargetSection::Keyword(k) => {
                        out.push(format!("{what}: target `{k}` is not a number, \"theory\" or {{\"rule\": ...}}"));
                        Target::Theory
                    }
                    TargetSection::Rule { rule } => {
                        if quantity != Quantity::Loss {
                            out.push(format!("{what}: rule targets apply to loss assertions only"));
                        } else if !rules.iter().any(|x| &x.name == rule) {
                            out.push(format!("{what}: no rule named `{rule}`"));
                        }
                        Target::Rule(rule.clone())
                    }
                };
                let relation = match a.relation.as_deref().unwrap_or("within") {
                    "within" => Relation::Within,
                    "below" => Relation::Below,
                    "above" => Relation::Above,
                    other => {
                        out.push(format!("{what}: relation `{other}` is not one of within, below, above"));
                        Relation::Within
                    }
                };
                let tolerance = match (relation, a.tolerance) {
                    (Relation::Within, None) => {
                        out.push(format!("{what}: `within` needs a tolerance"));
                        0.0
                    }
                    (_, t) => t.unwrap_or(0.0),
                };
                if !(tolerance.is_finite() && tolerance >= 0.0) {
                    out.push(format!("{what}: tolerance must be finite and nonnegative"));
                }
                if let Some(s) = a.spike {
                    if !spike_sets.iter().any(|(x, _)| *x == Some(s)) {
                        out.push(format!("{what}: spike {s} is not among sweep.spikes"));
                    }
                }
                (out.len() == before).then(|| Assertion {
                    quantity,
                    index: a.index,
                    rule: a.rule.clone(),
                    loss: a.loss.clone(),
                    spike: a.spike,
                    target,
                    tolerance,
                    relation,
                })
            })
            .collect::<Vec<_>>();

        let mut runs = Vec::new();
        if let Some(kind) = kind {
            for (label, spikes) in spike_sets {
                let mut model = SpikedModelSpec::new(kind, m.n, p_or_m, spikes, m.seed, m.replicates);
                model.bilateral = m.bilateral;
                model.random_rotation = m.random_rotation;
                let Some(fw) = framework else {
                    for p in model.problems() {
                        if !out.contains(&p) {
                            out.push(p);
                        }
                    }
                    continue;
                };
                let mut cfg = ExperimentConfig::new(model, fw);
                cfg.rules = rules.clone();
                cfg.losses = losses.clone();
                cfg.operator_threshold = operator_threshold;
                cfg.threads = self.threads;
                for p in cfg.problems() {
                    let p = match label {
                        Some(x) => format!("sweep spike {x}: {p}"),
                        None => p,
                    };
                    if !out.contains(&p) {
                        out.push(p);
                    }
                }
                runs.push(Run { spike: label, config: cfg });
            }
        }
        if out.is_empty() {
            Ok(Experiment { runs, outputs: self.outputs, assertions })
        } else {
            Err(Error::Config(out))
        }
    }
}

fn default_rule_name(k: RuleKind) -> String {
    match k {
        RuleKind::Identity => "identity".into(),
        RuleKind::RankAware => "rank_aware".into(),
        RuleKind::Optimal(n) => format!("optimal_{n}"),
        RuleKind::Agnostic(n) => format!("agnostic_{n}"),
        RuleKind::HardThreshold(ThresholdChoice::Optimal(n)) => format!("threshold_{n}"),
        RuleKind::HardThreshold(ThresholdChoice::Explicit(t)) => format!("threshold_{t}"),
    }
}

/// Outcome of one assertion on one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub description: String,
    pub value: f64,
    pub target: f64,
    pub passed: bool,
}

/// Checks every assertion against the runs it applies to.
pub fn evaluate_assertions(assertions: &[Assertion], results: &[(Option<f64>, SimulationReport)]) -> Vec<Outcome> {
    let mut out = Vec::new();
    for a in assertions {
        for (spike, report) in results {
            if a.spike.is_some() && a.spike != *spike {
                continue;
            }
            out.push(check(a, *spike, report));
        }
    }
    out
}

fn check(a: &Assertion, spike: Option<f64>, rep: &SimulationReport) -> Outcome {
    let i = a.index;
    let (value, theory) = match a.quantity {
        Quantity::Eigenvalue => {
            (rep.aggregate.eigenvalues.get(i).map(|s| s.mean), rep.theory.eigenvalues.get(i).copied())
        }
        Quantity::LeftCos2 => (rep.aggregate.left_cos2.get(i).map(|s| s.mean), rep.theory.left_cos2.get(i).copied()),
        Quantity::RightCos2 => (rep.aggregate.right_cos2.get(i).map(|s| s.mean), rep.theory.right_cos2.get(i).copied()),
        Quantity::Loss => {
            let (r, l) = (a.rule.as_deref().unwrap_or(""), normalized_loss(a.loss.as_deref()));
            (rep.loss_stat(r, &l).map(|s| s.mean), rep.theory_loss(r, &l))
        }
    };
    let target = match &a.target {
        Target::Number(x) => Some(*x),
        Target::Theory => theory,
        Target::Rule(r) => rep.loss_stat(r, &normalized_loss(a.loss.as_deref())).map(|s| s.mean),
    };
    let value = value.unwrap_or(f64::NAN);
    let target = target.unwrap_or(f64::NAN);
    let passed = match a.relation {
        Relation::Within => (value - target).abs() <= a.tolerance,
        Relation::Below => value <= target - a.tolerance,
        Relation::Above => value >= target + a.tolerance,
    };
    let quantity = match a.quantity {
        Quantity::Eigenvalue => format!("eigenvalue[{i}]"),
        Quantity::LeftCos2 => format!("left_cos2[{i}]"),
        Quantity::RightCos2 => format!("right_cos2[{i}]"),
        Quantity::Loss => format!("loss {}/{}", a.rule.as_deref().unwrap_or(""), normalized_loss(a.loss.as_deref())),
    };
    let relation = match a.relation {
        Relation::Within => format!("within {} of", a.tolerance),
        Relation::Below if a.tolerance > 0.0 => format!("below (margin {})", a.tolerance),
        Relation::Below => "below".into(),
        Relation::Above if a.tolerance > 0.0 => format!("above (margin {})", a.tolerance),
        Relation::Above => "above".into(),
    };
    let at = spike.map(|s| format!(" at spike {s}")).unwrap_or_default();
    Outcome { description: format!("{quantity}{at} {relation} {target}"), value, target, passed }
}

fn normalized_loss(s: Option<&str>) -> String {
    s.and_then(|s| s.parse::<LossSpec>().ok()).map(|l| l.to_string()).unwrap_or_default()
}
