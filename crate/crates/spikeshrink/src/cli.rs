//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spikeshrink_core::estimators::{
    calibrate_noise, check_symmetric, sample_covariance, shrink_spectrum, wigner_denoise, EigenSystem,
};
use spikeshrink_core::shrinkage::{
    agnostic_threshold, optimal_eta_formal, optimal_threshold, rank_aware_loss, regret_and_improvement,
    threshold_crossing_spike, Norm, OperatorThreshold, RuleKind, ShrinkageRule, ThresholdChoice,
};
use spikeshrink_core::spike_maps::{bulk_edge, cosine2, eigmap, eigmap_inv, Framework, SpikeValue};

use crate::config::{evaluate_assertions, read_config};
use crate::error::{Error, Result};
use crate::io::{format_f64, matrix_to_csv, read_matrix, table_to_csv, write_output};
use crate::montecarlo::{run_experiment, SimulationReport};

#[derive(Debug, Parser)]
#[command(name = "spikeshrink", version, about = "Eigenvalue shrinkage for spiked covariance and Wigner models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shrink the eigenvalues of a covariance matrix (or of XX'/n with --from-data).
    Shrink(ShrinkArgs),
    /// Denoise a symmetric matrix observed under spiked Wigner noise.
    Wigner(WignerArgs),
    /// Print closed-form tables: thresholds, shrinkers, losses or regret.
    Tables(TablesArgs),
    /// Run a Monte-Carlo experiment described by a JSON config.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Optimal,
    Agnostic,
    Threshold,
    Identity,
}

#[derive(Debug, Args)]
pub struct ShrinkArgs {
    /// CSV matrix: symmetric p x p, or p x n data with --from-data.
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Sidecar JSON path [default: output with a .json extension]
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "optimal")]
    pub rule: RuleArg,
    /// F, O or N.
    #[arg(long, default_value = "F")]
    pub loss: Norm,
    /// prop:<gamma>, dzero, dinf or auto.
    #[arg(long, default_value = "auto")]
    pub framework: String,
    /// Aspect ratio p/n [default: p/n from --n or the data]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Sample size behind the covariance.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of leading eigenvalues to shrink [default: p]
    #[arg(long)]
    pub rank: Option<usize>,
    /// Estimate the noise level from the median eigenvalue and work in its units.
    #[arg(long)]
    pub calibrate: bool,
    /// Treat the input as p x n data (one column per observation).
    #[arg(long)]
    pub from_data: bool,
    /// Skip one header line in the input.
    #[arg(long)]
    pub header: bool,
    /// Exponent slack of the operator-norm threshold.
    #[arg(long, conflicts_with = "bulk_edge")]
    pub epsilon: Option<f64>,
    /// Threshold the operator-norm rule at the bulk edge instead.
    #[arg(long)]
    pub bulk_edge: bool,
    /// Explicit raw-scale threshold for --rule threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct WignerArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value = "F")]
    pub loss: Norm,
    #[arg(long, default_value_t = 1)]
    pub rank_plus: usize,
    #[arg(long, default_value_t = 0)]
    pub rank_minus: usize,
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableArg {
    Thresholds,
    Shrinkers,
    Losses,
    Regret,
}

#[derive(Debug, Args)]
pub struct TablesArgs {
    #[arg(long, value_enum)]
    pub which: TableArg,
    /// prop:<gamma>, dzero, dinf or wigner.
    #[arg(long, default_value = "dzero")]
    pub framework: String,
    /// `start:stop:step` or a comma-separated list of spikes.
    #[arg(long, default_value = "0:4:0.5")]
    pub grid: String,
    /// Write to a file instead of standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Exit with status 4 when a configured assertion fails.
    #[arg(long)]
    pub assert: bool,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Shrink(a) => shrink(&a),
        Command::Wigner(a) => wigner(&a),
        Command::Tables(a) => tables(&a),
        Command::Simulate(a) => simulate(&a),
    }
}

#[derive(Serialize)]
struct EstimatedSpike {
    index: usize,
    eigenvalue: f64,
    normalized: f64,
    spike: f64,
    cosine2: f64,
}

#[derive(Serialize)]
struct Sidecar {
    framework: String,
    rule: String,
    loss: String,
    gamma_n: f64,
    n: Option<usize>,
    p: usize,
    rank: usize,
    sigma2: Option<f64>,
    eigenvalues: Vec<f64>,
    shrunk_eigenvalues: Vec<f64>,
    estimated_spikes: Vec<EstimatedSpike>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn shrink(a: &ShrinkArgs) -> Result<()> {
    let raw = read_matrix(&a.input, a.header)?;
    let (s, n) = if a.from_data {
        let cols = raw.ncols();
        if a.n.is_some_and(|n| n != cols) {
            return Err(usage(format!("--n conflicts with the {cols} observations in the data")));
        }
        (sample_covariance(&raw)?, Some(cols))
    } else {
        if !raw.is_square() {
            return Err(usage(format!(
                "expected a square covariance matrix, got {} x {} (use --from-data for raw data)",
                raw.nrows(),
                raw.ncols()
            )));
        }
        (check_symmetric(&raw)?, a.n)
    };
    let p = s.nrows();
    if n == Some(0) {
        return Err(usage("--n must be positive"));
    }
    let auto = a.framework.trim().eq_ignore_ascii_case("auto");
    let named: Option<Framework> = if auto { None } else { Some(a.framework.parse()?) };
    if named == Some(Framework::Wigner) {
        return Err(usage("use the `wigner` subcommand for Wigner matrices"));
    }
    let gamma_n = match (a.gamma, n, named) {
        (Some(g), _, _) => g,
        (None, Some(n), _) => p as f64 / n as f64,
        (None, None, Some(Framework::Proportional { gamma })) => gamma,
        // the identity rule never looks at the aspect ratio
        _ if a.rule == RuleArg::Identity && !a.calibrate => 1.0,
        _ => return Err(usage("the aspect ratio is unknown: pass --gamma or --n")),
    };
    if !(gamma_n.is_finite() && gamma_n > 0.0) {
        return Err(usage(format!("gamma must be positive, got {gamma_n}")));
    }
    let fw = match named {
        Some(fw) => fw,
        None => Framework::proportional(gamma_n)?,
    };
    let kind = match a.rule {
        RuleArg::Identity => RuleKind::Identity,
        RuleArg::Optimal if auto => RuleKind::Agnostic(a.loss),
        RuleArg::Optimal => RuleKind::Optimal(a.loss),
        RuleArg::Agnostic => RuleKind::Agnostic(a.loss),
        RuleArg::Threshold => match a.threshold {
            Some(t) => RuleKind::HardThreshold(ThresholdChoice::Explicit(t)),
            None => RuleKind::HardThreshold(ThresholdChoice::Optimal(a.loss)),
        },
    };
    if a.threshold.is_some() && a.rule != RuleArg::Threshold {
        return Err(usage("--threshold applies to --rule threshold only"));
    }
    let rank = a.rank.unwrap_or(p);
    if rank > p {
        return Err(usage(format!("--rank {rank} exceeds the dimension {p}")));
    }
    let op = if a.bulk_edge {
        OperatorThreshold::BulkEdge
    } else {
        a.epsilon.map_or(OperatorThreshold::default(), OperatorThreshold::Exponent)
    };
    let rule = ShrinkageRule::new(kind, fw, gamma_n).with_rank(rank).with_dimension(p).with_operator_threshold(op);

    let eig = EigenSystem::of_symmetric(&s)?;
    let sigma2 = if a.calibrate {
        let n = n.ok_or_else(|| usage("--calibrate needs --n or --from-data"))?;
        let s2 = calibrate_noise(&eig.values, (n, p))?;
        if !(s2 > 0.0) {
            return Err(Error::Core(spikeshrink_core::Error::Numeric(format!(
                "estimated noise level {s2} is not positive"
            ))));
        }
        Some(s2)
    } else {
        None
    };
    let scale = sigma2.unwrap_or(1.0);
    let unit: Vec<f64> = eig.values.iter().map(|v| v / scale).collect();
    let shrunk: Vec<f64> = shrink_spectrum(&unit, &rule)?.into_iter().map(|v| v * scale).collect();
    let out = eig.reconstruct(&shrunk);

    let mut estimated = Vec::new();
    for (i, &lam) in unit.iter().enumerate().take(rank) {
        if let Some((x, spike)) = estimated_spike(lam, fw, gamma_n)? {
            estimated.push(EstimatedSpike {
                index: i,
                eigenvalue: lam * scale,
                normalized: x,
                spike,
                cosine2: cosine2(SpikeValue::for_framework(spike, fw), fw)?,
            });
        }
    }
    let sidecar = Sidecar {
        framework: fw.to_string(),
        rule: format!("{kind:?}"),
        loss: a.loss.to_string(),
        gamma_n,
        n,
        p,
        rank,
        sigma2,
        eigenvalues: eig.values.clone(),
        shrunk_eigenvalues: shrunk,
        estimated_spikes: estimated,
    };
    let sidecar_path = a.sidecar.clone().unwrap_or_else(|| default_sidecar(&a.output));
    if same_path(&sidecar_path, &a.output) {
        return Err(usage("the sidecar path equals the output path"));
    }
    write_output(&a.output, &matrix_to_csv(&out), &[&a.input])?;
    write_output(&sidecar_path, &to_json(&sidecar)?, &[&a.input])?;
    Ok(())
}

// Spike estimate on the framework scale for eigenvalues past the bulk edge.
fn estimated_spike(lam: f64, fw: Framework, gamma_n: f64) -> Result<Option<(f64, f64)>> {
    let (x, edge) = match fw {
        Framework::DisproZero => (spikeshrink_core::spike_maps::to_hat(lam, gamma_n)?, 2.0),
        Framework::DisproInf => {
            (spikeshrink_core::spike_maps::to_bar(lam, gamma_n)?, eigmap(SpikeValue::bar(0.0), fw)?)
        }
        Framework::Proportional { gamma } => (lam, bulk_edge(gamma)),
        Framework::Wigner => (lam, 2.0),
    };
    if x > edge {
        Ok(Some((x, eigmap_inv(x, fw)?.value)))
    } else {
        Ok(None)
    }
}

fn default_sidecar(output: &Path) -> PathBuf {
    let p = output.with_extension("json");
    if p == output {
        output.with_extension("sidecar.json")
    } else {
        p
    }
}

fn same_path(a: &Path, b: &Path) -> bool {
    a == b || matches!((a.canonicalize(), b.canonicalize()), (Ok(x), Ok(y)) if x == y)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| usage(format!("cannot serialize JSON: {e}")))
}

fn wigner(a: &WignerArgs) -> Result<()> {
    let y = read_matrix(&a.input, a.header)?;
    if !y.is_square() {
        return Err(usage(format!("expected a square matrix, got {} x {}", y.nrows(), y.ncols())));
    }
    if a.rank_plus + a.rank_minus > y.nrows() {
        return Err(usage(format!("--rank-plus + --rank-minus exceeds the dimension {}", y.nrows())));
    }
    let out = wigner_denoise(&y, a.loss, a.rank_plus, a.rank_minus)?;
    write_output(&a.output, &matrix_to_csv(&out), &[&a.input])
}

/// Parses `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || usage(format!("invalid grid `{s}` (expected start:stop:step or a comma list)"));
    let num = |t: &str| t.trim().parse::<f64>().ok().filter(|x| x.is_finite());
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, h] = parts.as_slice() else { return Err(bad()) };
        let (a, b, h) = (num(a).ok_or_else(bad)?, num(b).ok_or_else(bad)?, num(h).ok_or_else(bad)?);
        if !(h > 0.0) || b < a || (b - a) / h > 1e6 {
            return Err(bad());
        }
        let k = ((b - a) / h + 1e-9).floor() as usize;
        Ok((0..=k).map(|i| a + i as f64 * h).collect())
    } else {
        s.split(',').map(|t| num(t).ok_or_else(bad)).collect()
    }
}

/// Rows of one closed-form table.
pub fn table(which: TableArg, fw: Framework, grid: &[f64]) -> Result<(Vec<&'static str>, Vec<Vec<String>>)> {
    let f = format_f64;
    let sv = |x: f64| SpikeValue::for_framework(x, fw);
    let mut rows = Vec::new();
    let header = match which {
        TableArg::Thresholds => {
            match fw {
                Framework::Proportional { gamma } => {
                    let t = agnostic_threshold(Norm::Frobenius, gamma)?;
                    let spike = eigmap_inv(t, fw)?.value;
                    rows.push(vec!["F".into(), f(t), f(spike)]);
                }
                _ => {
                    let tfw = if fw == Framework::Wigner { Framework::DisproZero } else { fw };
                    for norm in Norm::ALL {
                        rows.push(vec![
                            norm.to_string(),
                            f(optimal_threshold(norm, tfw)?),
                            f(threshold_crossing_spike(norm, tfw)?),
                        ]);
                    }
                }
            }
            vec!["norm", "threshold", "crossing_spike"]
        }
        TableArg::Shrinkers => {
            for &x in grid {
                let mut row = vec![f(x), f(eigmap(sv(x), fw)?)];
                for norm in Norm::ALL {
                    row.push(f(optimal_eta_formal(sv(x), norm, fw)?));
                }
                rows.push(row);
            }
            vec!["spike", "eigenvalue", "F", "O", "N"]
        }
        TableArg::Losses | TableArg::Regret => {
            for &x in grid {
                for norm in Norm::ALL {
                    let ra = rank_aware_loss(sv(x), norm, fw)?;
                    let (regret, improvement) = regret_and_improvement(sv(x), norm, fw)?;
                    let mut row = vec![f(x), norm.to_string(), f(ra), f(ra - regret)];
                    if which == TableArg::Regret {
                        row.push(f(regret));
                        row.push(f(improvement));
                    }
                    rows.push(row);
                }
            }
            if which == TableArg::Regret {
                vec!["spike", "norm", "rank_aware_loss", "optimal_loss", "regret", "improvement"]
            } else {
                vec!["spike", "norm", "rank_aware_loss", "optimal_loss"]
            }
        }
    };
    Ok((header, rows))
}

fn tables(a: &TablesArgs) -> Result<()> {
    let fw: Framework = a.framework.parse()?;
    let grid = if a.which == TableArg::Thresholds { Vec::new() } else { parse_grid(&a.grid)? };
    if matches!(a.which, TableArg::Losses | TableArg::Regret)
        && fw == Framework::Wigner
        && grid.iter().any(|x| *x < 0.0)
    {
        return Err(usage("loss tables for wigner take nonnegative spikes (losses are even)"));
    }
    let (header, rows) = table(a.which, fw, &grid)?;
    let text = table_to_csv(&header, &rows)?;
    match &a.output {
        Some(path) => write_output(path, &text, &[]),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    spike: Option<f64>,
    report: &'a SimulationReport,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    runs: Vec<RunReport<'a>>,
}

/// Long-format per-replicate CSV for a list of runs.
pub fn replicates_csv(results: &[(Option<f64>, SimulationReport)]) -> Result<String> {
    let mut rows = Vec::new();
    for (spike, rep) in results {
        let s = spike.map(format_f64).unwrap_or_default();
        for r in &rep.per_replicate {
            let mut push = |quantity: &str, index: String, rule: &str, loss: &str, v: f64| {
                rows.push(vec![
                    s.clone(),
                    r.replicate.to_string(),
                    r.seed.to_string(),
                    quantity.to_string(),
                    index,
                    rule.to_string(),
                    loss.to_string(),
                    format_f64(v),
                ]);
            };
            for (i, &v) in r.eigenvalues.iter().enumerate() {
                push("eigenvalue", i.to_string(), "", "", v);
            }
            for (i, &v) in r.left_cos2.iter().enumerate() {
                push("left_cos2", i.to_string(), "", "", v);
            }
            for (i, &v) in r.right_cos2.iter().enumerate() {
                push("right_cos2", i.to_string(), "", "", v);
            }
            for l in &r.losses {
                push("loss", String::new(), &l.rule, &l.loss, l.value);
            }
        }
    }
    table_to_csv(&["spike", "replicate", "seed", "quantity", "index", "rule", "loss", "value"], &rows)
}

/// Plot-ready mean losses per spike, rule and loss.
pub fn curve_csv(results: &[(Option<f64>, SimulationReport)]) -> Result<String> {
    let mut rows = Vec::new();
    for (spike, rep) in results {
        let s = spike.or_else(|| rep.model.spikes.first().copied()).map(format_f64).unwrap_or_default();
        for l in &rep.aggregate.losses {
            let theory = rep.theory_loss(&l.rule, &l.loss).map(format_f64).unwrap_or_default();
            rows.push(vec![
                s.clone(),
                l.rule.clone(),
                l.loss.clone(),
                format_f64(l.mean),
                format_f64(l.stderr),
                theory,
            ]);
        }
    }
    table_to_csv(&["spike", "rule", "norm", "mean_loss", "stderr", "theory_loss"], &rows)
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let exp = read_config(&a.config)?;
    let mut results = Vec::with_capacity(exp.runs.len());
    for run in &exp.runs {
        let rep = run_experiment(&run.config)?;
        results.push((run.spike, rep));
    }
    let report =
        ReportFile { runs: results.iter().map(|(spike, report)| RunReport { spike: *spike, report }).collect() };
    let dir = &a.out_dir;
    let inputs = [a.config.as_path()];
    write_output(&dir.join(&exp.outputs.report), &to_json(&report)?, &inputs)?;
    write_output(&dir.join(&exp.outputs.replicates_csv), &replicates_csv(&results)?, &inputs)?;
    write_output(&dir.join(&exp.outputs.curve_csv), &curve_csv(&results)?, &inputs)?;

    let outcomes = evaluate_assertions(&exp.assertions, &results);
    for o in &outcomes {
        println!("{} {}: observed {}", if o.passed { "PASS" } else { "FAIL" }, o.description, format_f64(o.value));
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if a.assert && failed > 0 {
        return Err(Error::Assertion(failed));
    }
    Ok(())
}
