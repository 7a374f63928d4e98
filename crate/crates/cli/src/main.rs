//! `netfuse`: simulate, fit, select, predict and diagnose dynamic network models.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod draws;
mod manifest;
mod tables;

use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use netfuse::fused::{fit_all, BregmanConfig, DyadFit};
use netfuse::mcmc::{ess, run_mcmc, McmcConfig, Scheme};
use netfuse::model::{empirical_init, DyadPaths, InitMode};
use netfuse::network::{read_series_file, write_series, NetworkSeries};
use netfuse::select::{
    bic_select_lambda, changepoint_series, cv_select_lambda, predict_map, predict_mcmc, roc_auc, LambdaGrid,
};
use netfuse::sim::{simulate, SimSpec};
use netfuse::Workers;

use manifest::Run;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<netfuse::Error> for CliError {
    fn from(e: netfuse::Error) -> Self {
        use netfuse::Error as E;
        match e {
            E::InvalidArgument(_) => CliError::Usage(e.to_string()),
            E::Numerical(_) => CliError::Numerical(e.to_string()),
            E::Dimension(_) | E::Index(_) | E::Parse { .. } | E::UndefinedAuc(_) => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "netfuse", version, about = "Fused-lasso dyad models for dynamic directed networks")]
struct Cli {
    /// Worker threads (default: one per logical core).
    #[arg(long, global = true, env = "NETFUSE_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic network series with known coefficient paths.
    Simulate(SimulateArgs),
    /// Penalized MAP fit at a single λ.
    FitMap(FitMapArgs),
    /// Posterior sampling.
    FitMcmc(FitMcmcArgs),
    /// Choose λ over a grid by held-out AUC or BIC.
    Select(SelectArgs),
    /// One-step-ahead link probabilities from a fit directory.
    Predict(PredictArgs),
    /// ROC curve of a prediction against an observed snapshot.
    Roc(RocArgs),
    /// Fraction of dyads whose fitted path changes at each step.
    Changepoints(ChangepointArgs),
    /// Effective sample sizes of the monitored traces in a draws file.
    Ess(EssArgs),
    /// Re-run the command recorded in a manifest, writing to a new directory.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Preset {
    Sim1,
    Sim2,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    preset: Preset,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Override the preset node count.
    #[arg(long)]
    n: Option<usize>,
    /// Override the preset number of snapshots.
    #[arg(long = "len")]
    len: Option<usize>,
    /// Override the preset increment rate.
    #[arg(long)]
    lambda_true: Option<f64>,
    /// Override the preset break time (sim2 only).
    #[arg(long)]
    break_time: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
enum InitArg {
    #[default]
    TimeAverage,
    LogitMargins,
    Zeros,
}

impl From<InitArg> for InitMode {
    fn from(a: InitArg) -> Self {
        match a {
            InitArg::TimeAverage => InitMode::TimeAverage,
            InitArg::LogitMargins => InitMode::LogitMargins,
            InitArg::Zeros => InitMode::Zeros,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct SolverArgs {
    /// Augmentation weight.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Dual step; defaults to mu.
    #[arg(long)]
    delta: Option<f64>,
    /// Relative-change stopping threshold.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1)]
    inner_sweeps: usize,
    /// Skip the active-set refinement after the Bregman iterations.
    #[arg(long)]
    no_polish: bool,
    #[arg(long, value_enum, default_value_t = InitArg::TimeAverage)]
    init: InitArg,
}

impl SolverArgs {
    fn config(&self, lambda: f64) -> BregmanConfig {
        BregmanConfig {
            lambda,
            mu: self.mu,
            delta: self.delta.unwrap_or(self.mu),
            tol: self.tol,
            max_iter: self.max_iter,
            inner_sweeps: self.inner_sweeps,
            polish: !self.no_polish,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct FitMapArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SchemeArg {
    Ffbs,
    Direct,
}

#[derive(Debug, Args, Serialize)]
struct FitMcmcArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = SchemeArg::Ffbs)]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 2000)]
    burnin: usize,
    #[arg(long, default_value_t = 20000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    /// Gamma prior shape for λ.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Gamma prior rate for λ.
    #[arg(long, default_value_t = 0.2)]
    b: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = InitArg::TimeAverage)]
    init: InitArg,
    /// Store every retained path draw (large).
    #[arg(long)]
    keep_paths: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SelectMethod {
    Cv,
    Bic,
}

#[derive(Debug, Args, Serialize)]
struct SelectArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    method: SelectMethod,
    /// `lo:hi:count`, inclusive and evenly spaced.
    #[arg(long, default_value = "0.1:15:31")]
    grid: String,
    /// Number of held-out snapshots for cv.
    #[arg(long, default_value_t = 10)]
    cal_window: usize,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output directory; without it the table goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PredictMethod {
    Map,
    Mcmc,
}

#[derive(Debug, Args, Serialize)]
struct PredictArgs {
    /// Directory written by fit-map or fit-mcmc.
    #[arg(long)]
    fit: PathBuf,
    /// Defaults to mcmc when the directory holds draws, else map.
    #[arg(long, value_enum)]
    method: Option<PredictMethod>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct RocArgs {
    /// Prediction CSV (`from,to,prob`).
    #[arg(long)]
    pred: PathBuf,
    /// Series holding the observed snapshot.
    #[arg(long)]
    data: PathBuf,
    /// Snapshot to score against (default: the last).
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ChangepointArgs {
    /// Directory written by fit-map.
    #[arg(long)]
    fit: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct EssArgs {
    /// Directory written by fit-mcmc, or the draws file itself.
    #[arg(long)]
    draws: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

const SERIES_FILE: &str = "net.txt";
const TRUTH_FILE: &str = "truth.csv";
const FIT_FILE: &str = "fit.csv";
const FIT_SUMMARY_FILE: &str = "fit_summary.csv";
const DRAWS_FILE: &str = "draws.bin";
const DRAWS_SUMMARY_FILE: &str = "summary.csv";
const POSTERIOR_MEAN_FILE: &str = "posterior_mean.csv";
const PREDICTIONS_FILE: &str = "predictions.csv";
const SELECTION_FILE: &str = "selection.csv";
const ROC_FILE: &str = "roc.csv";
const CHANGEPOINTS_FILE: &str = "changepoints.csv";
const ESS_FILE: &str = "ess.csv";

fn flags<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("flags serialize")
}

fn load_series(path: &Path) -> Result<NetworkSeries, CliError> {
    read_series_file(path).map_err(|e| match e {
        netfuse::Error::InvalidArgument(msg) => CliError::Data(msg),
        other => other.into(),
    })
}

fn simulate_cmd(args: &SimulateArgs, workers: &Workers) -> Result<Run, CliError> {
    let mut spec = match args.preset {
        Preset::Sim1 => SimSpec::sim1(args.seed),
        Preset::Sim2 => SimSpec::sim2(args.seed),
    };
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(len) = args.len {
        spec.len = len;
    }
    if let Some(l) = args.lambda_true {
        spec.lambda_true = l;
    }
    if let Some(b) = args.break_time {
        if spec.break_time.is_none() {
            return Err(CliError::Usage("--break-time applies to the sim2 preset only".into()));
        }
        spec.break_time = Some(b);
    }
    let mut run = Run::new(&args.out, "simulate", flags(args), workers.count())?;
    run.seed(args.seed);
    let sim = run.phase("simulate", || simulate(&spec, workers))?;
    let mut net = Vec::new();
    write_series(&sim.series, &mut net).map_err(|e| CliError::Data(e.to_string()))?;
    run.artifact(SERIES_FILE, &net)?;
    run.artifact(TRUTH_FILE, tables::paths_csv(&sim.series.dyad_pairs(), &sim.truth).as_bytes())?;
    run.result("mean_links", sim.series.total_links() as f64 / sim.series.len() as f64);
    Ok(run)
}

fn fit_summary_csv(pairs: &[(usize, usize)], fits: &[DyadFit]) -> String {
    let mut s = String::from("from,to,iterations,converged,polished,kkt_residual\n");
    for (&(i, j), f) in pairs.iter().zip(fits) {
        writeln!(s, "{},{},{},{},{},{}", i + 1, j + 1, f.iterations, f.converged, f.polished, f.kkt_residual).unwrap();
    }
    s
}

fn fit_map_cmd(args: &FitMapArgs, workers: &Workers) -> Result<Run, CliError> {
    let cfg = args.solver.config(args.lambda);
    cfg.validate()?;
    let mut run = Run::new(&args.out, "fit-map", flags(args), workers.count())?;
    let series = run.phase("load", || load_series(&args.data))?;
    let theta0 = empirical_init(&series, args.solver.init.into());
    let fits = run.phase("fit", || fit_all(&series, theta0, &cfg, workers))?;
    let pairs = series.dyad_pairs();
    let unconverged = fits.iter().filter(|f| !f.converged).count();
    if unconverged > 0 {
        eprintln!("warning: {unconverged} of {} dyad fits hit max_iter", fits.len());
    }
    let paths: Vec<DyadPaths> = fits.iter().map(|f| f.paths.clone()).collect();
    run.artifact(FIT_FILE, tables::paths_csv(&pairs, &paths).as_bytes())?;
    run.artifact(FIT_SUMMARY_FILE, fit_summary_csv(&pairs, &fits).as_bytes())?;
    run.result("theta0", theta0.to_array());
    run.result("unconverged", unconverged);
    Ok(run)
}

fn fit_mcmc_cmd(args: &FitMcmcArgs, workers: &Workers) -> Result<Run, CliError> {
    let cfg = McmcConfig {
        scheme: match args.scheme {
            SchemeArg::Ffbs => Scheme::Ffbs,
            SchemeArg::Direct => Scheme::Direct,
        },
        burn_in: args.burnin,
        samples: args.samples,
        thin: args.thin,
        a: args.a,
        b: args.b,
        seed: args.seed,
        monitor_dyads: None,
        keep_paths: args.keep_paths,
    };
    cfg.validate()?;
    let mut run = Run::new(&args.out, "fit-mcmc", flags(args), workers.count())?;
    run.seed(args.seed);
    let series = run.phase("load", || load_series(&args.data))?;
    let theta0 = empirical_init(&series, args.init.into());
    let draws = run.phase("sample", || run_mcmc(&series, theta0, &cfg, workers))?;
    let mut summary = String::from("name,mean,sd,ess\n");
    for t in &draws.traces {
        let n = t.values.len() as f64;
        let mean = t.values.iter().sum::<f64>() / n;
        let sd = (t.values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
        let e = ess(&t.values).map_or(f64::NAN, |e| e);
        writeln!(summary, "{},{mean},{sd},{e}", t.name).unwrap();
    }
    run.artifact(DRAWS_FILE, &draws::encode(&draws))?;
    run.artifact(DRAWS_SUMMARY_FILE, summary.as_bytes())?;
    run.artifact(POSTERIOR_MEAN_FILE, tables::paths_csv(&draws.pairs, &draws.posterior_mean).as_bytes())?;
    run.result("theta0", theta0.to_array());
    run.result("lambda_mean", draws.lambda.iter().sum::<f64>() / draws.draws() as f64);
    Ok(run)
}

fn select_cmd(args: &SelectArgs, workers: &Workers) -> Result<Option<Run>, CliError> {
    let grid: LambdaGrid = args.grid.parse().map_err(|e: netfuse::Error| CliError::Usage(e.to_string()))?;
    let base = args.solver.config(grid.values()[0]);
    base.validate()?;
    let init: InitMode = args.solver.init.into();
    let mut run = match &args.out {
        Some(out) => Some(Run::new(out, "select", flags(args), workers.count())?),
        None => None,
    };
    let series = load_series(&args.data)?;
    let start = std::time::Instant::now();
    let (lambda_star, table) = match args.method {
        SelectMethod::Cv => {
            let sel = cv_select_lambda(&series, &grid, args.cal_window, &base, init, workers)?;
            for t in &sel.skipped {
                eprintln!("warning: held-out snapshot {t} is all zeros or all ones; fold skipped");
            }
            let mut s = String::from("lambda,mean_auc");
            for t in &sel.folds {
                write!(s, ",auc_t{t}").unwrap();
            }
            s.push('\n');
            for row in &sel.table {
                write!(s, "{},{}", row.lambda, row.mean_auc).unwrap();
                for a in &row.fold_auc {
                    write!(s, ",{a}").unwrap();
                }
                s.push('\n');
            }
            (sel.lambda_star, s)
        }
        SelectMethod::Bic => {
            let sel = bic_select_lambda(&series, &grid, &base, init, workers)?;
            let mut s = String::from("lambda,bic\n");
            for (l, b) in &sel.table {
                writeln!(s, "{l},{b}").unwrap();
            }
            (sel.lambda_star, s)
        }
    };
    let secs = start.elapsed().as_secs_f64();
    match run.as_mut() {
        Some(run) => {
            run.grid(grid.values());
            run.artifact(SELECTION_FILE, table.as_bytes())?;
            run.result("lambda_star", lambda_star);
            run.result("select_seconds", secs);
        }
        None => print!("{table}"),
    }
    println!("lambda_star={lambda_star}");
    Ok(run)
}

fn predict_cmd(args: &PredictArgs, workers: &Workers) -> Result<Run, CliError> {
    let has_draws = args.fit.join(DRAWS_FILE).exists();
    let method = args.method.unwrap_or(if has_draws { PredictMethod::Mcmc } else { PredictMethod::Map });
    let mut run = Run::new(&args.out, "predict", flags(args), workers.count())?;
    let pred = match method {
        PredictMethod::Map => {
            let (n, paths) = run.phase("load", || tables::read_paths_csv(&args.fit.join(FIT_FILE)))?;
            run.phase("predict", || predict_map(&paths, n))?
        }
        PredictMethod::Mcmc => {
            run.seed(args.seed);
            let path = args.fit.join(DRAWS_FILE);
            let file = File::open(&path).map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
            let draws = run.phase("load", || draws::read(std::io::BufReader::new(file)))?;
            run.phase("predict", || predict_mcmc(&draws, args.seed, workers))?
        }
    };
    run.artifact(PREDICTIONS_FILE, tables::predictions_csv(&pred).as_bytes())?;
    Ok(run)
}

fn roc_cmd(args: &RocArgs, workers: &Workers) -> Result<Run, CliError> {
    let pred = tables::read_predictions_csv(&args.pred)?;
    let series = load_series(&args.data)?;
    if series.n() != pred.n() {
        return Err(CliError::Data(format!("prediction covers {} nodes, series has {}", pred.n(), series.n())));
    }
    let t = args.t.unwrap_or(series.len());
    if t == 0 || t > series.len() {
        return Err(CliError::Usage(format!("--t {t} outside 1..={}", series.len())));
    }
    let cells = series.off_diagonal(t);
    let scores: Vec<f64> = cells.iter().map(|&(i, j, _)| pred.get(i, j)).collect();
    let labels: Vec<bool> = cells.iter().map(|c| c.2).collect();
    let curve = roc_auc(&scores, &labels)?;
    let mut run = Run::new(&args.out, "roc", flags(args), workers.count())?;
    run.artifact(ROC_FILE, tables::roc_csv(&curve).as_bytes())?;
    run.result("auc", curve.auc);
    run.result("t", t);
    println!("auc={}", curve.auc);
    Ok(run)
}

fn changepoints_cmd(args: &ChangepointArgs, workers: &Workers) -> Result<Run, CliError> {
    let (_, paths) = tables::read_paths_csv(&args.fit.join(FIT_FILE))?;
    let series = changepoint_series(&paths)?;
    let mut run = Run::new(&args.out, "changepoints", flags(args), workers.count())?;
    run.artifact(CHANGEPOINTS_FILE, tables::changepoints_csv(&series).as_bytes())?;
    if let Some((k, v)) = series.iter().enumerate().fold(None, |best: Option<(usize, f64)>, (k, &v)| match best {
        Some((_, b)) if b >= v => best,
        _ => Some((k, v)),
    }) {
        run.result("peak_t", k + 2);
        run.result("peak_fraction", v);
    }
    Ok(run)
}

fn ess_cmd(args: &EssArgs, workers: &Workers) -> Result<Run, CliError> {
    let path = if args.draws.is_dir() { args.draws.join(DRAWS_FILE) } else { args.draws.clone() };
    let file = File::open(&path).map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let d = draws::read(std::io::BufReader::new(file))?;
    let mut s = String::from("name,draws,ess\n");
    for t in &d.traces {
        writeln!(s, "{},{},{}", t.name, t.values.len(), ess(&t.values)?).unwrap();
    }
    let mut run = Run::new(&args.out, "ess", flags(args), workers.count())?;
    run.artifact(ESS_FILE, s.as_bytes())?;
    Ok(run)
}

/// Replaces the value of `--out` (in either spelling) with `out`.
fn retarget(argv: &[String], out: &Path) -> Result<Vec<String>, CliError> {
    let mut v = argv.to_vec();
    let target = out.to_string_lossy().into_owned();
    let mut found = false;
    let mut k = 0;
    while k < v.len() {
        if v[k] == "--out" && k + 1 < v.len() {
            v[k + 1] = target.clone();
            found = true;
            k += 1;
        } else if v[k].starts_with("--out=") {
            v[k] = format!("--out={target}");
            found = true;
        }
        k += 1;
    }
    if !found {
        v.push("--out".into());
        v.push(target);
    }
    Ok(v)
}

fn workers_for(cli_workers: Option<usize>) -> Result<Workers, CliError> {
    match cli_workers {
        Some(k) => Workers::new(k).map_err(CliError::from),
        None => Ok(Workers::available()),
    }
}

fn execute(cli: Cli, argv: Vec<String>) -> Result<(), CliError> {
    let workers = workers_for(cli.workers)?;
    let run = match &cli.command {
        Command::Simulate(a) => Some(simulate_cmd(a, &workers)?),
        Command::FitMap(a) => Some(fit_map_cmd(a, &workers)?),
        Command::FitMcmc(a) => Some(fit_mcmc_cmd(a, &workers)?),
        Command::Select(a) => select_cmd(a, &workers)?,
        Command::Predict(a) => Some(predict_cmd(a, &workers)?),
        Command::Roc(a) => Some(roc_cmd(a, &workers)?),
        Command::Changepoints(a) => Some(changepoints_cmd(a, &workers)?),
        Command::Ess(a) => Some(ess_cmd(a, &workers)?),
        Command::Replay(a) => {
            let m = manifest::read(&a.manifest)?;
            let argv = retarget(&m.argv, &a.out)?;
            let inner = Cli::try_parse_from(&argv).map_err(|e| CliError::Usage(e.to_string()))?;
            if matches!(inner.command, Command::Replay(_)) {
                return Err(CliError::Usage("a replay manifest cannot itself be a replay".into()));
            }
            return execute(inner, argv);
        }
    };
    if let Some(mut run) = run {
        run.set_argv(argv);
        run.finish()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_flag_is_retargeted() {
        let argv: Vec<String> = ["netfuse", "fit-map", "--out", "a", "--lambda", "2"].map(String::from).to_vec();
        assert_eq!(retarget(&argv, Path::new("b")).unwrap()[3], "b");
        let argv: Vec<String> = ["netfuse", "ess", "--out=a"].map(String::from).to_vec();
        assert_eq!(retarget(&argv, Path::new("b")).unwrap()[2], "--out=b");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
