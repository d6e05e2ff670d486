//! Command-line front end for the `pinns` binary.
//!
//! Every CSV starts with `#` comment lines holding the resolved
//! configuration, so a file is self-describing. Timing lives only in the last
//! column (`wall_s`).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, ErrorReport, CSV_HEADER};
use crate::network::Checkpoint;
use crate::problems::{HeatSolution, ProblemKind, ProblemSpec, Sampling, SetCounts};
use crate::training::{self, EnsembleOptions, EnsembleResult, Hyperparameters, Optimizer};

#[derive(Debug, Parser)]
#[command(name = "pinns", version, about = "Physics-informed neural networks for PDE data assimilation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one problem (one config or a grid) and write CSV, JSON and the best checkpoint.
    Run(ExperimentConfig),
    /// Re-run one of the result tables.
    Reproduce(ReproduceArgs),
    /// Write the generated training sets as CSV.
    DumpPoints(ExperimentConfig),
    /// Evaluate a checkpoint against the exact solution.
    Eval(EvalArgs),
}

/// Flat experiment description. Flags override values from `--config`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// TOML file with the same keys as the flags (snake_case).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Problem id, e.g. poisson, heat1d, heatnd:5, wave-gcc, stokes.
    #[arg(long)]
    pub problem: Option<String>,
    /// Total number of training points.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub n_int: Option<usize>,
    #[arg(long)]
    pub n_sb: Option<usize>,
    #[arg(long)]
    pub n_d: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative noise level on the data.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Output directory (`run`) or file (`dump-points`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `table` for the full search grid, or a TOML file with `[[config]]` entries.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lambda_reg: Option<f64>,
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// printed | decaying
    #[arg(long)]
    pub heat_solution: Option<String>,
    /// structured | random
    #[arg(long)]
    pub sampling: Option<String>,
    /// mean | best restart per CSV row.
    #[arg(long)]
    pub select: Option<String>,
    #[arg(long, env = "PINNS_THREADS")]
    pub threads: Option<usize>,
}

macro_rules! merge_fields {
    ($a:expr, $b:expr, $($f:ident),*) => {
        ExperimentConfig { config: $a.config.clone(), $($f: $a.$f.clone().or_else(|| $b.$f.clone())),* }
    };
}

impl ExperimentConfig {
    /// Flag values win over `file`.
    pub fn merged(&self, file: &ExperimentConfig) -> ExperimentConfig {
        merge_fields!(
            self, file, problem, n, n_int, n_sb, n_d, restarts, seed, noise, out, grid, depth, width, lambda, lambda_reg,
            optimizer, max_iter, heat_solution, sampling, select, threads
        )
    }

    /// Reads `--config` if given and merges it under the flags.
    pub fn load(&self) -> Result<ExperimentConfig> {
        match &self.config {
            None => Ok(self.clone()),
            Some(path) => {
                let text = fs::read_to_string(path)?;
                let file: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
                Ok(self.merged(&file))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Select {
    #[default]
    Mean,
    Best,
}

impl std::str::FromStr for Select {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Select::Mean),
            "best" => Ok(Select::Best),
            _ => Err(Error::Config(format!("unknown selection `{s}` (mean, best)"))),
        }
    }
}

/// A configuration with every default filled in.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub spec: ProblemSpec,
    pub counts: SetCounts,
    pub grid: Vec<Hyperparameters>,
    pub restarts: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub select: Select,
}

/// Hyperparameters of the published table for each problem.
pub fn default_hyperparameters(spec: &ProblemSpec) -> Hyperparameters {
    match spec.kind {
        ProblemKind::Heat1D { .. } if spec.sampling == Sampling::Structured => Hyperparameters::new(8, 20, 0.0, 1e-3),
        ProblemKind::HeatNd { n } if n < 10 => Hyperparameters::new(4, 20, 0.0, 1e-2),
        ProblemKind::HeatNd { n } if n < 20 => Hyperparameters::new(4, 20, 0.0, 1e-3),
        ProblemKind::HeatNd { .. } => Hyperparameters::new(4, 20, 1e-6, 1e-3),
        _ => Hyperparameters::new(4, 24, 0.0, 1e-3),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    config: Vec<Hyperparameters>,
}

fn parse<T: std::str::FromStr>(v: &Option<String>) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    v.as_deref()
        .map(|s| s.parse::<T>().map_err(|e| Error::Config(e.to_string())))
        .transpose()
}

impl ExperimentConfig {
    pub fn resolve(&self) -> Result<Resolved> {
        let id = self
            .problem
            .as_deref()
            .ok_or_else(|| Error::Config("missing --problem".into()))?;
        let mut spec = ProblemSpec::from_id(id)?;
        if let Some(sol) = parse::<HeatSolution>(&self.heat_solution)? {
            match &mut spec.kind {
                ProblemKind::Heat1D { solution } => *solution = sol,
                _ => return Err(Error::Config("--heat-solution applies to heat1d only".into())),
            }
        }
        if let Some(s) = parse::<Sampling>(&self.sampling)? {
            spec.sampling = s;
        }
        if let Some(noise) = self.noise {
            if !(noise >= 0.0) {
                return Err(Error::Config("noise must be non-negative".into()));
            }
            spec.noise_level = noise;
        }
        let mut counts = spec.counts(self.n.unwrap_or(spec.default_n));
        if let Some(v) = self.n_int {
            counts.n_int = v;
        }
        if let Some(v) = self.n_sb {
            counts.n_sb = v;
        }
        if let Some(v) = self.n_d {
            counts.n_d = v;
        }
        if counts.n_int == 0 || counts.n_d == 0 || (spec.kind.has_boundary() && counts.n_sb == 0) {
            return Err(Error::Config(format!("all point counts must be positive ({counts})")));
        }
        if !spec.kind.has_boundary() && counts.n_sb != 0 {
            return Err(Error::Config(format!("problem `{}` has no boundary set", spec.id)));
        }
        let mut grid = match self.grid.as_deref() {
            Some("table") => Hyperparameters::grid(),
            Some(path) => {
                let text = fs::read_to_string(path)?;
                let g: GridFile = toml::from_str(&text).map_err(|e| Error::Config(format!("{path}: {e}")))?;
                g.config
            }
            None => {
                let mut h = default_hyperparameters(&spec);
                if let Some(v) = self.depth {
                    h.depth = v;
                }
                if let Some(v) = self.width {
                    h.width = v;
                }
                if let Some(v) = self.lambda {
                    h.lambda = v;
                }
                if let Some(v) = self.lambda_reg {
                    h.lambda_reg = v;
                }
                vec![h]
            }
        };
        let optimizer = parse::<Optimizer>(&self.optimizer)?;
        for h in &mut grid {
            if let Some(o) = optimizer {
                h.optimizer = o;
            }
            if let Some(m) = self.max_iter {
                h.max_iter = m;
            }
            h.validate()?;
        }
        if grid.is_empty() {
            return Err(Error::Config("empty hyperparameter grid".into()));
        }
        let restarts = self.restarts.unwrap_or(1);
        if restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        Ok(Resolved {
            spec,
            counts,
            grid,
            restarts,
            seed: self.seed.unwrap_or(0),
            out: self.out.clone(),
            select: parse::<Select>(&self.select)?.unwrap_or_default(),
        })
    }
}

fn hyper_line(h: &Hyperparameters) -> String {
    format!(
        "depth={} width={} q={} lambda_reg={} lambda={} optimizer={:?} max_iter={} activation={:?}",
        h.depth, h.width, h.q, h.lambda_reg, h.lambda, h.optimizer, h.max_iter, h.activation
    )
    .to_lowercase()
}

const ERROR_NOTE: &str = "# errors = relative, in percent; H1 normalized by the full H1 norm of the exact \
                          solution; supL2 = max over time slices of the spatial L2 error; p_L2 after removing the mean";

fn problem_header(out: &mut String, spec: &ProblemSpec, counts: &SetCounts) {
    let _ = writeln!(out, "# problem = {}", spec.id);
    let _ = writeln!(out, "# kind = {:?}", spec.kind);
    let _ = writeln!(out, "# sampling = {:?}", spec.sampling);
    let _ = writeln!(out, "# noise_level = {}", spec.noise_level);
    let _ = writeln!(out, "# counts = {counts}");
    let _ = writeln!(out, "{ERROR_NOTE}");
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One CSV row in [`CSV_HEADER`] order.
#[allow(clippy::too_many_arguments)]
pub fn csv_row(
    problem: &str,
    counts: &SetCounts,
    hyper: &Hyperparameters,
    seed: u64,
    restarts: usize,
    r: &ErrorReport,
    wall_s: f64,
) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.3}",
        problem,
        counts.total(),
        counts.n_int,
        counts.n_sb,
        counts.n_d,
        hyper.depth,
        hyper.width,
        hyper.lambda,
        hyper.lambda_reg,
        seed,
        restarts,
        r.e_dt,
        r.e_pt,
        r.e_t,
        r.errors.l2_pct,
        opt(r.errors.h1_pct),
        opt(r.errors.sup_l2_pct),
        opt(r.errors.p_l2_pct),
        wall_s
    )
}

/// Row for config `c` of an ensemble, `None` when every restart failed.
fn ensemble_row(res: &EnsembleResult, c: usize, select: Select) -> Option<String> {
    let stats = &res.configs[c];
    let report = match select {
        Select::Mean => stats.mean.as_ref()?,
        Select::Best => stats.best.as_ref()?,
    };
    let walls: Vec<f64> = (0..res.restarts)
        .filter_map(|r| res.member(c, r).record.as_ref().map(|rec| rec.wall_s))
        .collect();
    let wall = walls.iter().sum::<f64>() / walls.len().max(1) as f64;
    Some(csv_row(&res.problem, &res.counts, &stats.hyper, res.base_seed, res.restarts, report, wall))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, content)?;
    Ok(())
}

fn failures_comment(out: &mut String, res: &EnsembleResult) {
    for m in res.members.iter().filter(|m| m.failure.is_some()) {
        let _ = writeln!(
            out,
            "# failed: config {} restart {}: {}",
            m.config,
            m.restart,
            m.failure.as_deref().unwrap_or_default()
        );
    }
}

/// `run`: ensemble over the resolved grid. Writes `run.csv` (one row per
/// config, best first), `run.json` and `best.ckpt.json` into the output
/// directory and returns the CSV text.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<String> {
    let r = cfg.load()?.resolve()?;
    let res = training::ensemble(
        &r.spec,
        &r.grid,
        r.counts,
        &EnsembleOptions {
            restarts: r.restarts,
            base_seed: r.seed,
            threads: None,
        },
    )?;
    let mut csv = String::new();
    problem_header(&mut csv, &r.spec, &r.counts);
    let _ = writeln!(csv, "# restarts = {}", r.restarts);
    let _ = writeln!(csv, "# seed = {}", r.seed);
    let _ = writeln!(csv, "# select = {:?}", r.select);
    let _ = writeln!(csv, "# test = {:?}", res.test);
    for (i, h) in r.grid.iter().enumerate() {
        let _ = writeln!(csv, "# config[{i}] = {}", hyper_line(h));
    }
    failures_comment(&mut csv, &res);
    let _ = writeln!(csv, "{CSV_HEADER}");
    for &c in &res.ranking {
        if let Some(row) = ensemble_row(&res, c, r.select) {
            let _ = writeln!(csv, "{row}");
        }
    }
    let dir = r.out.clone().unwrap_or_else(|| PathBuf::from("."));
    write_file(&dir.join("run.csv"), &csv)?;
    write_file(&dir.join("run.json"), &serde_json::to_string_pretty(&res)?)?;
    if let Some(ck) = res.best_checkpoint(res.ranking[0]) {
        ck.save(&dir.join("best.ckpt.json"))?;
    }
    Ok(csv)
}

/// `dump-points`: `set,x1,…,xd,w` rows of the generated training sets.
pub fn cmd_dump_points(cfg: &ExperimentConfig) -> Result<String> {
    let r = cfg.load()?.resolve()?;
    let sets = r.spec.build_sets(r.counts, r.seed)?;
    let mut head = String::new();
    problem_header(&mut head, &r.spec, &sets.counts());
    let _ = writeln!(head, "# seed = {}", r.seed);
    let mut buf = head.into_bytes();
    sets.write_csv(&mut buf)?;
    let text = String::from_utf8(buf).expect("utf-8 csv");
    if let Some(path) = &r.out {
        write_file(path, &text)?;
    }
    Ok(text)
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Checkpoint written by `run`.
    pub checkpoint: PathBuf,
    /// Problem id; defaults to the one stored in the checkpoint.
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub heat_solution: Option<String>,
    /// Seed of random test sets.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// `eval`: generalization errors of a checkpoint as JSON.
pub fn cmd_eval(args: &EvalArgs) -> Result<String> {
    let ck = Checkpoint::load(&args.checkpoint)?;
    let id = args
        .problem
        .clone()
        .or(ck.problem.clone())
        .ok_or_else(|| Error::Config("checkpoint names no problem; pass --problem".into()))?;
    let cfg = ExperimentConfig {
        problem: Some(id),
        heat_solution: args.heat_solution.clone(),
        ..Default::default()
    };
    let spec = cfg.resolve()?.spec;
    if ck.arch.input_dim != spec.input_dim() || ck.arch.output_dim != spec.output_dim() {
        return Err(Error::Checkpoint(format!(
            "network maps {} -> {}, problem `{}` needs {} -> {}",
            ck.arch.input_dim,
            ck.arch.output_dim,
            spec.id,
            spec.input_dim(),
            spec.output_dim()
        )));
    }
    let (test, desc) = metrics::default_test_set(&spec, args.seed);
    let errors = metrics::evaluate(&spec, &ck.arch, ck.theta.as_slice(), &test);
    #[derive(Serialize)]
    struct Out<'a> {
        problem: &'a str,
        test: metrics::TestDescriptor,
        #[serde(flatten)]
        errors: metrics::GeneralizationErrors,
    }
    Ok(serde_json::to_string_pretty(&Out {
        problem: &spec.id,
        test: desc,
        errors,
    })?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Table {
    /// Poisson, exact data.
    P1,
    /// Poisson, noisy data.
    P2,
    /// 1-D heat, structured points.
    H1,
    /// 1-D heat, random points.
    H2,
    /// n-D heat.
    Hn,
    /// Wave, observation region with geometric control.
    W1,
    /// Wave, observation region without geometric control.
    W2,
    /// Stokes.
    St,
}

impl Table {
    pub fn id(self) -> &'static str {
        match self {
            Table::P1 => "p1",
            Table::P2 => "p2",
            Table::H1 => "h1",
            Table::H2 => "h2",
            Table::Hn => "hn",
            Table::W1 => "w1",
            Table::W2 => "w2",
            Table::St => "st",
        }
    }
}

/// All dimensions of the n-D heat table.
pub const HEATND_DIMS: [usize; 6] = [1, 5, 10, 20, 50, 100];

/// One row of a table sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub label: String,
    pub problem: String,
    pub n: usize,
    pub hyper: Hyperparameters,
}

fn row(label: &str, problem: &str, n: usize, depth: usize, width: usize, lambda_reg: f64, lambda: f64) -> TableRow {
    TableRow {
        label: label.into(),
        problem: problem.into(),
        n,
        hyper: Hyperparameters::new(depth, width, lambda_reg, lambda),
    }
}

/// Rows of a table; `dims` restricts the n-D heat sweep.
pub fn table_rows(table: Table, dims: Option<&[usize]>) -> Result<Vec<TableRow>> {
    let squares = |p: &str, sizes: &[usize], hs: &[(usize, usize, f64, f64)]| -> Vec<TableRow> {
        sizes
            .iter()
            .zip(hs)
            .map(|(&k, &(d, w, r, l))| row(&format!("{k}x{k}"), p, k * k, d, w, r, l))
            .collect()
    };
    let heat = |p: &str, hs: &[(usize, usize, f64, f64)]| -> Vec<TableRow> {
        [50, 100, 200]
            .iter()
            .zip(hs)
            .map(|(&k, &(d, w, r, l))| row(&format!("16x{k}"), p, 16 * k, d, w, r, l))
            .collect()
    };
    let std4 = (4, 24, 0.0, 1e-3);
    Ok(match table {
        Table::P1 => squares("poisson", &[20, 40, 80, 160], &[std4; 4]),
        Table::P2 => squares("poisson-noisy", &[20, 40, 80, 160], &[std4; 4]),
        Table::H1 => heat("heat1d", &[(8, 20, 0.0, 1e-3); 3]),
        Table::H2 => heat("heat1d-random", &[std4, std4, (4, 24, 0.0, 0.000788)]),
        Table::W1 => squares("wave-gcc", &[60, 90, 120], &[std4, (4, 20, 0.0, 1e-3), std4]),
        Table::W2 => squares("wave-nogcc", &[60, 90, 120], &[std4; 3]),
        Table::St => squares("stokes", &[20, 40, 80], &[std4, std4, (4, 20, 0.0, 1e-2)]),
        Table::Hn => {
            let dims = dims.unwrap_or(&HEATND_DIMS);
            let mut rows = Vec::new();
            for &n in dims {
                if n == 0 {
                    return Err(Error::Config("dimension must be positive".into()));
                }
                let id = format!("heatnd:{n}");
                let h = default_hyperparameters(&ProblemSpec::from_id(&id)?);
                rows.push(TableRow {
                    label: format!("n={n}"),
                    problem: id,
                    n: 16384,
                    hyper: h,
                });
            }
            rows
        }
    })
}

#[derive(Debug, Deserialize)]
struct RefTable {
    title: String,
    columns: Vec<String>,
    rows: Vec<RefRow>,
}

#[derive(Debug, Deserialize)]
struct RefRow {
    label: String,
    values: Vec<f64>,
}

fn reference_tables() -> BTreeMap<String, RefTable> {
    toml::from_str(include_str!("../data/reference.toml")).expect("bundled reference data")
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub table: Table,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; the CSV is `<out>/<table>.csv`.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Dimensions for `hn`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Only these row labels (e.g. `20x20,40x40`).
    #[arg(long, value_delimiter = ',')]
    pub rows: Option<Vec<String>>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// mean | best; defaults to best for `st`, mean otherwise.
    #[arg(long)]
    pub select: Option<Select>,
    #[arg(long, env = "PINNS_THREADS")]
    pub threads: Option<usize>,
}

/// `reproduce`: sweeps a table and writes `<out>/<table>.csv`.
pub fn cmd_reproduce(args: &ReproduceArgs) -> Result<String> {
    if args.restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()));
    }
    let mut rows = table_rows(args.table, args.dims.as_deref())?;
    if let Some(keep) = &args.rows {
        rows.retain(|r| keep.contains(&r.label));
        if rows.is_empty() {
            return Err(Error::Config(format!("no rows match {keep:?}")));
        }
    }
    let select = args.select.unwrap_or(if args.table == Table::St {
        Select::Best
    } else {
        Select::Mean
    });
    let refs = reference_tables();
    let reference = refs.get(args.table.id());
    let mut csv = String::new();
    let _ = writeln!(csv, "# table = {}", args.table.id());
    let _ = writeln!(csv, "{ERROR_NOTE}");
    if let Some(t) = reference {
        let _ = writeln!(csv, "# title = {}", t.title);
    }
    let _ = writeln!(csv, "# restarts = {}", args.restarts);
    let _ = writeln!(csv, "# seed = {}", args.seed);
    let _ = writeln!(csv, "# select = {select:?}");
    for r in &mut rows {
        if let Some(m) = args.max_iter {
            r.hyper.max_iter = m;
        }
        let _ = writeln!(csv, "# row {} = problem={} N={} {}", r.label, r.problem, r.n, hyper_line(&r.hyper));
    }
    if let Some(t) = reference {
        for rr in &t.rows {
            let vals: Vec<String> = t.columns.iter().zip(&rr.values).map(|(c, v)| format!("{c}={v}")).collect();
            let _ = writeln!(csv, "# reference {} : {}", rr.label, vals.join(" "));
        }
    }
    let mut body = String::new();
    for r in &rows {
        let outcome = ProblemSpec::from_id(&r.problem).and_then(|spec| {
            let counts = spec.counts(r.n);
            training::ensemble(
                &spec,
                std::slice::from_ref(&r.hyper),
                counts,
                &EnsembleOptions {
                    restarts: args.restarts,
                    base_seed: args.seed,
                    threads: None,
                },
            )
        });
        match outcome {
            Ok(res) => {
                failures_comment(&mut csv, &res);
                match ensemble_row(&res, 0, select) {
                    Some(line) => {
                        let _ = writeln!(body, "{line}");
                    }
                    None => {
                        let _ = writeln!(csv, "# row {} failed: no successful restart", r.label);
                    }
                }
            }
            Err(e) => {
                let _ = writeln!(csv, "# row {} failed: {e}", r.label);
            }
        }
        eprintln!("{}: row {} done", args.table.id(), r.label);
    }
    let _ = writeln!(csv, "{CSV_HEADER}");
    csv.push_str(&body);
    write_file(&args.out.join(format!("{}.csv", args.table.id())), &csv)?;
    Ok(csv)
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::UnknownProblem { .. } | Error::Config(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn init_threads(threads: Option<usize>) {
    if let Some(t) = threads {
        // a second call only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(cfg) => {
            init_threads(cfg.threads);
            cmd_run(cfg)
        }
        Command::Reproduce(args) => {
            init_threads(args.threads);
            cmd_reproduce(args)
        }
        Command::DumpPoints(cfg) => cmd_dump_points(cfg),
        Command::Eval(args) => cmd_eval(args),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
