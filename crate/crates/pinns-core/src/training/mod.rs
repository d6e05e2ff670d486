//! Loss assembly, optimizers, single runs and the restart ensemble.

mod adam;
mod lbfgs;
mod loss;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::Activation;
use crate::error::{Error, Result};
use crate::metrics::{self, ErrorReport, GeneralizationErrors, TestDescriptor};
use crate::network::{self, Checkpoint, MlpArchitecture, ParameterVector};
use crate::problems::{ProblemSpec, SetCounts, TrainingSets};
use crate::quadrature::QuadratureSet;
use crate::seed::{self, Stream};

pub use adam::{adam_minimize, AdamOptions};
pub use lbfgs::{lbfgs_minimize, LbfgsOptions, OptimResult, Status};
pub use loss::{assemble_loss, residual_sums, LossEvaluator, LossTerms, LossWeights};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    #[default]
    Lbfgs,
    Adam,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lbfgs" => Ok(Self::Lbfgs),
            "adam" => Ok(Self::Adam),
            _ => Err(Error::Config(format!("unknown optimizer `{s}` (lbfgs, adam)"))),
        }
    }
}

/// One training configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    /// Hidden layers, `K − 1`.
    pub depth: usize,
    pub width: usize,
    pub q: i32,
    pub lambda_reg: f64,
    pub lambda: f64,
    pub optimizer: Optimizer,
    pub max_iter: usize,
    pub activation: Activation,
    /// Adam step size; unused by LBFGS.
    pub learning_rate: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            depth: 4,
            width: 24,
            q: 2,
            lambda_reg: 0.0,
            lambda: 1e-3,
            optimizer: Optimizer::Lbfgs,
            max_iter: 10_000,
            activation: Activation::Tanh,
            learning_rate: 1e-3,
        }
    }
}

pub const GRID_DEPTHS: [usize; 3] = [4, 8, 10];
pub const GRID_WIDTHS: [usize; 3] = [16, 20, 24];
pub const GRID_LAMBDA_REG: [f64; 2] = [0.0, 1e-6];
pub const GRID_LAMBDA: [f64; 4] = [0.001, 0.01, 0.1, 1.0];

impl Hyperparameters {
    pub fn new(depth: usize, width: usize, lambda_reg: f64, lambda: f64) -> Self {
        Self {
            depth,
            width,
            lambda_reg,
            lambda,
            ..Self::default()
        }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    /// The full 72-configuration search grid.
    pub fn grid() -> Vec<Self> {
        let mut out = Vec::new();
        for &depth in &GRID_DEPTHS {
            for &width in &GRID_WIDTHS {
                for &lambda_reg in &GRID_LAMBDA_REG {
                    for &lambda in &GRID_LAMBDA {
                        out.push(Self::new(depth, width, lambda_reg, lambda));
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !(self.lambda_reg >= 0.0) || self.q < 1 {
            return Err(Error::Config(format!(
                "need lambda > 0, lambda_reg >= 0, q >= 1: {self:?}"
            )));
        }
        if self.depth == 0 || self.width == 0 {
            return Err(Error::Config("depth and width must be positive".into()));
        }
        Ok(())
    }

    pub fn architecture(&self, spec: &ProblemSpec) -> MlpArchitecture {
        MlpArchitecture::new(spec.input_dim(), spec.output_dim(), self.depth, self.width).with_activation(self.activation)
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights {
            lambda: self.lambda,
            lambda_reg: self.lambda_reg,
            q: self.q,
        }
    }

    pub fn lbfgs_options(&self) -> LbfgsOptions {
        LbfgsOptions {
            max_iter: self.max_iter,
            ..LbfgsOptions::default()
        }
    }

    pub fn adam_options(&self) -> AdamOptions {
        AdamOptions {
            lr: self.learning_rate,
            max_iter: self.max_iter,
            ..AdamOptions::default()
        }
    }
}

/// Outcome of one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub problem: String,
    pub hyper: Hyperparameters,
    pub seed: u64,
    pub counts: SetCounts,
    pub arch: MlpArchitecture,
    pub theta: ParameterVector,
    pub loss_history: Vec<f64>,
    pub terms: LossTerms,
    pub e_dt: f64,
    pub e_pt: f64,
    pub e_sbt: Option<f64>,
    pub e_t: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: Status,
    pub wall_s: f64,
}

impl TrainRecord {
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(self.arch.clone(), self.theta.clone(), Some(self.problem.clone()))
    }

    /// Finite training errors and a usable start.
    pub fn succeeded(&self) -> bool {
        self.status != Status::NonFiniteStart && self.e_t.is_finite()
    }
}

/// Builds the sets from `seed` and trains on them.
pub fn train(spec: &ProblemSpec, hyper: &Hyperparameters, counts: SetCounts, seed: u64) -> Result<TrainRecord> {
    let sets = spec.build_sets(counts, seed)?;
    train_on(spec, &sets, hyper, seed)
}

/// Trains on prebuilt sets; θ₀ comes from `seed`.
pub fn train_on(spec: &ProblemSpec, sets: &TrainingSets, hyper: &Hyperparameters, seed: u64) -> Result<TrainRecord> {
    hyper.validate()?;
    let start = Instant::now();
    let arch = hyper.architecture(spec);
    let weights = hyper.loss_weights();
    let eval = LossEvaluator::new(spec, sets, &arch, weights)?;
    let theta0 = network::init(&arch, seed::derive(seed, Stream::Init));
    let objective = |t: &[f64]| eval.value_and_gradient(t);
    let res = match hyper.optimizer {
        Optimizer::Lbfgs => lbfgs_minimize(objective, theta0.as_slice(), &hyper.lbfgs_options()),
        Optimizer::Adam => adam_minimize(objective, theta0.as_slice(), &hyper.adam_options()),
    };
    let terms = eval.terms(&res.x);
    let e_sbt = sets.boundary.as_ref().map(|_| terms.e_sb());
    Ok(TrainRecord {
        problem: spec.id.clone(),
        hyper: hyper.clone(),
        seed,
        counts: sets.counts(),
        arch,
        theta: ParameterVector(res.x),
        loss_history: res.history,
        e_dt: terms.e_d(),
        e_pt: terms.e_p(),
        e_sbt,
        e_t: terms.e_t(hyper.lambda),
        terms,
        iterations: res.iterations,
        evaluations: res.evaluations,
        status: res.status,
        wall_s: start.elapsed().as_secs_f64(),
    })
}

/// Training errors of a record combined with test errors.
pub fn report(record: &TrainRecord, errors: GeneralizationErrors, test: TestDescriptor) -> ErrorReport {
    ErrorReport {
        e_dt: record.e_dt,
        e_pt: record.e_pt,
        e_sbt: record.e_sbt,
        e_t: record.e_t,
        errors,
        test,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    pub restarts: usize,
    pub base_seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

/// One (config, restart) member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub config: usize,
    pub restart: usize,
    pub seed: u64,
    pub record: Option<TrainRecord>,
    pub report: Option<ErrorReport>,
    /// Set when the run errored or produced non-finite training errors.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigStats {
    pub config: usize,
    pub hyper: Hyperparameters,
    pub successes: usize,
    pub failures: usize,
    /// Mean over successful restarts; `None` without any.
    pub mean: Option<ErrorReport>,
    /// Restart with the smallest `E_T`.
    pub best_restart: Option<usize>,
    pub best: Option<ErrorReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub problem: String,
    pub counts: SetCounts,
    pub restarts: usize,
    pub base_seed: u64,
    pub test: TestDescriptor,
    /// Ordered by (config, restart).
    pub members: Vec<Member>,
    pub configs: Vec<ConfigStats>,
    /// Config indices by ascending mean `E_T`, configs without successes last.
    pub ranking: Vec<usize>,
}

impl EnsembleResult {
    pub fn best_config(&self) -> &ConfigStats {
        &self.configs[self.ranking[0]]
    }

    pub fn member(&self, config: usize, restart: usize) -> &Member {
        &self.members[config * self.restarts + restart]
    }

    /// Checkpoint of the best restart of `config`.
    pub fn best_checkpoint(&self, config: usize) -> Option<Checkpoint> {
        let r = self.configs[config].best_restart?;
        self.member(config, r).record.as_ref().map(TrainRecord::checkpoint)
    }
}

fn mean_report(reports: &[&ErrorReport]) -> ErrorReport {
    let k = reports.len() as f64;
    let avg = |f: &dyn Fn(&ErrorReport) -> f64| reports.iter().map(|r| f(r)).sum::<f64>() / k;
    let avg_opt = |f: &dyn Fn(&ErrorReport) -> Option<f64>| {
        let v: Option<Vec<f64>> = reports.iter().map(|r| f(r)).collect();
        v.map(|v| v.iter().sum::<f64>() / k)
    };
    ErrorReport {
        e_dt: avg(&|r| r.e_dt),
        e_pt: avg(&|r| r.e_pt),
        e_sbt: avg_opt(&|r| r.e_sbt),
        e_t: avg(&|r| r.e_t),
        errors: GeneralizationErrors {
            l2_pct: avg(&|r| r.errors.l2_pct),
            h1_pct: avg_opt(&|r| r.errors.h1_pct),
            sup_l2_pct: avg_opt(&|r| r.errors.sup_l2_pct),
            p_l2_pct: avg_opt(&|r| r.errors.p_l2_pct),
        },
        test: reports[0].test.clone(),
    }
}

fn run_member(
    spec: &ProblemSpec,
    hyper: &Hyperparameters,
    counts: SetCounts,
    test: &(QuadratureSet, TestDescriptor),
    config: usize,
    restart: usize,
    seed: u64,
) -> Member {
    let mut m = Member {
        config,
        restart,
        seed,
        record: None,
        report: None,
        failure: None,
    };
    match train(spec, hyper, counts, seed) {
        Ok(rec) if rec.succeeded() => {
            let errors = metrics::evaluate(spec, &rec.arch, rec.theta.as_slice(), &test.0);
            m.report = Some(report(&rec, errors, test.1.clone()));
            m.record = Some(rec);
        }
        Ok(rec) => {
            m.failure = Some(format!("run ended with {:?}, E_T = {}", rec.status, rec.e_t));
            m.record = Some(rec);
        }
        Err(e) => m.failure = Some(e.to_string()),
    }
    m
}

/// Trains every config `restarts` times with seeds `base_seed + r` and ranks
/// the configs by mean `E_T`.
pub fn ensemble(
    spec: &ProblemSpec,
    grid: &[Hyperparameters],
    counts: SetCounts,
    opts: &EnsembleOptions,
) -> Result<EnsembleResult> {
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    if opts.restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()));
    }
    let test = metrics::default_test_set(spec, opts.base_seed);
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..opts.restarts).map(move |r| (c, r)))
        .collect();
    let work = || -> Vec<Member> {
        jobs.par_iter()
            .map(|&(c, r)| {
                let seed = opts.base_seed.wrapping_add(r as u64);
                run_member(spec, &grid[c], counts, &test, c, r, seed)
            })
            .collect()
    };
    let members = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work),
        None => work(),
    };
    for m in &members {
        if let Some(f) = &m.failure {
            eprintln!("warning: config {} restart {} excluded: {f}", m.config, m.restart);
        }
    }
    let configs: Vec<ConfigStats> = grid
        .iter()
        .enumerate()
        .map(|(c, hyper)| {
            let runs = &members[c * opts.restarts..(c + 1) * opts.restarts];
            let ok: Vec<&Member> = runs.iter().filter(|m| m.report.is_some()).collect();
            let reports: Vec<&ErrorReport> = ok.iter().map(|m| m.report.as_ref().unwrap()).collect();
            let best = ok
                .iter()
                .min_by(|a, b| {
                    let (ea, eb) = (a.report.as_ref().unwrap().e_t, b.report.as_ref().unwrap().e_t);
                    ea.total_cmp(&eb).then(a.restart.cmp(&b.restart))
                })
                .map(|m| m.restart);
            ConfigStats {
                config: c,
                hyper: hyper.clone(),
                successes: ok.len(),
                failures: runs.len() - ok.len(),
                mean: (!reports.is_empty()).then(|| mean_report(&reports)),
                best_restart: best,
                best: best.and_then(|r| runs[r].report.clone()),
            }
        })
        .collect();
    let mut ranking: Vec<usize> = (0..configs.len()).collect();
    ranking.sort_by(|&a, &b| {
        let key = |c: usize| configs[c].mean.as_ref().map_or(f64::INFINITY, |m| m.e_t);
        key(a).total_cmp(&key(b)).then(a.cmp(&b))
    });
    Ok(EnsembleResult {
        problem: spec.id.clone(),
        counts,
        restarts: opts.restarts,
        base_seed: opts.base_seed,
        test: test.1,
        members,
        configs,
        ranking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Hyperparameters {
        Hyperparameters {
            depth: 2,
            width: 8,
            max_iter: 40,
            ..Hyperparameters::default()
        }
    }

    #[test]
    fn grid_has_all_combinations() {
        let g = Hyperparameters::grid();
        assert_eq!(g.len(), 72);
        assert!(g.iter().all(|h| h.q == 2 && h.optimizer == Optimizer::Lbfgs));
        assert!(g.contains(&Hyperparameters::new(4, 24, 0.0, 0.001)));
    }

    #[test]
    fn invalid_hyperparameters() {
        let mut h = small();
        h.lambda = 0.0;
        assert!(h.validate().is_err());
    }

    #[test]
    fn record_errors_recompute() {
        let spec = ProblemSpec::heat1d(crate::problems::HeatSolution::Printed);
        let counts = spec.counts(200);
        let rec = train(&spec, &small(), counts, 3).unwrap();
        let sets = spec.build_sets(counts, 3).unwrap();
        let eval = LossEvaluator::new(&spec, &sets, &rec.arch, small().loss_weights()).unwrap();
        let t = eval.terms(rec.theta.as_slice());
        let want = (t.data + t.boundary + small().lambda * t.pde).sqrt();
        assert!((rec.e_t - want).abs() <= 1e-12 * want);
        assert!(rec.e_sbt.is_some());
        assert!(rec.loss_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(rec.e_t.is_finite() && rec.e_dt >= 0.0 && rec.e_pt >= 0.0);
    }

    #[test]
    fn single_member_ensemble_matches_train() {
        let spec = ProblemSpec::poisson();
        let counts = spec.counts(100);
        let opts = EnsembleOptions {
            restarts: 1,
            base_seed: 11,
            threads: Some(1),
        };
        let res = ensemble(&spec, &[small()], counts, &opts).unwrap();
        let mut direct = train(&spec, &small(), counts, 11).unwrap();
        let mut member = res.member(0, 0).record.clone().unwrap();
        direct.wall_s = 0.0;
        member.wall_s = 0.0;
        assert_eq!(member, direct);
    }

    #[test]
    fn ensemble_bookkeeping() {
        let spec = ProblemSpec::poisson();
        let counts = spec.counts(100);
        let mut reg = small();
        reg.lambda_reg = 1e-6;
        let opts = EnsembleOptions {
            restarts: 2,
            base_seed: 5,
            threads: Some(2),
        };
        let res = ensemble(&spec, &[small(), reg], counts, &opts).unwrap();
        assert_eq!(res.members.len(), 4);
        assert_eq!(res.ranking.len(), 2);
        let (a, b) = (&res.configs[0], &res.configs[1]);
        assert_ne!(a.mean.as_ref().unwrap().e_t, b.mean.as_ref().unwrap().e_t);
        // distinct initializations per restart
        let t0 = &res.member(0, 0).record.as_ref().unwrap().theta;
        let t1 = &res.member(0, 1).record.as_ref().unwrap().theta;
        assert_ne!(t0, t1);
        assert_eq!(res.member(1, 1).seed, 6);
        assert!(res.best_checkpoint(res.ranking[0]).is_some());
    }

    #[test]
    fn failed_config_ranks_last() {
        let spec = ProblemSpec::poisson();
        let counts = spec.counts(64);
        let mut bad = small();
        bad.lambda = -1.0;
        let opts = EnsembleOptions {
            restarts: 1,
            base_seed: 0,
            threads: Some(1),
        };
        let res = ensemble(&spec, &[bad, small()], counts, &opts).unwrap();
        assert_eq!(res.ranking, vec![1, 0]);
        assert_eq!(res.configs[0].successes, 0);
        assert!(res.configs[0].mean.is_none());
        assert!(res.members[0].failure.is_some());
    }

    #[test]
    fn empty_grid_is_rejected() {
        let spec = ProblemSpec::poisson();
        let opts = EnsembleOptions {
            restarts: 1,
            base_seed: 0,
            threads: None,
        };
        assert!(ensemble(&spec, &[], spec.counts(64), &opts).is_err());
    }
}
