//! The experiment drivers.

use std::sync::Arc;
use std::time::Instant;

use dyadic_sketch::bandit::{run_policy_with, Environment, Policy};
use dyadic_sketch::numerics::{add_outer, symmetric_eigenvalues};
use dyadic_sketch::{DenseMatrix, DyadicConfig, DyadicSketch, SketchKind, SketchState};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::data::{load_dataset, Dataset};
use crate::env::{
    gen_gaussian_instance, gen_orthonormal_instance, gen_stream, repetition_seed,
    ClassificationEnv,
};
use crate::error::{HarnessError, Result};
use crate::output::MetricsTable;

/// Regularizer used by the sketches of an approximation run (it does not affect `SᵀS`).
const APPROX_LAMBDA: f64 = 1.0;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsTable> {
    match cfg.experiment {
        ExperimentKind::Approx => run_approx_experiment(cfg),
        _ => run_bandit_experiment(cfg),
    }
}

/// `‖A − B‖₂` for symmetric `A`, `B` via the dense eigensolver.
pub fn spectral_error(exact: &DenseMatrix, approx: &DenseMatrix) -> Result<f64> {
    let diff = exact.sub(approx)?;
    let vals = symmetric_eigenvalues(&diff)?;
    Ok(vals
        .first()
        .map_or(0.0, |lo| lo.abs().max(vals[vals.len() - 1].abs())))
}

/// Feeds one stream to an FD sketch and a dyadic sketch, recording the spectral error of
/// each against the exact Gram matrix after every row, the tracked bound (total shrinkage)
/// and the cumulative update time.
pub fn run_approx_experiment(cfg: &ExperimentConfig) -> Result<MetricsTable> {
    cfg.validate()?;
    let a = &cfg.approx;
    if cfg.d > a.dim_cap {
        return Err(HarnessError::Config(format!(
            "d = {} exceeds the dense-oracle cap {}",
            cfg.d, a.dim_cap
        )));
    }
    let header = ["t", "FD_time_ms", "FD_err", "FD_bound", "DBS_time_ms", "DBS_err", "DBS_bound"]
        .map(String::from)
        .to_vec();
    let mut sums = vec![vec![0.0; header.len()]; cfg.rounds];
    for rep in 0..cfg.repetitions {
        let rows = gen_stream(a, cfg.d, cfg.rounds, repetition_seed(cfg.seed, rep))?;
        let mut fd = SketchState::new(SketchKind::Fd, a.fd_sketch_size, cfg.d, APPROX_LAMBDA)?;
        let dcfg = DyadicConfig::new(a.l0, a.epsilon, APPROX_LAMBDA, a.kind).with_rule(a.rule);
        let mut dbs = DyadicSketch::new(dcfg, cfg.d)?;
        let mut gram = DenseMatrix::zeros(cfg.d, cfg.d);
        let (mut fd_ms, mut dbs_ms) = (0.0, 0.0);
        for (t, x) in rows.iter().enumerate() {
            add_outer(&mut gram, 1.0, x);
            let start = Instant::now();
            fd.fd_update(x)?;
            fd_ms += start.elapsed().as_secs_f64() * 1e3;
            let start = Instant::now();
            dbs.update(x)?;
            dbs_ms += start.elapsed().as_secs_f64() * 1e3;

            let fd_err = spectral_error(&gram, &fd.approx_gram())?;
            let dbs_err = spectral_error(&gram, &dbs.approx_gram())?;
            let dbs_bound: f64 = dbs.shrink_sums().iter().sum();
            let row = [
                (t + 1) as f64,
                fd_ms,
                fd_err,
                fd.shrink_total(),
                dbs_ms,
                dbs_err,
                dbs_bound,
            ];
            sums[t].iter_mut().zip(row).for_each(|(s, v)| *s += v);
        }
    }
    let reps = cfg.repetitions as f64;
    let mut table = MetricsTable::new(header);
    table.rows = sums
        .into_iter()
        .map(|mut r| {
            r.iter_mut().skip(1).for_each(|v| *v /= reps);
            r
        })
        .collect();
    Ok(table)
}

fn load_classification_data(cfg: &ExperimentConfig) -> Result<Option<Arc<Dataset>>> {
    if cfg.experiment != ExperimentKind::Classify {
        return Ok(None);
    }
    let path = cfg
        .dataset
        .as_deref()
        .ok_or_else(|| HarnessError::Config("classification needs a dataset".into()))?;
    Ok(Some(Arc::new(load_dataset(path, cfg.labels.as_deref())?)))
}

/// Environment of one repetition; every policy gets its own copy built from the same seed.
pub fn make_environment(
    cfg: &ExperimentConfig,
    seed: u64,
    data: Option<&Arc<Dataset>>,
) -> Result<Box<dyn Environment + Send>> {
    Ok(match cfg.experiment {
        ExperimentKind::Synthetic => Box::new(gen_gaussian_instance(cfg, seed)),
        ExperimentKind::WorstCase => Box::new(gen_orthonormal_instance(
            cfg,
            cfg.orthonormal_rank.unwrap_or(cfg.d),
            cfg.weights.as_deref(),
            seed,
        )?),
        ExperimentKind::Classify => {
            let data = data.ok_or_else(|| HarnessError::Config("dataset not loaded".into()))?;
            Box::new(ClassificationEnv::new(data.clone(), cfg.target_label, seed)?)
        }
        ExperimentKind::Approx => {
            return Err(HarnessError::Config(
                "approx is not a bandit experiment".into(),
            ))
        }
    })
}

/// Cumulative regret and cumulative policy time (ms) per round for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub regret: Vec<f64>,
    pub time_ms: Vec<f64>,
}

pub fn run_single(
    cfg: &ExperimentConfig,
    policy_idx: usize,
    rep: usize,
    data: Option<&Arc<Dataset>>,
) -> Result<RunTrace> {
    let roster = cfg.expanded_roster();
    let spec = roster
        .get(policy_idx)
        .ok_or_else(|| HarnessError::Config(format!("no policy #{policy_idx}")))?;
    let seed = repetition_seed(cfg.seed, rep);
    let mut env = make_environment(cfg, seed, data)?;
    let mut policy = Policy::new(spec.to_policy_config(cfg.bounds()), env.dim())?;
    let mut trace = RunTrace {
        regret: Vec::with_capacity(cfg.rounds),
        time_ms: Vec::with_capacity(cfg.rounds),
    };
    let (mut regret, mut ms) = (0.0, 0.0);
    run_policy_with(&mut policy, env.as_mut(), cfg.rounds, |r| {
        regret += r.instant_regret.unwrap_or(0.0);
        ms += r.policy_time.as_secs_f64() * 1e3;
        trace.regret.push(regret);
        trace.time_ms.push(ms);
    })?;
    Ok(trace)
}

/// Runs every roster policy on every repetition (in parallel) and averages the traces.
pub fn run_bandit_experiment(cfg: &ExperimentConfig) -> Result<MetricsTable> {
    cfg.validate()?;
    let roster = cfg.expanded_roster();
    if roster.is_empty() {
        return Err(HarnessError::Config("policy roster is empty".into()));
    }
    let data = load_classification_data(cfg)?;
    let tasks: Vec<(usize, usize)> = (0..cfg.repetitions)
        .flat_map(|rep| (0..roster.len()).map(move |p| (rep, p)))
        .collect();
    let traces = tasks
        .par_iter()
        .map(|&(rep, p)| run_single(cfg, p, rep, data.as_ref()))
        .collect::<Result<Vec<_>>>()?;

    let mut header = vec!["t".to_owned()];
    for spec in &roster {
        let label = spec.label();
        header.push(format!("{label}_regret"));
        header.push(format!("{label}_time_ms"));
    }
    let reps = cfg.repetitions as f64;
    let mut table = MetricsTable::new(header);
    for t in 0..cfg.rounds {
        let mut row = vec![(t + 1) as f64];
        for p in 0..roster.len() {
            let (mut reg, mut ms) = (0.0, 0.0);
            for rep in 0..cfg.repetitions {
                let tr = &traces[rep * roster.len() + p];
                reg += tr.regret[t];
                ms += tr.time_ms[t];
            }
            row.push(reg / reps);
            row.push(ms / reps);
        }
        table.rows.push(row);
    }
    Ok(table)
}
