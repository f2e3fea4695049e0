//! The five experiment commands. Each one writes into `config.out_dir` a
//! `config.toml` snapshot, its tables, and a flat JSON summary.

use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind};
use super::output::{ensure_dir, read_occupancy_csv, write_json, Cell, Table};
use crate::cross_learning::{equivalence_suite, estimate_drift, Policy};
use crate::error::{Error, Result};
use crate::fitting::{fit_de, FitSpec};
use crate::metrics::{bootstrap_ci, mta, AdaptationSummary};
use crate::rng::RngStream;
use crate::scenarios::DynamicAdaptation;
use crate::sim::{run_ensemble, RunTrace};
use crate::trajectory::Trajectory;

const BOOTSTRAP_LABEL: u64 = 0xB007;
const DRIFT_LABEL: u64 = 0xD21F;

/// Files written by a command and the summary it printed.
#[derive(Clone, Debug)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

/// Run whichever command `config.kind` names.
pub fn run(config: &ExperimentConfig) -> Result<CommandOutput> {
    match config.kind {
        ExperimentKind::Validate => validate(config),
        ExperimentKind::Adapt => adapt(config),
        ExperimentKind::Sweep => sweep(config),
        ExperimentKind::Verify => verify(config),
        ExperimentKind::Fit => fit(config),
    }
}

fn prepare(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    ensure_dir(&config.out_dir)?;
    let path = config.out_dir.join("config.toml");
    std::fs::write(&path, config.to_toml_string()?).map_err(|e| Error::io(&path, e))?;
    Ok(vec![path])
}

fn finish(mut files: Vec<PathBuf>, config: &ExperimentConfig, summary: serde_json::Value) -> Result<CommandOutput> {
    let path = config.out_dir.join("summary.json");
    write_json(&path, &summary)?;
    files.push(path);
    Ok(CommandOutput { files, summary })
}

/// Static patch occupancy against the pheromone-free reference.
pub fn validate(config: &ExperimentConfig) -> Result<CommandOutput> {
    let v = &config.validate;
    if v.runs == 0 {
        return Err(Error::config("validate.runs must be positive"));
    }
    let scenario = config.static_validation()?;
    let sim = scenario.sim_config(config.seed)?;
    let mut files = prepare(config)?;

    let traces = run_ensemble(&sim, v.runs)?;
    let mean = Trajectory::mean_of(traces.iter().map(|t| &t.policy_history))?;
    let cols = mean.cols();
    let mut names: Vec<String> = (1..cols).map(|i| format!("patch_{i}")).collect();
    names.push("outside".into());

    let bands = if v.runs >= 2 {
        let bands = (0..cols)
            .map(|c| {
                let samples: Vec<Vec<f64>> = traces.iter().map(|t| t.policy_history.column(c)).collect();
                let rng = RngStream::derive(config.seed, &[BOOTSTRAP_LABEL, c as u64]);
                bootstrap_ci(&samples, v.confidence, v.resamples, &rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Some(bands)
    } else {
        None
    };

    let mut header = vec!["epoch".to_string(), "seconds".to_string()];
    header.extend(names.iter().cloned());
    if bands.is_some() {
        for n in &names {
            header.push(format!("{n}_ci_lower"));
            header.push(format!("{n}_ci_upper"));
        }
    }
    let seconds_per_epoch = if v.epochs > 0 {
        v.seconds_total / v.epochs as f64
    } else {
        0.0
    };
    let mut table = Table::new(header);
    for (epoch, row) in mean.iter_rows().enumerate() {
        let mut cells = vec![
            Cell::Int(epoch as u64),
            Cell::Float(epoch as f64 * seconds_per_epoch),
        ];
        cells.extend(row.iter().map(|&x| Cell::Float(x)));
        if let Some(bands) = &bands {
            for b in bands {
                cells.push(Cell::Float(b.lower[epoch]));
                cells.push(Cell::Float(b.upper[epoch]));
            }
        }
        table.push(cells);
    }
    files.push(table.write(&config.out_dir, "occupancy", config.format)?);

    let reference = scenario.ifd_reference()?;
    let terminal = mean.last_row().expect("mean has at least one row").to_vec();
    let l1: f64 = terminal
        .iter()
        .zip(reference.probs())
        .map(|(a, b)| (a - b).abs())
        .sum();
    let (simplex_error, min_probability) = simplex_extremes(&traces);
    let summary = json!({
        "runs": v.runs,
        "epochs": v.epochs,
        "seconds_per_epoch": seconds_per_epoch,
        "densities": scenario.arm_densities(),
        "columns": names,
        "attractiveness": scenario.attractivenesses()?,
        "terminal_proportions": terminal,
        "ifd_reference": reference.probs(),
        "l1_to_ifd": l1,
        "max_simplex_error": simplex_error,
        "min_probability": min_probability,
    });
    finish(files, config, summary)
}

/// Worst `|sum - 1|` and smallest entry over every row of every run.
fn simplex_extremes(traces: &[RunTrace]) -> (f64, f64) {
    traces
        .iter()
        .map(RunTrace::simplex_extremes)
        .fold((0.0f64, f64::INFINITY), |(e, m), (e2, m2)| (e.max(e2), m.min(m2)))
}

fn adaptation_runs(
    config: &ExperimentConfig,
    scenario: &DynamicAdaptation,
    runs: usize,
) -> Result<Vec<RunTrace>> {
    let mut sim = scenario.sim_config(config.seed)?;
    sim.population.explorer_mode = config.model.explorer_mode;
    run_ensemble(&sim, runs)
}

/// Re-adaptation after the reward moves to another arm.
pub fn adapt(config: &ExperimentConfig) -> Result<CommandOutput> {
    let a = &config.adapt;
    let scenario = config.dynamic_adaptation(a.memory, a.delta, a.epsilon, a.epochs, a.reward);
    scenario.sim_config(config.seed)?;
    let mut files = prepare(config)?;

    let traces = adaptation_runs(config, &scenario, a.runs)?;
    let s = mta(&traces, a.delta, DynamicAdaptation::TARGET_ARM, a.threshold, a.epochs)?;

    let mut table = Table::new(["run", "epoch", "arm", "probability"]);
    for (run, trace) in traces.iter().enumerate() {
        for (epoch, row) in trace.policy_history.iter_rows().enumerate() {
            for (arm, &p) in row.iter().enumerate() {
                table.push(vec![
                    Cell::Int(run as u64),
                    Cell::Int(epoch as u64),
                    Cell::Int(arm as u64),
                    Cell::Float(p),
                ]);
            }
        }
    }
    files.push(table.write(&config.out_dir, "trajectories", config.format)?);

    let (simplex_error, min_probability) = simplex_extremes(&traces);
    let summary = json!({
        "runs": a.runs,
        "epochs": a.epochs,
        "switch_epoch": a.delta,
        "target_arm": DynamicAdaptation::TARGET_ARM,
        "threshold": a.threshold,
        "epsilon": a.epsilon,
        "memory": a.memory,
        "mta": s.mta,
        "success_rate": s.success_rate,
        "max_simplex_error": simplex_error,
        "min_probability": min_probability,
        "per_run_k": s.per_run_k,
    });
    finish(files, config, summary)
}

/// One sweep cell: memory, switch epoch, exploration rate and its outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub memory: usize,
    pub delta: usize,
    pub epsilon: f64,
    pub summary: AdaptationSummary,
}

/// Every (memory, delta, epsilon) combination of the sweep section, sorted.
///
/// All cells share the master seed, so a one-cell grid reproduces `adapt`.
pub fn sweep_cells(config: &ExperimentConfig) -> Result<Vec<SweepCell>> {
    let s = &config.sweep;
    let mut grid = Vec::new();
    for &memory in &s.memories {
        for &delta in &s.deltas {
            for &epsilon in &s.epsilons {
                let scenario = config.dynamic_adaptation(memory, delta, epsilon, s.epochs, s.reward);
                scenario.sim_config(config.seed)?;
                grid.push((memory, delta, epsilon, scenario));
            }
        }
    }
    if grid.is_empty() {
        return Err(Error::config("sweep grid is empty"));
    }
    let mut cells = grid
        .into_par_iter()
        .map(|(memory, delta, epsilon, scenario)| {
            let traces = adaptation_runs(config, &scenario, s.runs)?;
            let summary = mta(&traces, delta, DynamicAdaptation::TARGET_ARM, s.threshold, s.epochs)?;
            Ok(SweepCell {
                memory,
                delta,
                epsilon,
                summary,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    cells.sort_by(|a, b| {
        (a.memory, a.delta)
            .cmp(&(b.memory, b.delta))
            .then(a.epsilon.total_cmp(&b.epsilon))
    });
    Ok(cells)
}

/// Mean time to adapt over a memory x switch-epoch x exploration grid.
pub fn sweep(config: &ExperimentConfig) -> Result<CommandOutput> {
    let s = &config.sweep;
    let mut files = prepare(config)?;
    let cells = sweep_cells(config)?;
    let mut table = Table::new(["memory", "delta", "epsilon", "mta", "success_rate"]);
    for c in &cells {
        table.push(vec![
            Cell::Int(c.memory as u64),
            Cell::Int(c.delta as u64),
            Cell::Float(c.epsilon),
            Cell::Float(c.summary.mta),
            Cell::Float(c.summary.success_rate),
        ]);
    }
    files.push(table.write(&config.out_dir, "sweep", config.format)?);
    let summary = json!({
        "cells": cells.len(),
        "runs_per_cell": s.runs,
        "epochs": s.epochs,
        "memories": s.memories,
        "deltas": s.deltas,
        "epsilons": s.epsilons,
    });
    finish(files, config, summary)
}

/// Numerical check that pheromone dynamics and cross-learning coincide, plus
/// the replicator drift of the cross-learning step.
///
/// The report is written before a failure is returned.
pub fn verify(config: &ExperimentConfig) -> Result<CommandOutput> {
    let v = &config.verify;
    if v.configurations == 0 {
        return Err(Error::config("verify.configurations must be positive"));
    }
    let files = prepare(config)?;
    let report = equivalence_suite(v.configurations, v.steps, config.seed, v.inject_fault)?;
    let policy = Policy::new(v.drift_policy.clone())?;
    let drift = estimate_drift(
        &policy,
        &v.drift_payoffs,
        v.drift_gain,
        v.drift_samples,
        &mut RngStream::derive(config.seed, &[DRIFT_LABEL]),
    )?;
    let equivalence_pass = report.max_deviation <= v.tolerance;
    let drift_max_z = drift.max_z();
    let drift_pass = drift_max_z <= v.drift_sigmas;
    let worst = report.worst_case.clone().expect("at least one configuration ran");
    let summary = json!({
        "configurations": report.configurations,
        "steps": report.steps,
        "tolerance": v.tolerance,
        "max_deviation": report.max_deviation,
        "equivalence_pass": equivalence_pass,
        "worst_attractiveness": worst.attractivenesses,
        "worst_rho": worst.rho,
        "worst_q_deposit": worst.q_deposit,
        "drift_samples": drift.samples,
        "drift_gain": v.drift_gain,
        "drift_analytic": drift.analytic,
        "drift_empirical": drift.empirical,
        "drift_std_error": drift.std_error,
        "drift_max_z": drift_max_z,
        "drift_sigmas": v.drift_sigmas,
        "drift_pass": drift_pass,
        "inject_fault": v.inject_fault,
    });
    let out = finish(files, config, summary)?;
    if !equivalence_pass {
        return Err(Error::Verification(format!(
            "max deviation {:e} exceeds tolerance {:e}",
            report.max_deviation, v.tolerance
        )));
    }
    if !drift_pass {
        return Err(Error::Verification(format!(
            "drift estimate is {drift_max_z:.2} standard errors from the replicator field"
        )));
    }
    Ok(out)
}

/// Fit sigmoid parameters and deposit quantum to an occupancy table.
///
/// The patch layout comes from the validate section; the horizon is taken
/// from the number of rows in the target.
pub fn fit(config: &ExperimentConfig) -> Result<CommandOutput> {
    let f = &config.fit;
    let path = f
        .target
        .as_ref()
        .ok_or_else(|| Error::config("fit.target must name an occupancy CSV"))?;
    let target = read_occupancy_csv(path)?;
    if target.rows() == 0 {
        return Err(Error::config(format!("{} has no data rows", path.display())));
    }
    let mut template = config.static_validation()?;
    template.epochs = target.rows() - 1;
    let spec = FitSpec {
        bounds: f.bounds,
        target,
        template,
        runs_per_eval: f.runs_per_eval,
        sim_seed: config.seed,
        de: config.de_params(),
        convergence_tol: f.convergence_tol,
    };
    let mut files = prepare(config)?;
    let result = fit_de(&spec)?;

    let mut table = Table::new(["generation", "best_fitness"]);
    for (g, f) in result.history.iter().enumerate() {
        table.push(vec![Cell::Int(g as u64), Cell::Float(*f)]);
    }
    files.push(table.write(&config.out_dir, "fit_history", config.format)?);

    let summary = json!({
        "h": result.params.h,
        "k": result.params.k,
        "d_attract": result.params.d_attract,
        "q_deposit": result.params.q_deposit,
        "fitness": result.fitness,
        "generations": result.generations,
        "evaluations": result.evaluations,
        "runs_per_eval": f.runs_per_eval,
    });
    let fit_path = config.out_dir.join("fit.json");
    write_json(&fit_path, &summary)?;
    files.push(fit_path);
    finish(files, config, summary)
}
