//! Serialisation of experiment results: the CSV files a plotting tool
//! consumes and the JSON metadata that makes a run replayable.
//!
//! Floating-point values are written in shortest round-trip form, so a file
//! produced twice from the same results is byte-identical.

use crate::bpdn::{default_epsilon_levels, BpdnConfig};
use crate::error::Result;
use crate::experiments::{NoiseStudyResult, PhaseDiagram, Pipeline, StudyResult, EPSILON_FOLDS};
use crate::precond::DesignConfig;
use serde_json::{json, Value};
use std::io::Write;
use std::path::Path;

/// One `errors.csv` row: a single trial with its scores and choices.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    /// Which slice of the experiment the trial belongs to — a noise level,
    /// a grid cell, or a plain label.
    pub group: String,
    /// Pipeline name within the group.
    pub arm: String,
    pub trial: usize,
    pub samples: usize,
    pub sparsity: Option<usize>,
    pub sigma: Option<f64>,
    pub coefficient_error: Option<f64>,
    pub validation_error: Option<f64>,
    pub epsilon: Option<f64>,
    pub lambda: Option<f64>,
    pub coherence_base: Option<f64>,
    pub coherence_preconditioned: Option<f64>,
    pub residual_norm: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub success: Option<bool>,
    /// Error text when the trial's pipeline failed.
    pub message: Option<String>,
}

const ERROR_COLUMNS: [&str; 17] = [
    "group",
    "arm",
    "trial",
    "samples",
    "sparsity",
    "sigma",
    "coefficient_error",
    "validation_error",
    "epsilon",
    "lambda",
    "coherence_base",
    "coherence_preconditioned",
    "residual_norm",
    "iterations",
    "converged",
    "success",
    "message",
];

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn fmt_opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_opt_bool(v: Option<bool>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write `errors.csv`: one row per trial, empty fields for scores a trial
/// does not have.
pub fn write_error_records(records: &[TrialRecord], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ERROR_COLUMNS)?;
    for r in records {
        w.write_record([
            r.group.as_str(),
            r.arm.as_str(),
            &r.trial.to_string(),
            &r.samples.to_string(),
            &fmt_opt_usize(r.sparsity),
            &fmt_opt(r.sigma),
            &fmt_opt(r.coefficient_error),
            &fmt_opt(r.validation_error),
            &fmt_opt(r.epsilon),
            &fmt_opt(r.lambda),
            &fmt_opt(r.coherence_base),
            &fmt_opt(r.coherence_preconditioned),
            &fmt_opt(r.residual_norm),
            &fmt_opt_usize(r.iterations),
            &fmt_opt_bool(r.converged),
            &fmt_opt_bool(r.success),
            r.message.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_error_records_path(records: &[TrialRecord], path: impl AsRef<Path>) -> Result<()> {
    write_error_records(records, std::fs::File::create(path)?)
}

/// Rows for every trial of a multi-arm study.
pub fn study_records(
    group: &str,
    sigma: Option<f64>,
    samples: usize,
    sparsity: Option<usize>,
    result: &StudyResult,
) -> Vec<TrialRecord> {
    let mut records = Vec::new();
    for arm in &result.arms {
        for (trial, outcome) in arm.trials.iter().enumerate() {
            let mut record = TrialRecord {
                group: group.to_string(),
                arm: arm.name.clone(),
                trial,
                samples,
                sparsity,
                sigma,
                coefficient_error: None,
                validation_error: None,
                epsilon: None,
                lambda: None,
                coherence_base: None,
                coherence_preconditioned: None,
                residual_norm: None,
                iterations: None,
                converged: None,
                success: None,
                message: None,
            };
            match outcome {
                Ok(t) => {
                    record.coefficient_error = t.coefficient_error;
                    record.validation_error = t.validation_error;
                    record.epsilon = Some(t.epsilon);
                    record.lambda = t.lambda;
                    record.coherence_base = Some(t.coherence_base);
                    record.coherence_preconditioned = t.coherence_preconditioned;
                    record.residual_norm = Some(t.residual_norm);
                    record.iterations = Some(t.solver_iterations);
                    record.converged = Some(t.solver_converged);
                }
                Err(e) => record.message = Some(e.to_string()),
            }
            records.push(record);
        }
    }
    records
}

/// Rows for every (noise level, sample count) slice of a noise study.
pub fn noise_study_records(result: &NoiseStudyResult) -> Vec<TrialRecord> {
    result
        .levels
        .iter()
        .flat_map(|level| {
            study_records(
                &format!("sigma={},M={}", fmt(level.sigma), level.samples),
                Some(level.sigma),
                level.samples,
                None,
                &level.study,
            )
        })
        .collect()
}

/// Rows for every trial of a phase diagram.
pub fn phase_diagram_records(diagram: &PhaseDiagram) -> Vec<TrialRecord> {
    diagram
        .trials
        .iter()
        .map(|t| {
            let cell = &diagram.cells[t.cell];
            let mut record = TrialRecord {
                group: format!("m_ratio={},s_ratio={}", fmt(cell.m_ratio), fmt(cell.s_ratio)),
                arm: String::new(),
                trial: t.trial,
                samples: cell.samples,
                sparsity: Some(cell.sparsity),
                sigma: None,
                coefficient_error: None,
                validation_error: None,
                epsilon: None,
                lambda: None,
                coherence_base: None,
                coherence_preconditioned: None,
                residual_norm: None,
                iterations: None,
                converged: None,
                success: Some(t.success),
                message: None,
            };
            match &t.outcome {
                Ok(s) => {
                    record.coefficient_error = s.coefficient_error;
                    record.validation_error = s.validation_error;
                    record.epsilon = Some(s.epsilon);
                    record.lambda = s.lambda;
                    record.coherence_base = Some(s.coherence_base);
                    record.coherence_preconditioned = s.coherence_preconditioned;
                    record.residual_norm = Some(s.residual_norm);
                    record.iterations = Some(s.solver_iterations);
                    record.converged = Some(s.solver_converged);
                }
                Err(e) => record.message = Some(e.clone()),
            }
            record
        })
        .collect()
}

/// Write `cells.csv`: the success-probability map.
pub fn write_phase_cells(diagram: &PhaseDiagram, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["M_over_K", "s_over_M", "success_prob"])?;
    for cell in &diagram.cells {
        w.write_record([
            fmt(cell.m_ratio),
            fmt(cell.s_ratio),
            fmt(cell.success_probability),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_phase_cells_path(diagram: &PhaseDiagram, path: impl AsRef<Path>) -> Result<()> {
    write_phase_cells(diagram, std::fs::File::create(path)?)
}

/// Write `contour.csv`: the half-probability transition curve.
pub fn write_contour(diagram: &PhaseDiagram, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["M_over_K", "s_over_M"])?;
    for point in &diagram.contour {
        w.write_record([fmt(point.m_ratio), fmt(point.s_ratio)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_contour_path(diagram: &PhaseDiagram, path: impl AsRef<Path>) -> Result<()> {
    write_contour(diagram, std::fs::File::create(path)?)
}

/// A float as JSON, with non-finite values spelled out (JSON numbers cannot
/// carry them, and the identity-fallback sentinel is infinite).
pub fn json_f64(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(format!("{v:?}"))
    }
}

fn json_opt_f64(v: Option<f64>) -> Value {
    v.map(json_f64).unwrap_or(Value::Null)
}

/// Solver settings as they should appear in `meta.json`.
pub fn solver_json(config: &BpdnConfig) -> Value {
    json!({
        "max_iterations": config.max_iterations,
        "bp_tolerance": config.bp_tolerance,
        "opt_tolerance": config.opt_tolerance,
    })
}

/// Preconditioner design settings as they should appear in `meta.json`.
pub fn design_json(config: &DesignConfig) -> Value {
    json!({
        "delta_threshold": config.delta_threshold,
        "max_outer_iterations": config.max_outer_iterations,
        "restarts": config.restarts,
        "inner": {
            "gradient_tolerance": config.inner.gradient_tolerance,
            "max_iterations": config.inner.max_iterations,
        },
    })
}

/// Full pipeline echo for `meta.json`.
pub fn pipeline_json(pipeline: &Pipeline) -> Result<Value> {
    Ok(json!({
        "scheme": pipeline.scheme.name(),
        "chain": {
            "burn_in": pipeline.chain.burn_in,
            "thinning": pipeline.chain.thinning,
        },
        "preconditioned": pipeline.preconditioned,
        "lambda_grid": pipeline.lambda_grid,
        "epsilon": serde_json::to_value(pipeline.epsilon)?,
        // The budget search behind the cross-validated mode: candidate levels
        // as fractions of the data norm, and the fold count.
        "epsilon_cv": {
            "grid_over_data_norm": default_epsilon_levels(),
            "folds": EPSILON_FOLDS,
        },
        "solver": solver_json(&pipeline.solver),
        "design": design_json(&pipeline.design),
    }))
}

/// One trial's chosen hyperparameters for the `meta.json` trial list.
pub fn record_json(record: &TrialRecord) -> Value {
    json!({
        "group": record.group,
        "arm": record.arm,
        "trial": record.trial,
        "lambda": json_opt_f64(record.lambda),
        "epsilon": json_opt_f64(record.epsilon),
    })
}

/// Assemble `meta.json`: command, software version, full config echo, and
/// the hyperparameters every trial ended up with.
pub fn meta_json(command: &str, config: Value, records: &[TrialRecord]) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "trials": records.iter().map(record_json).collect::<Vec<_>>(),
    })
}

/// Pretty-print a JSON value to a file, with a trailing newline.
pub fn write_json_path(value: &Value, path: impl AsRef<Path>) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}

/// The full per-trial table as JSON rows (the `--format json` analogue of
/// `errors.csv`).
pub fn records_json(records: &[TrialRecord]) -> Value {
    let rows: Vec<Value> = records
        .iter()
        .map(|r| {
            json!({
                "group": r.group,
                "arm": r.arm,
                "trial": r.trial,
                "samples": r.samples,
                "sparsity": r.sparsity,
                "sigma": json_opt_f64(r.sigma),
                "coefficient_error": json_opt_f64(r.coefficient_error),
                "validation_error": json_opt_f64(r.validation_error),
                "epsilon": json_opt_f64(r.epsilon),
                "lambda": json_opt_f64(r.lambda),
                "coherence_base": json_opt_f64(r.coherence_base),
                "coherence_preconditioned": json_opt_f64(r.coherence_preconditioned),
                "residual_norm": json_opt_f64(r.residual_norm),
                "iterations": r.iterations,
                "converged": r.converged,
                "success": r.success,
                "message": r.message,
            })
        })
        .collect();
    json!(rows)
}

/// The phase-diagram cell map and contour as JSON (the `--format json`
/// analogue of `cells.csv` + `contour.csv`).
pub fn phase_diagram_json(diagram: &PhaseDiagram) -> Value {
    json!({
        "cardinality": diagram.cardinality,
        "grid_resolution": diagram.grid_resolution,
        "cells": diagram.cells,
        "contour": diagram.contour.iter().map(|p| json!({
            "M_over_K": p.m_ratio,
            "s_over_M": p.s_ratio,
        })).collect::<Vec<_>>(),
    })
}
