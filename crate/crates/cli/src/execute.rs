//! Dispatch of a validated configuration to the library and the resulting
//! run record.

use std::path::Path;

use fraclab_core::decay::{build_report, fit_decay_slope, theoretical_exponent, NormSeries};
use fraclab_core::linear::{log_spaced, oracle_besov_series, RadialSpectralDensity};
use fraclab_core::littlewood_paley::besov_norm;
use fraclab_core::run::{run, series_label, Model, RunConfig};
use fraclab_core::{bsvf, inverse, BesovParams, DyadicProfile, Error, InitialData};
use log::{info, warn};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::outputs::{emit_outputs, write_atomic, Reference};
use crate::record::{BesovSummary, Boundedness, Failure, FailureKind, OracleComparison, RunRecord};
use crate::selftest;

/// `||u(t)||_{B^{-s}_{p,inf}}` may grow to at most this multiple of its initial value.
pub const BOUNDEDNESS_FACTOR: f64 = 2.0;

pub const FINAL_STATE_FILE: &str = "final_state.bsvf";
pub const LAST_GOOD_FILE: &str = "last_good.bsvf";

fn classify(e: &Error) -> FailureKind {
    match e {
        Error::InvalidGrid { .. }
        | Error::InvalidParameter(_)
        | Error::ClaimRange(_)
        | Error::NotSmall { .. }
        | Error::EmptyBlockRange
        | Error::Format(_)
        | Error::Io { .. }
        | Error::LengthMismatch { .. } => FailureKind::Config,
        Error::InsufficientSamples { .. } | Error::NonPositive { .. } => FailureKind::Fit,
        _ => FailureKind::Numerical,
    }
}

fn fail(record: &mut RunRecord, e: &Error) {
    warn!("{}: {e}", record.kind);
    record.failure = Some(Failure {
        kind: classify(e),
        message: e.to_string(),
    });
    record.passed = false;
}

/// Runs the experiment, writes its outputs under `config.output_dir` and
/// returns the record.
pub fn execute(config: &ExperimentConfig) -> RunRecord {
    let mut record = RunRecord::new(config);
    let dir = config.output_dir.clone();
    let mut series = Vec::new();
    let mut references = Vec::new();
    let result = match config.kind {
        ExperimentKind::Oracle => run_oracle(config, &mut record, &mut series, &mut references),
        ExperimentKind::Linear | ExperimentKind::Sqg | ExperimentKind::Ks => {
            run_grid(config, &dir, &mut record, &mut series, &mut references)
        }
        ExperimentKind::Besov => run_besov(config, &mut record),
        ExperimentKind::Selftest => {
            record.selftest = selftest::run_all();
            record.passed = record.selftest.iter().all(|c| c.passed);
            Ok(())
        }
    };
    if let Err(e) = result {
        fail(&mut record, &e);
    }
    record.finish();
    // Series go in the record before it is written.
    record.series_files = series.iter().map(crate::outputs::series_file_name).collect();
    if let Err(e) = emit_outputs(&dir, &record, &series, &references) {
        warn!("{e}");
        record.failure.get_or_insert(Failure {
            kind: FailureKind::Io,
            message: e.to_string(),
        });
        record.passed = false;
    }
    record
}

fn fit_and_report(
    config: &ExperimentConfig,
    primary: &NormSeries,
    record: &mut RunRecord,
    references: &mut Vec<Reference>,
) -> fraclab_core::Result<bool> {
    let claim = config.claim().expect("decay experiments carry a claim");
    let fit = fit_decay_slope(primary, [config.window.lo, config.window.hi])?;
    let report = build_report(&[fit], &[claim], config.tolerance / 100.0)?;
    info!(
        "{}: fitted slope {:.6} vs theory {:.6} (relative error {:.2}%)",
        config.kind,
        fit.slope,
        report.entries[0].theoretical,
        100.0 * report.entries[0].relative_error
    );
    references.push(Reference {
        series_file: crate::outputs::series_file_name(primary),
        slope: theoretical_exponent(&claim)?,
        intercept: fit.intercept,
    });
    let passed = report.passed;
    record.fits.push(fit);
    record.report = Some(report);
    Ok(passed)
}

fn run_oracle(
    config: &ExperimentConfig,
    record: &mut RunRecord,
    series: &mut Vec<NormSeries>,
    references: &mut Vec<Reference>,
) -> fraclab_core::Result<()> {
    let density = RadialSpectralDensity::new(config.dimension, config.density)?;
    let params = BesovParams::new(config.ell, 2.0, 1.0)?;
    let times = log_spaced(config.times.start, config.times.end, config.times.per_decade);
    let mut s = oracle_besov_series(&density, &params, config.alpha, &times, &DyadicProfile::default())?;
    s.descriptor.label = format!("oracle_{}", series_label(&params));
    record.passed = fit_and_report(config, &s, record, references)?;
    series.push(s);
    Ok(())
}

fn model_of(kind: ExperimentKind) -> Model {
    match kind {
        ExperimentKind::Sqg => Model::Sqg,
        ExperimentKind::Ks => Model::KellerSegel,
        _ => Model::Linear,
    }
}

/// The library run configuration behind a grid experiment. Norms are the
/// decay norm `B^ell_{r,1}` and the data norm `B^{-s}_{p,inf}`.
pub fn run_config(config: &ExperimentConfig) -> fraclab_core::Result<RunConfig> {
    let r = if config.kind == ExperimentKind::Linear {
        config.p
    } else {
        config.r
    };
    Ok(RunConfig {
        grid: fraclab_core::Grid2D::new(config.grid.n, config.grid.length)?,
        alpha: config.alpha,
        dt: config.times.dt,
        t_final: config.times.end,
        initial: config.initial.clone(),
        seed: config.seed,
        sample_times: log_spaced(config.times.start, config.times.end, config.times.per_decade),
        norms: vec![
            BesovParams::new(config.ell, r, 1.0)?,
            BesovParams::new(-config.s, config.p, f64::INFINITY)?,
        ],
        critical_p: config.p,
        smallness_budget: config.smallness_budget,
    })
}

fn run_grid(
    config: &ExperimentConfig,
    dir: &Path,
    record: &mut RunRecord,
    series: &mut Vec<NormSeries>,
    references: &mut Vec<Reference>,
) -> fraclab_core::Result<()> {
    let rc = run_config(config)?;
    let out = run(model_of(config.kind), &rc)?;
    record.provenance = Some(out.provenance.clone());
    record.diagnostics = Some(out.diagnostics.clone());
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let state_file = if out.abort.is_some() {
        LAST_GOOD_FILE
    } else {
        FINAL_STATE_FILE
    };
    let state = inverse(&out.final_state)?;
    write_atomic(&dir.join(state_file), &bsvf::encode(&state)).map_err(|e| Error::Io {
        path: e.path,
        source: e.source,
    })?;
    series.extend(out.series.iter().cloned());
    series.push(out.l2.clone());
    if let Some(e) = out.abort {
        return Err(e);
    }

    let primary = &out.series[0];
    let mut passed = true;
    if config.compares_with_oracle() {
        let InitialData::Radial { amplitude, density } = &config.initial else {
            unreachable!("checked by compares_with_oracle")
        };
        let density = RadialSpectralDensity::new(2, *density)?;
        let picked: Vec<usize> = (0..primary.len())
            .filter(|&i| primary.times()[i] >= config.window.lo && primary.times()[i] <= config.window.hi)
            .collect();
        let times: Vec<f64> = picked.iter().map(|&i| primary.times()[i]).collect();
        let params = rc.norms[0];
        let oracle = oracle_besov_series(&density, &params, config.alpha, &times, &DyadicProfile::default())?
            .scaled(*amplitude)?;
        let deviation = picked
            .iter()
            .zip(oracle.values())
            .map(|(&i, o)| {
                if *o > 0.0 {
                    (primary.values()[i] / o - 1.0).abs()
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        let ok = deviation <= config.oracle_tolerance / 100.0;
        info!("linear: grid/oracle max relative deviation {deviation:e}");
        record.oracle_comparison = Some(OracleComparison {
            max_relative_deviation: deviation,
            tolerance: config.oracle_tolerance / 100.0,
            passed: ok,
        });
        passed &= ok;
        let mut oracle = oracle;
        oracle.descriptor.label = format!("oracle_{}", series_label(&params));
        series.push(oracle);
    } else {
        passed &= fit_and_report(config, primary, record, references)?;
    }
    if config.kind == ExperimentKind::Ks {
        let initial = out.diagnostics.initial_norms[1];
        let max = out.series[1].values().iter().copied().fold(initial, f64::max);
        let ok = max <= BOUNDEDNESS_FACTOR * initial;
        record.boundedness = Some(Boundedness {
            label: out.series[1].descriptor.label.clone(),
            initial,
            max,
            factor: BOUNDEDNESS_FACTOR,
            passed: ok,
        });
        passed &= ok;
    }
    record.passed = passed;
    Ok(())
}

fn run_besov(config: &ExperimentConfig, record: &mut RunRecord) -> fraclab_core::Result<()> {
    let path = config.field.as_ref().expect("validated");
    let field = bsvf::read(path)?;
    let params = BesovParams::new(config.s, config.p, config.r)?;
    let norm = besov_norm(&field, &params, &DyadicProfile::default())?;
    println!(
        "besov norm s = {} p = {} r = {}: {:e}  (blocks j = {}..={}{})",
        config.s,
        config.p,
        config.r,
        norm.value,
        norm.range.j_min,
        norm.range.j_max,
        if norm.mean_removed { ", mean removed" } else { "" }
    );
    record.besov = Some(BesovSummary {
        value: norm.value,
        j_min: norm.range.j_min,
        j_max: norm.range.j_max,
        mean_removed: norm.mean_removed,
    });
    record.passed = true;
    Ok(())
}
