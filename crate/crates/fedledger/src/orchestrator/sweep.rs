use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::canonical::canonical_json_bytes;
use crate::privacy::PrivacyParams;

use super::config::ExperimentConfig;
use super::experiment::{run_experiment, StopReason};
use super::OrchestratorError;

/// One completed run inside a sweep. `epsilon` is None for the non-private
/// baseline arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub rounds_completed: u64,
    pub stop: StopReason,
    pub final_accuracy: f64,
    pub final_global_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepArm {
    pub epsilon: Option<f64>,
    pub mean_final_accuracy: f64,
    pub min_final_accuracy: f64,
    pub max_final_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub arms: Vec<SweepArm>,
    pub runs: Vec<SweepRun>,
}

/// Runs a non-private baseline arm plus one arm per epsilon, each over the
/// seeds `master_seed .. master_seed + seeds`. Every arm reuses the same
/// seeds, so datasets and noise directions are shared and only the noise
/// scale differs between arms.
pub fn run_sweep(
    base: &ExperimentConfig,
    epsilons: &[f64],
    seeds: u64,
) -> Result<SweepReport, OrchestratorError> {
    base.validate()?;
    if seeds == 0 {
        return Err(OrchestratorError::Config("sweep needs at least one seed".into()));
    }
    if epsilons.is_empty() {
        return Err(OrchestratorError::Config("sweep needs at least one epsilon".into()));
    }
    for &eps in epsilons {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(OrchestratorError::Config(format!("epsilon {eps} must be positive")));
        }
    }
    let (delta, clip_norm) = match &base.privacy {
        Some(p) => (p.delta, p.clip_norm),
        None => (1e-5, 1.0),
    };

    let mut arms = Vec::new();
    let mut runs = Vec::new();
    let arm_epsilons: Vec<Option<f64>> =
        std::iter::once(None).chain(epsilons.iter().copied().map(Some)).collect();
    for epsilon in arm_epsilons {
        let mut finals = Vec::new();
        for i in 0..seeds {
            let mut cfg = base.clone();
            cfg.master_seed = base.master_seed + i;
            cfg.privacy = epsilon.map(|e| PrivacyParams { epsilon: e, delta, clip_norm });
            let outcome = run_experiment(&cfg)?;
            finals.push(outcome.summary.final_accuracy);
            runs.push(SweepRun {
                epsilon,
                seed: cfg.master_seed,
                rounds_completed: outcome.summary.rounds_completed,
                stop: outcome.stop,
                final_accuracy: outcome.summary.final_accuracy,
                final_global_loss: outcome.summary.final_global_loss,
            });
        }
        arms.push(SweepArm {
            epsilon,
            mean_final_accuracy: finals.iter().sum::<f64>() / finals.len() as f64,
            min_final_accuracy: finals.iter().copied().fold(f64::INFINITY, f64::min),
            max_final_accuracy: finals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
    }
    Ok(SweepReport { arms, runs })
}

fn epsilon_cell(epsilon: Option<f64>) -> String {
    match epsilon {
        Some(e) => format!("{e}"),
        None => "none".into(),
    }
}

/// The accuracy-versus-epsilon trend table plus the per-run detail.
pub fn trend_csv(report: &SweepReport) -> String {
    let mut out = String::from("epsilon,mean_final_accuracy,min_final_accuracy,max_final_accuracy\n");
    for arm in &report.arms {
        writeln!(
            out,
            "{},{},{},{}",
            epsilon_cell(arm.epsilon),
            arm.mean_final_accuracy,
            arm.min_final_accuracy,
            arm.max_final_accuracy
        )
        .expect("writing to a String cannot fail");
    }
    out
}

fn runs_csv(report: &SweepReport) -> String {
    let mut out =
        String::from("epsilon,seed,rounds_completed,stop,final_accuracy,final_global_loss\n");
    for run in &report.runs {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            epsilon_cell(run.epsilon),
            run.seed,
            run.rounds_completed,
            run.stop,
            run.final_accuracy,
            run.final_global_loss
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Writes `trend.csv`, `runs.csv`, and `sweep.json` into `out_dir`.
pub fn write_sweep(report: &SweepReport, out_dir: &Path) -> Result<(), OrchestratorError> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("trend.csv"), trend_csv(report))?;
    fs::write(out_dir.join("runs.csv"), runs_csv(report))?;
    let mut bytes = canonical_json_bytes(report)?;
    bytes.push(b'\n');
    fs::write(out_dir.join("sweep.json"), bytes)?;
    Ok(())
}
