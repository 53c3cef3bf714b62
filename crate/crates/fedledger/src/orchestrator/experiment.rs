use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::canonical::canonical_json_bytes;
use crate::fl::{evaluate, ClientId, ParameterVector};
use crate::ledger::{validate_chain, Chain, ChainStatus, TxBody};
use crate::netsim::NetMetrics;

use super::config::ExperimentConfig;
use super::round::{Engine, RoundReport};
use super::OrchestratorError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    TargetReached,
    LimitReached,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::TargetReached => "target-reached",
            StopReason::LimitReached => "limit-reached",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientSummary {
    pub reward_cum: f64,
    pub epsilon_spent: f64,
    pub delta_spent: f64,
    pub rounds_accepted: u64,
    pub rounds_rejected: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub stop: StopReason,
    pub rounds_completed: u64,
    pub final_accuracy: f64,
    pub final_global_loss: f64,
    /// Gas consumed by the three contract deployments on the ledger.
    pub deployment_gas: u64,
    pub gas_total: u64,
    pub rewards_total: f64,
    pub chain_blocks: usize,
    pub clients: BTreeMap<ClientId, ClientSummary>,
    pub net: NetMetrics,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub stop: StopReason,
    pub reports: Vec<RoundReport>,
    pub final_params: ParameterVector,
    pub chain: Chain,
    pub summary: Summary,
}

/// Runs the configured experiment to completion: rounds continue until the
/// held-out accuracy reaches the target or the round limit is hit. The
/// returned chain is guaranteed to validate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, OrchestratorError> {
    let mut engine = Engine::new(cfg)?;
    let mut reports: Vec<RoundReport> = Vec::new();
    let mut stop = StopReason::LimitReached;
    for _ in 0..cfg.rounds_max {
        let report = engine.run_round()?;
        let reached = report.accuracy >= cfg.target_accuracy;
        reports.push(report);
        if reached {
            stop = StopReason::TargetReached;
            break;
        }
    }

    if let ChainStatus::Invalid { index, reason } = validate_chain(&engine.chain) {
        return Err(OrchestratorError::Config(format!(
            "produced ledger failed validation at block {index}: {reason}"
        )));
    }

    let (final_accuracy, final_global_loss) = match reports.last() {
        Some(r) => (r.accuracy, r.global_loss),
        None => (
            evaluate(&engine.params, &engine.holdout)?,
            crate::fl::global_loss(&engine.params, &engine.data)?,
        ),
    };
    let deployment_gas = engine
        .chain
        .blocks()
        .iter()
        .flat_map(|b| b.body.iter())
        .filter(|tx| matches!(tx.body(), TxBody::Deployment(_)))
        .map(|tx| crate::ledger::gas_cost(&engine.cfg.gas, tx))
        .sum::<Result<u64, _>>()?;

    let mut clients = BTreeMap::new();
    for id in &engine.ids {
        let (epsilon_spent, delta_spent) = engine.budgets.spent(id);
        clients.insert(
            id.clone(),
            ClientSummary {
                reward_cum: engine.rewards_cum.get(id).copied().unwrap_or(0.0),
                epsilon_spent,
                delta_spent,
                rounds_accepted: engine.accepted_rounds.get(id).copied().unwrap_or(0),
                rounds_rejected: engine.rejected_rounds.get(id).copied().unwrap_or(0),
            },
        );
    }

    let summary = Summary {
        stop,
        rounds_completed: engine.round,
        final_accuracy,
        final_global_loss,
        deployment_gas,
        gas_total: engine.gas_cum,
        rewards_total: engine.rewards_cum.values().sum(),
        chain_blocks: engine.chain.len(),
        clients,
        net: engine.sim.metrics(),
    };
    Ok(ExperimentOutcome {
        stop,
        reports,
        final_params: engine.params,
        chain: engine.chain,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// The per-round metrics table. Floats use Rust's shortest round-trip
/// formatting, so identical runs print identical bytes.
pub fn metrics_csv(reports: &[RoundReport]) -> String {
    let mut out = String::from(
        "round,accuracy,global_loss,accepted,rejected,eps_cum,delta_cum,gas_round,gas_cum,rewards_paid,pdr,overhead_ratio\n",
    );
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.round,
            r.accuracy,
            r.global_loss,
            r.accepted.len(),
            r.rejected.len(),
            r.eps_cum,
            r.delta_cum,
            r.gas_round,
            r.gas_cum,
            r.rewards_paid,
            r.pdr,
            r.overhead_ratio
        )
        .expect("writing to a String cannot fail");
    }
    out
}

fn net_series_csv(net: &NetMetrics) -> String {
    let mut out = String::from("second,pdr,overhead_ratio\n");
    for s in &net.series {
        writeln!(out, "{},{},{}", s.second, s.pdr, s.overhead_ratio)
            .expect("writing to a String cannot fail");
    }
    out
}

/// Writes `ledger.jsonl`, `metrics.csv` (or `.json`), `net_series.csv`, and
/// `summary.json` into `out_dir`, creating it if needed.
pub fn write_artifacts(
    outcome: &ExperimentOutcome,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<(), OrchestratorError> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("ledger.jsonl"), outcome.chain.to_jsonl()?)?;
    match format {
        OutputFormat::Csv => {
            fs::write(out_dir.join("metrics.csv"), metrics_csv(&outcome.reports))?
        }
        OutputFormat::Json => {
            let mut bytes = canonical_json_bytes(&outcome.reports)?;
            bytes.push(b'\n');
            fs::write(out_dir.join("metrics.json"), bytes)?;
        }
    }
    fs::write(out_dir.join("net_series.csv"), net_series_csv(&outcome.summary.net))?;
    let mut bytes = canonical_json_bytes(&outcome.summary)?;
    bytes.push(b'\n');
    fs::write(out_dir.join("summary.json"), bytes)?;
    Ok(())
}

pub fn run_to_dir(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<ExperimentOutcome, OrchestratorError> {
    let outcome = run_experiment(cfg)?;
    write_artifacts(&outcome, out_dir, format)?;
    Ok(outcome)
}
