use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::canonical::{derive_client_round_seed, derive_stream_seed, derive_tagged_seed};
use crate::fl::{
    evaluate, fed_avg, global_loss, local_train, AcceptanceState, ClientId, ClientUpdate,
    LocalDataset, ParameterVector,
};
use crate::incentive::{distribute_rewards, score_contribution, ContributionRecord};
use crate::ledger::{
    block_gas, propose_and_commit, Chain, CommitOutcome, DeploymentLabel, Transaction, TxBody,
    Validator,
};
use crate::netsim::{Message, MessageKind, NetSim, SendOutcome};
use crate::privacy::{add_gaussian_noise, calibrate_sigma, clip, BudgetLedger};

use super::config::{DatasetConfig, ExperimentConfig};
use super::data;
use super::OrchestratorError;

const SERVER_NODE: &str = "server";
/// Milliseconds allotted per round on the simulated clock.
const ROUND_MS: f64 = 1000.0;
const UPLOAD_OFFSET_MS: f64 = 100.0;
const COMMIT_OFFSET_MS: f64 = 900.0;
const AGGREGATE_OFFSET_MS: f64 = 950.0;

/// What one round produced. `accepted` and `rejected` together list exactly
/// the clients whose uploads arrived; clients whose uploads were dropped in
/// transit appear in neither.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u64,
    pub accepted: Vec<ClientId>,
    pub rejected: Vec<ClientId>,
    /// True when no update was committed and the global model kept its
    /// previous value.
    pub stalled: bool,
    pub accuracy: f64,
    pub global_loss: f64,
    pub eps_cum: f64,
    pub delta_cum: f64,
    pub gas_round: u64,
    pub gas_cum: u64,
    pub rewards_paid: f64,
    pub pdr: f64,
    pub overhead_ratio: f64,
}

pub(super) struct Engine {
    pub(super) cfg: ExperimentConfig,
    pub(super) ids: Vec<ClientId>,
    pub(super) data: Vec<LocalDataset>,
    pub(super) holdout: LocalDataset,
    pub(super) validators: Vec<Validator>,
    pub(super) chain: Chain,
    pub(super) budgets: BudgetLedger,
    pub(super) sim: NetSim,
    pub(super) params: ParameterVector,
    pub(super) round: u64,
    pub(super) gas_cum: u64,
    pub(super) rewards_cum: BTreeMap<ClientId, f64>,
    pub(super) accepted_rounds: BTreeMap<ClientId, u64>,
    pub(super) rejected_rounds: BTreeMap<ClientId, u64>,
}

impl Engine {
    pub(super) fn new(cfg: &ExperimentConfig) -> Result<Self, OrchestratorError> {
        cfg.validate()?;
        let datasets = match &cfg.dataset {
            DatasetConfig::Synthetic { samples_per_client, features, classes, separation } => {
                data::generate_synthetic(
                    cfg.master_seed,
                    cfg.clients,
                    *samples_per_client,
                    *features,
                    *classes,
                    *separation,
                )?
            }
            DatasetConfig::Idx { images, labels, partition } => {
                let loaded = data::load_idx(images, labels)?;
                data::partition_idx(&loaded, partition)?
            }
        };
        let ids = data::client_ids(cfg.clients);
        let (train, holdout) = data::split_holdout(cfg.master_seed, &ids, datasets)?;
        Self::from_parts(cfg.clone(), ids, train, holdout)
    }

    /// Builds an engine around already-prepared datasets. The chain starts
    /// with the genesis block plus a setup block carrying the two contract
    /// deployments and the round-0 aggregation of the zero model.
    pub(super) fn from_parts(
        cfg: ExperimentConfig,
        ids: Vec<ClientId>,
        data: Vec<LocalDataset>,
        holdout: LocalDataset,
    ) -> Result<Self, OrchestratorError> {
        cfg.validate()?;
        if ids.len() != cfg.clients || data.len() != cfg.clients {
            return Err(OrchestratorError::Config(format!(
                "{} clients configured but {} ids / {} datasets supplied",
                cfg.clients,
                ids.len(),
                data.len()
            )));
        }
        let (features, classes) = (holdout.features, holdout.classes);
        let params = ParameterVector::zeros(features, classes);
        let validators: Vec<Validator> =
            (0..cfg.validators).map(|i| Validator::honest(format!("rsu-{i}"))).collect();

        let mut chain = Chain::new();
        let setup = vec![
            Transaction::new(TxBody::Deployment(DeploymentLabel::FederatedContract)),
            Transaction::new(TxBody::Deployment(DeploymentLabel::ContributionContract)),
            Transaction::new(TxBody::Aggregation { round: 0, params: params.clone() }),
        ];
        match propose_and_commit(&validators, &mut chain, setup, 0.0, &cfg.policy)? {
            CommitOutcome::Committed { .. } => {}
            other => {
                return Err(OrchestratorError::Config(format!(
                    "setup block was not committed: {other:?}"
                )))
            }
        }
        let mut gas_cum = 0;
        for block in chain.blocks() {
            gas_cum += block_gas(&cfg.gas, block)?;
        }

        let sim = NetSim::new(
            cfg.link,
            derive_stream_seed(cfg.master_seed, "netsim"),
            std::iter::once(SERVER_NODE.to_string()).chain(ids.iter().cloned()),
        )?;

        Ok(Self {
            cfg,
            ids,
            data,
            holdout,
            validators,
            chain,
            budgets: BudgetLedger::new(),
            sim,
            params,
            round: 0,
            gas_cum,
            rewards_cum: BTreeMap::new(),
            accepted_rounds: BTreeMap::new(),
            rejected_rounds: BTreeMap::new(),
        })
    }

    fn model_bytes(&self) -> u64 {
        (self.params.values.len() * 8) as u64
    }

    /// One global round: broadcast the model, train every client locally,
    /// apply the privacy mechanism, upload over the lossy link, let the
    /// validators vote in the arrived updates, aggregate, and pay rewards.
    /// If nothing is committed the model stalls at its previous value.
    pub(super) fn run_round(&mut self) -> Result<RoundReport, OrchestratorError> {
        self.round += 1;
        let r = self.round;
        let t0 = r as f64 * ROUND_MS;
        self.sim.run_until(t0)?;
        // Uploads still in flight from earlier rounds are stale by now.
        self.sim.drain_delivered();

        for id in &self.ids {
            self.sim.send(Message {
                src: SERVER_NODE.into(),
                dst: id.clone(),
                payload_bytes: self.model_bytes(),
                kind: MessageKind::ModelDownload,
                send_time: t0,
            })?;
        }

        let sigma = match &self.cfg.privacy {
            Some(p) => Some(calibrate_sigma(p.epsilon, p.delta)?),
            None => None,
        };
        let mut pending: BTreeMap<ClientId, ClientUpdate> = BTreeMap::new();
        for (i, id) in self.ids.clone().iter().enumerate() {
            let seed = derive_client_round_seed(self.cfg.master_seed, id, r);
            let trained = local_train(&self.params, &self.data[i], &self.cfg.training, seed)?;
            let (released, tag) = match &self.cfg.privacy {
                Some(p) => {
                    let clipped = clip(&trained, p.clip_norm)?;
                    let noisy = add_gaussian_noise(
                        &clipped,
                        p.clip_norm * sigma.expect("sigma computed when privacy is on"),
                        derive_tagged_seed(self.cfg.master_seed, id, r, "noise"),
                    )?;
                    self.budgets.compose(id, p)?;
                    (noisy, Some(*p))
                }
                None => (trained, None),
            };
            let update =
                ClientUpdate::new(id.clone(), r, released, self.data[i].len() as u64, tag);
            let outcome = self.sim.send(Message {
                src: id.clone(),
                dst: SERVER_NODE.into(),
                payload_bytes: self.model_bytes(),
                kind: MessageKind::UpdateUpload,
                send_time: t0 + UPLOAD_OFFSET_MS,
            })?;
            if matches!(outcome, SendOutcome::Scheduled { .. }) {
                pending.insert(id.clone(), update);
            }
        }

        self.sim.run_until(t0 + COMMIT_OFFSET_MS)?;
        let arrived: BTreeMap<ClientId, ClientUpdate> = self
            .sim
            .drain_delivered()
            .into_iter()
            .filter(|d| d.message.kind == MessageKind::UpdateUpload)
            .filter_map(|d| pending.remove(&d.message.src).map(|u| (d.message.src, u)))
            .collect();

        let txs: Vec<Transaction> = arrived
            .values()
            .cloned()
            .map(|u| Transaction::new(TxBody::ModelUpdate(u)))
            .collect();
        let outcome =
            propose_and_commit(&self.validators, &mut self.chain, txs, t0 + COMMIT_OFFSET_MS, &self.cfg.policy)?;

        let mut gas_round = 0;
        let mut rewards_paid = 0.0;
        let (accepted, rejected, stalled) = match outcome {
            CommitOutcome::Committed { excluded } => {
                gas_round += block_gas(&self.cfg.gas, self.chain.last())?;
                let committed: Vec<ClientUpdate> = self
                    .chain
                    .last()
                    .body
                    .iter()
                    .filter_map(|tx| match tx.body() {
                        TxBody::ModelUpdate(u) => Some(u.clone()),
                        _ => None,
                    })
                    .collect();
                let new_params = fed_avg(&committed)?;

                let mut records: Vec<ContributionRecord> = committed
                    .iter()
                    .map(score_contribution)
                    .collect::<Result<_, _>>()?;
                for e in &excluded {
                    let mut u = arrived[&e.client_id].clone();
                    u.accepted = AcceptanceState::Rejected { reason: e.reason.clone() };
                    records.push(score_contribution(&u)?);
                }
                let reward_txs = distribute_rewards(&records, &self.cfg.reward)?;
                for tx in &reward_txs {
                    if let TxBody::Reward { client_id, amount } = tx.body() {
                        rewards_paid += amount;
                        *self.rewards_cum.entry(client_id.clone()).or_insert(0.0) += amount;
                    }
                }

                let mut second = vec![Transaction::new(TxBody::Aggregation {
                    round: r,
                    params: new_params.clone(),
                })];
                second.extend(reward_txs);
                match propose_and_commit(
                    &self.validators,
                    &mut self.chain,
                    second,
                    t0 + AGGREGATE_OFFSET_MS,
                    &self.cfg.policy,
                )? {
                    CommitOutcome::Committed { .. } => {}
                    other => {
                        return Err(OrchestratorError::Config(format!(
                            "aggregation block was not committed: {other:?}"
                        )))
                    }
                }
                gas_round += block_gas(&self.cfg.gas, self.chain.last())?;

                self.params = new_params;
                let accepted: Vec<ClientId> =
                    committed.iter().map(|u| u.client_id.clone()).collect();
                let rejected: Vec<ClientId> =
                    excluded.iter().map(|e| e.client_id.clone()).collect();
                (accepted, rejected, false)
            }
            CommitOutcome::NothingToCommit { excluded } => {
                let rejected: Vec<ClientId> =
                    excluded.iter().map(|e| e.client_id.clone()).collect();
                (Vec::new(), rejected, true)
            }
            CommitOutcome::RejectedByVote { .. } => {
                let rejected: Vec<ClientId> = arrived.keys().cloned().collect();
                (Vec::new(), rejected, true)
            }
        };
        self.gas_cum += gas_round;
        for id in &accepted {
            *self.accepted_rounds.entry(id.clone()).or_insert(0) += 1;
        }
        for id in &rejected {
            *self.rejected_rounds.entry(id.clone()).or_insert(0) += 1;
        }

        let (eps_cum, delta_cum) = self.budgets.max_spent();
        let metrics = self.sim.metrics();
        Ok(RoundReport {
            round: r,
            accepted,
            rejected,
            stalled,
            accuracy: evaluate(&self.params, &self.holdout)?,
            global_loss: global_loss(&self.params, &self.data)?,
            eps_cum,
            delta_cum,
            gas_round,
            gas_cum: self.gas_cum,
            rewards_paid,
            pdr: metrics.pdr,
            overhead_ratio: metrics.overhead_ratio,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::{validate_chain, ChainStatus, UpdatePolicy};
    use crate::privacy::PrivacyParams;

    fn tiny_cfg(clients: usize) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default_synthetic();
        cfg.clients = clients;
        cfg.rounds_max = 3;
        cfg.dataset = DatasetConfig::Synthetic {
            samples_per_client: 10,
            features: 3,
            classes: 2,
            separation: 3.0,
        };
        cfg
    }

    fn engine_with_counts(counts: &[usize], cfg: &ExperimentConfig) -> Engine {
        let ids = data::client_ids(counts.len());
        let pool = data::generate_synthetic(99, 1, counts.iter().sum::<usize>() + 10, 3, 2, 3.0)
            .unwrap()
            .remove(0);
        let mut offset = 0;
        let datasets: Vec<LocalDataset> = counts
            .iter()
            .map(|&n| {
                let ds = LocalDataset::new(
                    3,
                    2,
                    pool.xs[offset..offset + n].to_vec(),
                    pool.ys[offset..offset + n].to_vec(),
                )
                .unwrap();
                offset += n;
                ds
            })
            .collect();
        let holdout = LocalDataset::new(
            3,
            2,
            pool.xs[offset..offset + 10].to_vec(),
            pool.ys[offset..offset + 10].to_vec(),
        )
        .unwrap();
        Engine::from_parts(cfg.clone(), ids, datasets, holdout).unwrap()
    }

    #[test]
    fn chain_starts_with_genesis_and_setup_block() {
        let engine = Engine::new(&tiny_cfg(2)).unwrap();
        assert_eq!(engine.chain.len(), 2);
        let setup = &engine.chain.blocks()[1];
        assert_eq!(setup.body.len(), 3);
        assert!(matches!(validate_chain(&engine.chain), ChainStatus::Valid));
        assert_eq!(engine.gas_cum, 164_391 + 263_330 + 1_018_839 + 21_000);
    }

    #[test]
    fn single_client_round_adopts_its_training_result_exactly() {
        let mut cfg = tiny_cfg(1);
        cfg.clients = 1;
        let mut engine = engine_with_counts(&[8], &cfg);
        let expected = local_train(
            &ParameterVector::zeros(3, 2),
            &engine.data[0],
            &cfg.training,
            derive_client_round_seed(cfg.master_seed, "client-000", 1),
        )
        .unwrap();
        let report = engine.run_round().unwrap();
        assert_eq!(engine.params.values, expected.values);
        assert_eq!(report.accepted, vec!["client-000".to_string()]);
        assert!(!report.stalled);
    }

    #[test]
    fn two_clients_combine_by_sample_weight() {
        let mut cfg = tiny_cfg(2);
        cfg.training.batch_size = 4;
        let mut engine = engine_with_counts(&[1, 3], &cfg);
        let w0 = ParameterVector::zeros(3, 2);
        let a = local_train(
            &w0,
            &engine.data[0],
            &cfg.training,
            derive_client_round_seed(cfg.master_seed, "client-000", 1),
        )
        .unwrap();
        let b = local_train(
            &w0,
            &engine.data[1],
            &cfg.training,
            derive_client_round_seed(cfg.master_seed, "client-001", 1),
        )
        .unwrap();
        engine.run_round().unwrap();
        for i in 0..engine.params.values.len() {
            let want = 0.25 * a.values[i] + 0.75 * b.values[i];
            assert!((engine.params.values[i] - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn total_drop_stalls_the_round() {
        let mut cfg = tiny_cfg(3);
        cfg.link.drop_probability = 1.0;
        let mut engine = Engine::new(&cfg).unwrap();
        let before = engine.params.clone();
        let report = engine.run_round().unwrap();
        assert!(report.stalled);
        assert!(report.accepted.is_empty());
        assert!(report.rejected.is_empty());
        assert_eq!(engine.params, before);
        assert_eq!(report.rewards_paid, 0.0);
        assert_eq!(report.gas_round, 0);
        assert_eq!(engine.chain.len(), 2, "no block should be committed");
    }

    #[test]
    fn oversized_updates_are_rejected_and_unpaid() {
        let mut cfg = tiny_cfg(3);
        cfg.policy = UpdatePolicy { max_norm: 1e-6, require_privacy_tag: false };
        let mut engine = Engine::new(&cfg).unwrap();
        let report = engine.run_round().unwrap();
        assert!(report.stalled);
        assert_eq!(report.rejected.len(), 3);
        assert_eq!(report.rewards_paid, 0.0);
        assert!(engine.rewards_cum.is_empty());
    }

    #[test]
    fn privacy_budget_accumulates_per_round() {
        let mut cfg = tiny_cfg(2);
        cfg.privacy = Some(PrivacyParams { epsilon: 1.0, delta: 1e-5, clip_norm: 1.0 });
        let mut engine = Engine::new(&cfg).unwrap();
        for round in 1..=4u64 {
            let report = engine.run_round().unwrap();
            assert_eq!(report.eps_cum, round as f64);
            assert!((report.delta_cum - round as f64 * 1e-5).abs() < 1e-18);
        }
        for id in &engine.ids {
            let (eps, _) = engine.budgets.spent(id);
            assert_eq!(eps, 4.0);
        }
    }

    #[test]
    fn accepted_ledger_updates_respect_the_norm_policy() {
        let mut cfg = tiny_cfg(4);
        cfg.clients = 4;
        cfg.privacy = Some(PrivacyParams { epsilon: 0.522, delta: 1e-5, clip_norm: 1.0 });
        cfg.policy = UpdatePolicy { max_norm: 27.0, require_privacy_tag: true };
        cfg.dataset = DatasetConfig::Synthetic {
            samples_per_client: 10,
            features: 3,
            classes: 2,
            separation: 3.0,
        };
        let mut engine = Engine::new(&cfg).unwrap();
        let mut saw_accept = false;
        let mut saw_reject = false;
        for _ in 0..6 {
            let report = engine.run_round().unwrap();
            saw_accept |= !report.accepted.is_empty();
            saw_reject |= !report.rejected.is_empty();
        }
        assert!(saw_accept && saw_reject, "want a mix of accepted and rejected updates");
        for block in engine.chain.blocks() {
            for tx in &block.body {
                if let TxBody::ModelUpdate(u) = tx.body() {
                    assert!(matches!(u.accepted, AcceptanceState::Accepted));
                    assert!(u.params.l2_norm() <= cfg.policy.max_norm);
                }
            }
        }
        assert!(matches!(validate_chain(&engine.chain), ChainStatus::Valid));
    }

    #[test]
    fn round_rewards_sum_to_the_pool() {
        let mut engine = Engine::new(&tiny_cfg(3)).unwrap();
        let report = engine.run_round().unwrap();
        assert!((report.rewards_paid - 100.0).abs() <= 1e-9);
        let total: f64 = engine.rewards_cum.values().sum();
        assert!((total - 100.0).abs() <= 1e-9);
    }

    #[test]
    fn reports_count_net_traffic() {
        let mut engine = Engine::new(&tiny_cfg(2)).unwrap();
        let report = engine.run_round().unwrap();
        assert_eq!(report.pdr, 1.0);
        assert_eq!(report.overhead_ratio, {
            let payload = engine.model_bytes() as f64;
            30.0 / (30.0 + payload)
        });
    }
}
