use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fl::ClientId;

use super::{PrivacyError, PrivacyParams};

/// Cumulative privacy spend for one client plus the per-round parameters
/// that produced it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetAccount {
    pub epsilon_spent: f64,
    pub delta_spent: f64,
    pub history: Vec<PrivacyParams>,
}

/// Tracks per-client (epsilon, delta) totals under basic composition: each
/// recorded release adds its budget to the client's running sums.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    accounts: BTreeMap<ClientId, BudgetAccount>,
}

impl BudgetLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn compose(&mut self, client_id: &str, params: &PrivacyParams) -> Result<(), PrivacyError> {
        params.validate()?;
        let account = self.accounts.entry(client_id.to_string()).or_default();
        account.epsilon_spent += params.epsilon;
        account.delta_spent += params.delta;
        account.history.push(*params);
        Ok(())
    }

    /// Cumulative (epsilon, delta) for one client; (0, 0) when nothing has
    /// been recorded.
    pub fn spent(&self, client_id: &str) -> (f64, f64) {
        self.accounts
            .get(client_id)
            .map(|a| (a.epsilon_spent, a.delta_spent))
            .unwrap_or((0.0, 0.0))
    }

    /// The largest cumulative (epsilon, delta) over all clients, each
    /// maximised independently.
    pub fn max_spent(&self) -> (f64, f64) {
        let eps = self.accounts.values().map(|a| a.epsilon_spent).fold(0.0, f64::max);
        let delta = self.accounts.values().map(|a| a.delta_spent).fold(0.0, f64::max);
        (eps, delta)
    }

    pub fn accounts(&self) -> impl Iterator<Item = (&ClientId, &BudgetAccount)> {
        self.accounts.iter()
    }
}
