//! Simulated message bus between the TSO and DSO agents.
//!
//! Coordinators own a [`CommLog`] and route every inter-agent datum through
//! [`CommLog::send`]; the log is the only source of round and payload counts.
//! A round is one synchronized exchange layer.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::COUPLING_DIM;

pub type AgentId = usize;

/// The TSO is agent 0; DSO `k` (partition position) is agent `k + 1`.
pub const TSO_AGENT: AgentId = 0;

/// Floats per transmitted FOR inequality: three coefficients and a bound.
pub const FLOATS_PER_FOR_ROW: usize = COUPLING_DIM + 1;

/// Floats in a coupling set-point.
pub const SETPOINT_FLOATS: usize = COUPLING_DIM;

pub fn dso_agent(position: usize) -> AgentId {
    position + 1
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommError {
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("send before the first round was opened")]
    NoOpenRound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    ForPackage,
    ValueFn,
    Setpoint,
    AchievedSetpoint,
    ConsensusZ,
    MultiplierFreePayload,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub from: AgentId,
    pub to: AgentId,
    pub round: usize,
    pub kind: MessageKind,
    pub payload_floats: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommStats {
    pub rounds: usize,
    pub messages: usize,
    pub total_floats: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CommLog {
    pub messages: Vec<Message>,
    /// Highest round carrying a message.
    pub rounds: usize,
    pub total_floats: usize,
    agents: BTreeSet<AgentId>,
    current_round: usize,
}

impl CommLog {
    pub fn new(agents: impl IntoIterator<Item = AgentId>) -> Self {
        CommLog { agents: agents.into_iter().collect(), ..Default::default() }
    }

    /// Log for a TSO and `n_dso` feeders.
    pub fn for_partition(n_dso: usize) -> Self {
        Self::new((0..=n_dso).map(|k| if k == 0 { TSO_AGENT } else { dso_agent(k - 1) }))
    }

    pub fn register(&mut self, agent: AgentId) {
        self.agents.insert(agent);
    }

    pub fn current_round(&self) -> usize {
        self.current_round
    }

    /// Open the next round and return its number.
    pub fn begin_round(&mut self) -> usize {
        self.current_round += 1;
        self.current_round
    }

    pub fn send(
        &mut self,
        from: AgentId,
        to: AgentId,
        kind: MessageKind,
        payload_floats: usize,
    ) -> Result<(), CommError> {
        for a in [from, to] {
            if !self.agents.contains(&a) {
                return Err(CommError::UnknownAgent(a));
            }
        }
        if self.current_round == 0 {
            return Err(CommError::NoOpenRound);
        }
        self.messages.push(Message { from, to, round: self.current_round, kind, payload_floats });
        self.rounds = self.current_round;
        self.total_floats += payload_floats;
        Ok(())
    }

    pub fn stats(&self) -> CommStats {
        CommStats { rounds: self.rounds, messages: self.messages.len(), total_floats: self.total_floats }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("CommLog serializes")
    }
}
