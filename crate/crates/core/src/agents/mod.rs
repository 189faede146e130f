//! Agent state and the policy abstraction.

mod mock;
mod scripted;

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::RawMessage;
use crate::config::Condition;
use crate::error::PolicyError;
use crate::lexicon::{DecodedName, Lexicon, NameId};
use crate::rng::SimRng;

pub use mock::{mock_propose, MockPolicy};
pub use scripted::{scripted_propose, ScriptedPolicy};

/// One partner-only memory entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub round: usize,
    pub partner_id: usize,
    pub partner_name: DecodedName,
    pub partner_compliant: bool,
}

/// Mutable per-agent state owned by a single run.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AgentState {
    pub agent_id: usize,
    pub current_name: NameId,
    pub last_emitted: DecodedName,
    memory: VecDeque<InteractionRecord>,
    capacity: usize,
}

impl AgentState {
    pub fn new(agent_id: usize, current_name: NameId, memory_window: usize) -> Self {
        AgentState {
            agent_id,
            current_name,
            last_emitted: None,
            memory: VecDeque::with_capacity(memory_window),
            capacity: memory_window,
        }
    }

    pub fn memory(&self) -> &VecDeque<InteractionRecord> {
        &self.memory
    }

    pub fn memory_window(&self) -> usize {
        self.capacity
    }

    /// Appends a record, evicting the oldest entry when full. No-op when K = 0.
    pub fn remember(&mut self, record: InteractionRecord) {
        debug_assert_ne!(record.partner_id, self.agent_id);
        if self.capacity == 0 {
            return;
        }
        if self.memory.len() == self.capacity {
            self.memory.pop_front();
        }
        self.memory.push_back(record);
    }

    /// Takes on `name` as both current and last-emitted name.
    pub fn adopt(&mut self, name: NameId) {
        self.current_name = name;
        self.last_emitted = Some(name);
    }
}

/// Everything a policy may look at when it speaks.
#[derive(Debug, Clone, Copy)]
pub struct Turn<'a> {
    pub state: &'a AgentState,
    pub condition: Condition,
    pub lexicon: &'a Lexicon,
    pub round: usize,
}

/// Produces messages for one agent.
///
/// A policy sees only its own agent's state.
pub trait AgentPolicy: Send {
    fn propose(&mut self, turn: &Turn<'_>) -> Result<RawMessage, PolicyError>;

    /// Second attempt after a schema violation, with a format reminder.
    fn retry_propose(&mut self, turn: &Turn<'_>) -> Result<RawMessage, PolicyError>;

    fn on_result(&mut self, state: &mut AgentState, record: InteractionRecord) {
        state.remember(record);
    }
}

/// Majority partner name in the window; ties go to the most recent
/// occurrence. Falls back to the agent's own name on an empty window.
pub fn choose_proposal_name(state: &AgentState) -> NameId {
    // (count, position of latest occurrence) per name
    let mut tally: Vec<(NameId, usize, usize)> = Vec::new();
    for (pos, name) in state
        .memory
        .iter()
        .enumerate()
        .filter_map(|(pos, r)| r.partner_name.map(|n| (pos, n)))
    {
        match tally.iter_mut().find(|(n, _, _)| *n == name) {
            Some(entry) => {
                entry.1 += 1;
                entry.2 = pos;
            }
            None => tally.push((name, 1, pos)),
        }
    }
    tally
        .into_iter()
        .max_by_key(|&(_, count, latest)| (count, latest))
        .map_or(state.current_name, |(name, _, _)| name)
}

/// Lose-shift step: with probability `alpha` the agent takes the partner's
/// name. Returns whether it adopted.
pub fn apply_adoption(
    state: &mut AgentState,
    own: DecodedName,
    partner: DecodedName,
    alpha: f64,
    rng: &mut SimRng,
) -> Result<bool, AdoptionError> {
    let Some(partner_name) = partner else {
        return Err(AdoptionError::NoPartnerName);
    };
    if own == partner {
        return Err(AdoptionError::NoMismatch);
    }
    let adopted = rng.random_bool(alpha);
    if adopted {
        state.adopt(partner_name);
    }
    Ok(adopted)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum AdoptionError {
    #[error("adoption requires a decoded partner name")]
    NoPartnerName,
    #[error("adoption requires a mismatch")]
    NoMismatch,
}
