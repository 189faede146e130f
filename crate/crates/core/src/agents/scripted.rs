use crate::codec::{format_schema, RawMessage};
use crate::error::PolicyError;
use crate::lexicon::NameId;

use super::{AgentPolicy, Turn};

/// Emits `format_schema(script[round])`.
pub fn scripted_propose(script: &[NameId], round: usize) -> Result<RawMessage, PolicyError> {
    script
        .get(round)
        .map(|name| format_schema(*name))
        .ok_or(PolicyError::OutOfScript {
            round,
            len: script.len(),
        })
}

/// Oracle agent that replays a fixed per-round name list.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    script: Vec<NameId>,
}

impl ScriptedPolicy {
    pub fn new(script: Vec<NameId>) -> Self {
        ScriptedPolicy { script }
    }
}

impl AgentPolicy for ScriptedPolicy {
    fn propose(&mut self, turn: &Turn<'_>) -> Result<RawMessage, PolicyError> {
        scripted_propose(&self.script, turn.round)
    }

    fn retry_propose(&mut self, turn: &Turn<'_>) -> Result<RawMessage, PolicyError> {
        scripted_propose(&self.script, turn.round)
    }
}
