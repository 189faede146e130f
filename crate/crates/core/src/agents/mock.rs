//! Stochastic stand-ins for LLM agents.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::codec::{format_schema, RawMessage};
use crate::config::{Condition, MockPolicyParams, ProposalRule};
use crate::error::PolicyError;
use crate::lexicon::{Lexicon, NameId};
use crate::rng::SimRng;

use super::{choose_proposal_name, AgentPolicy, AgentState, Turn};

// Filler vocabulary. No entry looks like a lexicon label.
const FILLER: &[&str] = &[
    "we", "could", "agree", "on", "the", "label", "maybe", "perhaps", "I", "think", "our", "group",
    "should", "pick", "this", "one", "name", "for", "it", "sounds", "good", "today", "let's",
    "use", "hello", "partner", "option", "works", "fine", "again",
];

fn proposal_name(state: &AgentState, params: &MockPolicyParams) -> NameId {
    match params.proposal_rule {
        ProposalRule::WindowMajority => choose_proposal_name(state),
        ProposalRule::OwnName => state.current_name,
    }
}

/// `tokens` filler words, one of them replaced by `mention` when given.
fn filler_text(tokens: usize, mention: Option<NameId>, rng: &mut SimRng) -> String {
    let mut words: Vec<String> = (0..tokens)
        .map(|_| (*FILLER.choose(rng).expect("non-empty filler")).to_string())
        .collect();
    if let Some(name) = mention {
        let slot = rng.random_range(0..tokens);
        words[slot] = name.label();
    }
    words.join(" ")
}

/// One mock message for the given condition.
///
/// `compliance_prob` is the probability of a well-formed message: a schema
/// tag under SCHEMA, a free-text mention of a name otherwise.
pub fn mock_propose(
    state: &AgentState,
    condition: Condition,
    lexicon: &Lexicon,
    params: &MockPolicyParams,
    compliance_prob: f64,
    rng: &mut SimRng,
) -> RawMessage {
    let compliant = rng.random_bool(compliance_prob);
    let tokens = params.verbosity_tokens;
    match condition {
        Condition::Schema => {
            let name = proposal_name(state, params);
            if compliant {
                format_schema(name)
            } else {
                let mention = rng
                    .random_bool(params.noise_mentions_name_prob)
                    .then_some(name);
                RawMessage::local(filler_text(tokens, mention, rng))
            }
        }
        Condition::NlSw => {
            let mention = compliant.then(|| proposal_name(state, params));
            RawMessage::local(filler_text(tokens, mention, rng))
        }
        Condition::Nl => {
            let mention = compliant.then(|| {
                let k = rng.random_range(1..=lexicon.len() as u32);
                lexicon.name(k).expect("in range")
            });
            RawMessage::local(filler_text(tokens, mention, rng))
        }
    }
}

/// Mock agent with its own random substream.
#[derive(Debug, Clone)]
pub struct MockPolicy {
    params: MockPolicyParams,
    rng: SimRng,
}

impl MockPolicy {
    pub fn new(params: MockPolicyParams, rng: SimRng) -> Self {
        MockPolicy { params, rng }
    }
}

impl AgentPolicy for MockPolicy {
    fn propose(&mut self, turn: &Turn<'_>) -> Result<RawMessage, PolicyError> {
        Ok(mock_propose(
            turn.state,
            turn.condition,
            turn.lexicon,
            &self.params,
            self.params.compliance_prob,
            &mut self.rng,
        ))
    }

    fn retry_propose(&mut self, turn: &Turn<'_>) -> Result<RawMessage, PolicyError> {
        let p = (self.params.compliance_prob + self.params.retry_compliance_boost).min(1.0);
        Ok(mock_propose(
            turn.state,
            turn.condition,
            turn.lexicon,
            &self.params,
            p,
            &mut self.rng,
        ))
    }
}
