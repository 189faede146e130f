//! Experiment configuration and its validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationError};
use crate::lexicon::{Lexicon, NameId};
use crate::llm::{DecodingParams, EndpointProfile};

/// Communication condition of a game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// Unconstrained text, no memory.
    #[serde(rename = "NL")]
    Nl,
    /// Unconstrained text with a sliding memory window.
    #[serde(rename = "NL_SW")]
    NlSw,
    /// Replies must carry the `@say {name: Ck}` tag.
    #[serde(rename = "SCHEMA")]
    Schema,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Nl, Condition::NlSw, Condition::Schema];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Nl => "NL",
            Condition::NlSw => "NL_SW",
            Condition::Schema => "SCHEMA",
        }
    }

    pub fn uses_memory(self) -> bool {
        !matches!(self, Condition::Nl)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingMode {
    /// One uniformly random pair per round.
    #[default]
    SinglePair,
    /// A uniformly random perfect matching per round.
    FullMatching,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdoptionMode {
    /// Both sides of a mismatch flip their own coin; updates apply simultaneously.
    #[default]
    BilateralIndependent,
    /// Only the second agent of the pair (the hearer) may adopt.
    SpeakerHearer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackMode {
    /// Undecodable schema replies become a uniformly drawn name, marked non-compliant.
    #[default]
    RandomName,
    /// Undecodable schema replies decode to no name.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementMetric {
    #[default]
    Pairwise,
    Modal,
}

impl AgreementMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            AgreementMetric::Pairwise => "pairwise",
            AgreementMetric::Modal => "modal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenAccounting {
    /// Generated tokens only, retries included.
    #[default]
    OutputOnly,
    /// Generated tokens plus endpoint-reported prompt tokens.
    OutputPlusPrompt,
}

/// What an agent's `last_emitted` name (the input to agreement) tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmittedNameRule {
    /// The decoded name of the agent's latest turn; an undecodable turn
    /// leaves it empty until the agent speaks or adopts again.
    #[default]
    LatestTurn,
    /// The most recent successfully decoded name; undecodable turns are ignored.
    LastDecoded,
}

/// How mock agents pick the name they propose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalRule {
    /// Majority partner name in the memory window, most recent wins ties.
    #[default]
    WindowMajority,
    /// Always the agent's own current name.
    OwnName,
}

/// Behaviour knobs of a stochastic mock agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockPolicyParams {
    /// Probability that a message is well formed for its condition.
    pub compliance_prob: f64,
    /// Token length of free text and noise messages.
    pub verbosity_tokens: usize,
    /// Probability that a non-compliant schema reply still mentions the chosen name.
    #[serde(default)]
    pub noise_mentions_name_prob: f64,
    /// Added to `compliance_prob` (capped at 1) for reminder retries.
    #[serde(default)]
    pub retry_compliance_boost: f64,
    #[serde(default)]
    pub proposal_rule: ProposalRule,
}

impl Default for MockPolicyParams {
    fn default() -> Self {
        MockPolicyParams {
            compliance_prob: 1.0,
            verbosity_tokens: 8,
            noise_mentions_name_prob: 0.0,
            retry_compliance_boost: 0.0,
            proposal_rule: ProposalRule::WindowMajority,
        }
    }
}

impl MockPolicyParams {
    pub fn validate(&self) -> Result<(), ValidationError> {
        for (field, p) in [
            ("compliance_prob", self.compliance_prob),
            ("noise_mentions_name_prob", self.noise_mentions_name_prob),
            ("retry_compliance_boost", self.retry_compliance_boost),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ValidationError::MockParams(format!(
                    "{field}={p} is outside [0, 1]"
                )));
            }
        }
        if self.verbosity_tokens == 0 {
            return Err(ValidationError::MockParams(
                "verbosity_tokens must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Policy assigned to one agent (or a block of agents).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    Mock(MockPolicyParams),
    /// Proposes `script[round]` in schema form every round.
    Scripted {
        script: Vec<NameId>,
    },
    /// Backed by a named entry of [`GameConfig::endpoints`].
    Llm {
        endpoint: String,
    },
}

/// A block of agents sharing a policy. At most one entry may omit `count`;
/// it then covers all agents not claimed by the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(flatten)]
    pub policy: PolicySpec,
}

impl RosterEntry {
    pub fn fill(policy: PolicySpec) -> Self {
        RosterEntry {
            count: None,
            policy,
        }
    }

    pub fn exactly(count: usize, policy: PolicySpec) -> Self {
        RosterEntry {
            count: Some(count),
            policy,
        }
    }
}

/// Expands a roster into one policy per agent.
pub fn expand_roster(
    roster: &[RosterEntry],
    n_agents: usize,
) -> Result<Vec<PolicySpec>, ValidationError> {
    let fills = roster.iter().filter(|e| e.count.is_none()).count();
    if fills > 1 {
        return Err(ValidationError::RosterMultipleFill);
    }
    let fixed: usize = roster.iter().filter_map(|e| e.count).sum();
    if fixed > n_agents || (fills == 0 && fixed != n_agents) {
        return Err(ValidationError::RosterSizeMismatch {
            roster: fixed,
            n: n_agents,
        });
    }
    let fill_count = n_agents - fixed;
    let mut out = Vec::with_capacity(n_agents);
    for entry in roster {
        let count = entry.count.unwrap_or(fill_count);
        out.extend(std::iter::repeat_n(entry.policy.clone(), count));
    }
    Ok(out)
}

/// All knobs of one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub n_agents: usize,
    pub lexicon_size: usize,
    pub rounds: usize,
    pub memory_window: usize,
    pub lose_shift_alpha: f64,
    pub condition: Condition,
    #[serde(default)]
    pub pairing_mode: PairingMode,
    #[serde(default)]
    pub adoption_mode: AdoptionMode,
    #[serde(default)]
    pub fallback_mode: FallbackMode,
    #[serde(default)]
    pub agreement_metric: AgreementMetric,
    #[serde(default)]
    pub token_accounting: TokenAccounting,
    #[serde(default)]
    pub emitted_name_rule: EmittedNameRule,
    pub seed: u64,
    pub roster: Vec<RosterEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub endpoints: BTreeMap<String, EndpointProfile>,
    #[serde(default)]
    pub decoding: DecodingParams,
    /// Directory with `nl.txt`, `nl_sw.txt` and `schema.txt` overriding the
    /// built-in prompt templates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates_dir: Option<PathBuf>,
}

impl GameConfig {
    /// A config with every optional knob at its default and an all-mock roster.
    pub fn new(
        condition: Condition,
        n_agents: usize,
        memory_window: usize,
        lose_shift_alpha: f64,
        seed: u64,
    ) -> Self {
        GameConfig {
            n_agents,
            lexicon_size: 12,
            rounds: 300,
            memory_window,
            lose_shift_alpha,
            condition,
            pairing_mode: PairingMode::default(),
            adoption_mode: AdoptionMode::default(),
            fallback_mode: FallbackMode::default(),
            agreement_metric: AgreementMetric::default(),
            token_accounting: TokenAccounting::default(),
            emitted_name_rule: EmittedNameRule::default(),
            seed,
            roster: vec![RosterEntry::fill(PolicySpec::Mock(
                MockPolicyParams::default(),
            ))],
            endpoints: BTreeMap::new(),
            decoding: DecodingParams::default(),
            templates_dir: None,
        }
    }

    pub fn lexicon(&self) -> Result<Lexicon, ValidationError> {
        Lexicon::new(self.lexicon_size)
    }

    /// Checks every invariant, returning the config unchanged when all hold.
    pub fn validate(self) -> Result<Self, ValidationError> {
        self.check()?;
        Ok(self)
    }

    pub fn check(&self) -> Result<(), ValidationError> {
        if self.n_agents < 2 {
            return Err(ValidationError::TooFewAgents(self.n_agents));
        }
        let lexicon = self.lexicon()?;
        if self.rounds == 0 {
            return Err(ValidationError::ZeroRounds);
        }
        if !(0.0..=1.0).contains(&self.lose_shift_alpha) {
            return Err(ValidationError::AlphaOutOfRange(self.lose_shift_alpha));
        }
        match self.condition {
            Condition::Nl if self.memory_window != 0 => {
                return Err(ValidationError::NlRequiresZeroMemory(self.memory_window));
            }
            c @ (Condition::NlSw | Condition::Schema) if self.memory_window == 0 => {
                return Err(ValidationError::MemoryRequired(c.as_str()));
            }
            _ => {}
        }
        if self.pairing_mode == PairingMode::FullMatching && self.n_agents % 2 == 1 {
            return Err(ValidationError::OddFullMatching(self.n_agents));
        }
        for policy in expand_roster(&self.roster, self.n_agents)? {
            match policy {
                PolicySpec::Mock(params) => params.validate()?,
                PolicySpec::Scripted { script } => {
                    if script.is_empty() {
                        return Err(ValidationError::Script("script is empty".into()));
                    }
                    if let Some(bad) = script.iter().find(|n| !lexicon.contains(**n)) {
                        return Err(ValidationError::Script(format!(
                            "{bad} is outside the lexicon of size {}",
                            lexicon.len()
                        )));
                    }
                }
                PolicySpec::Llm { endpoint } => {
                    let profile = self
                        .endpoints
                        .get(&endpoint)
                        .ok_or_else(|| ValidationError::UnknownEndpoint(endpoint.clone()))?;
                    profile.validate()?;
                }
            }
        }
        Ok(())
    }

    /// One policy per agent.
    pub fn policies(&self) -> Result<Vec<PolicySpec>, ValidationError> {
        expand_roster(&self.roster, self.n_agents)
    }

    pub fn has_llm_agents(&self) -> bool {
        self.roster
            .iter()
            .any(|e| matches!(e.policy, PolicySpec::Llm { .. }))
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: GameConfig = serde_json::from_str(&text).map_err(|source| Error::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = cfg.validate()?;
        if let Some(dir) = &cfg.templates_dir {
            if dir.is_relative() {
                if let Some(parent) = path.parent() {
                    cfg.templates_dir = Some(parent.join(dir));
                }
            }
        }
        Ok(cfg)
    }
}

/// Validates `cfg`, returning it unchanged on success.
pub fn validate_config(cfg: GameConfig) -> Result<GameConfig, ValidationError> {
    cfg.validate()
}
