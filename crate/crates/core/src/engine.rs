//! The round loop: pairing, proposals, decoding, lose-shift adoption and
//! memory updates.

use std::io::Write;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{
    apply_adoption, AgentPolicy, AgentState, InteractionRecord, MockPolicy, ScriptedPolicy, Turn,
};
use crate::codec::{decode_direct, enforce_schema, RawMessage};
use crate::config::{
    AdoptionMode, Condition, EmittedNameRule, GameConfig, PairingMode, PolicySpec, TokenAccounting,
};
use crate::error::{Error, PolicyError, Result};
use crate::lexicon::{DecodedName, Lexicon};
use crate::llm::{ChatClient, LlmPolicy, PromptTemplates};
use crate::metrics::{modal_agreement, pairwise_agreement};
use crate::rng::{self, derive_rng, SimRng};
use crate::runlog::{
    AgentSummary, Agreement, Interaction, RoundEvent, RunLog, RunLogWriter, RunStatus, TurnLog,
};

/// Pairs for one round. No agent appears twice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingPlan {
    pub pairs: Vec<[usize; 2]>,
}

impl PairingPlan {
    pub fn agents(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs.iter().flatten().copied()
    }
}

/// Draws one round's pairs.
///
/// `SinglePair` picks one of the C(n,2) pairs uniformly, `FullMatching`
/// shuffles all agents and pairs neighbours. Pair order within a plan is
/// random in both modes.
pub fn plan_pairs(n: usize, mode: PairingMode, rng: &mut SimRng) -> Result<PairingPlan> {
    if n < 2 {
        return Err(Error::Logic(format!("cannot pair {n} agent(s)")));
    }
    match mode {
        PairingMode::SinglePair => {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            Ok(PairingPlan {
                pairs: vec![[i, j]],
            })
        }
        PairingMode::FullMatching => {
            if n % 2 == 1 {
                return Err(Error::Logic(format!("full matching needs even n, got {n}")));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            Ok(PairingPlan {
                pairs: order.chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
            })
        }
    }
}

/// A policy plus a short label for the run log.
pub struct RosterSlot {
    pub label: String,
    pub policy: Box<dyn AgentPolicy>,
}

impl RosterSlot {
    pub fn new(label: impl Into<String>, policy: impl AgentPolicy + 'static) -> Self {
        RosterSlot {
            label: label.into(),
            policy: Box::new(policy),
        }
    }
}

/// Instantiates the policies named by `cfg.roster`.
pub fn build_roster(cfg: &GameConfig) -> Result<Vec<RosterSlot>> {
    let specs = cfg.policies()?;
    let templates = if cfg.has_llm_agents() {
        Some(Arc::new(match &cfg.templates_dir {
            Some(dir) => PromptTemplates::load_dir(dir)?,
            None => PromptTemplates::builtin(),
        }))
    } else {
        None
    };
    let mut clients: std::collections::BTreeMap<String, ChatClient> = Default::default();
    let mut slots = Vec::with_capacity(specs.len());
    for (agent_id, spec) in specs.into_iter().enumerate() {
        let slot = match spec {
            PolicySpec::Mock(params) => RosterSlot::new(
                "mock",
                MockPolicy::new(params, derive_rng(cfg.seed, &rng::policy_label(agent_id))),
            ),
            PolicySpec::Scripted { script } => {
                RosterSlot::new("scripted", ScriptedPolicy::new(script))
            }
            PolicySpec::Llm { endpoint } => {
                let client = match clients.get(&endpoint) {
                    Some(c) => c.clone(),
                    None => {
                        let profile = cfg.endpoints[&endpoint].clone();
                        let c =
                            ChatClient::new(profile).map_err(|e| Error::Logic(e.to_string()))?;
                        clients.insert(endpoint.clone(), c.clone());
                        c
                    }
                };
                RosterSlot::new(
                    format!("llm:{endpoint}"),
                    LlmPolicy::new(
                        client,
                        cfg.decoding.clone(),
                        templates.clone().expect("templates loaded for llm roster"),
                    ),
                )
            }
        };
        slots.push(slot);
    }
    Ok(slots)
}

/// A game in progress.
pub struct Game {
    cfg: GameConfig,
    lexicon: Lexicon,
    states: Vec<AgentState>,
    roster: Vec<RosterSlot>,
    pairing_rng: SimRng,
    adoption_rng: SimRng,
    fallback_rng: SimRng,
    cumulative_tokens: u64,
}

impl Game {
    /// Validates `cfg` and draws every agent's initial name uniformly.
    pub fn new(cfg: GameConfig, roster: Vec<RosterSlot>) -> Result<Self> {
        let cfg = cfg.validate()?;
        if roster.len() != cfg.n_agents {
            return Err(crate::error::ValidationError::RosterSizeMismatch {
                roster: roster.len(),
                n: cfg.n_agents,
            }
            .into());
        }
        let lexicon = cfg.lexicon()?;
        let mut init = derive_rng(cfg.seed, rng::INIT);
        let states = (0..cfg.n_agents)
            .map(|id| {
                let k = init.random_range(1..=lexicon.len() as u32);
                AgentState::new(id, lexicon.name(k).expect("in range"), cfg.memory_window)
            })
            .collect();
        Ok(Game {
            pairing_rng: derive_rng(cfg.seed, rng::PAIRING),
            adoption_rng: derive_rng(cfg.seed, rng::ADOPTION),
            fallback_rng: derive_rng(cfg.seed, rng::FALLBACK),
            lexicon,
            states,
            roster,
            cfg,
            cumulative_tokens: 0,
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.cfg
    }

    pub fn states(&self) -> &[AgentState] {
        &self.states
    }

    /// Overrides initial states, e.g. to start from a prepared population.
    pub fn states_mut(&mut self) -> &mut [AgentState] {
        &mut self.states
    }

    pub fn agreement(&self) -> Agreement {
        let names: Vec<DecodedName> = self.states.iter().map(|s| s.last_emitted).collect();
        Agreement {
            pairwise: pairwise_agreement(&names),
            modal: modal_agreement(&names),
        }
    }

    fn message_tokens(&self, msg: &RawMessage) -> u64 {
        match self.cfg.token_accounting {
            TokenAccounting::OutputOnly => msg.token_count,
            TokenAccounting::OutputPlusPrompt => msg.token_count + msg.prompt_tokens.unwrap_or(0),
        }
    }

    fn take_turn(&mut self, agent: usize, round_index: usize) -> Result<TurnLog, PolicyError> {
        let turn = Turn {
            state: &self.states[agent],
            condition: self.cfg.condition,
            lexicon: &self.lexicon,
            round: round_index,
        };
        let policy = &mut self.roster[agent].policy;
        let message = policy.propose(&turn)?;
        let (outcome, retry) = match self.cfg.condition {
            Condition::Schema => {
                let enforced = enforce_schema(
                    &message,
                    || policy.retry_propose(&turn),
                    &self.lexicon,
                    self.cfg.fallback_mode,
                    &mut self.fallback_rng,
                )?;
                (enforced.outcome, enforced.retry)
            }
            Condition::Nl | Condition::NlSw => (decode_direct(&message, &self.lexicon), None),
        };
        Ok(TurnLog {
            agent,
            message,
            retry,
            outcome,
        })
    }

    /// Plays round `round_index` (0-based). On a policy failure the
    /// population is left as it was before the round.
    pub fn run_round(&mut self, round_index: usize) -> Result<RoundEvent, PolicyError> {
        assert!(round_index < self.cfg.rounds, "round index past T");
        let snapshot = self.states.clone();
        let plan = plan_pairs(
            self.cfg.n_agents,
            self.cfg.pairing_mode,
            &mut self.pairing_rng,
        )
        .expect("config validated");
        let mut interactions = Vec::with_capacity(plan.pairs.len());
        for [a, b] in plan.pairs {
            let turns = match (
                self.take_turn(a, round_index),
                self.take_turn(b, round_index),
            ) {
                (Ok(ta), Ok(tb)) => [ta, tb],
                (Err(e), _) | (_, Err(e)) => {
                    self.states = snapshot;
                    return Err(e);
                }
            };
            interactions.push(self.resolve(round_index + 1, [a, b], turns));
        }
        let tokens_this_round: u64 = interactions
            .iter()
            .flat_map(|i| i.turns.iter())
            .flat_map(|t| std::iter::once(&t.message).chain(t.retry.as_ref()))
            .map(|m| self.message_tokens(m))
            .sum();
        self.cumulative_tokens += tokens_this_round;
        Ok(RoundEvent {
            round: round_index + 1,
            interactions,
            tokens_this_round,
            cumulative_tokens: self.cumulative_tokens,
            agreement_after: self.agreement(),
        })
    }

    fn resolve(&mut self, round: usize, pair: [usize; 2], turns: [TurnLog; 2]) -> Interaction {
        let names = [turns[0].decoded(), turns[1].decoded()];
        for (&agent, name) in pair.iter().zip(names) {
            match self.cfg.emitted_name_rule {
                EmittedNameRule::LatestTurn => self.states[agent].last_emitted = name,
                EmittedNameRule::LastDecoded if name.is_some() => {
                    self.states[agent].last_emitted = name
                }
                EmittedNameRule::LastDecoded => {}
            }
        }
        let mismatch = match names {
            [Some(x), Some(y)] => x != y,
            [None, None] => false,
            _ => true,
        };
        let mut adopted = [false; 2];
        if mismatch {
            let sides: &[usize] = match self.cfg.adoption_mode {
                AdoptionMode::BilateralIndependent => &[0, 1],
                AdoptionMode::SpeakerHearer => &[1],
            };
            // each side reacts to the partner's decoded name from this
            // exchange, so sequential application equals simultaneous
            for &side in sides {
                let partner = names[1 - side];
                if partner.is_none() {
                    continue;
                }
                adopted[side] = apply_adoption(
                    &mut self.states[pair[side]],
                    names[side],
                    partner,
                    self.cfg.lose_shift_alpha,
                    &mut self.adoption_rng,
                )
                .expect("mismatch with a decoded partner name");
            }
        }
        for side in 0..2 {
            let record = InteractionRecord {
                round,
                partner_id: pair[1 - side],
                partner_name: names[1 - side],
                partner_compliant: turns[1 - side].outcome.compliant,
            };
            let agent = pair[side];
            self.roster[agent]
                .policy
                .on_result(&mut self.states[agent], record);
        }
        Interaction {
            pair,
            turns,
            mismatch,
            adopted,
        }
    }

    pub fn summaries(&self) -> Vec<AgentSummary> {
        self.states
            .iter()
            .zip(&self.roster)
            .map(|(s, slot)| AgentSummary {
                agent_id: s.agent_id,
                policy: slot.label.clone(),
                current_name: s.current_name,
                last_emitted: s.last_emitted,
            })
            .collect()
    }

    /// Plays all remaining rounds, handing each event to `on_event`.
    pub fn play(mut self, mut on_event: impl FnMut(&RoundEvent)) -> RunLog {
        let mut events = Vec::with_capacity(self.cfg.rounds);
        let mut abort_reason = None;
        for round_index in 0..self.cfg.rounds {
            match self.run_round(round_index) {
                Ok(event) => {
                    on_event(&event);
                    events.push(event);
                }
                Err(e) => {
                    log::error!("run aborted in round {}: {e}", round_index + 1);
                    abort_reason = Some(format!("round {}: {e}", round_index + 1));
                    break;
                }
            }
        }
        RunLog {
            final_states: self.summaries(),
            status: if abort_reason.is_some() {
                RunStatus::Aborted
            } else {
                RunStatus::Completed
            },
            abort_reason,
            events,
            config: self.cfg,
        }
    }
}

/// Runs a full game with the given roster.
pub fn run_game(cfg: GameConfig, roster: Vec<RosterSlot>) -> Result<RunLog> {
    Ok(Game::new(cfg, roster)?.play(|_| {}))
}

/// Runs a full game with the roster described in the config.
pub fn run_config(cfg: GameConfig) -> Result<RunLog> {
    let roster = build_roster(&cfg)?;
    run_game(cfg, roster)
}

/// Like [`run_config`], streaming every line to `out` as it is produced.
pub fn run_config_streaming<W: Write>(cfg: GameConfig, out: W) -> Result<RunLog> {
    let roster = build_roster(&cfg)?;
    let game = Game::new(cfg, roster)?;
    let mut writer = RunLogWriter::new(out, game.config()).map_err(|e| Error::io("<log>", e))?;
    let mut io_error = None;
    let log = game.play(|event| {
        if io_error.is_none() {
            io_error = writer.event(event).err();
        }
    });
    if let Some(e) = io_error {
        return Err(Error::io("<log>", e));
    }
    writer
        .finish(&log.trailer())
        .map_err(|e| Error::io("<log>", e))?;
    Ok(log)
}
