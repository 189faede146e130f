//! Seed-reproducible simulator for schema-induced naming games.
//!
//! A population of agents is paired round after round; each agent proposes
//! a name from a fixed lexicon `C1..CM`, the proposals are decoded, and on a
//! mismatch agents take their partner's name with the lose-shift
//! probability `alpha`. Three communication conditions are supported:
//!
//! - `NL`: free text, no memory;
//! - `NL_SW`: free text with a sliding window of the last `K` partners;
//! - `SCHEMA`: replies must carry the tag `@say {name: Ck}`, with one
//!   reminder retry and a free-text / random fallback.
//!
//! Agents are either mock policies (deterministic given the seed) or real
//! models behind an OpenAI-compatible chat-completions endpoint.
//!
//! ```no_run
//! use sign_game::{run_config, Condition, GameConfig};
//!
//! let cfg = GameConfig::new(Condition::Schema, 12, 5, 0.75, 1);
//! let log = run_config(cfg).unwrap();
//! println!("final agreement {:?}", log.final_agreement());
//! ```
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability.

pub mod agents;
pub mod cli;
pub mod codec;
pub mod config;
pub mod engine;
pub mod error;
pub mod lexicon;
pub mod llm;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod runlog;
pub mod sweep;

pub use config::{
    validate_config, AdoptionMode, AgreementMetric, Condition, EmittedNameRule, FallbackMode,
    GameConfig, MockPolicyParams, PairingMode, PolicySpec, ProposalRule, RosterEntry,
    TokenAccounting,
};
pub use engine::{build_roster, plan_pairs, run_config, run_game, Game, RosterSlot};
pub use error::{Error, Result, ValidationError};
pub use lexicon::{make_lexicon, DecodedName, Lexicon, NameId};
pub use runlog::{RoundEvent, RunLog, RunStatus};
