//! Plugging a hand-written policy into the engine. A few "zealots" never
//! change their mind; everyone else is an ordinary mock agent.
//!
//!     cargo run --example custom_policy

use sign_game::agents::{AgentPolicy, AgentState, InteractionRecord, MockPolicy, Turn};
use sign_game::codec::{format_schema, RawMessage};
use sign_game::config::{Condition, GameConfig, MockPolicyParams};
use sign_game::error::PolicyError;
use sign_game::rng::{derive_rng, policy_label};
use sign_game::{run_game, NameId, RosterSlot};

struct Zealot(NameId);

impl AgentPolicy for Zealot {
    fn propose(&mut self, _turn: &Turn<'_>) -> Result<RawMessage, PolicyError> {
        Ok(format_schema(self.0))
    }

    fn retry_propose(&mut self, turn: &Turn<'_>) -> Result<RawMessage, PolicyError> {
        self.propose(turn)
    }

    fn on_result(&mut self, state: &mut AgentState, record: InteractionRecord) {
        // Zealots do not listen: memory stays empty, and their name is
        // reset after any adoption.
        let _ = record;
        state.current_name = self.0;
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 16;
    let zealots = 3;
    let mut cfg = GameConfig::new(Condition::Schema, n, 5, 0.5, 21);
    cfg.rounds = 2_000;
    let target = NameId::new(9).unwrap();

    let roster: Vec<RosterSlot> = (0..n)
        .map(|i| {
            if i < zealots {
                RosterSlot::new("zealot", Zealot(target))
            } else {
                let rng = derive_rng(cfg.seed, &policy_label(i));
                RosterSlot::new("mock", MockPolicy::new(MockPolicyParams::default(), rng))
            }
        })
        .collect();

    let log = run_game(cfg, roster)?;
    let saying = log
        .final_states
        .iter()
        .filter(|s| s.last_emitted == Some(target))
        .count();
    println!(
        "after {} rounds {saying}/{n} agents last said {target}; final agreement {:.3}",
        log.events.len(),
        log.final_agreement().unwrap_or(0.0)
    );
    Ok(())
}
