//! A single game with stochastic mock agents, printed round by round.
//!
//!     cargo run --example mock_game -- SCHEMA 7
//!
//! Arguments: condition (NL, NL_SW or SCHEMA; default SCHEMA) and seed.

use sign_game::config::{Condition, GameConfig, MockPolicyParams, PolicySpec, RosterEntry};
use sign_game::run_config;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let condition: Condition = match args.next() {
        Some(c) => serde_json::from_value(serde_json::Value::String(c))?,
        None => Condition::Schema,
    };
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let k = if condition.uses_memory() { 5 } else { 0 };
    let mut cfg = GameConfig::new(condition, 12, k, 0.75, seed);
    cfg.roster = vec![RosterEntry::fill(PolicySpec::Mock(MockPolicyParams {
        compliance_prob: 0.9,
        verbosity_tokens: 12,
        noise_mentions_name_prob: 0.5,
        ..Default::default()
    }))];

    let log = run_config(cfg)?;
    println!("round  agreement  tokens");
    for event in log
        .events
        .iter()
        .filter(|e| e.round % 25 == 0 || e.round == 1)
    {
        println!(
            "{:>5}  {:>9.3}  {:>6}",
            event.round, event.agreement_after.pairwise, event.cumulative_tokens
        );
    }
    println!("\nfinal names:");
    for agent in &log.final_states {
        let said = agent
            .last_emitted
            .map_or("nothing decodable".into(), |n| n.to_string());
        println!(
            "  agent {:>2}: holds {}, last said {said}",
            agent.agent_id, agent.current_name
        );
    }
    Ok(())
}
