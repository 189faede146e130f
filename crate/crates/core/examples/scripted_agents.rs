//! Scripted agents make the game fully predictable, which is how the engine
//! is checked against hand-computed outcomes. Here two agents always say C1
//! and two always say C2, with alpha = 1: every mismatch makes both sides
//! adopt the other's name. Agreement is measured on what agents last
//! emitted (or adopted), so it moves around but can never settle, because
//! the scripts keep reintroducing both names.
//!
//!     cargo run --example scripted_agents

use sign_game::config::{Condition, GameConfig, PolicySpec, RosterEntry};
use sign_game::{run_config, NameId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rounds = 6;
    let script = |k| PolicySpec::Scripted {
        script: vec![NameId::new(k).unwrap(); rounds],
    };

    let mut cfg = GameConfig::new(Condition::Schema, 4, 2, 1.0, 3);
    cfg.rounds = rounds;
    cfg.roster = vec![
        RosterEntry::exactly(2, script(1)),
        RosterEntry::exactly(2, script(2)),
    ];

    let log = run_config(cfg)?;
    for event in &log.events {
        for i in &event.interactions {
            let said: Vec<String> = i
                .turns
                .iter()
                .map(|t| t.decoded().map_or("None".into(), |n| n.to_string()))
                .collect();
            println!(
                "round {}: agents {:?} said {:?} mismatch={} adopted={:?} -> agreement {:.3}",
                event.round, i.pair, said, i.mismatch, i.adopted, event.agreement_after.pairwise
            );
        }
    }
    println!(
        "tokens: {} (each tag is 3 whitespace tokens)",
        log.total_tokens()
    );
    Ok(())
}
