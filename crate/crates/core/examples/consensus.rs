//! With speaker/hearer adoption and alpha = 1 a fully compliant SCHEMA
//! population behaves like a voter model and must reach consensus. This
//! prints the distribution of consensus times over 100 seeds.
//!
//!     cargo run --release --example consensus

use sign_game::config::{
    AdoptionMode, Condition, GameConfig, MockPolicyParams, PolicySpec, RosterEntry,
};
use sign_game::{build_roster, Game};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut times = Vec::new();
    for seed in 0..100 {
        let mut cfg = GameConfig::new(Condition::Schema, 12, 5, 1.0, seed);
        cfg.rounds = 10_000;
        cfg.adoption_mode = AdoptionMode::SpeakerHearer;
        cfg.roster = vec![RosterEntry::fill(PolicySpec::Mock(
            MockPolicyParams::default(),
        ))];
        let roster = build_roster(&cfg)?;
        let mut game = Game::new(cfg, roster)?;
        for r in 0..10_000 {
            if game.run_round(r)?.agreement_after.pairwise == 1.0 {
                times.push(r + 1);
                break;
            }
        }
    }
    times.sort_unstable();
    let pct = |q: f64| times[((times.len() - 1) as f64 * q) as usize];
    println!("{}/100 seeds reached consensus", times.len());
    println!(
        "rounds: min {} median {} p90 {} max {}",
        times[0],
        pct(0.5),
        pct(0.9),
        times[times.len() - 1]
    );
    Ok(())
}
