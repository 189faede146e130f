//! A short game against a real OpenAI-compatible server.
//!
//!     SIGN_ENDPOINT_URL=http://localhost:8000/v1 \
//!     SIGN_ENDPOINT_MODEL=microsoft/Phi-3-mini-4k-instruct \
//!     cargo run --example llm_endpoint
//!
//! Set SIGN_API_KEY_VAR to the name of a variable holding a bearer token if
//! the server needs one.

use sign_game::codec::DecodeStage;
use sign_game::config::{Condition, GameConfig, PolicySpec, RosterEntry};
use sign_game::llm::EndpointProfile;
use sign_game::run_config;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let Ok(url) = std::env::var("SIGN_ENDPOINT_URL") else {
        eprintln!("set SIGN_ENDPOINT_URL (and SIGN_ENDPOINT_MODEL) to run this example");
        return Ok(());
    };
    let model = std::env::var("SIGN_ENDPOINT_MODEL").unwrap_or_else(|_| "default".into());
    let mut profile = EndpointProfile::new(url, model);
    profile.api_key_ref = std::env::var("SIGN_API_KEY_VAR").ok();

    let mut cfg = GameConfig::new(Condition::Schema, 4, 5, 0.75, 1);
    cfg.rounds = 20;
    cfg.endpoints.insert("model".into(), profile);
    cfg.roster = vec![RosterEntry::fill(PolicySpec::Llm {
        endpoint: "model".into(),
    })];

    let log = run_config(cfg)?;
    let turns: Vec<_> = log
        .events
        .iter()
        .flat_map(|e| &e.interactions)
        .flat_map(|i| &i.turns)
        .collect();
    let count = |stage| turns.iter().filter(|t| t.outcome.stage == stage).count();
    println!("status {:?} after {} rounds", log.status, log.events.len());
    if let Some(reason) = &log.abort_reason {
        println!("aborted: {reason}");
    }
    println!(
        "first-try {} / retry {} / free text {} / fallback {}",
        count(DecodeStage::SchemaFirstTry),
        count(DecodeStage::SchemaRetry),
        count(DecodeStage::FreeText),
        count(DecodeStage::RandomFallback)
    );
    if let Some(t) = turns.first() {
        println!("sample reply: {:?}", t.message.text);
    }
    println!(
        "final agreement {:.3}, {} tokens",
        log.final_agreement().unwrap_or(0.0),
        log.total_tokens()
    );
    Ok(())
}
