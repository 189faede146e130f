//! Agreement measures and tokens-to-convergence computed from run logs:
//! averaged curves over seeds, and per-threshold token costs.
//!
//!     cargo run --example agreement_metrics

use sign_game::config::{
    AgreementMetric, Condition, GameConfig, MockPolicyParams, PolicySpec, RosterEntry,
};
use sign_game::metrics::{agreement_curve, modal_agreement, pairwise_agreement, tokens_table};
use sign_game::{run_config, NameId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = |k| Some(NameId::new(k).unwrap());
    let population = [c(1), c(1), c(1), c(2), c(2), None];
    println!(
        "names {:?}: pairwise {:.3}, modal {:.3}\n",
        population.map(|n| n.map(|n| n.to_string())),
        pairwise_agreement(&population),
        modal_agreement(&population)
    );

    let mut logs = Vec::new();
    for condition in [Condition::NlSw, Condition::Schema] {
        for seed in 1..=5 {
            let mut cfg = GameConfig::new(condition, 12, 5, 0.75, seed);
            cfg.rounds = 200;
            cfg.roster = vec![RosterEntry::fill(PolicySpec::Mock(MockPolicyParams {
                compliance_prob: if condition == Condition::Schema {
                    0.95
                } else {
                    0.6
                },
                verbosity_tokens: if condition == Condition::Schema {
                    8
                } else {
                    25
                },
                noise_mentions_name_prob: 0.5,
                ..Default::default()
            }))];
            logs.push(run_config(cfg)?);
        }
    }

    for condition in [Condition::NlSw, Condition::Schema] {
        let runs: Vec<_> = logs
            .iter()
            .filter(|l| l.config.condition == condition)
            .collect();
        let curve = agreement_curve(&runs, AgreementMetric::Pairwise)?;
        print!("{condition:>7}:");
        for p in curve.iter().filter(|p| p.round % 40 == 0) {
            print!("  r{}={:.2}±{:.2}", p.round, p.mean, p.std);
        }
        println!();
    }

    println!("\ncondition threshold mean_tokens reached");
    for row in tokens_table(&logs, &[0.5, 0.6, 0.7], AgreementMetric::Pairwise) {
        let mean = row
            .mean_tokens
            .map_or("not reached".into(), |t| format!("{t:.0}"));
        println!(
            "{:>9} {:>9} {:>11} {}/{}",
            row.condition, row.threshold, mean, row.n_reached, row.n_runs
        );
    }
    Ok(())
}
