//! The desk-scale mock sweep (3 conditions x 3 seeds) followed by every
//! report, written to the directory given on the command line.
//!
//!     cargo run --release --example desk_sweep -- /tmp/desk

use std::path::{Path, PathBuf};

use sign_game::report::{generate, ReportKind, DEFAULT_THRESHOLDS};
use sign_game::sweep::{run_sweep, SweepSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "runs/desk-mock".into())
        .into();
    let recipe = Path::new(env!("CARGO_MANIFEST_DIR")).join("recipes/desk-mock.json");
    let spec = SweepSpec::load(&recipe)?;

    let outcome = run_sweep(&spec, &out, 4)?;
    println!(
        "{} runs, {} already present, {} failed",
        outcome.ran.len(),
        outcome.skipped.len(),
        outcome.failed.len()
    );

    for kind in [ReportKind::Table1, ReportKind::Tokens, ReportKind::Curves] {
        for path in generate(&out, kind, &DEFAULT_THRESHOLDS, None, &out)? {
            println!("wrote {}", path.display());
        }
    }
    println!("\n{}", std::fs::read_to_string(out.join("table1.csv"))?);
    println!("{}", std::fs::read_to_string(out.join("tokens.csv"))?);
    Ok(())
}
