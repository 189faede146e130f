mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::json;
use sign_game::config::{Condition, GameConfig, PolicySpec, RosterEntry};
use sign_game::llm::EndpointProfile;
use sign_game::sweep::SweepSpec;
use sign_game::{RunLog, RunStatus};

fn sign(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sign"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn recipe(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("recipes")
        .join(name)
}

fn write_config(dir: &Path, name: &str, cfg: &GameConfig) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, cfg.to_json_pretty()).unwrap();
    path
}

fn small_sweep(dir: &Path) -> PathBuf {
    let path = dir.join("sweep.json");
    let spec = json!({
        "base": {
            "n_agents": 6, "lexicon_size": 6, "rounds": 60, "memory_window": 3,
            "lose_shift_alpha": 0.75, "condition": "SCHEMA", "seed": 0,
            "roster": [{"kind": "mock", "compliance_prob": 0.9, "verbosity_tokens": 6}]
        },
        "conditions": ["NL", "NL_SW", "SCHEMA"],
        "n_agents": [6],
        "memory_window": [3],
        "alpha": [0.5, 0.75],
        "seeds": [1, 2]
    });
    fs::write(&path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    path
}

#[test]
fn run_writes_a_completed_log() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sign(
        &["run", recipe("schema-mock.json").to_str().unwrap()],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("log: schema-mock.jsonl"), "{stdout}");
    assert!(stdout.contains("total tokens:"));
    let log = RunLog::load(&tmp.path().join("schema-mock.jsonl")).unwrap();
    assert_eq!(log.status, RunStatus::Completed);
    assert_eq!(log.events.len(), log.config.rounds);
}

#[test]
fn run_honours_out_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let config = recipe("schema-mock.json");
    for name in ["a.jsonl", "b.jsonl"] {
        let out = sign(
            &["run", config.to_str().unwrap(), "--out", name],
            tmp.path(),
        );
        assert_eq!(code(&out), 0);
    }
    assert_eq!(
        fs::read(tmp.path().join("a.jsonl")).unwrap(),
        fs::read(tmp.path().join("b.jsonl")).unwrap()
    );
}

#[test]
fn invalid_configs_map_to_their_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: Vec<(GameConfig, i32, &str)> = vec![
        (
            GameConfig::new(Condition::Schema, 12, 5, 1.2, 1),
            23,
            "alpha-out-of-range",
        ),
        (
            GameConfig::new(Condition::Schema, 1, 5, 0.5, 1),
            20,
            "n-too-small",
        ),
        (
            GameConfig::new(Condition::Nl, 12, 3, 0.5, 1),
            24,
            "nl-requires-k0",
        ),
        (
            GameConfig::new(Condition::NlSw, 12, 0, 0.5, 1),
            25,
            "memory-requires-k1",
        ),
    ];
    for (i, (cfg, expected, name)) in cases.into_iter().enumerate() {
        let path = write_config(tmp.path(), &format!("bad{i}.json"), &cfg);
        let out = sign(&["run", path.to_str().unwrap()], tmp.path());
        assert_eq!(code(&out), expected, "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(name));
        assert!(!tmp.path().join(format!("bad{i}.jsonl")).exists());
    }
}

#[test]
fn unreadable_inputs_map_to_io_and_parse_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&sign(&["run", "missing.json"], tmp.path())), 3);
    fs::write(tmp.path().join("broken.json"), "{ not json").unwrap();
    assert_eq!(code(&sign(&["run", "broken.json"], tmp.path())), 4);
    assert_eq!(code(&sign(&["frobnicate"], tmp.path())), 2);
}

#[test]
fn dead_endpoint_aborts_and_keeps_partial_log() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = GameConfig::new(Condition::Schema, 4, 5, 0.75, 1);
    cfg.rounds = 10;
    let mut profile = EndpointProfile::new(common::dead_url(), "none");
    profile.max_retries_on_transport_error = 1;
    profile.backoff_ms = 1;
    cfg.endpoints.insert("dead".into(), profile);
    cfg.roster = vec![RosterEntry::fill(PolicySpec::Llm {
        endpoint: "dead".into(),
    })];
    let path = write_config(tmp.path(), "dead.json", &cfg);
    let out = sign(&["run", path.to_str().unwrap()], tmp.path());
    assert_eq!(code(&out), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("partial log"));
    let log = RunLog::load(&tmp.path().join("dead.jsonl")).unwrap();
    assert_eq!(log.status, RunStatus::Aborted);
    assert!(log.events.is_empty());
    assert!(log.abort_reason.unwrap().contains("transport"));
}

#[test]
fn sweep_resumes_and_is_independent_of_parallelism() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = small_sweep(tmp.path());
    let spec = spec.to_str().unwrap();
    let first = sign(&["sweep", spec, "--out", "serial"], tmp.path());
    assert_eq!(
        code(&first),
        0,
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    // NL collapses to K=0: (1 + 2) conditions x 2 alphas x 2 seeds
    assert!(String::from_utf8_lossy(&first.stdout).contains("12 run, 0 already complete"));
    let again = sign(&["sweep", spec, "--out", "serial"], tmp.path());
    assert!(String::from_utf8_lossy(&again.stdout).contains("0 run, 12 already complete"));

    assert_eq!(
        code(&sign(
            &["sweep", spec, "--out", "parallel", "--parallelism", "4"],
            tmp.path()
        )),
        0
    );
    let names = |d: &str| -> BTreeSet<_> {
        fs::read_dir(tmp.path().join(d))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect()
    };
    assert_eq!(names("serial"), names("parallel"));
    for name in names("serial") {
        assert_eq!(
            fs::read(tmp.path().join("serial").join(&name)).unwrap(),
            fs::read(tmp.path().join("parallel").join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn sweep_reruns_an_incomplete_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = small_sweep(tmp.path());
    let spec = spec.to_str().unwrap();
    sign(&["sweep", spec, "--out", "runs"], tmp.path());
    let victim = tmp.path().join("runs").join("SCHEMA_6_3_0.5_1.jsonl");
    let original = fs::read_to_string(&victim).unwrap();
    // drop the trailer, as if the process had been killed
    let truncated: Vec<&str> = original.lines().take(10).collect();
    fs::write(&victim, truncated.join("\n") + "\n").unwrap();
    let out = sign(&["sweep", spec, "--out", "runs"], tmp.path());
    assert!(String::from_utf8_lossy(&out.stdout).contains("1 run, 11 already complete"));
    assert_eq!(fs::read_to_string(&victim).unwrap(), original);
}

#[test]
fn failing_sweep_cells_exit_6() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("dead-sweep.json");
    let spec = json!({
        "base": {
            "n_agents": 4, "lexicon_size": 6, "rounds": 3, "memory_window": 2,
            "lose_shift_alpha": 0.5, "condition": "SCHEMA", "seed": 0,
            "roster": [{"kind": "llm", "endpoint": "dead"}],
            "endpoints": {"dead": {"base_url": common::dead_url(), "model_name": "x",
                                   "max_retries_on_transport_error": 0, "backoff_ms": 1}}
        },
        "conditions": ["SCHEMA"], "n_agents": [4], "memory_window": [2], "alpha": [0.5], "seeds": [1]
    });
    fs::write(&path, spec.to_string()).unwrap();
    let out = sign(
        &["sweep", path.to_str().unwrap(), "--out", "runs"],
        tmp.path(),
    );
    assert_eq!(code(&out), 6);
    assert!(String::from_utf8_lossy(&out.stderr).contains("SCHEMA_4_2_0.5_1.jsonl"));
}

#[test]
fn full_grid_expands_to_ninety_cells() {
    let spec = SweepSpec::load(&recipe("full-grid.json")).unwrap();
    let cells = spec.cells().unwrap();
    let mut expected = BTreeSet::new();
    for cond in ["NL", "NL_SW", "SCHEMA"] {
        for n in [12, 24] {
            for k in [0, 5, 10] {
                if (cond == "NL") != (k == 0) {
                    continue;
                }
                for alpha in ["0.5", "0.75", "0.99"] {
                    for seed in 1..=3 {
                        expected.insert(format!("{cond}_{n}_{k}_{alpha}_{seed}.jsonl"));
                    }
                }
            }
        }
    }
    assert_eq!(expected.len(), 90);
    let got: BTreeSet<String> = cells.iter().map(|c| c.file_name.clone()).collect();
    assert_eq!(got, expected);
    assert_eq!(cells.len(), 90);
    assert!(cells.iter().all(|c| c.config.has_llm_agents()));
}

#[test]
fn report_on_empty_directory_exits_7() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir(tmp.path().join("empty")).unwrap();
    let out = sign(&["report", "empty", "--kind", "table1"], tmp.path());
    assert_eq!(code(&out), 7);
}

#[test]
fn report_rejects_bad_thresholds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = sign(
        &["report", ".", "--kind", "tokens", "--thresholds", "0.5,1.5"],
        tmp.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn reports_are_written_and_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = small_sweep(tmp.path());
    assert_eq!(
        code(&sign(
            &["sweep", spec.to_str().unwrap(), "--out", "runs"],
            tmp.path()
        )),
        0
    );
    let mut snapshots = Vec::new();
    for out_dir in ["r1", "r2"] {
        for kind in ["table1", "curves", "tokens"] {
            let out = sign(
                &["report", "runs", "--kind", kind, "--out", out_dir],
                tmp.path(),
            );
            assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        }
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(tmp.path().join(out_dir))
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        snapshots.push(files);
    }
    assert_eq!(snapshots[0], snapshots[1]);
    let names: Vec<&str> = snapshots[0].iter().map(|(n, _)| n.as_str()).collect();
    assert!(
        names.contains(&"table1.csv")
            && names.contains(&"summary.csv")
            && names.contains(&"tokens.csv")
    );
    assert_eq!(names.iter().filter(|n| n.starts_with("curves_")).count(), 6);

    let table1 = String::from_utf8(
        snapshots[0]
            .iter()
            .find(|(n, _)| n == "table1.csv")
            .unwrap()
            .1
            .clone(),
    )
    .unwrap();
    let mut lines = table1.lines();
    assert_eq!(lines.next(), Some("N,K,NL,NL_SW,SCHEMA,metric"));
    assert!(lines.next().unwrap().starts_with("6,0,"));
    let tokens = String::from_utf8(
        snapshots[0]
            .iter()
            .find(|(n, _)| n == "tokens.csv")
            .unwrap()
            .1
            .clone(),
    )
    .unwrap();
    assert!(tokens.starts_with("condition,threshold,mean_tokens,n_reached,n_runs,metric"));
    assert_eq!(tokens.lines().count(), 1 + 3 * 3);
    let curve = &snapshots[0]
        .iter()
        .find(|(n, _)| n.starts_with("curves_SCHEMA"))
        .unwrap()
        .1;
    let curve = String::from_utf8_lossy(curve);
    assert!(curve.starts_with("round,mean,std,cumulative_tokens"));
    assert_eq!(curve.lines().count(), 61);
}
