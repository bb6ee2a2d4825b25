use std::path::Path;
use std::process::{Command, Output};

fn cbmcts(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbmcts"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CBMCTS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SPEC: &str = r#"
env_id = "d4"
trials = 4
cadence = 50

[environment]
kind = "dchain"
depth = 4

[[planners]]
variant = "CB"
planning_budget = 200

[[planners]]
variant = "DEC"
gamma = 0.7
planning_budget = 200
"#;

/// Drops the wallclock column.
fn without_wallclock(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').unwrap().0)
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn oracle_prints_optimum_and_witness() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "env.toml", "kind = \"dchain\"\ndepth = 3\n");
    let out = cbmcts(&["oracle", &spec], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("raw 1.666666"), "{text}");
    assert!(text.contains("agent 0: [0, 0, 0]"));
    assert!(text.contains("agent 1: [1]"));
}

#[test]
fn oracle_refuses_large_instances() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "env.toml",
        "kind = \"dchain\"\ndepth = 10\nbranching = 3\nagents = 3\n",
    );
    let out = cbmcts(&["oracle", &spec, "--cap", "1000"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("shrink the instance"));
}

#[test]
fn run_is_deterministic_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.toml", SPEC);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(cbmcts(
        &["run", &spec, "--jobs", "1", "--out", a.to_str().unwrap()],
        dir.path()
    )
    .status
    .success());
    assert!(cbmcts(
        &["run", &spec, "--jobs", "3", "--out", b.to_str().unwrap()],
        dir.path()
    )
    .status
    .success());
    let csv_a = std::fs::read_to_string(a.join("d4.csv")).unwrap();
    let csv_b = std::fs::read_to_string(b.join("d4.csv")).unwrap();
    assert_eq!(
        csv_a.lines().next().unwrap(),
        "env_id,algorithm,seed,iteration,simple_regret,joint_score,pr1,pr2,wallclock_ms"
    );
    // 2 planners x 4 seeds x 4 cadence points, plus header
    assert_eq!(csv_a.lines().count(), 33);
    assert_eq!(without_wallclock(&csv_a), without_wallclock(&csv_b));
    assert!(a.join("d4.json").exists());
}

#[test]
fn seeds_flag_and_env_var_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.toml", SPEC);
    let target = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_cbmcts"))
        .args(["run", &spec, "--seeds", "1"])
        .current_dir(dir.path())
        .env("CBMCTS_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(target.join("d4.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 4);
}

#[test]
fn report_converts_between_formats() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.toml", SPEC);
    assert!(cbmcts(&["run", &spec, "--out", "r"], dir.path())
        .status
        .success());
    let json = dir.path().join("r/d4.json");
    let out = cbmcts(
        &["report", json.to_str().unwrap(), "--format", "csv"],
        dir.path(),
    );
    assert!(out.status.success());
    let original = std::fs::read_to_string(dir.path().join("r/d4.csv")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), original);

    let back = dir.path().join("back.json");
    let csv = dir.path().join("r/d4.csv");
    let out = cbmcts(
        &[
            "report",
            csv.to_str().unwrap(),
            "--format",
            "json",
            "--out",
            back.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = std::fs::read_to_string(back).unwrap();
    assert!(text.contains("\"summary\""));

    let bad = cbmcts(
        &["report", csv.to_str().unwrap(), "--format", "xml"],
        dir.path(),
    );
    assert!(!bad.status.success());
}

#[test]
fn sweep_writes_ranking() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.toml", SPEC);
    let grid = write(
        dir.path(),
        "grid.toml",
        "epsilon = [0.5, 1.0]\ngamma = [0.7, 0.9]\n",
    );
    let out = cbmcts(
        &["sweep", &spec, &grid, "--seeds", "2", "--out", "s"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let ranking = std::fs::read_to_string(dir.path().join("s/d4-sweep-ranking.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&ranking).unwrap();
    // 4 combinations x 2 planners
    assert_eq!(parsed.as_array().unwrap().len(), 8);
    let csv = std::fs::read_to_string(dir.path().join("s/d4-sweep.csv")).unwrap();
    assert!(csv.contains("CB-MCTS[epsilon=0.5;gamma=0.7]"));
}

#[test]
fn invalid_spec_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "spec.toml",
        "env_id = \"x\"\n[environment]\nkind = \"volcano\"\n",
    );
    let out = cbmcts(&["run", &spec], dir.path());
    assert!(!out.status.success());
    assert!(!String::from_utf8(out.stderr).unwrap().is_empty());
}

#[test]
fn bundled_specs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments");
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        let text = std::fs::read_to_string(&path).unwrap();
        if name.contains("grid") {
            assert!(cbmcts::harness::parse_grid(&text).is_ok(), "{name}");
        } else if name.starts_with("oracle") {
            assert!(
                cbmcts::harness::EnvironmentSpec::from_toml(&text).is_ok(),
                "{name}"
            );
        } else {
            cbmcts::harness::ExperimentSpec::from_toml(&text)
                .unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}
