use std::path::Path;
use std::process::{Command, Output};

fn aggsim(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_aggsim"));
    cmd.current_dir(dir).args(args).env_remove("AGGSIM_THREADS");
    if let Some(t) = threads {
        cmd.env("AGGSIM_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Splits a CSV into echo lines, header row and data rows.
fn sections(text: &str) -> (Vec<&str>, Vec<&str>, Vec<Vec<&str>>) {
    let lines: Vec<&str> = text.split("\r\n").filter(|l| !l.is_empty()).collect();
    let echo: Vec<&str> = lines.iter().copied().take_while(|l| l.starts_with("# ")).collect();
    let header = lines[echo.len()].split(',').collect();
    let rows = lines[echo.len() + 1..].iter().map(|l| l.split(',').collect()).collect();
    (echo, header, rows)
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["mc-x", "m=8,16", "trials=300", "bandwidth=32", "seed=11", "out=x.csv"];
    let mut outputs = Vec::new();
    for threads in ["1", "3", "8"] {
        let dir = tempfile::tempdir().unwrap();
        let out = aggsim(dir.path(), &args, Some(threads));
        assert!(out.status.code().is_some_and(|c| c <= 1), "{out:?}");
        outputs.push(std::fs::read(dir.path().join("x.csv")).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));

    let dir = tempfile::tempdir().unwrap();
    aggsim(
        dir.path(),
        &["waveform", "trials=12", "competitors=20", "out=w.csv"],
        Some("1"),
    );
    let one = read(dir.path(), "w.csv");
    aggsim(
        dir.path(),
        &["waveform", "trials=12", "competitors=20", "out=w.csv"],
        Some("6"),
    );
    assert_eq!(one, read(dir.path(), "w.csv"));
}

#[test]
fn mc_x_schema_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let out = aggsim(dir.path(), &["mc-x", "m=8", "trials=400", "--bandwidth", "32"], None);
    assert!(out.status.code().is_some_and(|c| c <= 1), "{out:?}");
    let text = read(dir.path(), "aggsim-mc-x.csv");
    let (echo, header, rows) = sections(&text);
    assert_eq!(
        header,
        [
            "m",
            "B",
            "delta",
            "alpha",
            "r",
            "trials",
            "sample_mean",
            "sample_var",
            "predicted_mean",
            "predicted_var",
            "ks_distance",
            "k0",
            "rate_mean"
        ]
    );
    assert_eq!(rows.len(), 1);
    for cell in &rows[0] {
        let v: f64 = cell.parse().unwrap();
        assert!(v.is_finite());
    }
    assert!(echo.contains(&"# bandwidth=32.0"));
    assert!(echo.contains(&"# experiment=mc-x"));
    assert!(echo.contains(&"# trials=400"));
    let summary: serde_json::Value = serde_json::from_str(&read(dir.path(), "aggsim-mc-x.summary.json")).unwrap();
    assert_eq!(summary["experiment"], "mc-x");
    assert!(summary["checks"].as_array().is_some_and(|c| !c.is_empty()));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout
        .lines()
        .any(|l| l.starts_with("[PASS]") || l.starts_with("[FAIL]")));
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    aggsim(dir.path(), &["tdma", "k=0", "alpha=3", "board=12"], None);
    let text = read(dir.path(), "aggsim-tdma.csv");
    let (_, header, rows) = sections(&text);
    let col = header.iter().position(|h| *h == "k1").unwrap();
    let mantissa = rows[0][col].split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{}", rows[0][col]);
}

#[test]
fn unknown_key_and_bad_values_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["mc-x", "bogus=1"][..],
        &["mc-x", "--trials", "many"],
        &["teleport"],
        &["route", "n=100"],
        &["mc-x", "trials=5"],
    ] {
        let out = aggsim(dir.path(), args, None);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {out:?}");
    }
    let out = aggsim(dir.path(), &["tdma"], Some("zero"));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0, "no partial outputs");
}

#[test]
fn io_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = aggsim(dir.path(), &["tdma", "config=missing.cfg"], None);
    assert_eq!(out.status.code(), Some(3));
    let out = aggsim(
        dir.path(),
        &["tdma", "k=0", "alpha=3", "board=8", "out=no/such/dir/t.csv"],
        None,
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn check_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    // outside the cooperative regime the scaling check fails
    let out = aggsim(dir.path(), &["scaling", "beta=0.45", "gamma=0.3"], None);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("[FAIL]"));
}

#[test]
fn help_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let out = aggsim(dir.path(), &["--help"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("mc-x"));
}

#[test]
fn echoed_header_replays_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = aggsim(
        dir.path(),
        &["tdma", "k=1", "alpha=3.5", "board=10", "snr=20", "out=a.csv"],
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let first = read(dir.path(), "a.csv");
    let (echo, _, _) = sections(&first);
    let cfg: String = echo.iter().map(|l| format!("{}\n", &l[2..])).collect();
    std::fs::write(dir.path().join("run.cfg"), cfg).unwrap();
    aggsim(dir.path(), &["tdma", "config=run.cfg", "out=b.csv"], None);
    assert_eq!(first, read(dir.path(), "b.csv"));

    let out = aggsim(dir.path(), &["route", "config=run.cfg"], None);
    assert_eq!(out.status.code(), Some(2), "config for another experiment");
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = aggsim(dir.path(), &["waveform", "trials=0", "out=w.csv"], None);
    assert!(out.status.code().is_some_and(|c| c <= 1), "{out:?}");
    let text = read(dir.path(), "w.csv");
    let (_, header, rows) = sections(&text);
    assert_eq!(header[0], "trial");
    assert!(rows.is_empty());
}

#[test]
fn route_writes_edges_and_lower_bound_failure_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = aggsim(dir.path(), &["route", "n=2601", "rho-min-sq=25"], None);
    let edges = read(dir.path(), "aggsim-route.edges.csv");
    let (_, header, rows) = sections(&edges);
    assert_eq!(header, ["child_x", "child_y", "parent_x", "parent_y"]);
    assert_eq!(rows.len(), 2600);
    let loads = read(dir.path(), "aggsim-route.csv");
    let (_, header, rows) = sections(&loads);
    assert_eq!(
        header,
        ["x", "y", "load", "lower_bound", "upper_bound", "ok", "certified"]
    );
    assert_eq!(rows.len(), 2600, "one row per non-sink node");
    assert!(out.status.code().is_some_and(|c| c <= 1));
}
