use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_torsion-lab"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn run_config(dir: &Path, experiment: &str, config: &str, extra: &[&str]) -> Output {
    let path = dir.join(format!("{experiment}.json"));
    fs::write(&path, config).unwrap();
    let out = dir.join("out");
    let mut args = vec![
        experiment,
        "--config",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ];
    args.extend_from_slice(extra);
    lab(&args, &[])
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn eval_prints_twelve_significant_digits() {
    for (expr, value) in [
        ("E_PN N=4", "0.411233516712"),
        ("h b=2", "3.45482255552"),
        ("ball_T n=2 R=1", "-0.196349540849"),
    ] {
        let o = lab(&["eval", expr], &[]);
        assert!(o.status.success(), "{expr}: {}", stderr(&o));
        let line = stdout(&o);
        let (v, tag) = line.trim_end().split_once('\t').unwrap();
        assert_eq!(v, value);
        assert!(!tag.is_empty());
    }
}

#[test]
fn eval_unknown_name_is_a_usage_error() {
    assert_eq!(lab(&["eval", "nonsense x=1"], &[]).status.code(), Some(2));
    assert_eq!(lab(&["eval", "E_PN N=4 bogus=1"], &[]).status.code(), Some(2));
}

#[test]
fn polygon_sweep_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        dir.path(),
        "polygon-sweep",
        r#"{"experiment": "polygon-sweep", "sides": {"from": 3, "to": 6}, "levels": {"fixed": [3, 4]}, "rel_tol": 0.05, "min_order": 1.5}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    let csv = fs::read_to_string(out.join("polygon-sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("N,level,h_max,E_closed,T_closed,T_fem"));
    assert_eq!(lines.count(), 8);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["experiment"], "polygon-sweep");
    assert_eq!(manifest["passed"], true);
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(manifest["version"].as_str().unwrap().starts_with("torsion-core"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("polygon-sweep.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 8);
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    fs::write(
        &config,
        r#"{"domains": [{"kind": "regular_polygon", "sides": 6, "area": 3.141592653589793}], "betas": [0.5, 1.0, 2.0], "level": 3}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "0", "3"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let o = lab(
            &[
                "robin-identity",
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--quiet",
            ],
            &[("TORSION_LAB_THREADS", threads)],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push((
            fs::read(out.join("robin-identity.csv")).unwrap(),
            fs::read(out.join("robin-identity.json")).unwrap(),
        ));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn failed_check_exits_one_with_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        dir.path(),
        "solve",
        r#"{"domain": {"kind": "disk", "radius": 1.0}, "levels": [2], "expect_t": -0.25, "rel_tol": 1e-6}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("expected_energy"), "{err}");
    assert!(err.contains("row 0: level=2"), "{err}");
}

#[test]
fn invalid_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("box-osc", r#"{"n": 3, "eps": [0.2, 0.1], "bogus": 1}"#),
        ("box-osc", r#"{"experiment": "serrin-gap", "n": 3, "eps": [0.2, 0.1]}"#),
        ("serrin-gap", r#"{"n": 2, "eps": [0.2, 0.1]}"#),
        ("box-osc", r#"{"n": 3, "eps": [0.1, 0.2]}"#),
        (
            "solve",
            r#"{"domain": {"kind": "disk", "radius": -1.0}, "levels": [2]}"#,
        ),
        (
            "solve",
            r#"{"domain": {"kind": "disk", "radius": 1.0}, "levels": [2], "problem": "robin"}"#,
        ),
        (
            "solve",
            r#"{"domain": {"kind": "disk", "radius": 1.0}, "levels": [8], "max_level": 6}"#,
        ),
        ("stability", r#"{"modes": [0]}"#),
        ("annulus-compare", r#"{"b": [0.5]}"#),
        ("closed-form", "not json"),
    ];
    for (experiment, config) in cases {
        let o = run_config(dir.path(), experiment, config, &[]);
        assert_eq!(o.status.code(), Some(2), "{experiment} {config}: {}", stderr(&o));
        assert!(stderr(&o).starts_with("error:"));
    }
    let o = run_config(
        dir.path(),
        "solve",
        r#"{"domain": {"kind": "disk", "radius": 1.0}, "levels": [7]}"#,
        &["--max-level", "5"],
    );
    assert_eq!(o.status.code(), Some(2));
    let o = lab(&["closed-form", "--config", "/nonexistent/c.json"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = lab(&["closed-form"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = lab(&["eval", "h b=2"], &[("TORSION_LAB_THREADS", "x")]);
    assert!(o.status.success());
    let o = run_config(dir.path(), "closed-form", r#"{"sides": [3, 4]}"#, &[]);
    assert_eq!(o.status.code(), Some(0));
    let path = dir.path().join("closed-form.json");
    let o = lab(
        &["closed-form", "--config", path.to_str().unwrap(), "--quiet"],
        &[("TORSION_LAB_THREADS", "many")],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stability_records_negative_second_variation() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        dir.path(),
        "stability",
        r#"{"modes": [1], "exponent": 2.0, "level": 4, "rel_tol": 0.05}"#,
        &["--solver", "direct"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/stability.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let estimate: f64 = row[5].parse().unwrap();
    assert!(estimate < 0.0);
    assert_eq!(row[9], "true");
}

#[test]
fn solve_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        dir.path(),
        "solve",
        r#"{"domain": {"kind": "regular_polygon", "sides": 5, "area": 2.0}, "levels": [2, 3], "dump": true}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    let file = fs::File::open(out.join("solution.txt")).unwrap();
    let dump = torsion_core::fem::read_solution(std::io::BufReader::new(file)).unwrap();
    assert_eq!(dump.mesh_path, "mesh.txt");
    let mesh = torsion_core::geometry::mesh_io::read_mesh(std::io::BufReader::new(
        fs::File::open(out.join("mesh.txt")).unwrap(),
    ))
    .unwrap();
    assert_eq!(mesh.num_vertices(), dump.u.len());
    assert!((dump.c + dump.lambda).abs() < 1e-15);
}
