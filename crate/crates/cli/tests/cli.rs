use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gremphase_core::{DistributionFn, FieldLaw, HierarchicalOverlap, Longitudinal, ModelSpec};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gremphase"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_spec(dir: &Path, name: &str, spec: &ModelSpec) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_vec_pretty(spec).unwrap()).unwrap();
    path
}

fn sk(h: f64, g: f64) -> ModelSpec {
    ModelSpec::new(
        DistributionFn::Sk,
        Longitudinal::Hierarchical {
            overlap: HierarchicalOverlap::MagneticEta { h },
        },
        FieldLaw::point(g),
    )
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn pressure_csv_grid_order_and_header() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(dir.path(), "rem.json", &ModelSpec::rem(0.0, 0.0));
    let o = run(&[
        "pressure",
        "--spec",
        spec.to_str().unwrap(),
        "--beta",
        "1:2:2",
        "--gamma",
        "0,40",
        "--h",
        "0.3",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "beta,gamma,h,phi,y_star,z_star,phase,m_x,m_z");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("1,0,0.3,"));
    assert!(lines[2].starts_with("1,40,0.3,"));
    assert!(lines[2].contains("quantum_paramagnet"));
    assert!(lines[3].starts_with("2,0,0.3,"));
}

#[test]
fn pressure_json_keeps_column_order() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(dir.path(), "sk.json", &sk(0.5, 0.5));
    let o = run(&[
        "pressure",
        "--spec",
        spec.to_str().unwrap(),
        "--beta",
        "1.5",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let row = v.as_array().unwrap()[0].as_object().unwrap();
    let keys: Vec<&str> = row.keys().map(String::as_str).collect();
    assert_eq!(
        keys,
        ["beta", "gamma", "h", "phi", "y_star", "z_star", "phase", "m_x", "m_z"]
    );
    assert!(row["phi"].as_f64().unwrap() > std::f64::consts::LN_2);
}

#[test]
fn sk_pressure_at_zero_field() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(dir.path(), "sk.json", &sk(0.0, 0.5));
    let o = run(&[
        "pressure",
        "--spec",
        spec.to_str().unwrap(),
        "--beta",
        "2",
        "--h",
        "0:1:3",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn output_file_matches_stdout_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(dir.path(), "sk.json", &sk(0.5, 0.8));
    let s = spec.to_str().unwrap();
    let out = dir.path().join("grid.csv");
    let args = [
        "pressure", "--spec", s, "--beta", "0.5:3:6", "--gamma", "0:2:4", "--h", "0:1:3",
    ];
    let a = run(&args);
    let b = bin()
        .args(args)
        .env("GREMPHASE_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", out.to_str().unwrap()]);
    assert_eq!(run(&with_out).status.code(), Some(0));
    assert_eq!(std::fs::read(&out).unwrap(), a.stdout);
}

#[test]
fn log_axes() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(dir.path(), "rem.json", &ModelSpec::rem(0.0, 0.0));
    let o = run(&[
        "pressure",
        "--spec",
        spec.to_str().unwrap(),
        "--beta",
        "0.1:10:3",
        "--log",
        "beta",
    ]);
    let text = stdout(&o);
    let betas: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(betas, ["0.1", "1", "10"]);
}

#[test]
fn critical_lines_and_fit() {
    let dir = TempDir::new().unwrap();
    let spec = write_spec(dir.path(), "sk.json", &sk(0.0, 0.0));
    let o = run(&[
        "critical",
        "--spec",
        spec.to_str().unwrap(),
        "--line",
        "atLine",
        "--h",
        "0.01:0.1:20",
        "--log",
        "h",
        "--fit",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    assert!(text.starts_with("line,kind,beta,h,value,shift\n"));
    let fit = text.lines().find(|l| l.contains(",fit,")).unwrap();
    let exponent: f64 = fit.split(',').nth(4).unwrap().parse().unwrap();
    assert!((exponent - 2.0).abs() < 0.1);

    let rem = write_spec(dir.path(), "rem.json", &ModelSpec::rem(0.0, 0.0));
    let o = run(&[
        "critical",
        "--spec",
        rem.to_str().unwrap(),
        "--line",
        "gammaRem",
        "--beta",
        "1e-4",
        "--h",
        "0,1,5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    for line in stdout(&o).lines().skip(1) {
        let v: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!((v - 1.0).abs() < 1e-3, "{line}");
    }
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"distribution":{"type":"step","points":[1.0],"increments":[0.9]},"longitudinal":{"mode":"iid","law":{"type":"point_mass","value":0.0}},"transversal":{"type":"point_mass","value":0.0}}"#,
    )
    .unwrap();
    let o = run(&["pressure", "--spec", bad.to_str().unwrap(), "--beta", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    let missing = dir.path().join("nope.json");
    assert_eq!(
        run(&[
            "pressure",
            "--spec",
            missing.to_str().unwrap(),
            "--beta",
            "1"
        ])
        .status
        .code(),
        Some(5)
    );

    let rem = write_spec(dir.path(), "rem.json", &ModelSpec::rem(0.0, 0.0));
    let r = rem.to_str().unwrap();
    assert_eq!(
        run(&["pressure", "--spec", r, "--beta", "1:2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&[
            "critical",
            "--spec",
            r,
            "--line",
            "gammaHier",
            "--beta",
            "1",
            "--h",
            "0.5"
        ])
        .status
        .code(),
        Some(3)
    );
    assert_eq!(run(&["bogus"]).status.code(), Some(2));

    let out_dir = dir.path().join("missing").join("x.csv");
    let o = run(&[
        "pressure",
        "--spec",
        r,
        "--beta",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(5));

    let o = bin()
        .args([
            "verify",
            "--spec",
            r,
            "--campaign",
            "classicalTrend",
            "--beta",
            "1",
            "--sizes",
            "12",
        ])
        .env("GREMPHASE_MAX_DIM", "16")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn verify_oracle_and_occupation() {
    let dir = TempDir::new().unwrap();
    let grem = ModelSpec::new(
        DistributionFn::Step {
            points: vec![0.4, 1.0],
            increments: vec![0.3, 0.7],
        },
        Longitudinal::Iid {
            law: FieldLaw::point(0.5),
        },
        FieldLaw::zero(),
    );
    let g = write_spec(dir.path(), "grem.json", &grem);
    let o = run(&[
        "verify",
        "--spec",
        g.to_str().unwrap(),
        "--campaign",
        "oracleEquiv",
        "--beta",
        "0.7,1.3,2.5",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    assert!(text
        .starts_with("campaign,kind,n,seed,beta,value,std_error,reference,abs_delta,count,pass\n"));
    assert!(text.lines().last().unwrap().ends_with(",true"));

    let rem = write_spec(dir.path(), "rem.json", &ModelSpec::rem(1.0, 0.0));
    let r = rem.to_str().unwrap();
    let base = [
        "verify",
        "--spec",
        r,
        "--campaign",
        "occupation",
        "--sizes",
        "16",
        "--seeds",
        "2",
    ];
    let mut outside = base.to_vec();
    outside.extend(["--energy", "1.5", "--depth", "0.5"]);
    let o = run(&outside);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("infeasible"));
    let mut no_point = base.to_vec();
    no_point.extend(["--energy", "0.1"]);
    assert_eq!(run(&no_point).status.code(), Some(2));
}

#[test]
fn verify_trend_failure_exits_one() {
    let dir = TempDir::new().unwrap();
    let rem = write_spec(dir.path(), "rem.json", &ModelSpec::rem(0.3, 0.0));
    let r = rem.to_str().unwrap();
    // N = 2 and 4 at low temperature are far from the limit
    let o = run(&[
        "verify",
        "--spec",
        r,
        "--campaign",
        "classicalTrend",
        "--beta",
        "3",
        "--sizes",
        "2,4",
        "--seeds",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.lines().last().unwrap().contains(",verdict,"));
    assert!(text.lines().last().unwrap().ends_with(",false"));
}
