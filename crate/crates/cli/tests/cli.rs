use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn circlot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_circlot")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn deltas() -> (TempDir, PathBuf, PathBuf) {
    let dir = TempDir::new().unwrap();
    let d0 = write(dir.path(), "delta0.csv", "1,0,0,0,0,0,0,0\n");
    let d3 = write(dir.path(), "delta3_of_8.csv", "0,0,0,1,0,0,0,0\n");
    (dir, d0, d3)
}

#[test]
fn self_distance_is_zero() {
    let (_dir, d0, _) = deltas();
    let o = circlot(&["dist", "--topology", "circular", "--cost", "power:1", s(&d0), s(&d0)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "0");
}

#[test]
fn dirac_distance_in_bins() {
    let (_dir, d0, d3) = deltas();
    let o = circlot(&["dist", "--topology", "circular", "--cost", "power:1", s(&d0), s(&d3)]);
    assert_eq!(stdout(&o), "3");
    let o = circlot(&["dist", "--topology", "linear", "--cost", "power:2", s(&d0), s(&d3)]);
    assert_eq!(stdout(&o), "3");
}

#[test]
fn units_and_json() {
    let (_dir, d0, d3) = deltas();
    for flags in [&["--normalize"][..], &["--units", "perimeter"][..]] {
        let mut args = vec!["dist", "--cost", "power:1", "--json", s(&d0), s(&d3)];
        args.extend_from_slice(flags);
        let o = circlot(&args);
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["distance"], 0.375);
        assert_eq!(v["units"], "perimeter");
        assert!(v["alpha_or_mu"].is_number());
    }
    let o = circlot(&["dist", "--topology", "linear", "--json", s(&d0), s(&d3)]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["alpha_or_mu"].is_null());
    assert_eq!(v["units"], "bins");
}

#[test]
fn perimeter_units_rescale_concave_parameters() {
    let (_dir, d0, d3) = deltas();
    // exp:2 in bins equals exp:0.25 in perimeter units for 8 bins
    let bins = circlot(&["oracle", "--cost", "exp:2", s(&d0), s(&d3)]);
    let perim = circlot(&["oracle", "--cost", "exp:0.25", "--units", "perimeter", s(&d0), s(&d3)]);
    let a: f64 = stdout(&bins).parse().unwrap();
    let b: f64 = stdout(&perim).parse().unwrap();
    assert!((a - b).abs() < 1e-12);
    assert!((a - (1.0 - (-1.5f64).exp())).abs() < 1e-12);
}

#[test]
fn points_input() {
    let dir = TempDir::new().unwrap();
    let f = write(dir.path(), "f.csv", "0.1,1\n");
    let g = write(dir.path(), "g.csv", "0.9,1\n");
    let o = circlot(&["dist", "--points", s(&f), s(&g)]);
    let d: f64 = stdout(&o).parse().unwrap();
    assert!((d - 0.2).abs() < 1e-12);
    let o = circlot(&["dist", "--points", "--units", "bins", s(&f), s(&g)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn emitted_map_and_plan() {
    let (dir, d0, d3) = deltas();
    let map = dir.path().join("map.csv");
    let o = circlot(&["dist", s(&d0), s(&d3), "--emit-map", s(&map)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&map).unwrap();
    assert_eq!(text, "source_quantile,source_pos,target_pos\n0,0,0.375\n");

    let plan = dir.path().join("plan.csv");
    let o = circlot(&["oracle", s(&d0), s(&d3), "--cost", "thresh:2", "--emit-plan", s(&plan)]);
    assert_eq!(stdout(&o), "2");
    let text = std::fs::read_to_string(&plan).unwrap();
    assert_eq!(text, "i,j,flow,cost_contrib\n0,3,1,2\n");
}

#[test]
fn exit_codes() {
    let (dir, d0, d3) = deltas();
    assert_eq!(circlot(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(circlot(&["dist", "--cost", "power:0.5", s(&d0), s(&d3)]).status.code(), Some(2));
    let missing = dir.path().join("missing.csv");
    assert_eq!(circlot(&["dist", s(&missing), s(&d3)]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.csv", "0.5,x\n");
    let o = circlot(&["dist", s(&bad), s(&d3)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());
    // a computation error: bin counts differ
    let short = write(dir.path(), "short.csv", "0.5,0.5\n");
    assert_eq!(circlot(&["dist", s(&short), s(&d3)]).status.code(), Some(1));
    // a concave cost has no transfer map
    let map = dir.path().join("m.csv");
    assert_eq!(circlot(&["dist", "--cost", "exp:1", s(&d0), s(&d3), "--emit-map", s(&map)]).status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let o = circlot(&["selftest", "--trials", "200", "--seed", "7"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let last = stdout(&o).lines().last().unwrap().to_string();
    assert!(last.starts_with("PASS: max deviation"), "{last}");
}

#[test]
fn bench_writes_csv_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("results");
    let args = [
        "bench", "--experiment", "weight", "--per-class", "8", "--samples", "200", "--bins", "30", "--seed", "5",
        "--distances", "l1,mk1,t2",
    ];
    let mut with_out = args.to_vec();
    with_out.extend(["--out", s(&out)]);
    let a = circlot(&with_out);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    for f in ["summary.csv", "pr_l1.csv", "pr_mk1.csv", "pr_t2.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let header = std::fs::read_to_string(out.join("pr_mk1.csv")).unwrap();
    assert!(header.starts_with("r,recall,precision\n"));
    let b = circlot(&args);
    let drop_time = |o: &Output| -> Vec<String> {
        stdout(o).lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
    };
    assert_eq!(drop_time(&a), drop_time(&b));
}

#[test]
fn hue_transfer_round_trip() {
    let dir = TempDir::new().unwrap();
    let src = circlot::ppm::RgbImage::from_fn(6, 4, |x, y| [200, (30 * x) as u8, (20 * y) as u8]).unwrap();
    let tgt = circlot::ppm::RgbImage::from_fn(4, 4, |x, _| [(40 * x) as u8, 60, 220]).unwrap();
    let (sp, tp, op) = (dir.path().join("s.ppm"), dir.path().join("t.ppm"), dir.path().join("o.ppm"));
    src.write(&sp).unwrap();
    tgt.write(&tp).unwrap();
    let o = circlot(&["transfer-hue", s(&sp), s(&tp), s(&op), "--bins", "36"]);
    assert!(o.status.success());
    let out = circlot::ppm::RgbImage::read(&op).unwrap();
    assert_eq!((out.width(), out.height()), (6, 4));
    let bad = write(dir.path(), "bad.ppm", "P5 1 1 255 0");
    assert_eq!(circlot(&["transfer-hue", s(&bad), s(&tp), s(&op)]).status.code(), Some(2));
}

#[test]
fn thread_cap_variable() {
    let (_dir, d0, d3) = deltas();
    let o = Command::new(env!("CARGO_BIN_EXE_circlot"))
        .args(["dist", s(&d0), s(&d3)])
        .env("CIRCLOT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(stdout(&o), "3");
    let o = Command::new(env!("CARGO_BIN_EXE_circlot"))
        .args(["dist", s(&d0), s(&d3)])
        .env("CIRCLOT_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
