use std::path::Path;
use std::process::Command;

use heiswhit_cli::{
    curve_from_rows, emit_plot_data, parse_input, run, write_json_input, CliError, InputFormat, Mode, RunConfig,
    SampleRow,
};
use heiswhit_core::profile::ProfilePoint;
use heiswhit_core::Profile;
use proptest::prelude::*;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_heiswhit"));
    for (k, _) in std::env::vars() {
        if k.starts_with("HEISWHIT_") {
            c.env_remove(k);
        }
    }
    c
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn csv_of(rows: impl Iterator<Item = [f64; 4]>) -> String {
    let mut s = String::from("t,x,y,z\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r[0], r[1], r[2], r[3]));
    }
    s
}

/// f = t, g = t^2, h = int 2(f'g - fg') = -2t^3/3.
fn horizontal_cubic(n: usize) -> String {
    csv_of((0..n).map(|i| {
        let t = i as f64 / (n - 1) as f64;
        [t, t, t * t, -2.0 * t.powi(3) / 3.0]
    }))
}

fn profile(points: &[(f64, f64)]) -> Profile {
    Profile { points: points.iter().map(|&(delta, value)| ProfilePoint { delta, value }).collect() }
}

#[test]
fn two_row_csv_parses() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "a.csv", "t,x,y,z\n0,0,0,0\n1,1,0,0");
    let input = parse_input(&p, InputFormat::Csv).unwrap();
    assert_eq!(input.curve.nodes(), &[0.0, 1.0]);
    assert_eq!(input.curve.values()[1].x, 1.0);
}

#[test]
fn rows_are_sorted_and_repeats_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "a.csv", "t,x,y,z\r\n2,1,1,1\r\n0,0,0,0\r\n1,5,5,5\r\n");
    let input = parse_input(&p, InputFormat::Csv).unwrap();
    assert_eq!(input.curve.nodes(), &[0.0, 1.0, 2.0]);
    assert_eq!(input.curve.values()[1].x, 5.0);

    let p = write(dir.path(), "b.csv", "t,x,y,z\n0,0,0,0\n1,1,0,0\n0,2,0,0\n");
    assert!(matches!(parse_input(&p, InputFormat::Csv), Err(CliError::DuplicateNode(t)) if t == 0.0));
}

#[test]
fn malformed_and_non_finite_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "a.csv", "t,x,y,z\n0,0,0,0\n1,abc,0,0\n");
    assert!(matches!(parse_input(&p, InputFormat::Csv), Err(CliError::Parse { .. })));
    let p = write(dir.path(), "b.csv", "t,x,y\n0,0,0\n");
    assert!(matches!(parse_input(&p, InputFormat::Csv), Err(CliError::Parse { .. })));
    let p = write(dir.path(), "c.csv", "t,x,y,z\n0,0,0,0\n1,NaN,0,0\n");
    assert!(matches!(parse_input(&p, InputFormat::Csv), Err(CliError::NonFinite(1))));
    let p = write(dir.path(), "d.json", r#"{"samples":[{"t":0,"x":0,"y":0}]}"#);
    assert!(matches!(parse_input(&p, InputFormat::Json), Err(CliError::Parse { .. })));
}

#[test]
fn single_json_sample_is_too_few_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "a.json", r#"{"m":1,"samples":[{"t":0,"x":0,"y":0,"z":0}]}"#);
    let err = run(&RunConfig::new(Mode::CheckCm, p.clone())).unwrap_err();
    assert!(matches!(err, CliError::Core(heiswhit_core::Error::TooFewNodes { .. })), "{err}");
    let out = bin().args(["--mode", "check-cm", "--input"]).arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("too few nodes"));
}

proptest! {
    #[test]
    fn json_round_trip_is_bit_exact(
        raw in prop::collection::vec((-1e6..1e6_f64, -1e3..1e3_f64, -1e-3..1e-3_f64, any::<i32>()), 2..20),
        m in prop::option::of(1usize..5),
    ) {
        let rows: Vec<SampleRow> = raw
            .iter()
            .enumerate()
            .map(|(i, &(x, y, z, k))| SampleRow { t: i as f64 + 1.0 / 3.0, x, y, z: z * k as f64 })
            .collect();
        let curve = curve_from_rows(rows).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        write_json_input(&curve, m, &p).unwrap();
        let back = parse_input(&p, InputFormat::Json).unwrap();
        prop_assert_eq!(back.m, m);
        for (a, b) in back.curve.values().iter().zip(curve.values()) {
            prop_assert_eq!([a.x.to_bits(), a.y.to_bits(), a.z.to_bits()], [b.x.to_bits(), b.y.to_bits(), b.z.to_bits()]);
        }
        for (a, b) in back.curve.nodes().iter().zip(curve.nodes()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn plot_data_layout() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("one.csv");
    emit_plot_data(&[("s".into(), profile(&[(1.0, 0.5)]))], &p).unwrap();
    assert_eq!(std::fs::read_to_string(&p).unwrap(), "delta,value,series\n1,0.5,s\n");

    let p = dir.path().join("two.csv");
    let b = profile(&[(0.25, 3.0), (1.0, 1.0), (0.5, 2.0)]);
    let a = profile(&[(0.5, 4.0), (2.0, 5.0)]);
    emit_plot_data(&[("b".into(), b), ("a".into(), a)], &p).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows, ["delta,value,series", "2,5,a", "0.5,4,a", "1,1,b", "0.5,2,b", "0.25,3,b"]);

    let p = dir.path().join("none.csv");
    assert!(matches!(emit_plot_data(&[], &p), Err(CliError::EmptyPlot)));
    assert!(matches!(emit_plot_data(&[("e".into(), Profile::default())], &p), Err(CliError::EmptyPlot)));
    assert!(!p.exists());
}

#[test]
fn config_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "a.csv", &horizontal_cubic(12));
    let mut cfg = RunConfig::new(Mode::Synthesize, input.clone());
    cfg.grid_samples = 1;
    assert!(matches!(run(&cfg), Err(CliError::Config(_))));
    let mut cfg = RunConfig::new(Mode::Finiteness, input.clone());
    cfg.m = Some(2);
    cfg.window = Some(3);
    assert!(matches!(run(&cfg), Err(CliError::Config(_))));
    cfg.window = Some(4);
    cfg.report = Some(dir.path().join("r.json"));
    run(&cfg).unwrap();
    let mut cfg = RunConfig::new(Mode::CheckCm, input);
    cfg.m = Some(0);
    assert!(matches!(run(&cfg), Err(CliError::Config(_))));
}

#[test]
fn json_order_is_used_unless_flag_given() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<String> = (0..12)
        .map(|i| {
            let t = i as f64 / 11.0;
            format!(r#"{{"t":{t},"x":{t},"y":{},"z":{}}}"#, t * t, -2.0 * t.powi(3) / 3.0)
        })
        .collect();
    let p = write(dir.path(), "a.json", &format!(r#"{{"m":2,"samples":[{}]}}"#, rows.join(",")));
    let mut cfg = RunConfig::new(Mode::CheckCm, p);
    cfg.report = Some(dir.path().join("r.json"));
    assert_eq!(run(&cfg).unwrap().m, 2);
    cfg.m = Some(1);
    assert_eq!(run(&cfg).unwrap().m, 1);
}

#[test]
fn vertical_line_is_inconsistent() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "v.csv", &csv_of((0..33).map(|i| {
        let t = i as f64 / 32.0;
        [t, t, 0.0, t]
    })));
    let report = dir.path().join("r.json");
    let status = bin().args(["--mode", "check-c1", "--input"]).arg(&input).arg("--report").arg(&report).status().unwrap();
    assert_eq!(status.code(), Some(1));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["status"], "inconsistent");
    let z = json["profiles"].as_array().unwrap().iter().find(|p| p["name"] == "pansu_z").unwrap();
    let pts = z["points"].as_array().unwrap();
    let (first, last) = (&pts[0], &pts[pts.len() - 1]);
    // Finer scales, larger z quotients.
    assert!(last[0].as_f64().unwrap() < first[0].as_f64().unwrap());
    assert!(last[1].as_f64().unwrap() > 4.0 * first[1].as_f64().unwrap());
}

#[test]
fn synthesize_writes_horizontal_grid() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "h.csv", &horizontal_cubic(12));
    let (report, grid) = (dir.path().join("r.json"), dir.path().join("g.csv"));
    let status = bin()
        .args(["--mode", "synthesize", "--m", "2", "--grid-samples", "257", "--input"])
        .arg(&input)
        .arg("--report")
        .arg(&report)
        .arg("--grid-out")
        .arg(&grid)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let mut reader = csv::Reader::from_path(&grid).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), ["t", "x", "y", "z", "defect"]);
    let rows: Vec<Vec<f64>> =
        reader.records().map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 257);
    for r in &rows {
        assert!(r[4] <= 1e-9, "defect {} at t = {}", r[4], r[0]);
        assert!((r[3] + 2.0 * r[0].powi(3) / 3.0).abs() <= 1e-8);
    }
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["status"], "success");
    assert!(json["constants"]["defect"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn missing_input_exits_3() {
    let out = bin().args(["--mode", "check-cm", "--input", "/nonexistent/in.csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn flags_can_come_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "h.csv", &horizontal_cubic(12));
    let report = dir.path().join("r.json");
    let status = bin()
        .env("HEISWHIT_MODE", "finiteness")
        .env("HEISWHIT_INPUT", &input)
        .env("HEISWHIT_REPORT", &report)
        .env("HEISWHIT_OMEGA", "power:2:0.5")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["mode"], "finiteness");
    assert!(json["constants"]["m_hat"].as_f64().unwrap().is_finite());
    let bad = bin().env("HEISWHIT_MODE", "finiteness").env("HEISWHIT_INPUT", &input).env("HEISWHIT_OMEGA", "power:1:2").output().unwrap();
    assert_ne!(bad.status.code(), Some(0));
}

fn without_times(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("wall_times");
    v
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "c.csv", &csv_of((0..40).map(|i| {
        let t = i as f64 * 0.15;
        [t, t.cos(), t.sin(), -2.0 * t]
    })));
    for mode in [Mode::CheckC1, Mode::CheckCm, Mode::CheckCmW, Mode::Synthesize, Mode::Finiteness] {
        let mut texts = Vec::new();
        for k in 0..2 {
            let mut cfg = RunConfig::new(mode, input.clone());
            cfg.m = Some(2);
            cfg.report = Some(dir.path().join(format!("r{k}.json")));
            let report = run(&cfg).unwrap();
            if matches!(mode, Mode::CheckC1 | Mode::CheckCm | Mode::CheckCmW) {
                assert_eq!(report.status, "consistent", "{mode:?}");
            }
            texts.push(without_times(cfg.report.as_ref().unwrap()));
        }
        assert_eq!(texts[0], texts[1], "{mode:?}");
    }
}

#[test]
fn plot_out_covers_every_profile() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "h.csv", &horizontal_cubic(20));
    let mut cfg = RunConfig::new(Mode::CheckCm, input);
    cfg.report = Some(dir.path().join("r.json"));
    cfg.plot_out = Some(dir.path().join("p.csv"));
    let report = run(&cfg).unwrap();
    let text = std::fs::read_to_string(cfg.plot_out.as_ref().unwrap()).unwrap();
    let expected: usize = report.profiles.iter().map(|p| p.points.len()).sum();
    assert_eq!(text.lines().count(), expected + 1);
}
