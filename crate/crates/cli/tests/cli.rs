use std::f64::consts::PI;
use std::path::Path;
use std::process::Command as Process;

use coamoeba_cli::{render, run, Command, FigureInputs, FigureSpec, Flags, Layer, RunConfig};
use coamoeba_core::raster::TorusRaster;
use serde_json::Value;

fn config(poly: &str, out: &Path) -> RunConfig {
    RunConfig { polynomial: Some(poly.into()), out: out.to_path_buf(), ..RunConfig::default() }
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn binary(args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_coamoeba")).args(args).output().unwrap()
}

#[test]
fn area_of_line_is_pi_squared() {
    let dir = tempfile::tempdir().unwrap();
    run(Command::Area, &config("1 + z + w", dir.path())).unwrap();
    let r = &report(dir.path())["result"];
    let area = r["area_mult"].as_f64().unwrap();
    assert!((area - PI * PI).abs() <= 0.01 * PI * PI, "{area}");
    assert!((r["ratio"].as_f64().unwrap() - 1.0).abs() < 0.01);
}

#[test]
fn newton_of_square() {
    let dir = tempfile::tempdir().unwrap();
    run(Command::Newton, &config("1 + z + w + z*w", dir.path())).unwrap();
    let r = &report(dir.path())["result"];
    assert_eq!(r["area"].as_f64(), Some(1.0));
    assert_eq!(r["vertices"], serde_json::json!([[0, 0], [1, 0], [1, 1], [0, 1]]));
}

#[test]
fn line_with_rotated_coefficient_is_maximal() {
    // e^{iπ/3} z is z rotated on the torus, so the curve is a real line
    let dir = tempfile::tempdir().unwrap();
    run(Command::Harnack, &config("1 + e^(i*pi/3)*z + w", dir.path())).unwrap();
    let r = &report(dir.path())["result"];
    assert_eq!(r["verdict"], "MAXIMAL_HARNACK");
    assert_eq!(r["real_torus_phase"]["phi_pi"], serde_json::json!([0.333333, 0.0]));
}

#[test]
fn nonreal_quadric_is_not_maximal() {
    let dir = tempfile::tempdir().unwrap();
    run(Command::Harnack, &config("1 + e^(i*pi/3)*z + w + e^(i*pi/7)*z*w", dir.path())).unwrap();
    let r = &report(dir.path())["result"];
    assert_eq!(r["verdict"], "NOT_MAXIMAL");
    assert!(r["ratio"].as_f64().unwrap() <= 0.98);
}

#[test]
fn line_figure_has_two_regions_and_three_dashed_lines() {
    let dir = tempfile::tempdir().unwrap();
    run(Command::Codual, &config("1 + z + w", dir.path())).unwrap();
    let svg = std::fs::read_to_string(dir.path().join("figure.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="region""#).count(), 2);
    assert_eq!(svg.matches(r#"class="codual""#).count(), 3);
    assert_eq!(svg.matches("stroke-dasharray").count(), 3);
    let lines = &report(dir.path())["result"]["lines"];
    let offsets: Vec<f64> = lines.as_array().unwrap().iter().map(|l| l["offset_pi"].as_f64().unwrap()).collect();
    assert_eq!(offsets, vec![1.0, 1.0, 1.0]);
}

#[test]
fn empty_raster_renders_axes_only() {
    let raster = TorusRaster::empty(32);
    let fig = FigureSpec::with_layers([Layer::Coamoeba, Layer::Critical]);
    let svg = render(&fig, &FigureInputs { raster: Some(&raster), ..Default::default() }).unwrap();
    assert!(svg.starts_with("<?xml"));
    assert_eq!(svg.matches("<svg").count(), 1);
    assert!(svg.trim_end().ends_with("</svg>"));
    assert!(!svg.contains("<path"));
    for label in ["π/2", "π", "3π/2", "2π"] {
        assert!(svg.contains(&format!(">{label}<")));
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = config("1 + z + w + i*z*w", a.path());
    cfg.nx = 120;
    cfg.ntheta = 120;
    cfg.resolution = 256;
    cfg.seed = 3;
    run(Command::Report, &cfg).unwrap();
    cfg.out = b.path().to_path_buf();
    run(Command::Report, &cfg).unwrap();
    for name in ["report.json", "figure.svg", "coamoeba.png", "coamoeba.pgm"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
    let mut names: Vec<String> =
        std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, vec!["coamoeba.pgm", "coamoeba.png", "figure.svg", "report.json"]);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "polynomial = \"1 + z + w\"\nresolution = 64\nseed = 4\n[tolerances]\nline_tol = 3.0\n")
        .unwrap();
    let flags = Flags {
        config: Some(path.clone()),
        resolution: Some(128),
        theta: Some("0.5pi,1.5pi".into()),
        ..Flags::default()
    };
    let cfg = flags.resolve().unwrap();
    assert_eq!(cfg.polynomial.as_deref(), Some("1 + z + w"));
    assert_eq!(cfg.resolution, 128);
    assert_eq!(cfg.seed, 4);
    assert_eq!(cfg.tolerances.line_tol, 3.0);
    assert_eq!(cfg.theta, Some([0.5 * PI, 1.5 * PI]));
    let json = dir.path().join("run.json");
    std::fs::write(&json, r#"{"polynomial": "1 + z", "nx": 1}"#).unwrap();
    assert!(Flags { config: Some(json), ..Flags::default() }.resolve().is_err());
}

#[test]
fn coamoeba_query_counts_fiber() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("1 + z + w", dir.path());
    cfg.theta = Some([0.5 * PI, 1.25 * PI]);
    run(Command::Coamoeba, &cfg).unwrap();
    let r = &report(dir.path())["result"]["theta"];
    assert_eq!(r["arg_fiber_count"], 1);
    assert_eq!(r["theta_pi"], serde_json::json!([0.5, 1.25]));
    let outside = &report(dir.path());
    assert!(outside["artifacts"].as_array().unwrap().iter().any(|a| a == "coamoeba.png"));
}

fn stderr_error(out: &std::process::Output) -> Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    let v: Value = serde_json::from_str(text.trim()).unwrap_or_else(|_| panic!("not JSON: {text}"));
    v["error"].clone()
}

#[test]
fn syntax_error_is_usage_error() {
    let out = binary(&["area", "--poly", "1 + z +"]);
    assert_eq!(out.status.code(), Some(1));
    let e = stderr_error(&out);
    assert_eq!(e["kind"], "syntax");
    assert_eq!(e["exit_code"], 1);
}

#[test]
fn domain_error_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = binary(&["harnack", "--poly", "z - w", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["kind"], "degenerate_newton_polygon");
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn bad_flags_are_json_usage_errors() {
    for args in [
        vec!["bogus"],
        vec!["area"],
        vec!["area", "--poly", "1+z+w", "--layers", "coamoeba,nope"],
        vec!["area", "--poly", "1+z+w", "--resolution", "1"],
        vec!["area", "--poly", "1+z+w", "--theta", "1"],
    ] {
        let out = binary(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert_eq!(stderr_error(&out)["exit_code"], 1);
    }
}

#[test]
fn binary_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        binary(&["sample", "--poly", "1+z+w", "--nx", "40", "--ntheta", "40", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("cloud.csv")).unwrap();
    assert!(csv.starts_with("x1,theta1,x2,theta2,re_m,im_m,critical_flag\n"));
    assert!(csv.lines().count() > 40 * 40);
    let r = report(dir.path());
    assert_eq!(r["command"], "sample");
    let values = r["result"]["critical_values_pi"].as_array().unwrap();
    for v in values {
        for c in v.as_array().unwrap() {
            let c = c.as_f64().unwrap();
            assert!(c.abs() < 1e-5 || (c - 1.0).abs() < 1e-5, "{c}");
        }
    }
}
