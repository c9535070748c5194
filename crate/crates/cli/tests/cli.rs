use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use usc_laser::harmonic::pump_grid;
use usc_laser::sweep::hysteresis;
use usc_laser::*;
use usc_laser_cli::commands::{map_svg, sweep_svg};
use usc_laser_cli::config::{parse_config, to_json, Format, RunConfig};
use usc_laser_cli::output::*;
use usc_laser_cli::CliError;

fn sha(s: &str) -> String {
    Sha256::digest(s.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn bin(args: &[&str], dir: &Path, threads: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_usc-laser"));
    c.args(args).current_dir(dir);
    match threads {
        Some(t) => c.env("USC_LASER_THREADS", t),
        None => c.env_remove("USC_LASER_THREADS"),
    };
    c.output().unwrap()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn stderr_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

// ---- config ----

#[test]
fn minimal_config_takes_reference_defaults() {
    let cfg = parse_config(r#"{"gauge":"coulomb"}"#).unwrap();
    let r = SystemParams::reference();
    assert_eq!(cfg.system(0.0), r.with_pump(0.0));
    assert_eq!(cfg.gauge, Gauge::Coulomb);
    assert_eq!(cfg, parse_config("{}").unwrap());
    assert_eq!(cfg, RunConfig::default().normalize().unwrap());
    assert_eq!(cfg.output.formats, vec![Format::Csv, Format::Json, Format::Svg]);
}

#[test]
fn unknown_gauge_is_a_parse_error_at_gauge() {
    let e = parse_config(r#"{"gauge":"weyl"}"#).unwrap_err();
    match &e {
        CliError::Parse { key, line, .. } => {
            assert_eq!(key, "gauge");
            assert_eq!(*line, 1);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(e.exit_code(), 1);
    assert_eq!(e.to_json()["error"]["key"], "gauge");
}

#[test]
fn unknown_keys_rejected_everywhere() {
    for (text, key) in [
        (r#"{"colour":1}"#, "colour"),
        (r#"{"params":{"wc":1.0,"g":0.1}}"#, "params.g"),
        (r#"{"task":{"sweep":{"points":3}}}"#, "task.sweep.points"),
        (r#"{"task":{"map":{"axis1":{"param":"wc","min":0.1,"max":1,"points":3,"log":true}}}}"#, "task.map.axis1.log"),
        (r#"{"task":{"solver":{"tol":1}}}"#, "task.solver.tol"),
    ] {
        match parse_config(text).unwrap_err() {
            CliError::Parse { key: k, .. } => assert_eq!(k, key, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn invalid_values_are_config_errors() {
    for text in [
        r#"{"params":{"kappa":-1}}"#,
        r#"{"params":{"g_tilde":0.1,"wa":0}}"#,
        r#"{"task":{"sweep":{"pump_min":0.3,"pump_max":0.1}}}"#,
        r#"{"task":{"map":{"axis2":{"param":"kappa","min":0.1,"max":1,"points":3}}}}"#,
        r#"{"output":{"formats":[]}}"#,
        r#"{"output":{"formats":["png"]}}"#,
        "{",
    ] {
        let e = parse_config(text).unwrap_err();
        assert_eq!(e.exit_code(), 1, "{text}: {e}");
    }
}

#[test]
fn serialize_parse_is_normal_form() {
    for text in [
        "{}",
        r#"{"gauge":"dipole","params":{"wc":0.25}}"#,
        r#"{"params":{"wa":2,"wc":0.5,"kappa":0.02,"gamma_down":0.1,"gamma_phi":0.2}}"#,
        r#"{"task":{"map":{"kind":"coupling_loss","pump_points":21}},"output":{"formats":["svg","csv","svg"]}}"#,
        r#"{"task":{"integrate":{"z_pump":0.3,"dt":0.05,"omega_frame":1.1}}}"#,
    ] {
        let once = parse_config(text).unwrap();
        let json = to_json(&once);
        let twice = parse_config(&json).unwrap();
        assert_eq!(once, twice, "{text}");
        assert_eq!(json, to_json(&twice));
    }
    // wa = 2 normalizes to wa = 1 units
    let c = parse_config(r#"{"params":{"wa":2,"wc":0.5,"kappa":0.02,"gamma_down":0.1,"gamma_phi":0.2}}"#).unwrap();
    assert_eq!((c.params.wa, c.params.wc, c.params.kappa), (1.0, 0.25, 0.01));
    let c = parse_config(r#"{"output":{"formats":["svg","csv","svg"]}}"#).unwrap();
    assert_eq!(c.output.formats, vec![Format::Csv, Format::Svg]);
}

// ---- records ----

#[test]
fn csv_headers_are_pinned() {
    assert_eq!(sha(&SWEEP_COLUMNS.join(",")), "8484d2a81e04d919adbae024a3274f1d930f3ca0e9949ca92b17512f60b8a7d4");
    assert_eq!(sha(&MAP_COLUMNS.join(",")), "3f2baa209f9e243dc5572c2d420e4264814af9286f8af3129a3aa035d941e64c");
    assert_eq!(sha(&TRAJECTORY_COLUMNS.join(",")), "6c484bcb5f93c8548887cc545454bd39d19e0818c0ea8ad4d5c2f18e7203f8c6");
}

fn sweep_record(wc: f64, grid: &[f64]) -> (ResultRecord, usc_laser::sweep::Hysteresis) {
    let cfg = parse_config(&format!(r#"{{"params":{{"wc":{wc}}}}}"#)).unwrap();
    let p = cfg.system(0.0);
    let h = hysteresis(&p, Gauge::Coulomb, grid, &cfg.task.solver, 1e-3).unwrap();
    let z_th = linearized_threshold(&p, Gauge::Coulomb).ok().map(|t| t.z_th);
    let rec = ResultRecord {
        provenance: Provenance::new(&cfg.params, cfg.gauge, &cfg.task.solver),
        result: sweep_body(&h, z_th),
    };
    (rec, h)
}

#[test]
fn sweep_csv_rows() {
    let z_th = 0.015593848435103764;
    let grid = vec![0.0, 0.01, z_th * 1.01, 0.05];
    let (rec, _) = sweep_record(1.0, &grid);
    let csv = rec.to_csv().unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# usc-laser ") && lines[0].contains("wa = 1"));
    assert_eq!(lines[1], SWEEP_COLUMNS.join(","));
    assert_eq!(lines.len(), 2 + 2 * grid.len());
    let col = |row: &str, name: &str| -> String {
        let k = SWEEP_COLUMNS.iter().position(|c| *c == name).unwrap();
        row.split(',').nth(k).unwrap().to_string()
    };
    // trivial row
    let r = lines[3];
    assert_eq!(col(r, "direction"), "up");
    assert_eq!(col(r, "abs_a1_sq").parse::<f64>().unwrap(), 0.0);
    assert_eq!(col(r, "z0").parse::<f64>().unwrap(), 0.01);
    // onset just above threshold lases
    let r = lines[4];
    assert!(col(r, "abs_a1_sq").parse::<f64>().unwrap() > 0.0);
    assert_eq!(col(r, "converged"), "true");
    // 17 significant digits, exact round trip
    let omega = col(r, "omega");
    let mantissa = omega.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{omega}");
    let ResultBody::Sweep { rows, .. } = &rec.result else { panic!() };
    assert_eq!(omega.parse::<f64>().unwrap(), rows[2].omega);
    // down rows follow in sweep order
    assert_eq!(col(lines[2 + grid.len()], "direction"), "down");
    assert_eq!(col(lines[2 + grid.len()], "z_pump").parse::<f64>().unwrap(), 0.05);
}

#[test]
fn records_round_trip_through_json() {
    let (rec, _) = sweep_record(0.25, &pump_grid(0.0, 0.5, 41));
    assert_eq!(ResultRecord::from_json(&rec.to_json()).unwrap(), rec);
    assert_eq!(rec.provenance.params_hash.len(), 64);
    assert_eq!(rec.provenance.version, env!("CARGO_PKG_VERSION"));

    let cfg = parse_config(
        r#"{"task":{"map":{"axis1":{"param":"wc","min":0.2,"max":1.0,"points":3},
            "axis2":{"param":"z_pump","min":0.0,"max":0.5,"points":11}}}}"#,
    )
    .unwrap();
    let m = run_map(&cfg.map_spec()).unwrap();
    let rec = ResultRecord {
        provenance: Provenance::new(&cfg.params, cfg.gauge, &cfg.task.solver),
        result: ResultBody::Map {
            map: cfg.task.map.kind,
            task: m.spec.task,
            axis1: m.spec.axis1.clone(),
            axis2: m.spec.axis2.clone(),
            rows: m.rows,
            cols: m.cols,
            bistable_rows: m.bistable_rows(),
            cells: m.cells.iter().map(MapRow::from_cell).collect(),
        },
    };
    assert_eq!(ResultRecord::from_json(&rec.to_json()).unwrap(), rec);
    let csv = rec.to_csv().unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), MAP_COLUMNS.join(","));
    assert_eq!(csv.lines().count(), 2 + 33);
}

#[test]
fn params_hash_tracks_parameters() {
    let a = parse_config("{}").unwrap();
    let b = parse_config(r#"{"params":{"wc":0.25}}"#).unwrap();
    assert_ne!(params_hash(&a.params), params_hash(&b.params));
    // same physics in other units, same hash
    let c = parse_config(r#"{"params":{"wa":2,"wc":2,"kappa":0.02,"gamma_down":0.1,"gamma_phi":0.2}}"#).unwrap();
    assert_eq!(params_hash(&a.params), params_hash(&c.params));
}

// ---- figures ----

fn branch_polylines(svg: &str, panel: &str) -> usize {
    let start = svg.find(&format!(r#"<g id="{panel}">"#)).unwrap();
    let end = start + svg[start..].find("</g>").unwrap();
    svg[start..end].matches(r#"<polyline class="branch"#).count()
}

#[test]
fn sweep_svg_has_two_branches_only_when_bistable() {
    let grid = pump_grid(0.0, 0.5, 101);
    let (rec, h) = sweep_record(0.25, &grid);
    assert!(matches!(rec.result, ResultBody::Sweep { bistable: true, .. }));
    let svg = sweep_svg(&h.up.points, &h.down.points, h.raw.bistable, 0.25, Gauge::Coulomb);
    for panel in ["intensity", "z0", "z2", "frequency"] {
        assert_eq!(branch_polylines(&svg, panel), 2, "{panel}");
    }
    assert!(svg.contains("marker-end"));

    let (rec, h) = sweep_record(1.0, &grid);
    assert!(matches!(rec.result, ResultBody::Sweep { bistable: false, .. }));
    let svg1 = sweep_svg(&h.up.points, &h.down.points, h.raw.bistable, 1.0, Gauge::Coulomb);
    for panel in ["intensity", "z0", "z2", "frequency"] {
        assert_eq!(branch_polylines(&svg1, panel), 1, "{panel}");
    }
    assert_eq!(svg1, sweep_svg(&h.up.points, &h.down.points, h.raw.bistable, 1.0, Gauge::Coulomb));
}

#[test]
fn heatmap_overlays_threshold_contour() {
    let cfg = parse_config(
        r#"{"task":{"map":{"axis1":{"param":"wc","min":0.1,"max":1.0,"points":10},
            "axis2":{"param":"z_pump","min":0.0,"max":0.5,"points":51}}}}"#,
    )
    .unwrap();
    let m = run_map(&cfg.map_spec()).unwrap();
    let svg = map_svg(&m);
    let line = svg.lines().find(|l| l.starts_with(r#"<polyline class="threshold""#)).expect("contour");
    let pts = line.split(r#"points=""#).nth(1).unwrap().split('"').next().unwrap();
    assert_eq!(pts.split(' ').count(), 10);
    assert!(line.contains(r#"stroke-width="2.5""#));
    assert!(svg.contains("log10 |a1|^2"));
    assert_eq!(svg, map_svg(&m));
}

// ---- binary ----

#[test]
fn threshold_prints_json_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["threshold", "--out", "o"], dir.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    let z = v["result"]["z_th"].as_f64().unwrap();
    assert!((z / 1.56e-2 - 1.0).abs() < 0.01, "{z}");
    assert!(v["result"]["linearized"]["dipole"]["z_th"].is_number());
    let rec = ResultRecord::from_json(&std::fs::read_to_string(dir.path().join("o/threshold.json")).unwrap()).unwrap();
    assert!(matches!(rec.result, ResultBody::Threshold { .. }));
}

#[test]
fn config_errors_exit_one_with_json() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"gauge":"weyl"}"#).unwrap();
    let o = bin(&["threshold", "--config", "bad.json"], dir.path(), None);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr_json(&o);
    assert_eq!(e["error"]["kind"], "parse_error");
    assert_eq!(e["error"]["key"], "gauge");

    let o = bin(&["threshold", "--config", "missing.json"], dir.path(), None);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["kind"], "config_io");

    let o = bin(&["bogus"], dir.path(), None);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["kind"], "usage");

    let o = bin(&["threshold", "--out", "o"], dir.path(), Some("zero"));
    assert_eq!(o.status.code(), Some(1));

    let o = bin(&["--help"], dir.path(), None);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn solver_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // a step far beyond the stability limit of RK4 blows up
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"task":{"integrate":{"z_pump":0.3,"dt":50.0,"t_end":1e5}}}"#,
    )
    .unwrap();
    let o = bin(&["integrate", "--config", "c.json", "--out", "o"], dir.path(), None);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stderr_json(&o)["error"]["kind"], "solver_failure");
}

#[test]
fn integrate_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"task":{"integrate":{"t_end":200,"sample_interval":10}}}"#).unwrap();
    let o = bin(&["integrate", "--config", "c.json", "--out", "o", "--format", "csv,svg"], dir.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/integrate.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), TRAJECTORY_COLUMNS.join(","));
    assert_eq!(csv.lines().count(), 2 + 21);
    assert!(dir.path().join("o/integrate.svg").exists());
    assert!(!dir.path().join("o/integrate.json").exists());
}

#[test]
fn sweep_artifacts_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"params":{"wc":0.25}}"#).unwrap();
    let a = bin(&["sweep", "--config", "c.json", "--out", "a"], dir.path(), Some("1"));
    let b = bin(&["sweep", "--config", "c.json", "--out", "b"], dir.path(), Some("3"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    for f in ["sweep.csv", "sweep.json", "sweep.svg"] {
        let x = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
    let csv = std::fs::read_to_string(dir.path().join("a/sweep.csv")).unwrap();
    // distinct up/down intensities inside the window
    let k = SWEEP_COLUMNS.iter().position(|c| *c == "abs_a1_sq").unwrap();
    let at = |dir: &str, z: f64| -> f64 {
        csv.lines()
            .skip(2)
            .map(|l| l.split(',').collect::<Vec<_>>())
            .find(|f| f[1] == dir && (f[0].parse::<f64>().unwrap() - z).abs() < 1e-12)
            .unwrap()[k]
            .parse()
            .unwrap()
    };
    assert!(at("down", 0.25) > 2.0 * at("up", 0.25));
}

#[test]
fn verify_on_shipped_roots_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"task":{"verify":{"fuzz_cases":20}}}"#).unwrap();
    let o = bin(&["verify", "--config", "c.json", "--out", "o"], dir.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["result"]["pass"], true);
    assert!(v["result"]["golden"].as_array().unwrap().len() >= 8);
}

#[test]
fn verify_rejects_a_corrupted_root() {
    let dir = tempfile::tempdir().unwrap();
    let mut g: serde_json::Value = serde_json::from_str(usc_laser_cli::oracle::SHIPPED_GOLDEN).unwrap();
    let amp = g["roots"][0]["amp"].as_f64().unwrap();
    g["roots"][0]["amp"] = serde_json::json!(amp * (1.0 + 1e-6));
    std::fs::write(dir.path().join("g.json"), g.to_string()).unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"task":{"verify":{"golden":"g.json","fuzz_cases":2}}}"#).unwrap();
    let o = bin(&["verify", "--config", "c.json", "--out", "o"], dir.path(), None);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "verification_failure");
    assert!(dir.path().join("o/verify.json").exists());
}
