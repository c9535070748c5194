//! The five subcommands. Each writes its artifacts into the output directory
//! and returns what it wrote; failures found after writing (unconverged
//! points, failed checks) are reported once the files exist.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use usc_laser::envelope::{default_step, integrate, EnvelopeState};
use usc_laser::harmonic::BranchPoint;
use usc_laser::sweep::hysteresis;
use usc_laser::{
    conventional_threshold, linearized_threshold, run_map, AxisScale, CellStatus, Gauge, LaserError, MapResult,
    TaskKind,
};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::oracle::{check_golden, fuzz_gauge, GoldenFile, SHIPPED_GOLDEN};
use crate::output::{
    sweep_body, write_file, MapRow, Provenance, ResultBody, ResultRecord, ThresholdEntry, TrajectoryRow,
};
use crate::plot::{heatmap, line_plot, Arrow, Heatmap, LinePlot, Panel, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Threshold,
    Sweep,
    Map,
    Integrate,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Threshold => "threshold",
            Command::Sweep => "sweep",
            Command::Map => "map",
            Command::Integrate => "integrate",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub record: ResultRecord,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    /// Short JSON summary for stdout.
    pub fn summary(&self) -> String {
        let files: Vec<String> = self.files.iter().map(|p| p.display().to_string()).collect();
        let v = match &self.record.result {
            ResultBody::Threshold { .. } | ResultBody::Verify { .. } => {
                serde_json::json!({ "result": self.record.result, "files": files })
            }
            ResultBody::Sweep { z_th, bistable, window, .. } => {
                serde_json::json!({ "kind": "sweep", "z_th": z_th, "bistable": bistable, "window": window, "files": files })
            }
            ResultBody::Map { bistable_rows, rows, cols, .. } => {
                serde_json::json!({ "kind": "map", "rows": rows, "cols": cols, "bistable_rows": bistable_rows, "files": files })
            }
            ResultBody::Trajectory { samples, omega_frame, .. } => {
                let last = samples.last().map(|s| s.abs_a1_sq);
                serde_json::json!({ "kind": "trajectory", "omega_frame": omega_frame, "final_abs_a1_sq": last, "files": files })
            }
        };
        serde_json::to_string_pretty(&v).expect("summary serializes")
    }
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cmd {
        Command::Threshold => threshold(cfg),
        Command::Sweep => sweep(cfg),
        Command::Map => map(cfg),
        Command::Integrate => integrate_cmd(cfg),
        Command::Verify => verify(cfg),
    }
}

fn provenance(cfg: &RunConfig) -> Provenance {
    Provenance::new(&cfg.params, cfg.gauge, &cfg.task.solver)
}

/// Writes the requested formats as `<stem>.{csv,json,svg}`.
fn emit(cfg: &RunConfig, stem: &str, record: &ResultRecord, svg: Option<String>) -> Result<Vec<PathBuf>, CliError> {
    let dir = Path::new(&cfg.output.dir);
    let mut files = Vec::new();
    for f in &cfg.output.formats {
        let (ext, body) = match f {
            Format::Csv => ("csv", record.to_csv()),
            Format::Json => ("json", Some(record.to_json())),
            Format::Svg => ("svg", svg.clone()),
        };
        if let Some(b) = body {
            files.push(write_file(dir, &format!("{stem}.{ext}"), &b)?);
        }
    }
    Ok(files)
}

fn threshold(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = cfg.system(0.0);
    let mut linearized = BTreeMap::new();
    for g in Gauge::ALL {
        let entry = match linearized_threshold(&p, g) {
            Ok(t) => ThresholdEntry {
                z_th: Some(t.z_th),
                omega_th: Some(t.omega_th),
                min_candidate: None,
            },
            Err(LaserError::NoThreshold { min_candidate }) => ThresholdEntry {
                z_th: None,
                omega_th: None,
                min_candidate,
            },
            Err(e) => return Err(e.into()),
        };
        linearized.insert(g.name().to_string(), entry);
    }
    let own = &linearized[cfg.gauge.name()];
    let record = ResultRecord {
        provenance: provenance(cfg),
        result: ResultBody::Threshold {
            z_th: own.z_th,
            omega_th: own.omega_th,
            linearized: linearized.clone(),
            conventional: conventional_threshold(&p),
        },
    };
    let files = emit(cfg, "threshold", &record, None)?;
    Ok(Outcome { record, files })
}

fn sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let s = &cfg.task.sweep;
    let grid = s.grid();
    let p = cfg.system(grid[0]);
    let z_th = linearized_threshold(&p, cfg.gauge).ok().map(|t| t.z_th);
    let h = hysteresis(&p, cfg.gauge, &grid, &cfg.task.solver, s.rel_tol)?;
    let record = ResultRecord {
        provenance: provenance(cfg),
        result: sweep_body(&h, z_th),
    };
    let svg = cfg
        .output
        .wants(Format::Svg)
        .then(|| sweep_svg(&h.up.points, &h.down.points, h.raw.bistable, p.wc, cfg.gauge));
    let files = emit(cfg, "sweep", &record, svg)?;
    let failed = h.up.points.iter().chain(&h.down.points).filter(|b| !b.converged).count();
    if failed > 0 {
        return Err(CliError::Unconverged(format!(
            "{failed} sweep points fell back to an unstable trivial state (artifacts written)"
        )));
    }
    Ok(Outcome { record, files })
}

/// Stacked intensity, `Z0`, `|z2|` and frequency-shift panels.
pub fn sweep_svg(up: &[BranchPoint], down: &[BranchPoint], bistable: bool, wc: f64, gauge: Gauge) -> String {
    type Getter = fn(&BranchPoint, f64) -> Option<f64>;
    let panels: [(&str, &str, Getter); 4] = [
        ("intensity", "|a1|^2", |b, _| Some(b.state.abs_a1_sq())),
        ("z0", "Z0", |b, _| Some(b.state.z0)),
        ("z2", "|z2|", |b, _| Some(b.state.z2.norm())),
        ("frequency", "(Omega - wc) / wc", |b, wc| {
            b.state.is_lasing().then(|| (b.state.omega - wc) / wc)
        }),
    ];
    let pts = |branch: &[BranchPoint], f: Getter| -> Vec<(f64, f64)> {
        branch.iter().filter_map(|b| f(b, wc).map(|y| (b.z_pump, y))).collect()
    };
    let panels = panels
        .into_iter()
        .map(|(id, ylabel, f)| {
            let series = if bistable {
                vec![
                    Series {
                        label: "pump up".into(),
                        class: "branch up".into(),
                        color: "#1f77b4",
                        points: pts(up, f),
                        arrow: Arrow::End,
                    },
                    Series {
                        label: "pump down".into(),
                        class: "branch down".into(),
                        color: "#d62728",
                        points: pts(down, f),
                        arrow: Arrow::End,
                    },
                ]
            } else {
                vec![Series {
                    label: "up = down".into(),
                    class: "branch up down".into(),
                    color: "#1f77b4",
                    points: pts(up, f),
                    arrow: Arrow::Both,
                }]
            };
            Panel {
                id: id.into(),
                ylabel: ylabel.into(),
                series,
            }
        })
        .collect();
    line_plot(&LinePlot {
        title: format!("Pump sweep, wc = {wc:.4} wa, {gauge} gauge"),
        xlabel: "Z_inf".into(),
        panels,
    })
}

fn map(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = cfg.map_spec();
    let m = run_map(&spec)?;
    let record = ResultRecord {
        provenance: provenance(cfg),
        result: ResultBody::Map {
            map: cfg.task.map.kind,
            task: spec.task,
            axis1: spec.axis1.clone(),
            axis2: spec.axis2.clone(),
            rows: m.rows,
            cols: m.cols,
            bistable_rows: m.bistable_rows(),
            cells: m.cells.iter().map(MapRow::from_cell).collect(),
        },
    };
    let svg = cfg.output.wants(Format::Svg).then(|| map_svg(&m));
    let files = emit(cfg, "map", &record, svg)?;
    let failed = m.cells.iter().filter(|c| c.status == CellStatus::SolverFailure).count();
    if failed > 0 {
        return Err(CliError::Unconverged(format!(
            "{failed} map cells contain unconverged sweep points (artifacts written)"
        )));
    }
    Ok(Outcome { record, files })
}

/// Heatmap of a map result with threshold and bistability overlays.
pub fn map_svg(m: &MapResult) -> String {
    let spec = &m.spec;
    let n = m.cells.len();
    let differ = |c: &usc_laser::MapCell| {
        let (a, b) = (c.abs_a1_sq_up, c.abs_a1_sq_down);
        (a - b).abs() > spec.rel_tol * a.max(b)
    };
    let mut h = Heatmap {
        title: String::new(),
        xlabel: spec.axis1.param.name().into(),
        ylabel: spec.axis2.param.name().into(),
        cbar_label: String::new(),
        x: spec.axis1.values(),
        y: spec.axis2.values(),
        x_log: spec.axis1.scale == AxisScale::Log,
        y_log: spec.axis2.scale == AxisScale::Log,
        values: Vec::with_capacity(n),
        log_color: false,
        contour: Vec::new(),
        contour_mask: None,
        region_mask: None,
    };
    match spec.task {
        TaskKind::UpDownSweep => {
            h.title = format!("Intensity, pump up ({} gauge)", spec.gauge);
            h.cbar_label = "log10 |a1|^2".into();
            h.log_color = true;
            h.values = m.cells.iter().map(|c| Some(c.abs_a1_sq_up)).collect();
            h.contour = (0..m.rows)
                .filter_map(|r| {
                    let c = m.cell(r, 0);
                    c.z_th.map(|z| (c.axis1, z))
                })
                .collect();
            h.region_mask = Some(m.cells.iter().map(|c| c.bistable && differ(c)).collect());
        }
        TaskKind::ThresholdOnly => {
            h.title = format!("Linear threshold ({} gauge)", spec.gauge);
            h.cbar_label = "Z_th".into();
            h.values = m.cells.iter().map(|c| c.z_th).collect();
            h.contour_mask = Some(m.cells.iter().map(|c| c.z_th.is_some()).collect());
        }
        TaskKind::BistableCeiling => {
            h.title = format!("Z0 at the highest bistable cavity frequency ({} gauge)", spec.gauge);
            h.cbar_label = "Z0".into();
            h.values = m.cells.iter().map(|c| c.bistable.then_some(c.z0)).collect();
            h.contour_mask = Some(m.cells.iter().map(|c| c.bistable).collect());
        }
        TaskKind::MaxIntensityOverCavity => {
            h.title = format!("Largest intensity over wc at Z_inf = {} ({} gauge)", spec.sample_pump, spec.gauge);
            h.cbar_label = "log10 max |a1|^2".into();
            h.log_color = true;
            h.values = m.cells.iter().map(|c| Some(c.abs_a1_sq_up.max(c.abs_a1_sq_down))).collect();
            h.contour_mask = Some(m.cells.iter().map(|c| c.z_th.is_some()).collect());
            h.region_mask = Some(m.cells.iter().map(|c| c.bistable).collect());
        }
    }
    heatmap(&h)
}

fn integrate_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let it = &cfg.task.integrate;
    let p = cfg.system(it.z_pump);
    let frame = match it.omega_frame {
        Some(w) => w,
        None => linearized_threshold(&p, cfg.gauge).map(|t| t.omega_th).unwrap_or(p.wc),
    };
    let dt = it.dt.unwrap_or_else(|| default_step(&p, frame));
    let stride = ((it.sample_interval / dt).round() as usize).max(1);
    let s0 = EnvelopeState::seeded_trivial(&p, frame, it.seed);
    let traj = integrate(&s0, &p, cfg.gauge, dt, it.t_end, stride)?;
    let samples: Vec<TrajectoryRow> = traj.samples.iter().map(TrajectoryRow::from_state).collect();
    let svg = cfg.output.wants(Format::Svg).then(|| {
        line_plot(&LinePlot {
            title: format!("Envelope relaxation, Z_inf = {}, {} gauge", it.z_pump, cfg.gauge),
            xlabel: "t wa".into(),
            panels: vec![Panel {
                id: "intensity".into(),
                ylabel: "|a1|^2".into(),
                series: vec![Series {
                    label: "|a1|^2".into(),
                    class: "trajectory".into(),
                    color: "#1f77b4",
                    points: samples.iter().map(|s| (s.t, s.abs_a1_sq)).collect(),
                    arrow: Arrow::None,
                }],
            }],
        })
    });
    let record = ResultRecord {
        provenance: provenance(cfg),
        result: ResultBody::Trajectory {
            z_pump: it.z_pump,
            omega_frame: frame,
            dt: traj.dt,
            samples,
        },
    };
    let files = emit(cfg, "integrate", &record, svg)?;
    Ok(Outcome { record, files })
}

pub fn load_golden(path: Option<&str>) -> Result<GoldenFile, CliError> {
    let (name, text) = match path {
        Some(p) => (
            p.to_string(),
            fs::read_to_string(p).map_err(|e| CliError::ConfigIo {
                path: p.into(),
                message: e.to_string(),
            })?,
        ),
        None => ("<shipped>".to_string(), SHIPPED_GOLDEN.to_string()),
    };
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        key: format!("golden {name}"),
        message: e.to_string(),
    })
}

fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let v = &cfg.task.verify;
    let golden = load_golden(v.golden.as_deref())?;
    let solver = &cfg.task.solver;
    let checks: Vec<_> = golden.roots.iter().map(|g| check_golden(g, solver, v.tolerance)).collect();
    let fuzz: Vec<_> = Gauge::ALL
        .iter()
        .map(|&g| fuzz_gauge(g, v.fuzz_cases, v.fuzz_seed, solver, v.tolerance))
        .collect();
    let pass = checks.iter().all(|c| c.pass) && fuzz.iter().all(|f| f.failures.is_empty() && f.trivial_exact);
    let record = ResultRecord {
        provenance: provenance(cfg),
        result: ResultBody::Verify {
            tolerance: v.tolerance,
            golden: checks.clone(),
            fuzz: fuzz.clone(),
            pass,
        },
    };
    let files = emit(cfg, "verify", &record, None)?;
    if !pass {
        let bad: Vec<String> = checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("golden {} ({}): residual {:.3e}, drift {:.3e}", c.label, c.gauge, c.residual, c.drift))
            .chain(fuzz.iter().flat_map(|f| f.failures.iter().map(move |m| format!("fuzz {}: {m}", f.gauge))))
            .collect();
        return Err(CliError::Verification(bad.join("; ")));
    }
    Ok(Outcome { record, files })
}
