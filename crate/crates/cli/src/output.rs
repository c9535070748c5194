//! Flat result rows, CSV tables and provenance-carrying JSON records.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use usc_laser::envelope::EnvelopeState;
use usc_laser::harmonic::BranchPoint;
use usc_laser::sweep::Hysteresis;
use usc_laser::{Axis, CellStatus, Direction, Gauge, MapCell, SolverConfig, TaskKind, Threshold};

use crate::config::{MapKind, ParamsBlock};
use crate::error::CliError;

pub const TOOL: &str = "usc-laser";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const UNITS: &str = "frequencies and rates in units of wa (wa = 1), time in units of 1/wa";

pub const SWEEP_COLUMNS: [&str; 26] = [
    "z_pump", "direction", "converged", "omega", "re_a1", "im_a1", "re_a3", "im_a3", "re_b1", "im_b1",
    "re_b3", "im_b3", "re_x1", "im_x1", "re_x3", "im_x3", "re_y1", "im_y1", "re_y3", "im_y3", "z0",
    "re_z2", "im_z2", "abs_a1_sq", "abs_a3_sq", "residual_norm",
];

pub const MAP_COLUMNS: [&str; 10] = [
    "axis1", "axis2", "z_th", "abs_a1_sq_up", "abs_a1_sq_down", "bistable", "window_lo", "window_hi",
    "z0", "omega",
];

pub const TRAJECTORY_COLUMNS: [&str; 21] = [
    "t", "re_a1", "im_a1", "re_a3", "im_a3", "re_b1", "im_b1", "re_b3", "im_b3", "re_x1", "im_x1",
    "re_x3", "im_x3", "re_y1", "im_y1", "re_y3", "im_y3", "z0", "re_z2", "im_z2", "abs_a1_sq",
];

/// 17 significant digits, enough to round-trip any f64.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// One sweep point in the column order of [`SWEEP_COLUMNS`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub z_pump: f64,
    pub direction: Direction,
    pub converged: bool,
    pub omega: f64,
    pub re_a1: f64,
    pub im_a1: f64,
    pub re_a3: f64,
    pub im_a3: f64,
    pub re_b1: f64,
    pub im_b1: f64,
    pub re_b3: f64,
    pub im_b3: f64,
    pub re_x1: f64,
    pub im_x1: f64,
    pub re_x3: f64,
    pub im_x3: f64,
    pub re_y1: f64,
    pub im_y1: f64,
    pub re_y3: f64,
    pub im_y3: f64,
    pub z0: f64,
    pub re_z2: f64,
    pub im_z2: f64,
    pub abs_a1_sq: f64,
    pub abs_a3_sq: f64,
    pub residual_norm: f64,
}

impl SweepRow {
    pub fn from_point(b: &BranchPoint) -> Self {
        let s = &b.state;
        SweepRow {
            z_pump: b.z_pump,
            direction: b.direction,
            converged: b.converged,
            omega: s.omega,
            re_a1: s.a1.re,
            im_a1: s.a1.im,
            re_a3: s.a3.re,
            im_a3: s.a3.im,
            re_b1: s.b1.re,
            im_b1: s.b1.im,
            re_b3: s.b3.re,
            im_b3: s.b3.im,
            re_x1: s.x1.re,
            im_x1: s.x1.im,
            re_x3: s.x3.re,
            im_x3: s.x3.im,
            re_y1: s.y1.re,
            im_y1: s.y1.im,
            re_y3: s.y3.re,
            im_y3: s.y3.im,
            z0: s.z0,
            re_z2: s.z2.re,
            im_z2: s.z2.im,
            abs_a1_sq: s.abs_a1_sq(),
            abs_a3_sq: s.abs_a3_sq(),
            residual_norm: s.residual_norm,
        }
    }

    fn fields(&self) -> Vec<String> {
        let mut f = vec![num(self.z_pump), self.direction.name().into(), self.converged.to_string()];
        f.extend(
            [
                self.omega, self.re_a1, self.im_a1, self.re_a3, self.im_a3, self.re_b1, self.im_b1,
                self.re_b3, self.im_b3, self.re_x1, self.im_x1, self.re_x3, self.im_x3, self.re_y1,
                self.im_y1, self.re_y3, self.im_y3, self.z0, self.re_z2, self.im_z2, self.abs_a1_sq,
                self.abs_a3_sq, self.residual_norm,
            ]
            .map(num),
        );
        f
    }
}

/// One map cell; the CSV holds the first ten fields, `wc` and `status` are
/// JSON only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRow {
    pub axis1: f64,
    pub axis2: f64,
    pub z_th: Option<f64>,
    pub abs_a1_sq_up: f64,
    pub abs_a1_sq_down: f64,
    pub bistable: bool,
    pub window_lo: Option<f64>,
    pub window_hi: Option<f64>,
    pub z0: f64,
    pub omega: f64,
    pub wc: Option<f64>,
    pub status: CellStatus,
}

impl MapRow {
    pub fn from_cell(c: &MapCell) -> Self {
        MapRow {
            axis1: c.axis1,
            axis2: c.axis2,
            z_th: c.z_th,
            abs_a1_sq_up: c.abs_a1_sq_up,
            abs_a1_sq_down: c.abs_a1_sq_down,
            bistable: c.bistable,
            window_lo: c.window.map(|w| w.0),
            window_hi: c.window.map(|w| w.1),
            z0: c.z0,
            omega: c.omega,
            wc: c.wc,
            status: c.status,
        }
    }

    fn fields(&self) -> Vec<String> {
        vec![
            num(self.axis1),
            num(self.axis2),
            opt(self.z_th),
            num(self.abs_a1_sq_up),
            num(self.abs_a1_sq_down),
            self.bistable.to_string(),
            opt(self.window_lo),
            opt(self.window_hi),
            num(self.z0),
            num(self.omega),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub re_a1: f64,
    pub im_a1: f64,
    pub re_a3: f64,
    pub im_a3: f64,
    pub re_b1: f64,
    pub im_b1: f64,
    pub re_b3: f64,
    pub im_b3: f64,
    pub re_x1: f64,
    pub im_x1: f64,
    pub re_x3: f64,
    pub im_x3: f64,
    pub re_y1: f64,
    pub im_y1: f64,
    pub re_y3: f64,
    pub im_y3: f64,
    pub z0: f64,
    pub re_z2: f64,
    pub im_z2: f64,
    pub abs_a1_sq: f64,
}

impl TrajectoryRow {
    pub fn from_state(s: &EnvelopeState) -> Self {
        TrajectoryRow {
            t: s.time,
            re_a1: s.a1.re,
            im_a1: s.a1.im,
            re_a3: s.a3.re,
            im_a3: s.a3.im,
            re_b1: s.b1.re,
            im_b1: s.b1.im,
            re_b3: s.b3.re,
            im_b3: s.b3.im,
            re_x1: s.x1.re,
            im_x1: s.x1.im,
            re_x3: s.x3.re,
            im_x3: s.x3.im,
            re_y1: s.y1.re,
            im_y1: s.y1.im,
            re_y3: s.y3.re,
            im_y3: s.y3.im,
            z0: s.z0,
            re_z2: s.z2.re,
            im_z2: s.z2.im,
            abs_a1_sq: s.a1.norm_sqr(),
        }
    }

    fn fields(&self) -> Vec<String> {
        [
            self.t, self.re_a1, self.im_a1, self.re_a3, self.im_a3, self.re_b1, self.im_b1, self.re_b3,
            self.im_b3, self.re_x1, self.im_x1, self.re_x3, self.im_x3, self.re_y1, self.im_y1,
            self.re_y3, self.im_y3, self.z0, self.re_z2, self.im_z2, self.abs_a1_sq,
        ]
        .map(num)
        .to_vec()
    }
}

/// Where a result came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub units: String,
    /// SHA-256 of the canonical JSON of `params`.
    pub params_hash: String,
    pub params: ParamsBlock,
    pub gauge: Gauge,
    pub solver: SolverConfig,
}

impl Provenance {
    pub fn new(params: &ParamsBlock, gauge: Gauge, solver: &SolverConfig) -> Self {
        Provenance {
            tool: TOOL.into(),
            version: VERSION.into(),
            units: UNITS.into(),
            params_hash: params_hash(params),
            params: *params,
            gauge,
            solver: solver.clone(),
        }
    }

    /// First line of every CSV file.
    fn csv_comment(&self) -> String {
        format!(
            "# {} {}; {}; gauge {}; params sha256 {}",
            self.tool, self.version, self.units, self.gauge, self.params_hash
        )
    }
}

pub fn params_hash(p: &ParamsBlock) -> String {
    let canonical = serde_json::to_string(p).expect("params serialize");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEntry {
    pub z_th: Option<f64>,
    pub omega_th: Option<f64>,
    /// Smallest candidate pump when no threshold lies below 1/2.
    pub min_candidate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenCheck {
    pub label: String,
    pub gauge: Gauge,
    pub residual: f64,
    /// Relative change of `(omega, |a1|)` after re-solving from the stored root.
    pub drift: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzSummary {
    pub gauge: Gauge,
    pub cases: usize,
    pub roots: usize,
    pub max_residual: f64,
    pub trivial_exact: bool,
    pub failures: Vec<String>,
}

/// Result payloads, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResultBody {
    Threshold {
        /// Linear threshold of the selected gauge.
        z_th: Option<f64>,
        omega_th: Option<f64>,
        linearized: BTreeMap<String, ThresholdEntry>,
        conventional: Threshold,
    },
    Sweep {
        z_th: Option<f64>,
        bistable: bool,
        window: Option<(f64, f64)>,
        /// Up and down branches disagree somewhere, including loops still
        /// open at the top of the pump range.
        branches_differ: bool,
        rows: Vec<SweepRow>,
    },
    Map {
        map: MapKind,
        task: TaskKind,
        axis1: Axis,
        axis2: Axis,
        rows: usize,
        cols: usize,
        bistable_rows: Vec<f64>,
        cells: Vec<MapRow>,
    },
    Trajectory {
        z_pump: f64,
        omega_frame: f64,
        dt: f64,
        samples: Vec<TrajectoryRow>,
    },
    Verify {
        tolerance: f64,
        golden: Vec<GoldenCheck>,
        fuzz: Vec<FuzzSummary>,
        pass: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub provenance: Provenance,
    pub result: ResultBody,
}

impl ResultRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("records serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// CSV table of the record, if it has one.
    pub fn to_csv(&self) -> Option<String> {
        let (cols, rows): (&[&str], Vec<Vec<String>>) = match &self.result {
            ResultBody::Sweep { rows, .. } => (&SWEEP_COLUMNS, rows.iter().map(SweepRow::fields).collect()),
            ResultBody::Map { cells, .. } => (&MAP_COLUMNS, cells.iter().map(MapRow::fields).collect()),
            ResultBody::Trajectory { samples, .. } => {
                (&TRAJECTORY_COLUMNS, samples.iter().map(TrajectoryRow::fields).collect())
            }
            _ => return None,
        };
        let mut out = self.provenance.csv_comment();
        out.push('\n');
        out.push_str(&cols.join(","));
        out.push('\n');
        for r in rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        Some(out)
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let err = |path: &Path, e: std::io::Error| CliError::Output {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    fs::create_dir_all(dir).map_err(|e| err(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| err(&path, e))?;
    Ok(path)
}

/// Sweep rows (up ascending, then down descending) and the loop
/// classification; only a loop closing inside the pump range counts as
/// bistable.
pub fn sweep_body(h: &Hysteresis, z_th: Option<f64>) -> ResultBody {
    ResultBody::Sweep {
        z_th,
        bistable: h.closed,
        window: h.raw.window,
        branches_differ: h.raw.bistable,
        rows: h.up.points.iter().chain(&h.down.points).map(SweepRow::from_point).collect(),
    }
}
