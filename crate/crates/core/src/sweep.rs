//! Two-parameter maps built from many independent sweeps.
//!
//! Every row or cell is a pure function of the spec and its grid index, so
//! results are gathered by index and do not depend on scheduling. Warm starts
//! only ever cross pump values inside one row's sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LaserError, Result};
use crate::harmonic::{
    detect_bistability, linearized_threshold, pump_grid, pump_sweep, Bistability, Direction,
    SolverConfig, SweepBranch,
};
use crate::model::{Gauge, SystemParams};

/// A parameter that can span a map axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisParam {
    Wc,
    ZPump,
    GTilde,
    Kappa,
    GammaDown,
    GammaPhi,
    /// `gamma_phi / (gamma_down + gamma_phi)` with the total held fixed.
    DephasingRatio,
}

impl AxisParam {
    pub fn name(self) -> &'static str {
        match self {
            AxisParam::Wc => "wc",
            AxisParam::ZPump => "z_pump",
            AxisParam::GTilde => "g_tilde",
            AxisParam::Kappa => "kappa",
            AxisParam::GammaDown => "gamma_down",
            AxisParam::GammaPhi => "gamma_phi",
            AxisParam::DephasingRatio => "dephasing_ratio",
        }
    }

    /// Applies an axis value; frequencies and rates are in units of `wa`.
    pub fn apply(self, p: &SystemParams, v: f64) -> SystemParams {
        let mut q = *p;
        match self {
            AxisParam::Wc => q.wc = v * p.wa,
            AxisParam::ZPump => q.z_pump = v,
            AxisParam::GTilde => q.g_tilde = v,
            AxisParam::Kappa => q.kappa = v * p.wa,
            AxisParam::GammaDown => q.gamma_down = v * p.wa,
            AxisParam::GammaPhi => q.gamma_phi = v * p.wa,
            AxisParam::DephasingRatio => q = p.with_dephasing_ratio(v),
        }
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: AxisParam,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default = "linear")]
    pub scale: AxisScale,
}

fn linear() -> AxisScale {
    AxisScale::Linear
}

impl Axis {
    pub fn linear(param: AxisParam, min: f64, max: f64, points: usize) -> Self {
        Axis {
            param,
            min,
            max,
            points,
            scale: AxisScale::Linear,
        }
    }

    pub fn log(param: AxisParam, min: f64, max: f64, points: usize) -> Self {
        Axis {
            param,
            min,
            max,
            points,
            scale: AxisScale::Log,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.points == 0 {
            return Err(LaserError::InvalidGrid(format!(
                "axis {} has no points",
                self.param.name()
            )));
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(LaserError::InvalidGrid(format!(
                "axis {} has non-finite bounds",
                self.param.name()
            )));
        }
        // a single point needs min == max, more points a non-empty range
        if (self.points == 1) != (self.min == self.max) {
            return Err(LaserError::InvalidGrid(format!(
                "axis {}: {} points on [{}, {}]",
                self.param.name(),
                self.points,
                self.min,
                self.max
            )));
        }
        if self.scale == AxisScale::Log && !(self.min > 0.0 && self.max > 0.0) {
            return Err(LaserError::InvalidGrid(format!(
                "log axis {} needs positive bounds",
                self.param.name()
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        match self.scale {
            AxisScale::Linear => pump_grid(self.min, self.max, self.points),
            AxisScale::Log => pump_grid(self.min.ln(), self.max.ln(), self.points)
                .into_iter()
                .map(f64::exp)
                .collect(),
        }
    }
}

/// What every map cell (or row) computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Rows over the first axis, up- and down-sweeps along a `z_pump` second axis.
    UpDownSweep,
    /// Linear threshold only, at every cell.
    ThresholdOnly,
    /// Highest cavity frequency of `wc_grid` with a closed hysteresis loop
    /// up to `sample_pump`.
    BistableCeiling,
    /// Largest `|a1|^2` at `sample_pump` over `wc_grid` (larger branch when bistable).
    MaxIntensityOverCavity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    /// Row axis.
    pub axis1: Axis,
    /// Column axis.
    pub axis2: Axis,
    pub template: SystemParams,
    pub gauge: Gauge,
    pub task: TaskKind,
    pub solver: SolverConfig,
    /// Pump used for the per-cell cavity scans.
    pub sample_pump: f64,
    /// Number of pump values in the per-cell sweeps from 0 to `sample_pump`.
    pub pump_points: usize,
    /// Cavity frequencies (units of `wa`) scanned by the per-cell tasks.
    pub wc_grid: Vec<f64>,
    /// Relative `|a1|^2` difference that counts as two distinct branches.
    pub rel_tol: f64,
}

impl MapSpec {
    pub fn new(axis1: Axis, axis2: Axis, template: SystemParams, gauge: Gauge, task: TaskKind) -> Self {
        MapSpec {
            axis1,
            axis2,
            template,
            gauge,
            task,
            solver: SolverConfig::default(),
            sample_pump: 0.5,
            pump_points: 101,
            wc_grid: pump_grid(0.05, 1.05, 81),
            rel_tol: 1e-3,
        }
    }

    /// Pump × cavity-frequency intensity map: `wc` rows over [0.05, 1.05]
    /// (81 rows) and 1001 pump columns over [0, 0.5].
    pub fn pump_cavity(template: SystemParams, gauge: Gauge) -> Self {
        MapSpec::new(
            Axis::linear(AxisParam::Wc, 0.05, 1.05, 81),
            Axis::linear(AxisParam::ZPump, 0.0, 0.5, 1001),
            template,
            gauge,
            TaskKind::UpDownSweep,
        )
    }

    /// Coupling × cavity-loss map of the bistability ceiling. The cavity scan
    /// reaches down to `0.005 wa`: at strong coupling and high loss the
    /// highest bistable cavity frequency drops well below `0.05 wa`.
    pub fn coupling_loss(template: SystemParams, gauge: Gauge) -> Self {
        let mut spec = MapSpec::new(
            Axis::linear(AxisParam::GTilde, 0.05, 0.5, 41),
            Axis::log(AxisParam::Kappa, 1e-3, 1e-1, 41),
            template,
            gauge,
            TaskKind::BistableCeiling,
        );
        spec.wc_grid = pump_grid(0.005, 1.05, 210);
        spec
    }

    /// Coupling × dephasing-ratio map of the maximum intensity.
    pub fn dephasing_coupling(template: SystemParams, gauge: Gauge) -> Self {
        let mut spec = MapSpec::new(
            Axis::linear(AxisParam::GTilde, 0.05, 0.5, 41),
            Axis::linear(AxisParam::DephasingRatio, 0.0, 0.95, 41),
            template,
            gauge,
            TaskKind::MaxIntensityOverCavity,
        );
        spec.pump_points = 51;
        spec
    }

    pub fn check(&self) -> Result<()> {
        self.axis1.check()?;
        self.axis2.check()?;
        self.solver.check()?;
        self.template.check()?;
        if self.task == TaskKind::UpDownSweep && self.axis2.param != AxisParam::ZPump {
            return Err(LaserError::InvalidGrid(
                "up/down sweeps need z_pump as the second axis".into(),
            ));
        }
        if self.axis1.param == AxisParam::ZPump {
            return Err(LaserError::InvalidGrid("z_pump cannot be the row axis".into()));
        }
        if matches!(self.task, TaskKind::BistableCeiling | TaskKind::MaxIntensityOverCavity) {
            if self.axis1.param == AxisParam::Wc || self.axis2.param == AxisParam::Wc {
                return Err(LaserError::InvalidGrid(
                    "cavity scans cannot also put wc on an axis".into(),
                ));
            }
            if self.pump_points < 2 || !(self.sample_pump > 0.0 && self.sample_pump <= 0.5) {
                return Err(LaserError::InvalidGrid("invalid per-cell pump sweep".into()));
            }
        }
        for v in self.axis1.values() {
            for w in self.axis2.values() {
                let p = self.axis2.param.apply(&self.axis1.param.apply(&self.template, v), w);
                p.check()?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    /// No lasing threshold with `z_th <= 1/2`.
    NoThreshold,
    /// A sweep fell back to the trivial state where it is unstable.
    SolverFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub axis1: f64,
    pub axis2: f64,
    pub z_th: Option<f64>,
    pub abs_a1_sq_up: f64,
    pub abs_a1_sq_down: f64,
    /// Hysteresis loop closed inside the scanned pump range.
    pub bistable: bool,
    /// Pump interval where up- and down-sweeps disagree.
    pub window: Option<(f64, f64)>,
    pub z0: f64,
    pub omega: f64,
    /// Cavity frequency selected by cavity-scanning tasks.
    pub wc: Option<f64>,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    pub spec: MapSpec,
    pub rows: usize,
    pub cols: usize,
    /// Row-major cells.
    pub cells: Vec<MapCell>,
}

impl MapResult {
    pub fn cell(&self, row: usize, col: usize) -> &MapCell {
        &self.cells[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[MapCell] {
        &self.cells[row * self.cols..(row + 1) * self.cols]
    }

    /// Row-axis values of rows containing a bistable cell.
    pub fn bistable_rows(&self) -> Vec<f64> {
        (0..self.rows)
            .filter(|&r| self.row(r).iter().any(|c| c.bistable))
            .map(|r| self.row(r)[0].axis1)
            .collect()
    }
}

/// Up/down sweep pair on one pump grid with the loop classification.
#[derive(Debug, Clone, PartialEq)]
pub struct Hysteresis {
    pub up: SweepBranch,
    pub down: SweepBranch,
    pub raw: Bistability,
    /// Loop closes strictly inside the pump range.
    pub closed: bool,
}

/// Runs both sweep directions over `grid` (ascending) and classifies the loop.
pub fn hysteresis(
    p: &SystemParams,
    gauge: Gauge,
    grid: &[f64],
    cfg: &SolverConfig,
    rel_tol: f64,
) -> Result<Hysteresis> {
    let up = pump_sweep(p, gauge, grid, Direction::Up, cfg)?;
    let rev: Vec<f64> = grid.iter().rev().copied().collect();
    let down = pump_sweep(p, gauge, &rev, Direction::Down, cfg)?;
    let raw = detect_bistability(&up, &down, rel_tol)?;
    let top = grid[grid.len() - 1];
    let closed = matches!(raw.window, Some((_, hi)) if hi < top);
    Ok(Hysteresis {
        up,
        down,
        raw,
        closed,
    })
}

fn sweep_failed(h: &Hysteresis) -> bool {
    h.up.points.iter().chain(&h.down.points).any(|b| !b.converged)
}

fn row_up_down(spec: &MapSpec, row_value: f64, pumps: &[f64]) -> Result<Vec<MapCell>> {
    let p = spec.axis1.param.apply(&spec.template, row_value);
    let z_th = linearized_threshold(&p, spec.gauge).ok().map(|t| t.z_th);
    let h = hysteresis(&p, spec.gauge, pumps, &spec.solver, spec.rel_tol)?;
    let failed = sweep_failed(&h);
    let n = pumps.len();
    Ok((0..n)
        .map(|k| {
            let up = &h.up.points[k];
            let down = &h.down.points[n - 1 - k];
            let status = if failed {
                CellStatus::SolverFailure
            } else if z_th.is_none() {
                CellStatus::NoThreshold
            } else {
                CellStatus::Ok
            };
            MapCell {
                axis1: row_value,
                axis2: pumps[k],
                z_th,
                abs_a1_sq_up: up.state.abs_a1_sq(),
                abs_a1_sq_down: down.state.abs_a1_sq(),
                bistable: h.closed,
                window: h.raw.window,
                z0: up.state.z0,
                omega: up.state.omega,
                wc: None,
                status,
            }
        })
        .collect())
}

/// Highest cavity frequency in `wc_grid` (units of `wa`) whose up/down sweeps
/// over `[0, pump]` form a closed hysteresis loop.
pub fn find_bistable_cavity_ceiling(
    p_template: &SystemParams,
    gauge: Gauge,
    pump: f64,
    wc_grid: &[f64],
) -> Option<f64> {
    ceiling_scan(p_template, gauge, pump, wc_grid, 101, &SolverConfig::default(), 1e-3)
        .ok()
        .flatten()
        .map(|(wc, _)| wc)
}

fn ceiling_scan(
    p_template: &SystemParams,
    gauge: Gauge,
    pump: f64,
    wc_grid: &[f64],
    pump_points: usize,
    cfg: &SolverConfig,
    rel_tol: f64,
) -> Result<Option<(f64, Hysteresis)>> {
    let mut order: Vec<f64> = wc_grid.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    let grid = pump_grid(0.0, pump, pump_points);
    for wc in order {
        let p = AxisParam::Wc.apply(p_template, wc);
        // no lasing anywhere up to the pump: no loop either
        match linearized_threshold(&p, gauge) {
            Ok(t) if t.z_th <= pump => {}
            _ => continue,
        }
        let h = hysteresis(&p, gauge, &grid, cfg, rel_tol)?;
        if h.closed {
            return Ok(Some((wc, h)));
        }
    }
    Ok(None)
}

fn cell_params(spec: &MapSpec, v1: f64, v2: f64) -> SystemParams {
    spec.axis2.param.apply(&spec.axis1.param.apply(&spec.template, v1), v2)
}

fn ceiling_cell(spec: &MapSpec, v1: f64, v2: f64) -> Result<MapCell> {
    let p = cell_params(spec, v1, v2);
    let found = ceiling_scan(
        &p,
        spec.gauge,
        spec.sample_pump,
        &spec.wc_grid,
        spec.pump_points,
        &spec.solver,
        spec.rel_tol,
    )?;
    let mut cell = MapCell {
        axis1: v1,
        axis2: v2,
        z_th: None,
        abs_a1_sq_up: 0.0,
        abs_a1_sq_down: 0.0,
        bistable: false,
        window: None,
        z0: p.z_pump,
        omega: 0.0,
        wc: None,
        status: CellStatus::Ok,
    };
    if let Some((wc, h)) = found {
        let up = h.up.points.last().expect("non-empty sweep");
        let down = h.down.points.first().expect("non-empty sweep");
        cell.z_th = linearized_threshold(&h.up.params, spec.gauge).ok().map(|t| t.z_th);
        cell.abs_a1_sq_up = up.state.abs_a1_sq();
        cell.abs_a1_sq_down = down.state.abs_a1_sq();
        cell.bistable = true;
        cell.window = h.raw.window;
        cell.z0 = up.state.z0;
        cell.omega = up.state.omega;
        cell.wc = Some(wc);
        if sweep_failed(&h) {
            cell.status = CellStatus::SolverFailure;
        }
    }
    Ok(cell)
}

fn max_intensity_cell(spec: &MapSpec, v1: f64, v2: f64) -> Result<MapCell> {
    let p = cell_params(spec, v1, v2);
    let grid = pump_grid(0.0, spec.sample_pump, spec.pump_points);
    let mut cell = MapCell {
        axis1: v1,
        axis2: v2,
        z_th: None,
        abs_a1_sq_up: 0.0,
        abs_a1_sq_down: 0.0,
        bistable: false,
        window: None,
        z0: spec.sample_pump,
        omega: 0.0,
        wc: None,
        status: CellStatus::Ok,
    };
    let mut best = -1.0;
    for &wc in &spec.wc_grid {
        let q = AxisParam::Wc.apply(&p, wc);
        let th = linearized_threshold(&q, spec.gauge).ok();
        if !matches!(th, Some(t) if t.z_th <= spec.sample_pump) {
            continue;
        }
        let h = hysteresis(&q, spec.gauge, &grid, &spec.solver, spec.rel_tol)?;
        if sweep_failed(&h) {
            cell.status = CellStatus::SolverFailure;
        }
        if h.closed {
            cell.bistable = true;
        }
        let up = h.up.points.last().expect("non-empty sweep");
        let down = h.down.points.first().expect("non-empty sweep");
        let (i_up, i_down) = (up.state.abs_a1_sq(), down.state.abs_a1_sq());
        if i_up.max(i_down) > best {
            best = i_up.max(i_down);
            let top = if i_up >= i_down { up } else { down };
            cell.abs_a1_sq_up = i_up;
            cell.abs_a1_sq_down = i_down;
            cell.z0 = top.state.z0;
            cell.omega = top.state.omega;
            cell.wc = Some(wc);
            cell.z_th = th.map(|t| t.z_th);
            cell.window = h.raw.window;
        }
    }
    Ok(cell)
}

fn threshold_cell(spec: &MapSpec, v1: f64, v2: f64) -> MapCell {
    let p = cell_params(spec, v1, v2);
    let th = linearized_threshold(&p, spec.gauge).ok();
    MapCell {
        axis1: v1,
        axis2: v2,
        z_th: th.map(|t| t.z_th),
        abs_a1_sq_up: 0.0,
        abs_a1_sq_down: 0.0,
        bistable: false,
        window: None,
        z0: p.z_pump,
        omega: th.map(|t| t.omega_th).unwrap_or(0.0),
        wc: None,
        status: if th.is_some() {
            CellStatus::Ok
        } else {
            CellStatus::NoThreshold
        },
    }
}

/// Computes any map. Rows (for sweeps) or cells (otherwise) run on the
/// current rayon pool and are merged by index.
pub fn run_map(spec: &MapSpec) -> Result<MapResult> {
    spec.check()?;
    let rows_v = spec.axis1.values();
    let cols_v = spec.axis2.values();
    let (rows, cols) = (rows_v.len(), cols_v.len());
    let cells: Vec<MapCell> = match spec.task {
        TaskKind::UpDownSweep => {
            let per_row: Vec<Result<Vec<MapCell>>> = rows_v
                .par_iter()
                .map(|&v| row_up_down(spec, v, &cols_v))
                .collect();
            let mut out = Vec::with_capacity(rows * cols);
            for r in per_row {
                out.extend(r?);
            }
            out
        }
        task => {
            let idx: Vec<(usize, usize)> =
                (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).collect();
            let per_cell: Vec<Result<MapCell>> = idx
                .par_iter()
                .map(|&(r, c)| {
                    let (v1, v2) = (rows_v[r], cols_v[c]);
                    match task {
                        TaskKind::ThresholdOnly => Ok(threshold_cell(spec, v1, v2)),
                        TaskKind::BistableCeiling => ceiling_cell(spec, v1, v2),
                        TaskKind::MaxIntensityOverCavity => max_intensity_cell(spec, v1, v2),
                        TaskKind::UpDownSweep => unreachable!(),
                    }
                })
                .collect();
            per_cell.into_iter().collect::<Result<Vec<_>>>()?
        }
    };
    Ok(MapResult {
        spec: spec.clone(),
        rows,
        cols,
        cells,
    })
}

fn require_axes(spec: &MapSpec, a: AxisParam, b: AxisParam) -> Result<()> {
    if spec.axis1.param != a || spec.axis2.param != b {
        return Err(LaserError::InvalidGrid(format!(
            "expected axes ({}, {}), got ({}, {})",
            a.name(),
            b.name(),
            spec.axis1.param.name(),
            spec.axis2.param.name()
        )));
    }
    Ok(())
}

/// Intensity map over (cavity frequency, pump): one warm-started up/down
/// sweep pair per cavity row.
pub fn map_pump_cavity(spec: &MapSpec) -> Result<MapResult> {
    require_axes(spec, AxisParam::Wc, AxisParam::ZPump)?;
    if !matches!(spec.task, TaskKind::UpDownSweep | TaskKind::ThresholdOnly) {
        return Err(LaserError::InvalidGrid("pump-cavity maps sweep or threshold only".into()));
    }
    run_map(spec)
}

/// Bistability ceiling over (coupling, cavity loss): per cell, the highest
/// cavity frequency whose loop closes by `sample_pump`, with its `Z0`.
pub fn map_coupling_loss(spec: &MapSpec) -> Result<MapResult> {
    require_axes(spec, AxisParam::GTilde, AxisParam::Kappa)?;
    let mut s = spec.clone();
    s.task = TaskKind::BistableCeiling;
    run_map(&s)
}

/// Maximum intensity over cavity frequency on (coupling, dephasing ratio).
pub fn map_dephasing_coupling(spec: &MapSpec) -> Result<MapResult> {
    require_axes(spec, AxisParam::GTilde, AxisParam::DephasingRatio)?;
    let mut s = spec.clone();
    s.task = TaskKind::MaxIntensityOverCavity;
    run_map(&s)
}
