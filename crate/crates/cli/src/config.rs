//! Strict JSON run configuration.
//!
//! Every block and key is optional; missing keys take the reference
//! parameter set and the documented task defaults. Unknown keys are errors.
//! Parsing normalizes: physical parameters are rescaled to `wa = 1` and every
//! task default is written out, so serializing a parsed config gives its
//! normal form.

use serde::{Deserialize, Serialize};
use usc_laser::harmonic::pump_grid;
use usc_laser::{validate_params, Axis, Gauge, MapSpec, SolverConfig, SystemParams};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsBlock {
    pub wa: f64,
    pub wc: f64,
    pub g_tilde: f64,
    pub kappa: f64,
    pub gamma_down: f64,
    pub gamma_phi: f64,
}

impl Default for ParamsBlock {
    fn default() -> Self {
        let r = SystemParams::reference();
        ParamsBlock {
            wa: r.wa,
            wc: r.wc,
            g_tilde: r.g_tilde,
            kappa: r.kappa,
            gamma_down: r.gamma_down,
            gamma_phi: r.gamma_phi,
        }
    }
}

impl ParamsBlock {
    pub fn system(&self, z_pump: f64) -> SystemParams {
        SystemParams {
            wa: self.wa,
            wc: self.wc,
            g_tilde: self.g_tilde,
            kappa: self.kappa,
            gamma_down: self.gamma_down,
            gamma_phi: self.gamma_phi,
            z_pump,
        }
    }

    fn from_system(p: &SystemParams) -> Self {
        ParamsBlock {
            wa: p.wa,
            wc: p.wc,
            g_tilde: p.g_tilde,
            kappa: p.kappa,
            gamma_down: p.gamma_down,
            gamma_phi: p.gamma_phi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepTask {
    pub pump_min: f64,
    pub pump_max: f64,
    pub pump_points: usize,
    /// Relative `|a1|^2` difference counted as two branches.
    pub rel_tol: f64,
}

impl Default for SweepTask {
    fn default() -> Self {
        SweepTask {
            pump_min: 0.0,
            pump_max: 0.5,
            pump_points: 101,
            rel_tol: 1e-3,
        }
    }
}

impl SweepTask {
    pub fn grid(&self) -> Vec<f64> {
        pump_grid(self.pump_min, self.pump_max, self.pump_points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// Intensity over cavity frequency and pump.
    #[default]
    PumpCavity,
    /// Bistability ceiling over coupling and cavity loss.
    CouplingLoss,
    /// Maximum intensity over coupling and dephasing ratio.
    DephasingCoupling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

/// Map settings; `None` fields take the defaults of `kind` and are filled in
/// by [`parse_config`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapTask {
    pub kind: MapKind,
    pub axis1: Option<Axis>,
    pub axis2: Option<Axis>,
    pub sample_pump: Option<f64>,
    pub pump_points: Option<usize>,
    /// Cavity frequencies scanned per cell (coupling-loss and dephasing maps).
    pub wc_grid: Option<GridBlock>,
    pub rel_tol: Option<f64>,
}

impl MapTask {
    fn kind_defaults(&self, p: &SystemParams, gauge: Gauge) -> MapSpec {
        match self.kind {
            MapKind::PumpCavity => MapSpec::pump_cavity(*p, gauge),
            MapKind::CouplingLoss => MapSpec::coupling_loss(*p, gauge),
            MapKind::DephasingCoupling => MapSpec::dephasing_coupling(*p, gauge),
        }
    }

    fn fill(&mut self, p: &SystemParams, gauge: Gauge) {
        let d = self.kind_defaults(p, gauge);
        self.axis1.get_or_insert(d.axis1);
        self.axis2.get_or_insert(d.axis2);
        self.sample_pump.get_or_insert(d.sample_pump);
        self.pump_points.get_or_insert(d.pump_points);
        self.rel_tol.get_or_insert(d.rel_tol);
        if self.wc_grid.is_none() {
            let g = &d.wc_grid;
            self.wc_grid = Some(GridBlock {
                min: g[0],
                max: g[g.len() - 1],
                points: g.len(),
            });
        }
    }

    /// Full map specification for a template and gauge.
    pub fn spec(&self, p: &SystemParams, gauge: Gauge, solver: &SolverConfig) -> MapSpec {
        let mut t = self.clone();
        t.fill(p, gauge);
        let mut spec = t.kind_defaults(p, gauge);
        spec.axis1 = t.axis1.unwrap();
        spec.axis2 = t.axis2.unwrap();
        spec.sample_pump = t.sample_pump.unwrap();
        spec.pump_points = t.pump_points.unwrap();
        spec.rel_tol = t.rel_tol.unwrap();
        let g = t.wc_grid.unwrap();
        spec.wc_grid = pump_grid(g.min, g.max, g.points.max(1));
        spec.solver = solver.clone();
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrateTask {
    pub z_pump: f64,
    pub t_end: f64,
    /// Step; `None` uses the recommended step for the frame.
    pub dt: Option<f64>,
    /// Time between recorded samples.
    pub sample_interval: f64,
    /// Initial field amplitude on top of the trivial state.
    pub seed: f64,
    /// Frame frequency; `None` uses the linear-threshold frequency.
    pub omega_frame: Option<f64>,
}

impl Default for IntegrateTask {
    fn default() -> Self {
        IntegrateTask {
            z_pump: 0.05,
            t_end: 2000.0,
            dt: None,
            sample_interval: 1.0,
            seed: 1e-3,
            omega_frame: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyTask {
    /// Golden-root file; `None` uses the roots shipped with the tool.
    pub golden: Option<String>,
    /// Random parameter sets per gauge.
    pub fuzz_cases: usize,
    pub fuzz_seed: u64,
    /// Largest accepted component-equation residual.
    pub tolerance: f64,
}

impl Default for VerifyTask {
    fn default() -> Self {
        VerifyTask {
            golden: None,
            fuzz_cases: 200,
            fuzz_seed: 1,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskBlock {
    pub solver: SolverConfig,
    pub sweep: SweepTask,
    pub map: MapTask,
    pub integrate: IntegrateTask,
    pub verify: VerifyTask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: String,
    pub formats: Vec<Format>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            dir: "out".into(),
            formats: vec![Format::Csv, Format::Json, Format::Svg],
        }
    }
}

impl OutputBlock {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsBlock,
    pub gauge: Gauge,
    pub task: TaskBlock,
    pub output: OutputBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ParamsBlock::default(),
            gauge: Gauge::Coulomb,
            task: TaskBlock::default(),
            output: OutputBlock::default(),
        }
    }
}

impl RunConfig {
    /// Physical parameters at a pump level.
    pub fn system(&self, z_pump: f64) -> SystemParams {
        self.params.system(z_pump)
    }

    /// Map specification of the configured map task.
    pub fn map_spec(&self) -> MapSpec {
        self.task.map.spec(&self.system(0.5), self.gauge, &self.task.solver)
    }

    /// Checks everything that can be checked before running and writes out
    /// the defaults; parameters end up in `wa = 1` units.
    pub fn normalize(mut self) -> Result<Self, CliError> {
        let p = validate_params(&self.system(0.5))?;
        self.params = ParamsBlock::from_system(&p);
        self.task.solver.check()?;

        let s = &self.task.sweep;
        if s.pump_points < 2 || !(s.pump_min < s.pump_max) {
            return Err(grid_error("sweep grid needs pump_min < pump_max and at least 2 points"));
        }
        if s.pump_min < -0.5 || s.pump_max > 0.5 {
            return Err(grid_error("sweep pumps must lie in [-1/2, 1/2]"));
        }
        if !(s.rel_tol > 0.0) {
            return Err(grid_error("sweep rel_tol must be > 0"));
        }

        let gauge = self.gauge;
        self.task.map.fill(&p, gauge);
        if let Some(g) = self.task.map.wc_grid {
            if g.points == 0 || !(g.min > 0.0) || (g.points > 1 && !(g.min < g.max)) {
                return Err(grid_error("wc_grid needs 0 < min < max and at least 1 point"));
            }
        }
        self.map_spec().check()?;

        let it = &self.task.integrate;
        p.with_pump(it.z_pump).check()?;
        if !(it.t_end > 0.0) || !(it.sample_interval > 0.0) || !(it.seed.is_finite()) {
            return Err(grid_error("integrate needs t_end > 0, sample_interval > 0 and a finite seed"));
        }
        if matches!(it.dt, Some(dt) if !(dt > 0.0)) || matches!(it.omega_frame, Some(w) if !(w > 0.0)) {
            return Err(grid_error("integrate dt and omega_frame must be > 0"));
        }

        if !(self.task.verify.tolerance > 0.0) {
            return Err(grid_error("verify tolerance must be > 0"));
        }
        if self.output.formats.is_empty() {
            return Err(grid_error("output.formats is empty"));
        }
        self.output.formats.sort();
        self.output.formats.dedup();
        Ok(self)
    }
}

fn grid_error(msg: &str) -> CliError {
    CliError::Config(usc_laser::LaserError::InvalidGrid(msg.into()))
}

/// Strict parse plus normalization.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = match serde_path_to_error::deserialize(de) {
        Ok(c) => c,
        Err(e) => {
            let key = e.path().to_string();
            let inner = e.into_inner();
            return Err(CliError::Parse {
                line: inner.line(),
                column: inner.column(),
                key,
                message: inner.to_string(),
            });
        }
    };
    cfg.normalize()
}

pub fn to_json(cfg: &RunConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes")
}
