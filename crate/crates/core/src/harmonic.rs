//! Reduced harmonic-balance equations, their Newton solution, lasing
//! thresholds and warm-started pump sweeps.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LaserError, Result};
use crate::model::{
    atomic_detuning, cavity_detuning, derived_rates, linear_prefactor, reconstruct_state,
    structure_coefficients, BranchKind, Gauge, ReducedUnknowns, SteadyState, SystemParams,
};

/// Newton and multistart settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Max-abs residual accepted as converged.
    pub residual_tol: f64,
    pub max_newton_iters: usize,
    /// Relative step of the central-difference Jacobian.
    pub jacobian_step: f64,
    /// Multistart frequencies as multiples of `max(wc, wa)`; `wa/3`, `wc` and
    /// the linear-threshold frequency are appended as anchors.
    pub multistart_omega_grid: Vec<f64>,
    /// Starting amplitudes `|a1|` tried at every multistart frequency.
    pub amp_seeds: Vec<f64>,
    /// Line-search backtracking factor.
    pub damping: f64,
    /// Smallest line-search step before a step is taken regardless.
    pub min_step: f64,
    /// Relative distance under which two roots count as the same.
    pub dedup_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            residual_tol: 1e-12,
            max_newton_iters: 25,
            jacobian_step: 1e-7,
            multistart_omega_grid: vec![0.3, 0.5, 0.8, 0.95, 1.0, 1.05, 1.2],
            amp_seeds: vec![1e-3, 0.1, 0.5, 1.0, 2.0],
            damping: 0.5,
            min_step: 1e-4,
            dedup_tol: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(LaserError::InvalidParameter {
                field: "residual_tol",
                reason: "must be > 0".into(),
            });
        }
        if self.max_newton_iters < 1 {
            return Err(LaserError::InvalidParameter {
                field: "max_newton_iters",
                reason: "must be >= 1".into(),
            });
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(LaserError::InvalidParameter {
                field: "damping",
                reason: "must lie in (0, 1)".into(),
            });
        }
        Ok(())
    }
}

/// Real and imaginary parts of the two bracket equations. The third-harmonic
/// bracket is multiplied through by η so it stays regular at η = 0.
///
/// Only `|a1|^2` and η enter, so the free phase of `a1` drops out.
/// A non-positive `omega` yields NaN.
pub fn hb_residuals(u: &ReducedUnknowns, p: &SystemParams, gauge: Gauge) -> [f64; 4] {
    let c = match structure_coefficients(p, gauge, u.omega) {
        Ok(c) => c,
        Err(_) => return [f64::NAN; 4],
    };
    let a2 = u.amp * u.amp;
    let eta = u.eta;
    let e2 = eta.norm_sqr();
    let z = p.z_pump;
    let first = c.linear_1 + z + (c.c_11_1 + c.c_33_1 * e2 + c.c_m1m1_3 * eta) * a2;
    let third = eta * (c.linear_3 + c.pump_weight_3 * z + (c.c_11_3 + c.c_33_3 * e2) * a2)
        + c.c_111 * a2;
    [first.re, first.im, third.re, third.im]
}

fn max_abs(v: &[f64; 4]) -> f64 {
    v.iter().fold(0.0_f64, |m, r| if r.is_nan() { f64::NAN } else { m.max(r.abs()) })
}

fn l2(v: &[f64; 4]) -> f64 {
    v.iter().map(|r| r * r).sum::<f64>().sqrt()
}

/// Damped Newton on (Ω, |a1|, Re η, Im η) with a central-difference Jacobian.
///
/// Works in `wa = 1` units; the returned state is in the units of `p`.
pub fn newton_solve(
    seed: &ReducedUnknowns,
    p: &SystemParams,
    gauge: Gauge,
    cfg: &SolverConfig,
) -> Result<SteadyState> {
    let pn = p.normalized();
    let eval = |x: &[f64; 4]| hb_residuals(&ReducedUnknowns::from_array(*x), &pn, gauge);

    let mut x = [seed.omega / p.wa, seed.amp.abs(), seed.eta.re, seed.eta.im];
    if !(x[0] > 0.0) {
        return Err(LaserError::NonphysicalRoot { omega: seed.omega });
    }
    let collapse = cfg.residual_tol;
    let mut f = eval(&x);
    let mut norm = max_abs(&f);

    for iter in 0..=cfg.max_newton_iters {
        if norm.is_nan() {
            return Err(LaserError::NoConvergence {
                iterations: iter,
                residual: norm,
            });
        }
        if norm < cfg.residual_tol {
            if x[1] <= collapse {
                return Err(LaserError::CollapsedToTrivial);
            }
            if !(x[0] > 0.0) {
                return Err(LaserError::NonphysicalRoot { omega: x[0] * p.wa });
            }
            let u = ReducedUnknowns::from_array([x[0] * p.wa, x[1], x[2], x[3]]);
            return Ok(reconstruct_state(&u, p, gauge));
        }
        if iter == cfg.max_newton_iters {
            break;
        }

        let mut jac = Matrix4::<f64>::zeros();
        for j in 0..4 {
            let h = cfg.jacobian_step * x[j].abs().max(1.0);
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (eval(&xp), eval(&xm));
            for i in 0..4 {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let rhs = -Vector4::from(f);
        let dx = match jac.lu().solve(&rhs) {
            Some(dx) if dx.iter().all(|v| v.is_finite()) => dx,
            _ => {
                if x[1] < 1e-6 {
                    return Err(LaserError::CollapsedToTrivial);
                }
                return Err(LaserError::NoConvergence {
                    iterations: iter,
                    residual: norm,
                });
            }
        };

        let base = l2(&f);
        let mut lambda = 1.0;
        loop {
            let mut xt = [
                x[0] + lambda * dx[0],
                x[1] + lambda * dx[1],
                x[2] + lambda * dx[2],
                x[3] + lambda * dx[3],
            ];
            // residuals are even in |a1|
            xt[1] = xt[1].abs();
            let ft = eval(&xt);
            let ok = xt[0] > 0.0 && !ft.iter().any(|v| v.is_nan());
            if ok && (l2(&ft) < base || lambda * cfg.damping < cfg.min_step) {
                x = xt;
                f = ft;
                break;
            }
            if lambda * cfg.damping < cfg.min_step {
                // cannot even keep Ω positive
                return Err(LaserError::NonphysicalRoot { omega: xt[0] * p.wa });
            }
            lambda *= cfg.damping;
        }
        norm = max_abs(&f);
        if x[1] < collapse {
            return Err(LaserError::CollapsedToTrivial);
        }
    }
    Err(LaserError::NoConvergence {
        iterations: cfg.max_newton_iters,
        residual: norm,
    })
}

fn same_root(a: &SteadyState, b: &SteadyState, wa: f64, tol: f64) -> bool {
    let (u, v) = (a.reduced(), b.reduced());
    let scale = 1.0 + u.amp.max(v.amp) + u.eta.norm().max(v.eta.norm());
    a.distance(b, wa) < tol * scale
}

/// Multistart frequencies in the units of `p`, in a fixed order.
pub fn multistart_frequencies(p: &SystemParams, gauge: Gauge, cfg: &SolverConfig) -> Vec<f64> {
    let top = p.wc.max(p.wa);
    let mut grid: Vec<f64> = cfg.multistart_omega_grid.iter().map(|f| f * top).collect();
    grid.push(p.wa / 3.0);
    grid.push(p.wc);
    if let Ok(th) = linearized_threshold(p, gauge) {
        grid.push(th.omega_th);
    }
    grid
}

/// Runs Newton from every (frequency, amplitude) seed and returns the
/// distinct lasing roots (ordered by decreasing `|a1|`) followed by the
/// trivial state.
pub fn multistart_solve(p: &SystemParams, gauge: Gauge, cfg: &SolverConfig) -> Vec<SteadyState> {
    let mut roots = lasing_roots(p, gauge, cfg);
    roots.push(SteadyState::trivial(p, gauge));
    roots
}

/// Distinct lasing roots only, ordered by decreasing `|a1|`.
pub fn lasing_roots(p: &SystemParams, gauge: Gauge, cfg: &SolverConfig) -> Vec<SteadyState> {
    let mut roots: Vec<SteadyState> = Vec::new();
    let zero = Complex64::new(0.0, 0.0);
    for omega in multistart_frequencies(p, gauge, cfg) {
        for &amp in &cfg.amp_seeds {
            let seed = ReducedUnknowns::new(omega, amp, zero);
            if let Ok(s) = newton_solve(&seed, p, gauge, cfg) {
                if !roots.iter().any(|r| same_root(r, &s, p.wa, cfg.dedup_tol)) {
                    roots.push(s);
                }
            }
        }
    }
    roots.sort_by(|a, b| b.abs_a1_sq().total_cmp(&a.abs_a1_sq()));
    roots
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub z_th: f64,
    pub omega_th: f64,
}

/// Real positive roots of the cubic `Im(Δc1 Δa1)(Ω) = 0`, in `wa = 1` units.
fn threshold_frequencies(pn: &SystemParams, gauge: Gauge) -> Vec<f64> {
    let r = derived_rates(pn);
    let g = pn.coupling();
    let base = match gauge {
        Gauge::Coulomb => pn.wc * (pn.wc + 4.0 * g * g * pn.wa),
        Gauge::ElectricDipole => pn.wc * pn.wc,
    };
    let s = r.gamma_x + r.gamma_y;
    let kw = pn.kappa * pn.wc;
    // s Ω^3 + kw Ω^2 - s base Ω - kw (wa^2 + γx γy)
    let coeffs = [-kw * (pn.wa * pn.wa + r.gamma_x * r.gamma_y), -s * base, kw, s];
    let poly = |w: f64| ((coeffs[3] * w + coeffs[2]) * w + coeffs[1]) * w + coeffs[0];
    let bound = 1.0 + coeffs[..3].iter().map(|c| (c / s).abs()).fold(0.0, f64::max);
    let n = 20_000;
    let mut roots = Vec::new();
    let mut prev_w = 0.0;
    let mut prev_v = poly(prev_w);
    for k in 1..=n {
        let w = bound * k as f64 / n as f64;
        let v = poly(w);
        if v == 0.0 {
            roots.push(w);
        } else if prev_v != 0.0 && prev_v.signum() != v.signum() {
            let (mut lo, mut hi) = (prev_w, w);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if poly(lo).signum() == poly(mid).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON * hi {
                    break;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_w = w;
        prev_v = v;
    }
    roots
}

/// Pump level at which the fundamental bracket vanishes with `|a1| = 0`,
/// minimized over the admissible oscillation frequencies.
pub fn linearized_threshold(p: &SystemParams, gauge: Gauge) -> Result<Threshold> {
    let pn = p.normalized();
    if !(pn.g_tilde > 0.0) {
        return Err(LaserError::NoThreshold { min_candidate: None });
    }
    let best = threshold_frequencies(&pn, gauge)
        .into_iter()
        .filter(|&w| w > 0.0)
        .map(|w| {
            let prod = cavity_detuning(&pn, gauge, w, 1.0) * atomic_detuning(&pn, w, 1.0);
            (-prod.re / linear_prefactor(&pn, gauge, w), w)
        })
        .filter(|(z, _)| *z > 0.0)
        .min_by(|a, b| a.0.total_cmp(&b.0));
    match best {
        Some((z, w)) if z <= 0.5 => Ok(Threshold {
            z_th: z,
            omega_th: w * p.wa,
        }),
        Some((z, _)) => Err(LaserError::NoThreshold {
            min_candidate: Some(z),
        }),
        None => Err(LaserError::NoThreshold { min_candidate: None }),
    }
}

/// Textbook single-mode laser threshold and frequency pulling, as a reference
/// diagnostic.
pub fn conventional_threshold(p: &SystemParams) -> Threshold {
    let g = p.coupling();
    let total = p.gamma_total();
    let omega = (p.kappa * p.wa + total * p.wc) / (p.kappa + total);
    let z = (p.kappa * total - (p.wc - omega) * (p.wa - omega)) / (2.0 * g * g * p.wa * p.wa);
    Threshold {
        z_th: z,
        omega_th: omega,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "up")]
    Up,
    #[serde(rename = "down")]
    Down,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub z_pump: f64,
    pub state: SteadyState,
    /// `false` when the solver fell back to the trivial state although the
    /// trivial state is linearly unstable at this pump.
    pub converged: bool,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepBranch {
    pub points: Vec<BranchPoint>,
    pub params: SystemParams,
    pub gauge: Gauge,
    pub direction: Direction,
}

impl SweepBranch {
    pub fn pumps(&self) -> Vec<f64> {
        self.points.iter().map(|b| b.z_pump).collect()
    }

    /// First pump value with a lasing state.
    pub fn onset(&self) -> Option<f64> {
        self.points
            .iter()
            .find(|b| b.state.is_lasing())
            .map(|b| b.z_pump)
    }
}

/// Evenly spaced pump values from `lo` to `hi` inclusive.
pub fn pump_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| {
            if k == n - 1 {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn check_grid(grid: &[f64], direction: Direction) -> Result<()> {
    if grid.is_empty() {
        return Err(LaserError::InvalidGrid("empty pump grid".into()));
    }
    for &z in grid {
        if !z.is_finite() || z.abs() > 0.5 {
            return Err(LaserError::InvalidGrid(format!(
                "pump value {z} outside [-1/2, 1/2]"
            )));
        }
    }
    for w in grid.windows(2) {
        let ok = match direction {
            Direction::Up => w[1] > w[0],
            Direction::Down => w[1] < w[0],
        };
        if !ok {
            return Err(LaserError::InvalidGrid(format!(
                "pump grid not strictly monotone {} at {} -> {}",
                direction.name(),
                w[0],
                w[1]
            )));
        }
    }
    Ok(())
}

/// Warm-started continuation over `pump_grid`.
///
/// Branch selection when the warm start fails or there is nothing to warm
/// start from:
/// - from a lasing point: the root closest in state space;
/// - from a trivial point: stay trivial while the trivial state is linearly
///   stable, otherwise the root closest to it (smallest `|a1|`);
/// - first point of an up-sweep: the root closest to the linear-threshold
///   frequency; first point of a down-sweep: the largest `|a1|`.
pub fn pump_sweep(
    p_base: &SystemParams,
    gauge: Gauge,
    pump_grid: &[f64],
    direction: Direction,
    cfg: &SolverConfig,
) -> Result<SweepBranch> {
    check_grid(pump_grid, direction)?;
    p_base.with_pump(pump_grid[0]).check()?;
    let threshold = linearized_threshold(p_base, gauge).ok();
    let z_th = threshold.map(|t| t.z_th).unwrap_or(f64::INFINITY);

    let mut points: Vec<BranchPoint> = Vec::with_capacity(pump_grid.len());
    let mut prev: Option<SteadyState> = None;

    for &z in pump_grid {
        let p = p_base.with_pump(z);
        let trivial_stable = z < z_th;
        let mut chosen: Option<SteadyState> = None;

        if let Some(last) = prev.filter(|s| s.is_lasing()) {
            if let Ok(s) = newton_solve(&last.reduced(), &p, gauge, cfg) {
                chosen = Some(s);
            }
        }
        let mut converged = true;
        if chosen.is_none() {
            let skip = matches!(prev, Some(s) if !s.is_lasing()) && trivial_stable;
            if !skip {
                let roots = lasing_roots(&p, gauge, cfg);
                chosen = match prev {
                    Some(last) if last.is_lasing() => roots
                        .into_iter()
                        .min_by(|a, b| a.distance(&last, p.wa).total_cmp(&b.distance(&last, p.wa))),
                    Some(_) => {
                        if trivial_stable {
                            None
                        } else {
                            roots.into_iter().min_by(|a, b| a.abs_a1_sq().total_cmp(&b.abs_a1_sq()))
                        }
                    }
                    None => match direction {
                        Direction::Down => roots.into_iter().next(),
                        Direction::Up => {
                            if trivial_stable {
                                None
                            } else {
                                let target = threshold.map(|t| t.omega_th).unwrap_or(p.wc);
                                roots.into_iter().min_by(|a, b| {
                                    (a.omega - target).abs().total_cmp(&(b.omega - target).abs())
                                })
                            }
                        }
                    },
                };
            }
            if chosen.is_none() && !trivial_stable {
                converged = false;
            }
        }
        let state = chosen.unwrap_or_else(|| SteadyState::trivial(&p, gauge));
        debug_assert!(converged || state.branch == BranchKind::Trivial);
        points.push(BranchPoint {
            z_pump: z,
            state,
            converged,
            direction,
        });
        prev = Some(state);
    }

    Ok(SweepBranch {
        points,
        params: *p_base,
        gauge,
        direction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bistability {
    pub bistable: bool,
    /// Smallest and largest pump values where the branches disagree.
    pub window: Option<(f64, f64)>,
}

/// Compares an up- and a down-sweep taken on the same pump values.
///
/// A pump value counts as bistable when both branches hold converged lasing
/// states whose `|a1|^2` differ by more than `rel_tol` relatively.
pub fn detect_bistability(up: &SweepBranch, down: &SweepBranch, rel_tol: f64) -> Result<Bistability> {
    if up.gauge != down.gauge || up.params.with_pump(0.0) != down.params.with_pump(0.0) {
        return Err(LaserError::GridMismatch(
            "branches were computed for different parameters".into(),
        ));
    }
    let mut a: Vec<&BranchPoint> = up.points.iter().collect();
    let mut b: Vec<&BranchPoint> = down.points.iter().collect();
    a.sort_by(|x, y| x.z_pump.total_cmp(&y.z_pump));
    b.sort_by(|x, y| x.z_pump.total_cmp(&y.z_pump));
    if a.len() != b.len() || a.iter().zip(&b).any(|(x, y)| x.z_pump != y.z_pump) {
        return Err(LaserError::GridMismatch(
            "branches do not share the same pump values".into(),
        ));
    }
    let mut window: Option<(f64, f64)> = None;
    for (x, y) in a.iter().zip(&b) {
        let both = x.converged && y.converged && x.state.is_lasing() && y.state.is_lasing();
        if !both {
            continue;
        }
        let (i, j) = (x.state.abs_a1_sq(), y.state.abs_a1_sq());
        if (i - j).abs() > rel_tol * i.max(j) {
            let z = x.z_pump;
            window = Some(match window {
                None => (z, z),
                Some((lo, hi)) => (lo.min(z), hi.max(z)),
            });
        }
    }
    Ok(Bistability {
        bistable: window.is_some(),
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ref_params() -> SystemParams {
        SystemParams::reference()
    }

    #[test]
    fn conventional_resonant() {
        let t = conventional_threshold(&ref_params());
        assert_relative_eq!(t.omega_th, 1.0, epsilon = 1e-15);
        assert_relative_eq!(t.z_th, 0.01 * 0.15 / (2.0 * 0.15 * 0.15), epsilon = 1e-15);
        assert_relative_eq!(t.z_th, 3.33e-2, epsilon = 1e-4);
    }

    #[test]
    fn conventional_pulling() {
        let t = conventional_threshold(&ref_params().with_wc(0.25));
        assert_relative_eq!(t.omega_th, 0.296875, epsilon = 1e-15);
    }

    #[test]
    fn conventional_ignores_dephasing_split() {
        let a = conventional_threshold(&SystemParams {
            gamma_down: 0.15,
            gamma_phi: 0.0,
            ..ref_params()
        });
        let b = conventional_threshold(&ref_params());
        assert_relative_eq!(a.z_th, b.z_th, epsilon = 1e-15);
        assert_relative_eq!(a.omega_th, b.omega_th, epsilon = 1e-15);
    }

    #[test]
    fn no_threshold_without_coupling() {
        assert!(matches!(
            linearized_threshold(&ref_params().with_g_tilde(0.0), Gauge::Coulomb),
            Err(LaserError::NoThreshold { .. })
        ));
    }

    #[test]
    fn residuals_ignore_phase() {
        let p = ref_params().with_pump(0.2);
        let u = ReducedUnknowns::new(1.04, 0.3, Complex64::new(1e-3, 2e-3));
        let s = reconstruct_state(&u, &p, Gauge::Coulomb);
        // rotate a1 by an arbitrary phase: η is unchanged, so are the residuals
        let phase = Complex64::from_polar(1.0, 0.7);
        let mut rot = s;
        rot.a1 = s.a1 * phase;
        rot.a3 = s.a3 * phase * phase * phase;
        let v = rot.reduced();
        assert_relative_eq!(v.amp, u.amp, epsilon = 1e-15);
        assert!((v.eta - u.eta).norm() < 1e-15);
        let (r1, r2) = (hb_residuals(&u, &p, Gauge::Coulomb), hb_residuals(&v, &p, Gauge::Coulomb));
        for k in 0..4 {
            assert_relative_eq!(r1[k], r2[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let cfg = SolverConfig::default();
        let p = ref_params();
        assert!(pump_sweep(&p, Gauge::Coulomb, &[0.1, 0.05], Direction::Up, &cfg).is_err());
        assert!(pump_sweep(&p, Gauge::Coulomb, &[0.1, 0.6], Direction::Up, &cfg).is_err());
        assert!(pump_sweep(&p, Gauge::Coulomb, &[], Direction::Down, &cfg).is_err());
    }

    #[test]
    fn below_threshold_sweep_is_trivial() {
        let cfg = SolverConfig::default();
        let grid = pump_grid(0.0, 0.015, 7);
        let b = pump_sweep(&ref_params(), Gauge::Coulomb, &grid, Direction::Up, &cfg).unwrap();
        for pt in &b.points {
            assert_eq!(pt.state.branch, BranchKind::Trivial);
            assert_eq!(pt.state.z0, pt.z_pump);
            assert!(pt.converged);
        }
    }

    #[test]
    fn identical_branches_not_bistable() {
        let cfg = SolverConfig::default();
        let grid = pump_grid(0.0, 0.1, 5);
        let b = pump_sweep(&ref_params(), Gauge::Coulomb, &grid, Direction::Up, &cfg).unwrap();
        let r = detect_bistability(&b, &b, 1e-3).unwrap();
        assert!(!r.bistable);
        assert_eq!(r.window, None);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let cfg = SolverConfig::default();
        let a = pump_sweep(&ref_params(), Gauge::Coulomb, &pump_grid(0.0, 0.1, 5), Direction::Up, &cfg).unwrap();
        let b = pump_sweep(&ref_params(), Gauge::Coulomb, &pump_grid(0.0, 0.1, 6), Direction::Up, &cfg).unwrap();
        assert!(matches!(detect_bistability(&a, &b, 1e-3), Err(LaserError::GridMismatch(_))));
        let c = pump_sweep(&ref_params(), Gauge::ElectricDipole, &pump_grid(0.0, 0.1, 5), Direction::Up, &cfg).unwrap();
        assert!(matches!(detect_bistability(&a, &c, 1e-3), Err(LaserError::GridMismatch(_))));
    }
}
