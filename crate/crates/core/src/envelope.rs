//! Time evolution of the harmonic amplitudes in a frame rotating at a fixed
//! fundamental frequency. Fixed points of these equations are the
//! harmonic-balance roots, which makes them an independent check on the
//! reduced equations, and their dynamics classify stability.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LaserError, Result};
use crate::model::{derived_rates, BranchKind, Gauge, SteadyState, SystemParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Number of real degrees of freedom: nine complex amplitudes plus `Z0`.
pub const DIM: usize = 19;

const BLOWUP: f64 = 1e6;

/// Harmonic amplitudes at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeState {
    pub a1: Complex64,
    pub a3: Complex64,
    pub b1: Complex64,
    pub b3: Complex64,
    pub x1: Complex64,
    pub x3: Complex64,
    pub y1: Complex64,
    pub y3: Complex64,
    pub z2: Complex64,
    pub z0: f64,
    pub time: f64,
    pub omega_frame: f64,
}

/// Harmonic order of each complex slot, used for phase rotations.
const ORDERS: [f64; 9] = [1.0, 3.0, 1.0, 3.0, 1.0, 3.0, 1.0, 3.0, 2.0];

impl EnvelopeState {
    pub fn from_steady(s: &SteadyState) -> Self {
        EnvelopeState {
            a1: s.a1,
            a3: s.a3,
            b1: s.b1,
            b3: s.b3,
            x1: s.x1,
            x3: s.x3,
            y1: s.y1,
            y3: s.y3,
            z2: s.z2,
            z0: s.z0,
            time: 0.0,
            omega_frame: s.omega,
        }
    }

    /// Trivial state (`Z0 = z_pump`) plus a small seed in the fundamental
    /// field. The field momentum is set so the seed oscillates at
    /// `+omega_frame` only, without exciting its mirror image.
    pub fn seeded_trivial(p: &SystemParams, omega_frame: f64, seed: f64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        EnvelopeState {
            a1: Complex64::new(seed, 0.0),
            a3: zero,
            b1: I * omega_frame * seed / p.wc,
            b3: zero,
            x1: zero,
            x3: zero,
            y1: zero,
            y3: zero,
            z2: zero,
            z0: p.z_pump,
            time: 0.0,
            omega_frame,
        }
    }

    fn complex(&self) -> [Complex64; 9] {
        [
            self.a1, self.a3, self.b1, self.b3, self.x1, self.x3, self.y1, self.y3, self.z2,
        ]
    }

    fn set_complex(&mut self, c: [Complex64; 9]) {
        [
            self.a1, self.a3, self.b1, self.b3, self.x1, self.x3, self.y1, self.y3, self.z2,
        ] = c;
    }

    pub fn to_vec(&self) -> [f64; DIM] {
        let mut v = [0.0; DIM];
        for (k, c) in self.complex().iter().enumerate() {
            v[2 * k] = c.re;
            v[2 * k + 1] = c.im;
        }
        v[18] = self.z0;
        v
    }

    pub fn with_vec(&self, v: &[f64; DIM]) -> Self {
        let mut out = *self;
        let mut c = [Complex64::new(0.0, 0.0); 9];
        for (k, slot) in c.iter_mut().enumerate() {
            *slot = Complex64::new(v[2 * k], v[2 * k + 1]);
        }
        out.set_complex(c);
        out.z0 = v[18];
        out
    }

    /// Applies the global phase symmetry `c_n -> c_n e^{i n φ}`.
    pub fn rotated(&self, phi: f64) -> Self {
        let mut c = self.complex();
        for (slot, n) in c.iter_mut().zip(ORDERS) {
            *slot *= Complex64::from_polar(1.0, n * phi);
        }
        let mut out = *self;
        out.set_complex(c);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.to_vec().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest oscillating amplitude.
    pub fn oscillation(&self) -> f64 {
        self.complex().iter().fold(0.0_f64, |m, c| m.max(c.norm()))
    }

    /// Euclidean distance after removing the best global phase rotation.
    pub fn distance_mod_phase(&self, other: &EnvelopeState) -> f64 {
        let phi = if self.a1.norm() > 0.0 && other.a1.norm() > 0.0 {
            (other.a1 / self.a1).arg()
        } else {
            0.0
        };
        let a = self.rotated(phi).to_vec();
        let b = other.to_vec();
        a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }
}

/// How the cavity loss enters the equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Loss {
    /// `-iκ a_n`, exactly as in the component equations. Damps content at
    /// positive lab frequency but amplifies its mirror image, so it is only
    /// meaningful at fixed points.
    Spectral,
    /// `-iκ f(ω) a_n` with an odd profile `f` built from lab-frame time
    /// derivatives of the field momentum, normalized so `f(nΩ) = 1`.
    Local,
}

/// Curvature of the loss profile per harmonic: `f(u) = u (1 + μ (1 - u²))`
/// with `u = ω / nΩ`, so `f(1) = 1`. The fundamental uses plain friction.
/// The third-harmonic slot can also carry content at `±Ω`, a copy of the
/// fundamental that the truncation cannot tell apart; `μ = 4` damps it at
/// about 1.5 κ while keeping `f > 0` up to `1.12 · 3Ω`.
const LOSS_CURVATURE: [f64; 2] = [0.0, 4.0];

/// Time derivative of every harmonic amplitude in the frame rotating at
/// `s.omega_frame`, suitable for time stepping.
///
/// The component equations apply the cavity loss to the positive-frequency
/// part of each amplitude, which is nonlocal in time: integrated literally,
/// the mirror image of every mode grows at roughly `κ`. Here the loss is
/// rewritten through lab-frame time derivatives so that every mode is
/// damped with the correct sign. Both forms agree wherever the amplitudes
/// are stationary, so fixed points are exactly those of
/// [`component_rhs`].
pub fn envelope_rhs(s: &EnvelopeState, p: &SystemParams, gauge: Gauge) -> EnvelopeState {
    rhs(s, p, gauge, Loss::Local)
}

/// The truncated component equations written out term by term, with the
/// cavity loss exactly as derived (`-iκ a_n`). Used to check roots.
pub fn component_rhs(s: &EnvelopeState, p: &SystemParams, gauge: Gauge) -> EnvelopeState {
    rhs(s, p, gauge, Loss::Spectral)
}

fn rhs(s: &EnvelopeState, p: &SystemParams, gauge: Gauge, loss: Loss) -> EnvelopeState {
    let r = derived_rates(p);
    let (gx, gy, gz) = (r.gamma_x, r.gamma_y, r.gamma_z);
    let g = p.coupling();
    let (wa, wc, kappa) = (p.wa, p.wc, p.kappa);
    let w = s.omega_frame;
    let (i1, i2, i3) = (I * w, I * (2.0 * w), I * (3.0 * w));
    let EnvelopeState {
        a1,
        a3,
        b1,
        b3,
        x1,
        x3,
        y1,
        y3,
        z2,
        z0,
        ..
    } = *s;

    // everything except the loss term of the momentum equations
    let mut d = *s;
    match gauge {
        Gauge::Coulomb => {
            let drive = wc + 4.0 * g * g * wa;
            let c = 2.0 * g * wa;
            d.a1 = i1 * a1 - wc * b1;
            d.a3 = i3 * a3 - wc * b3;
            d.b1 = drive * a1 + i1 * b1 + 4.0 * g * wa * y1;
            d.b3 = drive * a3 + i3 * b3 + 4.0 * g * wa * y3;
            d.x1 = (i1 - gx) * x1 - wa * y1 + c * (z0 * a1 + z2.conj() * a3 + a1.conj() * z2);
            d.x3 = (i3 - gx) * x3 - wa * y3 + c * (z0 * a3 + a1 * z2);
            d.y1 = wa * x1 + (i1 - gy) * y1;
            d.y3 = wa * x3 + (i3 - gy) * y3;
            let m = a1.conj() * x1 + a3.conj() * x3;
            d.z0 = -gz * (z0 - p.z_pump) - c * (m + m.conj()).re;
            d.z2 = (i2 - gz) * z2 - c * (a1.conj() * x3 + a1 * x1 + x1.conj() * a3);
        }
        Gauge::ElectricDipole => {
            let dd = 8.0 * g * g * wc;
            let c = 2.0 * g * wc;
            let f = 4.0 * g;
            d.a1 = i1 * a1 - wc * b1 + f * wc * x1;
            d.a3 = i3 * a3 - wc * b3 + f * wc * x3;
            d.b1 = wc * a1 + i1 * b1;
            d.b3 = wc * a3 + i3 * b3;
            d.x1 = (i1 - gx) * x1 - wa * y1;
            d.x3 = (i3 - gx) * x3 - wa * y3;
            d.y1 = wa * x1 + (i1 - gy) * y1
                - dd * (z0 * x1 + z2.conj() * x3 + x1.conj() * z2)
                + c * (z0 * b1 + z2.conj() * b3 + b1.conj() * z2);
            d.y3 = wa * x3 + (i3 - gy) * y3 - dd * (z0 * x3 + x1 * z2) + c * (z0 * b3 + b1 * z2);
            let mx = x1.conj() * y1 + x3.conj() * y3;
            let mb = b1.conj() * y1 + b3.conj() * y3;
            d.z0 = -gz * (z0 - p.z_pump) + dd * (mx + mx.conj()).re - c * (mb + mb.conj()).re;
            d.z2 = (i2 - gz) * z2 + dd * (x1.conj() * y3 + x1 * y1 + y1.conj() * x3)
                - c * (b1.conj() * y3 + b1 * y1 + y1.conj() * b3);
        }
    }

    let blocks = [
        (1.0, a1, b1, x1, d.x1, d.y1, y1, LOSS_CURVATURE[0]),
        (3.0, a3, b3, x3, d.x3, d.y3, y3, LOSS_CURVATURE[1]),
    ];
    let mut terms = [Complex64::new(0.0, 0.0); 2];
    for (slot, &(n, a, b, x, dx, dy, y, mu)) in terms.iter_mut().zip(&blocks) {
        *slot = match loss {
            Loss::Spectral => -I * kappa * a,
            Loss::Local => {
                // `lab(v) = dv/dt - i n Ω v` is the lab-frame time derivative
                // of harmonic n, exact for the loss-free equations
                let wn = n * w;
                let lab = |dv: Complex64, v: Complex64| dv - I * wn * v;
                let (lx, ly) = (lab(dx, x), lab(dy, y));
                // field momentum π with lab(a) = -ωc π; second lab
                // derivative of π with the loss at its stationary value
                let (pi, lab2_pi) = match gauge {
                    Gauge::Coulomb => {
                        let drive = wc + 4.0 * g * g * wa - I * kappa;
                        (b, -drive * wc * b + 4.0 * g * wa * ly)
                    }
                    Gauge::ElectricDipole => {
                        let f = 4.0 * g;
                        let pi = b - f * x;
                        let lab2_x = -gx * lx - wa * ly;
                        (pi, -(wc - I * kappa) * wc * pi - f * lab2_x)
                    }
                };
                // -iκ f(ω) a with ω a = -i ωc π and ω³ a = i ωc lab²(π)
                -kappa * wc * ((1.0 + mu) * pi / wn + mu * lab2_pi / (wn * wn * wn))
            }
        };
    }
    d.b1 += terms[0];
    d.b3 += terms[1];
    d.time = 1.0;
    d
}

/// Max-abs of every component-equation derivative, evaluated at the state's
/// own frequency. Vanishes (to rounding) exactly at harmonic-balance roots.
pub fn fixed_point_residual(state: &SteadyState, p: &SystemParams) -> f64 {
    let env = EnvelopeState::from_steady(state);
    component_rhs(&env, p, state.gauge).max_abs()
}

fn rhs_vec(v: &[f64; DIM], proto: &EnvelopeState, p: &SystemParams, gauge: Gauge) -> [f64; DIM] {
    envelope_rhs(&proto.with_vec(v), p, gauge).to_vec()
}

fn rk4_step(
    v: &[f64; DIM],
    proto: &EnvelopeState,
    p: &SystemParams,
    gauge: Gauge,
    dt: f64,
) -> [f64; DIM] {
    let add = |a: &[f64; DIM], k: &[f64; DIM], h: f64| {
        let mut o = *a;
        for i in 0..DIM {
            o[i] += h * k[i];
        }
        o
    };
    let k1 = rhs_vec(v, proto, p, gauge);
    let k2 = rhs_vec(&add(v, &k1, 0.5 * dt), proto, p, gauge);
    let k3 = rhs_vec(&add(v, &k2, 0.5 * dt), proto, p, gauge);
    let k4 = rhs_vec(&add(v, &k3, dt), proto, p, gauge);
    let mut o = *v;
    for i in 0..DIM {
        o[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    o
}

/// Recommended step: 5% of the shortest time scale in the frame equations.
pub fn default_step(p: &SystemParams, omega_frame: f64) -> f64 {
    let g = p.coupling();
    let fastest = [
        3.0 * omega_frame.abs(),
        p.wa,
        p.wc * (1.0 + 4.0 * g * g),
        p.kappa,
        p.gamma_down + p.gamma_phi,
        4.0 * g * p.wa.max(p.wc),
    ]
    .into_iter()
    .fold(0.0_f64, f64::max);
    0.05 / fastest
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<EnvelopeState>,
    pub params: SystemParams,
    pub gauge: Gauge,
    pub dt: f64,
    pub stride: usize,
}

impl Trajectory {
    pub fn last(&self) -> &EnvelopeState {
        self.samples.last().expect("trajectory always holds the initial state")
    }
}

/// Classical fixed-step RK4 from `s0.time` to `t_end`, recording every
/// `stride`-th step (plus the initial and final states).
pub fn integrate(
    s0: &EnvelopeState,
    p: &SystemParams,
    gauge: Gauge,
    dt: f64,
    t_end: f64,
    stride: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(LaserError::InvalidParameter {
            field: "dt",
            reason: format!("must be > 0, got {dt}"),
        });
    }
    if !(s0.omega_frame > 0.0) {
        return Err(LaserError::NonphysicalRoot {
            omega: s0.omega_frame,
        });
    }
    let stride = stride.max(1);
    let span = t_end - s0.time;
    let steps = if span > 0.0 { (span / dt).round() as usize } else { 0 };
    let h = if steps > 0 { span / steps as f64 } else { dt };
    let mut samples = vec![*s0];
    let mut v = s0.to_vec();
    for k in 1..=steps {
        v = rk4_step(&v, s0, p, gauge, h);
        let mag = v.iter().fold(0.0_f64, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x.abs()) });
        let t = s0.time + h * k as f64;
        if mag > BLOWUP {
            return Err(LaserError::NumericalBlowup { time: t, magnitude: mag });
        }
        if k % stride == 0 || k == steps {
            let mut s = s0.with_vec(&v);
            s.time = t;
            samples.push(s);
        }
    }
    Ok(Trajectory {
        samples,
        params: *p,
        gauge,
        dt: h,
        stride,
    })
}

/// Settings for [`relax_to_steady`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxConfig {
    /// Integration step; `None` uses [`default_step`].
    pub dt: Option<f64>,
    /// Total integration time allowed.
    pub t_max: f64,
    /// Time between stationarity checks.
    pub check_interval: f64,
    /// Max-abs derivative after removing the uniform phase rotation,
    /// relative to the largest oscillating amplitude, counted as stationary.
    pub drift_tol: f64,
    /// Oscillation amplitude below which the relaxed state is trivial.
    pub trivial_tol: f64,
    /// Relative rotation rate against the frame that counts as co-rotating.
    pub frame_tol: f64,
    /// Largest relative rotation rate that is absorbed by moving the frame;
    /// beyond it the frame is reported as inconsistent.
    pub max_frame_shift: f64,
    /// How often the frame may be moved to the observed rotation frequency.
    pub max_reframes: usize,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        RelaxConfig {
            dt: None,
            t_max: 1e5,
            check_interval: 50.0,
            drift_tol: 1e-11,
            trivial_tol: 1e-9,
            frame_tol: 1e-10,
            max_frame_shift: 1e-2,
            max_reframes: 20,
        }
    }
}

/// Generator of the phase symmetry: `d/dt c_n = -i n δ c_n` for a state
/// rotating at `δ` relative to the frame.
fn rotation_generator(s: &EnvelopeState) -> [f64; DIM] {
    let mut g = *s;
    let mut c = g.complex();
    for (slot, n) in c.iter_mut().zip(ORDERS) {
        *slot *= -I * n;
    }
    g.set_complex(c);
    g.z0 = 0.0;
    g.to_vec()
}

/// Splits the derivative into a uniform phase rotation at rate `δ` and the
/// remaining drift; returns `(δ, drift)`.
pub fn rotation_and_drift(s: &EnvelopeState, p: &SystemParams, gauge: Gauge) -> (f64, f64) {
    let d = envelope_rhs(s, p, gauge).to_vec();
    let gen = rotation_generator(s);
    let gg: f64 = gen.iter().map(|x| x * x).sum();
    let delta = if gg > 0.0 {
        gen.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / gg
    } else {
        0.0
    };
    let drift = d
        .iter()
        .zip(&gen)
        .fold(0.0_f64, |m, (x, y)| m.max((x - delta * y).abs()));
    (delta, drift)
}

/// Integrates until the amplitudes stop changing and packages the result.
///
/// A lasing attractor generally rotates slowly against the frame; the
/// rotation rate is the frequency correction. Small corrections (up to
/// `max_frame_shift`) move the frame and the relaxation continues until the
/// state co-rotates to `frame_tol`, so the result is a root of the component
/// equations. Larger ones give [`LaserError::FrameMismatch`] with the
/// suggested frequency.
pub fn relax_to_steady(
    s0: &EnvelopeState,
    p: &SystemParams,
    gauge: Gauge,
    cfg: &RelaxConfig,
) -> Result<SteadyState> {
    let mut state = *s0;
    let t_end = s0.time + cfg.t_max;
    let mut reframes = 0;
    loop {
        let delta = relax_in_frame(&mut state, p, gauge, cfg, t_end)?;
        if state.oscillation() < cfg.trivial_tol {
            return Ok(SteadyState::trivial(p, gauge));
        }
        let shift = delta.abs() / state.omega_frame;
        if shift <= cfg.frame_tol {
            break;
        }
        if shift > cfg.max_frame_shift || reframes == cfg.max_reframes {
            return Err(LaserError::FrameMismatch {
                frame_omega: state.omega_frame,
                suggested_omega: state.omega_frame + delta,
            });
        }
        reframes += 1;
        state.omega_frame += delta;
    }
    let omega = state.omega_frame;
    let aligned = state.rotated(-state.a1.arg());
    let mut out = SteadyState {
        omega,
        theta: 0.0,
        a1: Complex64::new(aligned.a1.norm(), 0.0),
        a3: aligned.a3,
        b1: aligned.b1,
        b3: aligned.b3,
        x1: aligned.x1,
        x3: aligned.x3,
        y1: aligned.y1,
        y3: aligned.y3,
        z0: aligned.z0,
        z2: aligned.z2,
        gauge,
        residual_norm: 0.0,
        branch: BranchKind::Lasing,
    };
    out.residual_norm = fixed_point_residual(&out, p);
    Ok(out)
}

/// Integrates in the current frame until stationary up to a uniform
/// rotation; returns the rotation rate against the frame.
fn relax_in_frame(
    state: &mut EnvelopeState,
    p: &SystemParams,
    gauge: Gauge,
    cfg: &RelaxConfig,
    t_end: f64,
) -> Result<f64> {
    let dt = cfg.dt.unwrap_or_else(|| default_step(p, state.omega_frame));
    loop {
        let t_next = (state.time + cfg.check_interval).min(t_end);
        let traj = integrate(state, p, gauge, dt, t_next, usize::MAX)?;
        *state = *traj.last();
        if state.oscillation() < cfg.trivial_tol {
            return Ok(0.0);
        }
        let (delta, drift) = rotation_and_drift(state, p, gauge);
        if drift < cfg.drift_tol * state.oscillation() {
            return Ok(delta);
        }
        if state.time >= t_end {
            return Err(LaserError::NoRelaxation {
                t_max: cfg.t_max,
                drift,
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
    Inconclusive,
}

/// Fixed direction used to perturb a state: every real slot gets a
/// deterministic sign pattern, normalized to unit Euclidean length.
fn probe_direction() -> [f64; DIM] {
    let mut v = [0.0; DIM];
    for (k, slot) in v.iter_mut().enumerate() {
        // irregular but deterministic weights
        let w = ((k * 7 + 3) % 11) as f64 / 10.0 + 0.2;
        *slot = if k % 3 == 1 { -w } else { w };
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.map(|x| x / n)
}

/// Perturbs `root` by `eps` (relative to `max(|root|, 1)`) and integrates in
/// the root's frame for `horizon`. The distance to the root, taken modulo the
/// global phase, decides: below `eps/10` is stable, above `10 eps` unstable.
pub fn stability_probe(
    root: &SteadyState,
    p: &SystemParams,
    gauge: Gauge,
    eps: f64,
    horizon: f64,
) -> Stability {
    let frame = if root.is_lasing() {
        root.omega
    } else {
        linear_frame(p, gauge)
    };
    let mut base = EnvelopeState::from_steady(root);
    base.omega_frame = frame;
    let vb = base.to_vec();
    let scale = vb.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let dir = probe_direction();
    let mut vp = vb;
    for k in 0..DIM {
        vp[k] += eps * scale * dir[k];
    }
    let start = base.with_vec(&vp);
    let dt = default_step(p, frame);
    match integrate(&start, p, gauge, dt, horizon, usize::MAX) {
        Err(_) => Stability::Unstable,
        Ok(traj) => {
            let d = traj.last().distance_mod_phase(&base) / scale;
            if d < eps / 10.0 {
                Stability::Stable
            } else if d > 10.0 * eps {
                Stability::Unstable
            } else {
                Stability::Inconclusive
            }
        }
    }
}

fn linear_frame(p: &SystemParams, gauge: Gauge) -> f64 {
    crate::harmonic::linearized_threshold(p, gauge)
        .map(|t| t.omega_th)
        .unwrap_or(p.wc)
}

/// Real-time values of the five mean-field variables at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformSample {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Sums the harmonics back into real waveforms.
pub fn reconstruct_waveforms(state: &SteadyState, t_grid: &[f64]) -> Vec<WaveformSample> {
    let w = state.omega;
    t_grid
        .iter()
        .map(|&t| {
            let e1 = Complex64::from_polar(1.0, -w * t);
            let e2 = Complex64::from_polar(1.0, -2.0 * w * t);
            let e3 = Complex64::from_polar(1.0, -3.0 * w * t);
            let odd = |c1: Complex64, c3: Complex64| 2.0 * (c1 * e1 + c3 * e3).re;
            WaveformSample {
                t,
                a: odd(state.a1, state.a3),
                b: odd(state.b1, state.b3),
                x: odd(state.x1, state.x3),
                y: odd(state.y1, state.y3),
                z: state.z0 + 2.0 * (state.z2 * e2).re,
            }
        })
        .collect()
}
