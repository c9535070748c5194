//! Parameter and state types shared by every solver in the crate.
//!
//! All closed-form expressions here are homogeneous in frequency, so they are
//! evaluated in whatever units the parameters carry. [`validate_params`]
//! rescales to `wa = 1`, which is what the solvers use internally.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LaserError, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Light-matter coupling formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gauge {
    #[serde(rename = "coulomb")]
    Coulomb,
    #[serde(rename = "dipole")]
    ElectricDipole,
}

impl Gauge {
    pub const ALL: [Gauge; 2] = [Gauge::Coulomb, Gauge::ElectricDipole];

    pub fn name(self) -> &'static str {
        match self {
            Gauge::Coulomb => "coulomb",
            Gauge::ElectricDipole => "dipole",
        }
    }

    pub fn parse(s: &str) -> Option<Gauge> {
        match s {
            "coulomb" => Some(Gauge::Coulomb),
            "dipole" => Some(Gauge::ElectricDipole),
            _ => None,
        }
    }
}

impl std::fmt::Display for Gauge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One model instance: frequencies, rates, coupling and pump level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Atomic transition frequency; sets the unit scale.
    pub wa: f64,
    /// Bare cavity frequency.
    pub wc: f64,
    /// Coupling normalized by the atomic frequency.
    pub g_tilde: f64,
    /// Cavity field decay rate.
    pub kappa: f64,
    /// Incoherent pump/decay rate.
    pub gamma_down: f64,
    /// Pure dephasing rate.
    pub gamma_phi: f64,
    /// Pump target of the population, in [-1/2, 1/2].
    pub z_pump: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl SystemParams {
    /// Reference parameter set: resonant cavity, `g_tilde = 0.15`,
    /// `gamma_down = 0.05`, `gamma_phi = 0.1`, `kappa = 0.01`, full pump.
    pub fn reference() -> Self {
        SystemParams {
            wa: 1.0,
            wc: 1.0,
            g_tilde: 0.15,
            kappa: 0.01,
            gamma_down: 0.05,
            gamma_phi: 0.1,
            z_pump: 0.5,
        }
    }

    /// Coupling strength in cavity normalization, `g = g_tilde * sqrt(wa / wc)`.
    pub fn coupling(&self) -> f64 {
        self.g_tilde * (self.wa / self.wc).sqrt()
    }

    pub fn gamma_total(&self) -> f64 {
        self.gamma_down + self.gamma_phi
    }

    pub fn with_wc(mut self, wc: f64) -> Self {
        self.wc = wc;
        self
    }

    pub fn with_pump(mut self, z_pump: f64) -> Self {
        self.z_pump = z_pump;
        self
    }

    pub fn with_g_tilde(mut self, g_tilde: f64) -> Self {
        self.g_tilde = g_tilde;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    /// Sets `gamma_phi / (gamma_down + gamma_phi)` keeping the total fixed.
    pub fn with_dephasing_ratio(mut self, ratio: f64) -> Self {
        let total = self.gamma_total();
        self.gamma_phi = ratio * total;
        self.gamma_down = total - self.gamma_phi;
        self
    }

    /// Multiplies every frequency and rate by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        SystemParams {
            wa: self.wa * s,
            wc: self.wc * s,
            kappa: self.kappa * s,
            gamma_down: self.gamma_down * s,
            gamma_phi: self.gamma_phi * s,
            ..*self
        }
    }

    /// Checks every bound without rescaling.
    pub fn check(&self) -> Result<()> {
        fn bad(field: &'static str, reason: impl Into<String>) -> Result<()> {
            Err(LaserError::InvalidParameter {
                field,
                reason: reason.into(),
            })
        }
        let finite = [
            ("wa", self.wa),
            ("wc", self.wc),
            ("g_tilde", self.g_tilde),
            ("kappa", self.kappa),
            ("gamma_down", self.gamma_down),
            ("gamma_phi", self.gamma_phi),
            ("z_pump", self.z_pump),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return bad(field, format!("must be finite, got {v}"));
            }
        }
        if self.wa <= 0.0 {
            return bad("wa", format!("must be > 0, got {}", self.wa));
        }
        if self.wc <= 0.0 {
            return bad("wc", format!("must be > 0, got {}", self.wc));
        }
        if self.g_tilde < 0.0 {
            return bad("g_tilde", format!("must be >= 0, got {}", self.g_tilde));
        }
        if self.kappa < 0.0 {
            return bad("kappa", format!("must be >= 0, got {}", self.kappa));
        }
        // gamma_z = gamma_down divides the population coefficients.
        if self.gamma_down <= 0.0 {
            return bad(
                "gamma_down",
                format!("must be > 0, got {}", self.gamma_down),
            );
        }
        if self.gamma_phi < 0.0 {
            return bad("gamma_phi", format!("must be >= 0, got {}", self.gamma_phi));
        }
        if self.z_pump.abs() > 0.5 {
            return bad(
                "z_pump",
                format!("must satisfy |z_pump| <= 1/2, got {}", self.z_pump),
            );
        }
        Ok(())
    }

    /// Same model expressed in units where `wa = 1`.
    pub fn normalized(&self) -> Self {
        self.scaled(1.0 / self.wa)
    }
}

/// Validates the invariants and rescales to `wa = 1`.
pub fn validate_params(raw: &SystemParams) -> Result<SystemParams> {
    raw.check()?;
    Ok(raw.normalized())
}

/// Decay rates of the polarization, current and population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationRates {
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub gamma_z: f64,
}

pub fn derived_rates(p: &SystemParams) -> DissipationRates {
    DissipationRates {
        gamma_x: p.gamma_phi,
        gamma_y: p.gamma_down + p.gamma_phi,
        gamma_z: p.gamma_down,
    }
}

/// Detuning factors and the six cubic coefficients of the reduced equations,
/// evaluated at one fundamental frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureCoefficients {
    pub delta_c1: Complex64,
    pub delta_c3: Complex64,
    pub delta_a1: Complex64,
    pub delta_a3: Complex64,
    /// C_{|1|^2 1}
    pub c_11_1: Complex64,
    /// C_{|3|^2 1}
    pub c_33_1: Complex64,
    /// C_{(-1)^2 3}
    pub c_m1m1_3: Complex64,
    /// C_{|1|^2 3}
    pub c_11_3: Complex64,
    /// C_{|3|^2 3}
    pub c_33_3: Complex64,
    /// C_{1^3}
    pub c_111: Complex64,
    pub gauge: Gauge,
    pub omega: f64,
    /// Linear term of the fundamental bracket, `Δc1 Δa1 / (8 g^2 ...)`.
    pub linear_1: Complex64,
    /// Linear term of the third-harmonic bracket.
    pub linear_3: Complex64,
    /// Weight of the pump in the third-harmonic bracket (1 or 9).
    pub pump_weight_3: f64,
}

/// Cavity detuning factor `Δc,n` for harmonic `n`.
pub fn cavity_detuning(p: &SystemParams, gauge: Gauge, omega: f64, n: f64) -> Complex64 {
    let g = p.coupling();
    let base = match gauge {
        Gauge::Coulomb => p.wc * (p.wc + 4.0 * g * g * p.wa),
        Gauge::ElectricDipole => p.wc * p.wc,
    };
    Complex64::new(base - n * n * omega * omega, -p.kappa * p.wc)
}

/// Atomic detuning factor `Δa,n`; identical in both gauges.
pub fn atomic_detuning(p: &SystemParams, omega: f64, n: f64) -> Complex64 {
    let r = derived_rates(p);
    let inw = I * (n * omega);
    p.wa * p.wa + (inw - r.gamma_x) * (inw - r.gamma_y)
}

/// Denominator of the linear bracket term: `8 g^2 wc wa^3` (Coulomb) or
/// `8 g^2 wc wa Ω^2` (electric dipole).
pub fn linear_prefactor(p: &SystemParams, gauge: Gauge, omega: f64) -> f64 {
    let g = p.coupling();
    match gauge {
        Gauge::Coulomb => 8.0 * g * g * p.wc * p.wa.powi(3),
        Gauge::ElectricDipole => 8.0 * g * g * p.wc * p.wa * omega * omega,
    }
}

pub fn structure_coefficients(
    p: &SystemParams,
    gauge: Gauge,
    omega: f64,
) -> Result<StructureCoefficients> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(LaserError::NonphysicalRoot { omega });
    }
    let rates = derived_rates(p);
    if !(rates.gamma_z > 0.0) {
        return Err(LaserError::DegenerateRate(
            "gamma_z = gamma_down must be positive".into(),
        ));
    }
    let (gx, gy, gz) = (rates.gamma_x, rates.gamma_y, rates.gamma_z);
    let dc1 = cavity_detuning(p, gauge, omega, 1.0);
    let dc3 = cavity_detuning(p, gauge, omega, 3.0);
    let da1 = atomic_detuning(p, omega, 1.0);
    let da3 = atomic_detuning(p, omega, 3.0);
    let cw = p.wc * p.wa;
    let w1 = I * omega;
    let w3 = I * (3.0 * omega);
    // population response denominators at -2Ω and +2Ω
    let minus = I * (2.0 * omega) - gz;
    let plus = I * (2.0 * omega) + gz;

    let pre = linear_prefactor(p, gauge, omega);
    let linear_1 = dc1 * da1 / pre;
    let linear_3 = dc3 * da3 / pre;

    let (c_11_1, c_33_1, c_m1m1_3, c_11_3, c_33_3, c_111, pump_weight_3) = match gauge {
        Gauge::Coulomb => {
            let re1 = ((w1 - gy) * dc1).re / (gz * cw);
            let re3 = ((w3 - gy) * dc3).re / (gz * cw);
            let cross = ((w3 - gy) * dc3 - (w1 + gy) * dc1.conj()) / (2.0 * cw * minus);
            let c_111 = (w1 - gy) * dc1 / (2.0 * cw * minus);
            (
                -re1 + c_111,
                -re3 + ((w3 + gy) * dc3.conj() - (w1 - gy) * dc1) / (2.0 * cw * plus),
                cross + (w1 + gy) * dc1.conj() / (2.0 * cw * plus),
                -re1 + cross,
                Complex64::from(-re3),
                c_111,
                1.0,
            )
        }
        Gauge::ElectricDipole => {
            let re1 = ((w1 - gx) * dc1).re / (gz * cw);
            let re3 = ((w3 - gx) * dc3).re / (gz * cw);
            let mixed = (w3 - gx) * dc3 - 9.0 * (w1 + gx) * dc1.conj();
            (
                -re1 + (w1 - gx) * dc1 / (2.0 * cw * minus),
                -re3 + ((w3 + gx) * dc3.conj() - 9.0 * (w1 - gx) * dc1) / (2.0 * cw * plus),
                -mixed / (6.0 * cw * minus) - 3.0 * (w1 + gx) * dc1.conj() / (2.0 * cw * plus),
                -9.0 * re1 + mixed / (2.0 * cw * minus),
                Complex64::from(-9.0 * re3),
                -3.0 * (w1 - gx) * dc1 / (2.0 * cw * minus),
                9.0,
            )
        }
    };

    Ok(StructureCoefficients {
        delta_c1: dc1,
        delta_c3: dc3,
        delta_a1: da1,
        delta_a3: da3,
        c_11_1,
        c_33_1,
        c_m1m1_3,
        c_11_3,
        c_33_3,
        c_111,
        gauge,
        omega,
        linear_1,
        linear_3,
        pump_weight_3,
    })
}

/// Unknowns of the reduced harmonic-balance system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedUnknowns {
    pub omega: f64,
    pub amp: f64,
    pub eta: Complex64,
}

impl ReducedUnknowns {
    pub fn new(omega: f64, amp: f64, eta: Complex64) -> Self {
        ReducedUnknowns { omega, amp, eta }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.omega, self.amp, self.eta.re, self.eta.im]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        ReducedUnknowns {
            omega: v[0],
            amp: v[1],
            eta: Complex64::new(v[2], v[3]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BranchKind {
    Trivial,
    Lasing,
}

/// Oscillating steady state: fundamental frequency plus all frequency
/// components of the field, polarization, current and population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub omega: f64,
    pub theta: f64,
    pub a1: Complex64,
    pub a3: Complex64,
    pub b1: Complex64,
    pub b3: Complex64,
    pub x1: Complex64,
    pub x3: Complex64,
    pub y1: Complex64,
    pub y3: Complex64,
    pub z0: f64,
    pub z2: Complex64,
    pub gauge: Gauge,
    pub residual_norm: f64,
    pub branch: BranchKind,
}

impl SteadyState {
    /// Non-lasing state: no oscillation, population at the pump level.
    /// `omega` is stored as 0.
    pub fn trivial(p: &SystemParams, gauge: Gauge) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        SteadyState {
            omega: 0.0,
            theta: 0.0,
            a1: zero,
            a3: zero,
            b1: zero,
            b3: zero,
            x1: zero,
            x3: zero,
            y1: zero,
            y3: zero,
            z0: p.z_pump,
            z2: zero,
            gauge,
            residual_norm: 0.0,
            branch: BranchKind::Trivial,
        }
    }

    pub fn is_lasing(&self) -> bool {
        self.branch == BranchKind::Lasing
    }

    pub fn abs_a1_sq(&self) -> f64 {
        self.a1.norm_sqr()
    }

    pub fn abs_a3_sq(&self) -> f64 {
        self.a3.norm_sqr()
    }

    /// Reduced unknowns of this state (θ = 0 convention assumed).
    pub fn reduced(&self) -> ReducedUnknowns {
        let amp = self.a1.norm();
        let eta = if amp > 0.0 {
            self.a3 / self.a1 * (-2.0 * I * self.a1.arg()).exp()
        } else {
            Complex64::new(0.0, 0.0)
        };
        ReducedUnknowns {
            omega: self.omega,
            amp,
            eta,
        }
    }

    /// Distance in (Ω / wa, |a1|, η) used for deduplication and branch continuity.
    pub fn distance(&self, other: &SteadyState, wa: f64) -> f64 {
        let (u, v) = (self.reduced(), other.reduced());
        let dw = (u.omega - v.omega) / wa;
        let da = u.amp - v.amp;
        let de = (u.eta - v.eta).norm();
        (dw * dw + da * da + de * de).sqrt()
    }
}

/// Fills all frequency components from a reduced solution using the
/// closed-form relations of the chosen gauge; `a1` is taken real (θ = 0).
pub fn reconstruct_state(u: &ReducedUnknowns, p: &SystemParams, gauge: Gauge) -> SteadyState {
    if !(u.amp > 0.0) {
        return SteadyState::trivial(p, gauge);
    }
    let rates = derived_rates(p);
    let (gx, gy, gz) = (rates.gamma_x, rates.gamma_y, rates.gamma_z);
    let g = p.coupling();
    let w = u.omega;
    let a1 = Complex64::new(u.amp, 0.0);
    let a3 = u.eta * a1;
    let dc1 = cavity_detuning(p, gauge, w, 1.0);
    let dc3 = cavity_detuning(p, gauge, w, 3.0);
    let w1 = I * w;
    let w3 = I * (3.0 * w);

    let (b1, b3, x1, x3, y1, y3, z0, z2) = match gauge {
        Gauge::Coulomb => {
            let b1 = w1 / p.wc * a1;
            let b3 = w3 / p.wc * a3;
            let norm = 4.0 * g * p.wc * p.wa * p.wa;
            let x1 = (w1 - gy) * dc1 / norm * a1;
            let x3 = (w3 - gy) * dc3 / norm * a3;
            let y1 = -p.wa / (w1 - gy) * x1;
            let y3 = -p.wa / (w3 - gy) * x3;
            let pop = (a1.conj() * x1 + a3.conj() * x3).re * 2.0;
            let z0 = p.z_pump - 2.0 * g * p.wa / gz * pop;
            let z2 = 2.0 * g * p.wa / (2.0 * w1 - gz)
                * (a1.conj() * x3 + a1 * x1 + x1.conj() * a3);
            (b1, b3, x1, x3, y1, y3, z0, z2)
        }
        Gauge::ElectricDipole => {
            let field = Complex64::new(p.wc, -p.kappa);
            let b1 = -field / w1 * a1;
            let b3 = -field / w3 * a3;
            let y1 = -(w1 - gx) * dc1 / (I * 4.0 * g * p.wc * p.wa * w) * a1;
            let y3 = -(w3 - gx) * dc3 / (I * 12.0 * g * p.wc * p.wa * w) * a3;
            let x1 = p.wa / (w1 - gx) * y1;
            let x3 = p.wa / (w3 - gx) * y3;
            let s = a1.conj() * y1 + 3.0 * a3.conj() * y3;
            // (s - s*) is purely imaginary, so Z0 is real
            let z0 = p.z_pump + (I * 2.0 * g * w / gz * (s - s.conj())).re;
            let z2 = -(I * 2.0 * g * w) / (2.0 * w1 - gz)
                * (a1.conj() * y3 - a1 * y1 - 3.0 * y1.conj() * a3);
            (b1, b3, x1, x3, y1, y3, z0, z2)
        }
    };

    let residual_norm = crate::harmonic::hb_residuals(u, p, gauge)
        .iter()
        .fold(0.0_f64, |m, r| m.max(r.abs()));

    SteadyState {
        omega: w,
        theta: 0.0,
        a1,
        a3,
        b1,
        b3,
        x1,
        x3,
        y1,
        y3,
        z0,
        z2,
        gauge,
        residual_norm,
        branch: BranchKind::Lasing,
    }
}
