//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p usc-laser --test acceptance --release`
//! for representative timings.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rustfft::FftPlanner;
use usc_laser::envelope::{reconstruct_waveforms, relax_to_steady, EnvelopeState, RelaxConfig};
use usc_laser::harmonic::{lasing_roots, pump_grid};
use usc_laser::sweep::hysteresis;
use usc_laser::*;
use usc_laser_cli::oracle::{fuzz_gauge, fuzz_params};

type Res<T> = std::result::Result<T, String>;
type Check = fn() -> Res<String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Res<()> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ref_params() -> SystemParams {
    SystemParams::reference()
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn within(t: Instant, limit: Duration) -> Res<Duration> {
    let e = t.elapsed();
    ensure(e < limit, || format!("took {e:.2?}, limit {limit:?}"))?;
    Ok(e)
}

fn c1_threshold() -> Res<String> {
    let t = Instant::now();
    let a = linearized_threshold(&ref_params(), Gauge::Coulomb).map_err(|e| e.to_string())?.z_th;
    let b = linearized_threshold(&ref_params().with_wc(0.25), Gauge::Coulomb).map_err(|e| e.to_string())?.z_th;
    let e = within(t, Duration::from_secs(1))?;
    ensure((a / 1.56e-2 - 1.0).abs() <= 0.01, || format!("wc=1: z_th {a}"))?;
    ensure((b / 9.62e-2 - 1.0).abs() <= 0.01, || format!("wc=0.25: z_th {b}"))?;
    Ok(format!("z_th {a:.5e} (wc=1), {b:.5e} (wc=0.25) in {e:.2?}"))
}

fn c2_bistability_window() -> Res<String> {
    let t = Instant::now();
    let spec = MapSpec::pump_cavity(ref_params(), Gauge::Coulomb);
    let cell = 1.0 / 80.0;
    let m = map_pump_cavity(&spec).map_err(|e| e.to_string())?;
    let rows = m.bistable_rows();
    ensure(m.rows == 81 && m.cols == 1001, || "wrong grid".into())?;
    let (lo, hi) = match (rows.first(), rows.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err("no bistable rows".into()),
    };
    ensure((lo - 0.15).abs() <= cell + 1e-12, || format!("lower edge {lo}"))?;
    ensure((hi - 0.29).abs() <= cell + 1e-12, || format!("upper edge {hi}"))?;
    let inside = spec.axis1.values().into_iter().filter(|&w| w >= lo && w <= hi).count();
    ensure(inside == rows.len(), || format!("bistable rows not contiguous: {rows:?}"))?;
    let d = map_pump_cavity(&MapSpec::pump_cavity(ref_params(), Gauge::ElectricDipole)).map_err(|e| e.to_string())?;
    ensure(d.bistable_rows().is_empty(), || format!("dipole rows {:?}", d.bistable_rows()))?;
    let e = within(t, Duration::from_secs(600))?;
    Ok(format!("coulomb rows [{lo:.4}, {hi:.4}] ({} rows), dipole none, in {e:.2?}", rows.len()))
}

fn c3_dipole_bistability() -> Res<String> {
    let mut out = Vec::new();
    for (g, k) in [(0.4, 0.01), (0.15, 0.001)] {
        let p = ref_params().with_g_tilde(g).with_kappa(k);
        let m = map_pump_cavity(&MapSpec::pump_cavity(p, Gauge::ElectricDipole)).map_err(|e| e.to_string())?;
        let rows = m.bistable_rows();
        ensure(!rows.is_empty(), || format!("g={g} kappa={k}: no bistable row"))?;
        out.push(format!("g={g} kappa={k}: {} rows in [{:.4}, {:.4}]", rows.len(), rows[0], rows[rows.len() - 1]));
    }
    Ok(out.join("; "))
}

/// Least-squares slope and coefficient of determination.
fn fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    (sxy / sxx, sxy * sxy / (sxx * syy))
}

/// Smallest lasing root at `z_th (1 + d)` for each `d`.
fn above_onset(ds: &[f64]) -> Res<Vec<(f64, SteadyState)>> {
    let p = ref_params();
    let z_th = linearized_threshold(&p, Gauge::Coulomb).map_err(|e| e.to_string())?.z_th;
    ds.iter()
        .map(|&d| {
            let z = z_th * (1.0 + d);
            lasing_roots(&p.with_pump(z), Gauge::Coulomb, &cfg())
                .into_iter()
                .min_by(|a, b| a.abs_a1_sq().total_cmp(&b.abs_a1_sq()))
                .map(|s| (z - z_th, s))
                .ok_or_else(|| format!("no root at z = {z}"))
        })
        .collect()
}

fn c4_harmonic_scaling() -> Res<String> {
    // |a1|^2 ∝ (Z - Z_th): two decades of pump excess span one decade of |a1|
    let ds: Vec<f64> = (0..=20).map(|k| 1e-3 * 10f64.powf(k as f64 / 10.0)).collect();
    let pts = above_onset(&ds)?;
    let la1: Vec<f64> = pts.iter().map(|(_, s)| s.a1.norm().ln()).collect();
    let la3: Vec<f64> = pts.iter().map(|(_, s)| s.a3.norm().ln()).collect();
    let lz2: Vec<f64> = pts.iter().map(|(_, s)| s.z2.norm().ln()).collect();
    let span = (la1[la1.len() - 1] - la1[0]) / 10f64.ln();
    ensure(span > 0.95, || format!("|a1| spans only {span:.3} decades"))?;
    let (k3, _) = fit(&la1, &la3);
    let (k2, _) = fit(&la1, &lz2);
    ensure((2.9..=3.1).contains(&k3), || format!("a3 slope {k3}"))?;
    ensure((1.9..=2.1).contains(&k2), || format!("z2 slope {k2}"))?;
    let lin: Vec<f64> = (1..=20).map(|k| 5e-3 * k as f64).collect();
    let pts = above_onset(&lin)?;
    let x: Vec<f64> = pts.iter().map(|(d, _)| *d).collect();
    let y: Vec<f64> = pts.iter().map(|(_, s)| s.abs_a1_sq()).collect();
    let (_, r2) = fit(&x, &y);
    ensure(r2 > 0.99, || format!("R2 {r2}"))?;
    Ok(format!("slopes a3 {k3:.4}, z2 {k2:.4}; R2 {r2:.6}"))
}

fn c5_third_harmonic() -> Res<String> {
    let p = ref_params().with_wc(0.25);
    let h = hysteresis(&p, Gauge::Coulomb, &pump_grid(0.0, 0.5, 101), &cfg(), 1e-3).map_err(|e| e.to_string())?;
    ensure(h.closed, || "no closed loop at wc = 0.25".into())?;
    let (lo, hi) = h.raw.window.unwrap();
    let upper: Vec<f64> = h
        .down
        .points
        .iter()
        .filter(|b| b.z_pump >= lo && b.z_pump <= hi)
        .map(|b| 3.0 * b.state.omega)
        .collect();
    ensure(!upper.is_empty(), || "empty window".into())?;
    let (mn, mx) = upper.iter().fold((f64::INFINITY, 0.0_f64), |(a, b), &w| (a.min(w), b.max(w)));
    ensure(mn >= 1.1 && mx <= 1.3, || format!("3 Omega in [{mn}, {mx}] on the upper branch"))?;
    let s = lasing_roots(&ref_params().with_pump(0.5), Gauge::Coulomb, &cfg());
    let w = 3.0 * s.first().ok_or("no root at wc = 1")?.omega;
    ensure((3.0..=3.2).contains(&w), || format!("wc=1: 3 Omega {w}"))?;
    Ok(format!("upper branch 3 Omega in [{mn:.4}, {mx:.4}]; wc=1 3 Omega {w:.4}"))
}

fn c6_oracle_suite() -> Res<String> {
    let t = Instant::now();
    let mut out = Vec::new();
    for g in Gauge::ALL {
        let f = fuzz_gauge(g, 200, 1, &cfg(), 1e-9);
        ensure(f.failures.is_empty(), || format!("{g}: {:?}", f.failures))?;
        ensure(f.trivial_exact, || format!("{g}: trivial residual not exactly zero"))?;
        ensure(f.roots > 0, || format!("{g}: no roots found"))?;
        out.push(format!("{g}: {} roots, max residual {:.2e}", f.roots, f.max_residual));
    }
    let e = within(t, Duration::from_secs(120))?;
    Ok(format!("{} in {e:.2?}", out.join("; ")))
}

fn c7_dynamics() -> Res<String> {
    let p = ref_params().with_pump(0.05);
    let mut out = Vec::new();
    for g in Gauge::ALL {
        let target = lasing_roots(&p, g, &cfg()).into_iter().next().ok_or("no root")?;
        let frame = linearized_threshold(&p, g).map_err(|e| e.to_string())?.omega_th;
        let s0 = EnvelopeState::seeded_trivial(&p, frame, 1e-3);
        let s = relax_to_steady(&s0, &p, g, &RelaxConfig::default()).map_err(|e| e.to_string())?;
        let rel = (s.a1.norm() - target.a1.norm()).abs() / target.a1.norm();
        ensure(s.is_lasing() && rel < 1e-4, || format!("{g}: relative |a1| error {rel}"))?;
        out.push(format!("{g} {rel:.1e}"));

        let below = p.with_pump(0.005);
        let s0 = EnvelopeState::seeded_trivial(&below, frame, 1e-3);
        let s = relax_to_steady(&s0, &below, g, &RelaxConfig::default()).map_err(|e| e.to_string())?;
        ensure(!s.is_lasing(), || format!("{g}: lasing below threshold"))?;
    }
    // frequency identity on every Coulomb root of a grid plus fuzzed sets
    let mut sets: Vec<SystemParams> = Vec::new();
    for wc in [0.2, 0.25, 0.5, 1.0, 1.3] {
        for z in [0.05, 0.2, 0.35, 0.5] {
            sets.push(ref_params().with_wc(wc).with_pump(z));
        }
    }
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(11);
    sets.extend((0..50).map(|_| fuzz_params(&mut rng)));
    let (mut n, mut worst) = (0, 0.0_f64);
    for q in &sets {
        for s in lasing_roots(q, Gauge::Coulomb, &cfg()) {
            let lhs = (s.omega - q.wc) / q.wc;
            let rhs = (s.b1 / s.a1).norm() - 1.0;
            let ulp = f64::EPSILON * (1.0 + s.omega / q.wc);
            worst = worst.max((lhs - rhs).abs() / ulp);
            n += 1;
        }
    }
    ensure(n > 0, || "no Coulomb roots".into())?;
    ensure(worst <= 8.0, || format!("frequency identity off by {worst:.1} ulp"))?;
    Ok(format!(
        "relaxed |a1| rel. error {}; below threshold trivial; identity on {n} roots within {worst:.1} ulp",
        out.join(", ")
    ))
}

fn spectrum(x: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf.iter().map(|c| c.norm() / x.len() as f64).collect()
}

fn c8_parity() -> Res<String> {
    let n = 64;
    let (mut checked, mut worst) = (0, 0.0_f64);
    for g in Gauge::ALL {
        for (wc, z) in [(1.0, 0.05), (1.0, 0.5), (0.25, 0.3), (0.6, 0.4)] {
            let p = ref_params().with_wc(wc).with_pump(z);
            for s in lasing_roots(&p, g, &cfg()) {
                let period = 2.0 * std::f64::consts::PI / s.omega;
                let t: Vec<f64> = (0..n).map(|k| period * k as f64 / n as f64).collect();
                let w = reconstruct_waveforms(&s, &t);
                let sigs: [(Vec<f64>, usize); 5] = [
                    (w.iter().map(|v| v.a).collect(), 0),
                    (w.iter().map(|v| v.b).collect(), 0),
                    (w.iter().map(|v| v.x).collect(), 0),
                    (w.iter().map(|v| v.y).collect(), 0),
                    (w.iter().map(|v| v.z).collect(), 1),
                ];
                for (sig, forbidden) in &sigs {
                    let f = spectrum(sig);
                    let peak = f.iter().cloned().fold(0.0, f64::max);
                    for (k, m) in f.iter().enumerate() {
                        if k % 2 == *forbidden {
                            worst = worst.max(m / peak);
                        }
                    }
                }
                checked += 1;
            }
        }
    }
    ensure(checked >= 4, || format!("only {checked} roots checked"))?;
    ensure(worst < 1e-10, || format!("spurious bin {worst:.2e}"))?;
    Ok(format!("{checked} roots, largest spurious bin {worst:.1e} of peak"))
}

fn run_cli(args: &[&str], dir: &Path, threads: &str) -> Res<()> {
    let o = Command::new(env!("CARGO_BIN_EXE_usc-laser"))
        .args(args)
        .current_dir(dir)
        .env("USC_LASER_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.success(), || {
        format!("{args:?} exited {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr))
    })
}

fn c9_determinism() -> Res<String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    std::fs::write(d.join("sweep.json"), r#"{"params":{"wc":0.25}}"#).map_err(|e| e.to_string())?;
    std::fs::write(
        d.join("map.json"),
        r#"{"task":{"map":{"axis1":{"param":"wc","min":0.05,"max":1.05,"points":41},
            "axis2":{"param":"z_pump","min":0.0,"max":0.5,"points":201}}}}"#,
    )
    .map_err(|e| e.to_string())?;
    let mut files = 0;
    for cmd in ["sweep", "map"] {
        let cfg = format!("{cmd}.json");
        for (out, threads) in [("a", "1"), ("b", "4"), ("c", "4")] {
            run_cli(&[cmd, "--config", &cfg, "--out", out], d, threads)?;
        }
        for ext in ["csv", "json", "svg"] {
            let name = format!("{cmd}.{ext}");
            let a = std::fs::read(d.join("a").join(&name)).map_err(|e| e.to_string())?;
            for other in ["b", "c"] {
                let b = std::fs::read(d.join(other).join(&name)).map_err(|e| e.to_string())?;
                ensure(a == b, || format!("{name} differs between runs a and {other}"))?;
            }
            files += 1;
        }
    }
    Ok(format!("{files} artifacts byte-identical over 3 runs (1 and 4 workers)"))
}

fn main() {
    let checks: [(&str, &str, Check); 9] = [
        ("1", "threshold regression", c1_threshold),
        ("2", "bistability window", c2_bistability_window),
        ("3", "gauge dependence of bistability", c3_dipole_bistability),
        ("4", "harmonic scaling", c4_harmonic_scaling),
        ("5", "third-harmonic resonance", c5_third_harmonic),
        ("6", "fixed-point oracle suite", c6_oracle_suite),
        ("7", "dynamics cross-check", c7_dynamics),
        ("8", "harmonic parity", c8_parity),
        ("9", "determinism", c9_determinism),
    ];
    let mut failed = 0;
    for (id, name, check) in checks {
        let t = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        match res {
            Ok(msg) => println!("PASS criterion {id} ({name}): {msg} [{:.2?}]", t.elapsed()),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {id} ({name}): {msg} [{:.2?}]", t.elapsed());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
