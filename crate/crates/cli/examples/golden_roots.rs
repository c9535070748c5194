//! Regenerates `golden/roots.json`: `cargo run -p usc-laser --example golden_roots > crates/cli/golden/roots.json`.

use usc_laser::harmonic::lasing_roots;
use usc_laser::{Gauge, SolverConfig, SystemParams};
use usc_laser_cli::oracle::{GoldenFile, GoldenRoot};

fn main() {
    let cfg = SolverConfig::default();
    let r = SystemParams::reference();
    let cases: Vec<(&str, Gauge, SystemParams)> = vec![
        ("reference z0.05", Gauge::Coulomb, r.with_pump(0.05)),
        ("reference z0.05", Gauge::ElectricDipole, r.with_pump(0.05)),
        ("reference z0.5", Gauge::Coulomb, r.with_pump(0.5)),
        ("reference z0.5", Gauge::ElectricDipole, r.with_pump(0.5)),
        ("wc0.25 z0.3", Gauge::Coulomb, r.with_wc(0.25).with_pump(0.3)),
        ("g0.4 kappa0.01 wc0.25 z0.3", Gauge::ElectricDipole, r.with_g_tilde(0.4).with_wc(0.25).with_pump(0.3)),
        ("scaled x2 z0.05", Gauge::Coulomb, r.with_pump(0.05).scaled(2.0)),
        ("scaled x0.5 z0.2", Gauge::ElectricDipole, r.with_pump(0.2).scaled(0.5)),
    ];
    let mut roots = Vec::new();
    for (label, gauge, p) in cases {
        let found = lasing_roots(&p, gauge, &cfg);
        assert!(!found.is_empty(), "no lasing root for {label} ({gauge})");
        for (k, s) in found.iter().enumerate() {
            let name = if found.len() > 1 { format!("{label} root{k}") } else { label.to_string() };
            roots.push(GoldenRoot::from_state(&name, &p, s));
        }
    }
    println!("{}", serde_json::to_string_pretty(&GoldenFile { roots }).unwrap());
}
