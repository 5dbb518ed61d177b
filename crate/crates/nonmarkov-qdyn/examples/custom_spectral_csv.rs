//! Loads a tabulated spectral density from a two-column CSV and runs the
//! kernel, bound-state, and propagator machinery on it.
//!
//! Run with: cargo run --release --example custom_spectral_csv

use nonmarkov_qdyn::greens::{solve_u, TimeGrid};
use nonmarkov_qdyn::spectral::{SpectralDensity, SystemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // a lopsided double-band reservoir, as it might come out of a measurement
    let mut csv = String::from("omega,J\n");
    for i in 0..=400 {
        let w = 0.2 + 2.6 * i as f64 / 400.0;
        let band1 = (1.0 - ((w - 0.8) / 0.3).powi(2)).max(0.0);
        let band2 = 0.5 * (1.0 - ((w - 2.2) / 0.4).powi(2)).max(0.0);
        csv.push_str(&format!("{w},{}\n", 0.9 * (band1 + band2)));
    }

    let j = SpectralDensity::tabulated_from_csv(csv.as_bytes())?;
    let (lo, hi) = j.support();
    println!("support [{lo}, {hi}], total weight {:.5}", j.total_weight()?);

    let g0 = j.memory_kernel(0.0)?;
    let g1 = j.memory_kernel(1.0)?;
    println!("memory kernel g(0) = {:.5}, |g(1)| = {:.5}", g0.re, g1.norm());

    let sys = SystemParams::boson(1.0)?;
    let modes = j.localized_modes(&sys)?;
    println!("localized modes: {}", modes.len());
    for m in &modes {
        println!("  omega_b = {:.5}, residue = {:.5}", m.omega_b, m.amplitude);
    }
    println!(
        "critical scale factor before the first mode binds: {:.4}",
        j.critical_coupling(&sys)?
    );

    let grid = TimeGrid::from_horizon(30.0, 0.01)?;
    let trace = solve_u(&j, &sys, &grid)?;
    println!(
        "|u| at t = 10, 20, 30: {:.4}, {:.4}, {:.4}",
        trace.u[grid.index_of(10.0)].norm(),
        trace.u[grid.index_of(20.0)].norm(),
        trace.u[grid.index_of(30.0)].norm()
    );
    Ok(())
}
