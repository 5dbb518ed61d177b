//! Validates the continuum Volterra and quadrature solvers against the exact
//! evolution of an explicitly discretized reservoir (star Hamiltonian,
//! diagonalized once).
//!
//! Run with: cargo run --release --example oracle_crosscheck

use nonmarkov_qdyn::greens::{solve_u, solve_v, TimeGrid};
use nonmarkov_qdyn::oracle::{discretize, OraclePropagator};
use nonmarkov_qdyn::spectral::{BathParams, SpectralDensity, Statistics, SystemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = SystemParams::boson(1.0)?;
    let bath = BathParams::new(2.0, 0.0)?;

    println!(
        "{:<14} {:>6} {:>12} {:>12} {:>12}",
        "reservoir", "N_b", "max|Δu|", "max|Δv|", "unitarity"
    );
    for (name, j) in [
        ("ohmic weak", SpectralDensity::ohmic_family(0.001, 1.0, 10.0)?),
        ("ohmic strong", SpectralDensity::ohmic_family(0.5, 1.0, 5.0)?),
        ("tight binding", SpectralDensity::tight_binding(3.0, 0.2, 1.0)?),
    ] {
        for n_b in [200usize, 400] {
            let grid = TimeGrid::from_horizon(20.0, 0.01)?;
            let u = solve_u(&j, &sys, &grid)?;
            let v = solve_v(&j, &sys, &bath, &u)?;
            let bathd = discretize(&j, n_b)?;
            let prop = OraclePropagator::new(&bathd, &sys);

            let mut du = 0.0f64;
            for k in (0..=grid.n_steps).step_by(5) {
                du = du.max((u.u[k] - prop.u(grid.time(k))).norm());
            }
            let mut dv = 0.0f64;
            for k in (0..=grid.n_steps).step_by(100) {
                let exact = prop.v(grid.time(k), &bath, Statistics::Boson)?;
                dv = dv.max((v.v[k] - exact).abs());
            }
            println!(
                "{:<14} {:>6} {:>12.3e} {:>12.3e} {:>12.3e}",
                name,
                n_b,
                du,
                dv,
                prop.unitarity_defect(20.0)
            );
        }
    }
    Ok(())
}
