//! Decoherence of a cat state watched through its Wigner function: renders
//! frames along a thermal-like relaxation and writes CSV + PGM images.
//!
//! Run with: cargo run --release --example cat_wigner [out_dir]

use num_complex::Complex64;

use nonmarkov_qdyn::fock::{cat_state, default_n_max, evolve_state};
use nonmarkov_qdyn::greens::{solve_u, solve_v, TimeGrid};
use nonmarkov_qdyn::spectral::{BathParams, SpectralDensity, Statistics, SystemParams};
use nonmarkov_qdyn::wigner::{wigner_transform, PhaseSpaceGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "qdyn-example-out/cat_wigner".into());
    std::fs::create_dir_all(&out)?;

    let sys = SystemParams::boson(1.0)?;
    let bath = BathParams::new(2.0, 0.0)?;
    let j = SpectralDensity::ohmic_family(0.1, 1.0, 5.0)?;

    let grid = TimeGrid::from_horizon(20.0, 0.01)?;
    let u = solve_u(&j, &sys, &grid)?;
    let v = solve_v(&j, &sys, &bath, &u)?;
    let v_max = v.v.iter().cloned().fold(0.0, f64::max);

    let cat = cat_state(Complex64::new(1.0, 0.0), 0.0, 20)?;
    let n_max = default_n_max(&cat, v_max);
    let pgrid = PhaseSpaceGrid {
        x_min: -8.0,
        x_max: 8.0,
        p_min: -8.0,
        p_max: 8.0,
        nx: 201,
        np: 201,
    };

    println!("{:>6} {:>10} {:>10} {:>12}", "t", "W min", "W max", "coherences");
    for (idx, t) in [0.0, 0.5, 2.0, 10.0, 20.0].iter().enumerate() {
        let k = grid.index_of(*t);
        let rho = evolve_state(&cat, u.u[k], v.v[k].max(0.0), Statistics::Boson, n_max)?;
        let frame = wigner_transform(&rho, &pgrid, Statistics::Boson, grid.time(k))?;
        println!(
            "{:>6.1} {:>10.5} {:>10.5} {:>12.3e}",
            t,
            frame.min(),
            frame.max(),
            rho.coherence_norm()
        );
        let base = format!("{out}/frame_{idx}_{t}");
        let mut csv = Vec::new();
        frame.write_csv(&mut csv)?;
        std::fs::write(format!("{base}.csv"), csv)?;
        let mut pgm = Vec::new();
        frame.write_pgm(&mut pgm)?;
        std::fs::write(format!("{base}.pgm"), pgm)?;
        std::fs::write(
            format!("{base}.json"),
            serde_json::to_string_pretty(&frame.sidecar_json())?,
        )?;
    }
    println!("frames written under {out}/");
    println!("interference fringes (negative W) die long before the blobs merge");
    Ok(())
}
