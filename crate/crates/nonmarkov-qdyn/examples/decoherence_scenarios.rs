//! Drives the four decoherence scenarios end to end and prints one
//! classification line per reservoir, with the evidence behind each label.
//!
//! Run with: cargo run --release --example decoherence_scenarios

use nonmarkov_qdyn::fock::{classify_steady_state, ClassifyOptions};
use nonmarkov_qdyn::greens::{solve_u, solve_v, TimeGrid};
use nonmarkov_qdyn::spectral::{BathParams, SpectralDensity, SystemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = SystemParams::boson(1.0)?;
    let bath = BathParams::new(2.0, 0.0)?;

    // a wide weak reservoir thermalizes; narrower or stronger coupling does not
    let cases: Vec<(&str, SpectralDensity, f64)> = vec![
        (
            "wide + weak    ",
            SpectralDensity::ohmic_family(0.01, 1.0, 10.0)?,
            60.0,
        ),
        (
            "moderate       ",
            SpectralDensity::ohmic_family(0.1, 1.0, 5.0)?,
            20.0,
        ),
        (
            "strong coupling",
            SpectralDensity::ohmic_family(0.5, 1.0, 5.0)?,
            50.0,
        ),
        (
            "finite band    ",
            SpectralDensity::tight_binding(3.0, 0.2, 1.0)?,
            50.0,
        ),
    ];

    println!(
        "{:<16} {:>20} {:>8} {:>9} {:>9} {:>9}",
        "reservoir", "label", "modes", "|u| asym", "steady v", "n̄(ω_S,T)"
    );
    for (name, j, horizon) in cases {
        let grid = TimeGrid::from_horizon(horizon, 0.01)?;
        let u = solve_u(&j, &sys, &grid)?;
        let v = solve_v(&j, &sys, &bath, &u)?;
        let modes = j.localized_modes(&sys)?;
        let class = classify_steady_state(&modes, &u, &v, &sys, &bath, &ClassifyOptions::default())?;
        println!(
            "{:<16} {:>20} {:>8} {:>9.4} {:>9.4} {:>9.4}",
            name,
            class.label.to_string(),
            class.evidence.n_localized_modes,
            class.evidence.u_asymptote,
            class.evidence.steady_v,
            class.evidence.thermal_occupation,
        );
    }
    Ok(())
}
