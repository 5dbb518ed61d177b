//! Bound-state structure of the two analytic reservoir families: critical
//! couplings, mode frequencies, and residues as the coupling grows.
//!
//! Run with: cargo run --release --example localized_modes

use nonmarkov_qdyn::spectral::{SpectralDensity, SystemParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = SystemParams::boson(1.0)?;

    println!("Ohmic family, s = 1, omega_c = 5 (critical eta = 0.2):");
    println!("{:>8} {:>12} {:>12}", "eta", "omega_b", "residue A");
    for eta in [0.05, 0.15, 0.25, 0.5, 1.0, 2.0] {
        let j = SpectralDensity::ohmic_family(eta, 1.0, 5.0)?;
        let modes = j.localized_modes(&sys)?;
        match modes.first() {
            Some(m) => println!("{eta:>8.2} {:>12.6} {:>12.6}", m.omega_b, m.amplitude),
            None => println!("{eta:>8.2} {:>12} {:>12}", "-", "-"),
        }
    }

    for s in [0.5, 1.0, 3.0] {
        let j = SpectralDensity::ohmic_family(0.1, s, 5.0)?;
        println!(
            "s = {s}: critical coupling at omega_c = 5 is {:.4}",
            j.critical_coupling(&sys)?
        );
    }

    println!();
    println!("Tight-binding band, xi = 0.2, band center on resonance:");
    println!("{:>8} {:>24} {:>12}", "eta", "omega_b pair", "residue A");
    for eta in [1.0, 1.3, 1.5, 2.0, 3.0] {
        let j = SpectralDensity::tight_binding(eta, 0.2, 1.0)?;
        let modes = j.localized_modes(&sys)?;
        match modes.len() {
            2 => println!(
                "{eta:>8.2} {:>11.5} {:>12.5} {:>12.6}",
                modes[0].omega_b, modes[1].omega_b, modes[0].amplitude
            ),
            0 => println!("{eta:>8.2} {:>24} {:>12}", "below threshold", "-"),
            _ => println!("{eta:>8.2} single mode at {:.5}", modes[0].omega_b),
        }
    }
    let j = SpectralDensity::tight_binding(1.0, 0.2, 1.0)?;
    println!(
        "two modes detach together at eta_c = {:.4} (zero detuning)",
        j.critical_coupling(&sys)?
    );
    Ok(())
}
