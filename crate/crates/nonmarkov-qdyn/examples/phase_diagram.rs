//! Sweeps the steady propagator amplitude over the (η, ω_c) plane and writes
//! the CSV matrix plus a PGM heatmap; the zero/nonzero boundary is the
//! dissipationless transition at η_c(ω_c) = ω_S/[ω_c Γ(s)].
//!
//! Run with: cargo run --release --example phase_diagram [out_dir]

use nonmarkov_qdyn::cli::{run_phase_diagram, PhaseDiagramConfig, RunOverrides};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "qdyn-example-out/phase_diagram".into());

    let cfg = PhaseDiagramConfig::from_json(
        r#"{
        "family": {"kind": "ohmic", "s": 1.0},
        "system": {"omega_s": 1.0, "statistics": "boson"},
        "eta": {"min": 0.02, "max": 1.2, "count": 30},
        "second": {"min": 1.0, "max": 20.0, "count": 30},
        "heatmap": true
    }"#,
    )?;

    let diagram = run_phase_diagram(&cfg, std::path::Path::new(&out), &RunOverrides::default())?;
    println!(
        "{} x {} sweep written to {out}/ ({} failures)",
        diagram.etas.len(),
        diagram.seconds.len(),
        diagram.failures
    );

    // show the detected boundary against the closed form for a few columns
    println!("{:>8} {:>14} {:>12}", "omega_c", "grid boundary", "1/omega_c");
    for col in [0usize, 10, 20, 29] {
        let omega_c = diagram.seconds[col];
        let first = (0..diagram.etas.len()).find(|&r| diagram.at(r, col) > 0.0);
        let boundary = first
            .map(|r| format!("{:.4}", diagram.etas[r]))
            .unwrap_or_else(|| "beyond grid".into());
        println!("{omega_c:>8.2} {boundary:>14} {:>12.4}", 1.0 / omega_c);
    }
    Ok(())
}
