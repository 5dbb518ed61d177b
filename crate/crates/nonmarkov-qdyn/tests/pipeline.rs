//! Cross-module integration checks that exercise the pipeline the way the
//! examples and the batch front end do.

use num_complex::Complex64;

use nonmarkov_qdyn::cli::{
    run_scenario, run_wigner_movie, RunOverrides, ScenarioConfig, PRESETS_ENV,
};
use nonmarkov_qdyn::fock::{cat_state, default_n_max, evolve_state, InitialState};
use nonmarkov_qdyn::greens::{asymptotic_u, solve_u, solve_v, steady_asymptotics, TimeGrid};
use nonmarkov_qdyn::spectral::{BathParams, SpectralDensity, Statistics, SystemParams};

fn boson() -> SystemParams {
    SystemParams::boson(1.0).unwrap()
}

#[test]
fn dissipative_steady_state_forgets_the_initial_state() {
    let j = SpectralDensity::ohmic_family(0.1, 1.0, 5.0).unwrap();
    let sys = boson();
    let bath = BathParams::new(2.0, 0.0).unwrap();
    let grid = TimeGrid::new(0.0, 0.01, 2000).unwrap();
    let u = solve_u(&j, &sys, &grid).unwrap();
    let v = solve_v(&j, &sys, &bath, &u).unwrap();
    let k = grid.n_steps;
    let v_end = v.v[k];

    let inits = [
        InitialState::vacuum(),
        InitialState::fock(1),
        cat_state(Complex64::new(1.0, 0.0), 0.0, 20).unwrap(),
        InitialState::from_coefficients(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ])
        .unwrap(),
    ];
    let n_max = default_n_max(&inits[2], v_end);
    let states: Vec<_> = inits
        .iter()
        .map(|init| evolve_state(init, u.u[k], v_end, Statistics::Boson, n_max).unwrap())
        .collect();
    for (i, a) in states.iter().enumerate() {
        for b in states.iter().skip(i + 1) {
            let d = a.trace_distance(b);
            assert!(d < 1e-3, "steady states differ by {d:.2e}");
        }
    }
}

#[test]
fn localized_regime_remembers_the_initial_occupation() {
    let j = SpectralDensity::ohmic_family(0.5, 1.0, 5.0).unwrap();
    let sys = boson();
    let bath = BathParams::new(2.0, 0.0).unwrap();
    let grid = TimeGrid::new(0.0, 0.01, 5000).unwrap();
    let u = solve_u(&j, &sys, &grid).unwrap();
    let v = solve_v(&j, &sys, &bath, &u).unwrap();
    let k = grid.n_steps;

    let cat = cat_state(Complex64::new(1.0, 0.0), 0.0, 20).unwrap();
    let dn0 = cat.mean_occupation();
    let n_max = default_n_max(&cat, v.v[k]);
    let rho_cat = evolve_state(&cat, u.u[k], v.v[k], Statistics::Boson, n_max).unwrap();
    let rho_vac =
        evolve_state(&InitialState::vacuum(), u.u[k], v.v[k], Statistics::Boson, n_max).unwrap();
    let dmean = rho_cat.mean_particle_number() - rho_vac.mean_particle_number();
    let expect = u.u[k].norm_sqr() * dn0;
    assert!(
        (dmean - expect).abs() < 0.02 * expect,
        "Δ mean {dmean} vs |u_s|² Δn̄(t0) = {expect}"
    );
}

#[test]
fn near_markov_propagator_dies_within_the_long_horizon() {
    // coarse dt suffices to bound |u| at the operational steady time
    let j = SpectralDensity::ohmic_family(0.001, 1.0, 10.0).unwrap();
    let grid = TimeGrid::new(0.0, 0.05, 40000).unwrap();
    let trace = solve_u(&j, &boson(), &grid).unwrap();
    let tail = trace.tail_mean_abs(5.0);
    assert!(tail < 1e-2, "|u| at t = 2000 is {tail:.3e}");
}

#[test]
fn asymptotic_u_matches_late_time_solution() {
    let j = SpectralDensity::tight_binding(3.0, 0.2, 1.0).unwrap();
    let sys = boson();
    let bath = BathParams::new(2.0, 0.0).unwrap();
    let asym = steady_asymptotics(&j, &sys, &bath).unwrap();
    assert!(asym.is_oscillatory);
    assert_eq!(asym.modes.len(), 2);
    let grid = TimeGrid::new(0.0, 0.01, 4000).unwrap();
    let trace = solve_u(&j, &sys, &grid).unwrap();
    // late times: the branch-cut transient has decayed below a percent
    for k in [3000usize, 3500, 4000] {
        let predicted = asymptotic_u(&asym.modes, grid.time(k), 0.0);
        let got = trace.u[k];
        assert!(
            (predicted - got).norm() < 0.02,
            "t={}: asymptotic {predicted} vs solved {got}",
            grid.time(k)
        );
    }
}

#[test]
fn wigner_movie_writes_frames() {
    let cfg = ScenarioConfig::from_json(
        r#"{
        "system": {"omega_s": 1.0, "statistics": "boson"},
        "bath": {"temperature": 2.0, "mu": 0.0},
        "spectral": {"type": "ohmic", "eta": 0.1, "s": 1.0, "omega_c": 5.0},
        "initial_state": {"type": "cat", "alpha0": 1.0},
        "horizon": 10.0,
        "outputs": {"traces": false, "classification": false, "wigner_at": [0.0, 10.0]}
    }"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    run_wigner_movie(&cfg, dir.path(), &RunOverrides::default()).unwrap();
    for name in [
        "frame_0_0.csv",
        "frame_0_0.pgm",
        "frame_0_0.json",
        "frame_1_10.csv",
        "frame_1_10.pgm",
        "frame_1_10.json",
        "manifest.json",
    ] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    // the t = 0 frame is the initial cat: interference makes it negative
    let text = std::fs::read_to_string(dir.path().join("frame_0_0.json")).unwrap();
    let sidecar: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(sidecar["w_min"].as_f64().unwrap() < -0.05 / std::f64::consts::PI);
}

#[test]
fn preset_directory_override_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let custom = r#"{"note": "not a real preset"}"#;
    std::fs::write(dir.path().join("fig3a.json"), custom).unwrap();
    // run in a child process-free way: set, read, restore
    let old = std::env::var(PRESETS_ENV).ok();
    std::env::set_var(PRESETS_ENV, dir.path());
    let text = nonmarkov_qdyn::cli::preset_json("fig3a").unwrap();
    match old {
        Some(v) => std::env::set_var(PRESETS_ENV, v),
        None => std::env::remove_var(PRESETS_ENV),
    }
    assert_eq!(text, custom);
}

#[test]
fn tabulated_csv_spectral_density_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("band.csv");
    // half-ellipse band around ω = 1, written as a table
    let mut text = String::from("omega,J\n");
    let n = 200;
    for i in 0..=n {
        let w = 0.5 + 1.0 * i as f64 / n as f64;
        let j = 0.8 * (1.0 - ((w - 1.0) / 0.5).powi(2)).max(0.0).sqrt();
        text.push_str(&format!("{w},{j}\n"));
    }
    std::fs::write(&csv_path, text).unwrap();

    let cfg = ScenarioConfig::from_json(&format!(
        r#"{{
        "system": {{"omega_s": 1.0, "statistics": "boson"}},
        "bath": {{"temperature": 2.0, "mu": 0.0}},
        "spectral": {{"type": "tabulated_csv", "path": {:?}}},
        "initial_state": {{"type": "number", "n": 1}},
        "horizon": 15.0,
        "outputs": {{"traces": true, "classification": false}}
    }}"#,
        csv_path.to_str().unwrap()
    ))
    .unwrap();
    let out = tempfile::tempdir().unwrap();
    let report = run_scenario(&cfg, out.path(), &RunOverrides::default()).unwrap();
    assert!(report.manifest_path.is_file());
    assert!(out.path().join("u.csv").is_file());
}
