//! Batch front end: JSON scenario configs, the full pipeline
//! (spectral → Green functions → states → Wigner frames → classification),
//! phase-diagram sweeps, and run manifests.
//!
//! Every run writes into an output directory and records a `manifest.json`
//! listing the echoed config, versions, wall time, and a size + SHA-256 entry
//! for each emitted file. Sweeps and frame renders are dispatched to a
//! bounded worker pool; results are collected in index order so outputs are
//! bit-identical across runs regardless of the worker count.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fock::{
    cat_state, classify_steady_state, default_n_max, evolve_state, ClassifyOptions, InitialState,
    SteadyStateClass,
};
use crate::greens::{self, solve_u, solve_v, TimeGrid};
use crate::master::coefficients_from_uv;
use crate::spectral::{BathParams, SpectralDensity, Statistics, SystemParams};
use crate::wigner::{wigner_transform, PhaseSpaceGrid, WignerFrame};

/// Environment variable naming an alternate preset directory.
pub const PRESETS_ENV: &str = "NONMARKOV_QDYN_PRESETS";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub omega_s: f64,
    pub statistics: Statistics,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub temperature: f64,
    #[serde(default)]
    pub mu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectralConfig {
    Ohmic { eta: f64, s: f64, omega_c: f64 },
    TightBinding { eta: f64, xi: f64, omega_c: f64 },
    Tabulated { omega: Vec<f64>, j: Vec<f64> },
    /// two-column CSV (omega, J) with a header line
    TabulatedCsv { path: String },
}

impl SpectralConfig {
    pub fn build(&self) -> Result<SpectralDensity> {
        match self {
            Self::Ohmic { eta, s, omega_c } => SpectralDensity::ohmic_family(*eta, *s, *omega_c),
            Self::TightBinding { eta, xi, omega_c } => {
                SpectralDensity::tight_binding(*eta, *xi, *omega_c)
            }
            Self::Tabulated { omega, j } => SpectralDensity::tabulated(omega.clone(), j.clone()),
            Self::TabulatedCsv { path } => {
                let file = std::fs::File::open(path)?;
                SpectralDensity::tabulated_from_csv(file)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateConfig {
    /// superposition of |±α₀⟩ with relative phase φ
    Cat {
        alpha0: f64,
        #[serde(default)]
        alpha0_im: f64,
        #[serde(default)]
        phase: f64,
    },
    /// explicit Fock coefficients as [re, im] pairs
    Fock { coefficients: Vec<[f64; 2]> },
    /// number state |n⟩
    Number { n: usize },
}

impl InitialStateConfig {
    pub fn build(&self, statistics: Statistics) -> Result<InitialState> {
        let state = match self {
            Self::Cat {
                alpha0,
                alpha0_im,
                phase,
            } => {
                if statistics == Statistics::Fermion {
                    return Err(Error::Config(
                        "cat states need a bosonic mode".into(),
                    ));
                }
                let alpha = Complex64::new(*alpha0, *alpha0_im);
                cat_state(alpha, *phase, crate::fock::cat_truncation_rule(alpha) + 4)?
            }
            Self::Fock { coefficients } => InitialState::from_coefficients(
                coefficients
                    .iter()
                    .map(|[re, im]| Complex64::new(*re, *im))
                    .collect(),
            )?,
            Self::Number { n } => InitialState::fock(*n),
        };
        if statistics == Statistics::Fermion && state.max_level() > 1 {
            return Err(Error::Config(
                "fermionic initial states live on levels {0, 1}".into(),
            ));
        }
        Ok(state)
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default = "default_true")]
    pub traces: bool,
    #[serde(default)]
    pub coefficients: bool,
    #[serde(default)]
    pub states_at: Vec<f64>,
    #[serde(default)]
    pub wigner_at: Vec<f64>,
    #[serde(default = "default_true")]
    pub classification: bool,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            traces: true,
            coefficients: false,
            states_at: Vec::new(),
            wigner_at: Vec::new(),
            classification: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub system: SystemConfig,
    pub bath: BathConfig,
    pub spectral: SpectralConfig,
    pub initial_state: InitialStateConfig,
    /// final time in units of 1/ω_S
    pub horizon: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub wigner_grid: Option<PhaseSpaceGrid>,
    #[serde(default)]
    pub classify: Option<ClassifyOptions>,
    /// keep every m-th sample when serializing the v trace
    #[serde(default)]
    pub v_decimation: Option<usize>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        if !(cfg.horizon > 0.0) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        Ok(cfg)
    }
}

/// Runtime overrides from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOverrides {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub parallel: Option<usize>,
}

/// A file recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

fn write_file(dir: &Path, name: &str, contents: &[u8], files: &mut Vec<FileEntry>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    let mut hasher = Sha256::new();
    hasher.update(contents);
    files.push(FileEntry {
        name: name.to_string(),
        bytes: contents.len() as u64,
        sha256: format!("{:x}", hasher.finalize()),
    });
    Ok(())
}

fn write_manifest(
    dir: &Path,
    command: &str,
    config: serde_json::Value,
    files: Vec<FileEntry>,
    warnings: Vec<String>,
    classification: Option<&SteadyStateClass>,
    started: Instant,
    parallelism: usize,
) -> Result<PathBuf> {
    let manifest = serde_json::json!({
        "command": command,
        "config": config,
        "version": env!("CARGO_PKG_VERSION"),
        "unix_time": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "parallelism": parallelism,
        "warnings": warnings,
        "files": files,
        "classification": classification,
    });
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

/// Everything a scenario run produced.
#[derive(Debug)]
pub struct ScenarioReport {
    pub out_dir: PathBuf,
    pub classification: Option<SteadyStateClass>,
    pub manifest_path: PathBuf,
}

fn time_label(t: f64) -> String {
    // file-name friendly: 12.5 -> "12.5", 500 -> "500"
    let s = format!("{t}");
    s.replace('-', "m")
}

fn build_pool(parallel: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Runs the full pipeline for one scenario config and writes the requested
/// outputs plus a manifest into `out_dir`.
pub fn run_scenario(
    config: &ScenarioConfig,
    out_dir: &Path,
    overrides: &RunOverrides,
) -> Result<ScenarioReport> {
    let started = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let pool = build_pool(overrides.parallel)?;
    let mut files = Vec::new();
    let mut warnings = Vec::new();

    let sys = SystemParams::new(config.system.omega_s, config.system.statistics)?;
    let bath = BathParams::new(config.bath.temperature, config.bath.mu)?;
    let j = config.spectral.build()?;
    let init = config.initial_state.build(sys.statistics)?;

    let horizon = overrides.horizon.unwrap_or(config.horizon);
    let dt = overrides
        .dt
        .or(config.dt)
        .unwrap_or_else(|| greens::default_dt(&j, &sys));
    let grid = TimeGrid::from_horizon(horizon, dt)?;

    let u = solve_u(&j, &sys, &grid)?;
    let v = solve_v(&j, &sys, &bath, &u)?;
    let modes = j.localized_modes(&sys)?;
    let v_max = v.v.iter().cloned().fold(0.0, f64::max);
    let n_max = config
        .n_max
        .unwrap_or_else(|| default_n_max(&init, v_max));

    if config.outputs.traces {
        let mut buf = Vec::new();
        u.write_csv(&mut buf)?;
        write_file(out_dir, "u.csv", &buf, &mut files)?;
        let mut buf = Vec::new();
        let v_out = v.decimate(config.v_decimation.unwrap_or(1));
        v_out.write_csv(&mut buf)?;
        write_file(out_dir, "v.csv", &buf, &mut files)?;
    }

    if config.outputs.coefficients {
        let coeffs = coefficients_from_uv(&u, &v, sys.statistics)?;
        if coeffs.singular.iter().any(|&s| s) {
            warnings.push("singular master-equation coefficients flagged where |u| crossed zero".into());
        }
        let mut buf = Vec::new();
        coeffs.write_csv(&mut buf)?;
        write_file(out_dir, "coefficients.csv", &buf, &mut files)?;
    }

    for (idx, &t) in config.outputs.states_at.iter().enumerate() {
        let k = grid.index_of(t);
        let rho = evolve_state(&init, u.u[k], v.v[k].max(0.0), sys.statistics, n_max)?;
        let label = time_label(grid.time(k));
        let mut buf = Vec::new();
        rho.write_csv(&mut buf)?;
        write_file(out_dir, &format!("state_{idx}_{label}.csv"), &buf, &mut files)?;
        let env = rho.to_json(grid.time(k), sys.statistics);
        write_file(
            out_dir,
            &format!("state_{idx}_{label}.json"),
            serde_json::to_string_pretty(&env)?.as_bytes(),
            &mut files,
        )?;
    }

    if !config.outputs.wigner_at.is_empty() {
        let frames = pool.install(|| {
            render_frames(
                config,
                &init,
                &u,
                &v,
                sys.statistics,
                n_max,
                &config.outputs.wigner_at,
            )
        })?;
        for (idx, frame) in frames.iter().enumerate() {
            write_frame(out_dir, idx, frame, &mut files)?;
        }
    }

    let classification = if config.outputs.classification {
        let opts = config.classify.unwrap_or_default();
        Some(classify_steady_state(&modes, &u, &v, &sys, &bath, &opts)?)
    } else {
        None
    };

    let manifest_path = write_manifest(
        out_dir,
        "simulate",
        serde_json::to_value(config)?,
        files,
        warnings,
        classification.as_ref(),
        started,
        pool.current_num_threads(),
    )?;

    Ok(ScenarioReport {
        out_dir: out_dir.to_path_buf(),
        classification,
        manifest_path,
    })
}

/// Auto-sized grid: half-width 4 standard deviations of the widest expected
/// state (thermal width plus the initial displacement), floor ±5.
fn auto_grid(init: &InitialState, v_max: f64) -> PhaseSpaceGrid {
    let n_expect = init.mean_occupation() + v_max;
    let sigma = (0.5 * (1.0 + 2.0 * n_expect)).sqrt();
    let half = (4.0 * sigma).max(5.0);
    PhaseSpaceGrid {
        x_min: -half,
        x_max: half,
        p_min: -half,
        p_max: half,
        nx: 201,
        np: 201,
    }
}

fn render_frames(
    config: &ScenarioConfig,
    init: &InitialState,
    u: &crate::greens::PropagatorTrace,
    v: &crate::greens::CorrelationTrace,
    statistics: Statistics,
    n_max: usize,
    times: &[f64],
) -> Result<Vec<WignerFrame>> {
    let v_max = v.v.iter().cloned().fold(0.0, f64::max);
    let grid = config.wigner_grid.unwrap_or_else(|| auto_grid(init, v_max));
    grid.validate()?;
    times
        .par_iter()
        .map(|&t| {
            let k = u.grid.index_of(t);
            let rho = evolve_state(init, u.u[k], v.v[k].max(0.0), statistics, n_max)?;
            wigner_transform(&rho, &grid, statistics, u.grid.time(k))
        })
        .collect()
}

fn write_frame(
    out_dir: &Path,
    idx: usize,
    frame: &WignerFrame,
    files: &mut Vec<FileEntry>,
) -> Result<()> {
    let label = time_label(frame.time);
    let mut buf = Vec::new();
    frame.write_csv(&mut buf)?;
    write_file(out_dir, &format!("frame_{idx}_{label}.csv"), &buf, files)?;
    let mut buf = Vec::new();
    frame.write_pgm(&mut buf)?;
    write_file(out_dir, &format!("frame_{idx}_{label}.pgm"), &buf, files)?;
    write_file(
        out_dir,
        &format!("frame_{idx}_{label}.json"),
        serde_json::to_string_pretty(&frame.sidecar_json())?.as_bytes(),
        files,
    )?;
    Ok(())
}

/// Wigner-movie entry point: frames only (traces and classification are left
/// to `run_scenario`).
pub fn run_wigner_movie(
    config: &ScenarioConfig,
    out_dir: &Path,
    overrides: &RunOverrides,
) -> Result<ScenarioReport> {
    let started = Instant::now();
    if config.system.statistics == Statistics::Fermion {
        return Err(Error::Unsupported("Wigner movies need a bosonic mode".into()));
    }
    if config.outputs.wigner_at.is_empty() {
        return Err(Error::Config(
            "wigner-movie needs outputs.wigner_at times".into(),
        ));
    }
    std::fs::create_dir_all(out_dir)?;
    let pool = build_pool(overrides.parallel)?;
    let mut files = Vec::new();

    let sys = SystemParams::new(config.system.omega_s, config.system.statistics)?;
    let bath = BathParams::new(config.bath.temperature, config.bath.mu)?;
    let j = config.spectral.build()?;
    let init = config.initial_state.build(sys.statistics)?;
    let horizon = overrides.horizon.unwrap_or(config.horizon);
    let dt = overrides
        .dt
        .or(config.dt)
        .unwrap_or_else(|| greens::default_dt(&j, &sys));
    let grid = TimeGrid::from_horizon(horizon, dt)?;
    let u = solve_u(&j, &sys, &grid)?;
    let v = solve_v(&j, &sys, &bath, &u)?;
    let v_max = v.v.iter().cloned().fold(0.0, f64::max);
    let n_max = config.n_max.unwrap_or_else(|| default_n_max(&init, v_max));

    let frames = pool.install(|| {
        render_frames(
            config,
            &init,
            &u,
            &v,
            sys.statistics,
            n_max,
            &config.outputs.wigner_at,
        )
    })?;
    for (idx, frame) in frames.iter().enumerate() {
        write_frame(out_dir, idx, frame, &mut files)?;
    }

    let manifest_path = write_manifest(
        out_dir,
        "wigner-movie",
        serde_json::to_value(config)?,
        files,
        Vec::new(),
        None,
        started,
        pool.current_num_threads(),
    )?;
    Ok(ScenarioReport {
        out_dir: out_dir.to_path_buf(),
        classification: None,
        manifest_path,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.count < 2 || !(self.max > self.min) || !(self.min > 0.0) {
            return Err(Error::Config(
                "axis needs positive bounds, max > min, count >= 2".into(),
            ));
        }
        Ok((0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseFamily {
    /// sweep (η, ω_c) at fixed Ohmicity s
    Ohmic { s: f64 },
    /// sweep (η, detuning ω_S - ω_c) at fixed ξ
    TightBinding { xi: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramConfig {
    pub family: PhaseFamily,
    pub system: SystemConfig,
    pub eta: AxisSpec,
    /// ω_c for the Ohmic family, detuning magnitude for tight binding
    pub second: AxisSpec,
    #[serde(default = "default_true")]
    pub heatmap: bool,
}

impl PhaseDiagramConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Phase-diagram result: steady |u| = Σ_j A_j on the (η, second) grid.
#[derive(Debug)]
pub struct PhaseDiagram {
    pub etas: Vec<f64>,
    pub seconds: Vec<f64>,
    /// row-major [i_eta * seconds.len() + i_second]; NaN marks a failed point
    pub u_steady: Vec<f64>,
    pub failures: usize,
}

impl PhaseDiagram {
    pub fn at(&self, i_eta: usize, i_second: usize) -> f64 {
        self.u_steady[i_eta * self.seconds.len() + i_second]
    }
}

/// Computes the steady-state amplitude over the grid (parallel over points).
pub fn compute_phase_diagram(
    config: &PhaseDiagramConfig,
    parallel: Option<usize>,
) -> Result<PhaseDiagram> {
    let pool = build_pool(parallel)?;
    let sys = SystemParams::new(config.system.omega_s, config.system.statistics)?;
    let etas = config.eta.values()?;
    let seconds = config.second.values()?;
    let family = config.family.clone();

    let u_steady: Vec<f64> = pool.install(|| {
        (0..etas.len() * seconds.len())
            .into_par_iter()
            .map(|idx| {
                let eta = etas[idx / seconds.len()];
                let second = seconds[idx % seconds.len()];
                let j = match &family {
                    PhaseFamily::Ohmic { s } => SpectralDensity::ohmic_family(eta, *s, second),
                    PhaseFamily::TightBinding { xi } => {
                        // detuning = ω_S - ω_c
                        SpectralDensity::tight_binding(eta, *xi, sys.omega_s - second)
                    }
                };
                let j = match j {
                    Ok(j) => j,
                    Err(_) => return f64::NAN,
                };
                match j.localized_modes(&sys) {
                    Ok(modes) => modes.iter().map(|m| m.amplitude).sum(),
                    Err(_) => f64::NAN,
                }
            })
            .collect()
    });

    let failures = u_steady.iter().filter(|v| v.is_nan()).count();
    Ok(PhaseDiagram {
        etas,
        seconds,
        u_steady,
        failures,
    })
}

/// Runs a sweep and writes `phase_diagram.csv` (columns param1 = η,
/// param2, u_steady) plus an optional PGM heatmap and the manifest.
pub fn run_phase_diagram(
    config: &PhaseDiagramConfig,
    out_dir: &Path,
    overrides: &RunOverrides,
) -> Result<PhaseDiagram> {
    let started = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let mut warnings = Vec::new();

    let diagram = compute_phase_diagram(config, overrides.parallel)?;
    if diagram.failures > 0 {
        warnings.push(format!("{} grid points failed root finding", diagram.failures));
    }

    let mut csv = Vec::new();
    writeln!(csv, "param1,param2,u_steady")?;
    for (i, &eta) in diagram.etas.iter().enumerate() {
        for (k, &second) in diagram.seconds.iter().enumerate() {
            writeln!(csv, "{eta},{second},{}", diagram.at(i, k))?;
        }
    }
    write_file(out_dir, "phase_diagram.csv", &csv, &mut files)?;

    if config.heatmap {
        let mut pgm = Vec::new();
        let hi = diagram
            .u_steady
            .iter()
            .cloned()
            .filter(|v| v.is_finite())
            .fold(0.0f64, f64::max);
        let scale = if hi > 0.0 { 65535.0 / hi } else { 0.0 };
        write!(
            pgm,
            "P5\n{} {}\n65535\n",
            diagram.seconds.len(),
            diagram.etas.len()
        )?;
        // rows: η from max (top) to min (bottom); columns: second axis ascending
        for i in (0..diagram.etas.len()).rev() {
            for k in 0..diagram.seconds.len() {
                let v = diagram.at(i, k);
                let px = if v.is_finite() {
                    (v * scale).round().clamp(0.0, 65535.0) as u16
                } else {
                    0
                };
                pgm.extend_from_slice(&px.to_be_bytes());
            }
        }
        write_file(out_dir, "phase_diagram.pgm", &pgm, &mut files)?;
        let sidecar = serde_json::json!({
            "u_max": hi,
            "maxval": 65535,
            "pixel": "round(u_steady / u_max * maxval)",
            "rows": "eta from max (top) to min (bottom)",
            "cols": "second axis ascending",
            "eta_range": [config.eta.min, config.eta.max],
            "second_range": [config.second.min, config.second.max],
        });
        write_file(
            out_dir,
            "phase_diagram.json",
            serde_json::to_string_pretty(&sidecar)?.as_bytes(),
            &mut files,
        )?;
    }

    write_manifest(
        out_dir,
        "phase-diagram",
        serde_json::to_value(config)?,
        files,
        warnings,
        None,
        started,
        overrides.parallel.unwrap_or_else(rayon::current_num_threads),
    )?;
    Ok(diagram)
}

/// Built-in presets.
const PRESETS: &[(&str, &str)] = &[
    ("fig3a", include_str!("../presets/fig3a.json")),
    ("fig3b", include_str!("../presets/fig3b.json")),
    ("fig3c", include_str!("../presets/fig3c.json")),
    ("fig3d", include_str!("../presets/fig3d.json")),
    ("fig2-sub", include_str!("../presets/fig2-sub.json")),
    ("fig2-ohmic", include_str!("../presets/fig2-ohmic.json")),
    ("fig2-super", include_str!("../presets/fig2-super.json")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// Loads a preset by name, honoring the `NONMARKOV_QDYN_PRESETS` directory
/// override before falling back to the built-ins.
pub fn preset_json(name: &str) -> Result<String> {
    if let Ok(dir) = std::env::var(PRESETS_ENV) {
        let candidate = Path::new(&dir).join(format!("{name}.json"));
        if candidate.is_file() {
            return Ok(std::fs::read_to_string(candidate)?);
        }
    }
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| text.to_string())
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown preset {name:?}; available: {}",
                preset_names().join(", ")
            ))
        })
}

/// Reads a config from a file path or a preset name.
pub fn load_config_text(path_or_preset: &str) -> Result<String> {
    let p = Path::new(path_or_preset);
    if p.is_file() {
        Ok(std::fs::read_to_string(p)?)
    } else {
        preset_json(path_or_preset)
    }
}
