//! Batch command-line front end over the library pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nonmarkov_qdyn::cli::{
    load_config_text, preset_json, preset_names, run_phase_diagram, run_scenario,
    run_wigner_movie, PhaseDiagramConfig, RunOverrides, ScenarioConfig,
};

#[derive(Parser)]
#[command(name = "qdyn", version, about = "Exact single-mode open-system dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// scenario config file or preset name
    config: String,
    /// output directory
    #[arg(long, default_value = "qdyn-out")]
    out: PathBuf,
    /// worker pool size (default: all cores)
    #[arg(long)]
    parallel: Option<usize>,
    /// time-step override (units of 1/omega_s)
    #[arg(long)]
    dt: Option<f64>,
    /// horizon override (units of 1/omega_s)
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline for one scenario
    Simulate(CommonArgs),
    /// Sweep the steady propagator amplitude over a coupling grid
    PhaseDiagram(CommonArgs),
    /// Render Wigner frames at the configured times
    WignerMovie(CommonArgs),
    /// Inspect the built-in scenario presets
    Presets {
        #[command(subcommand)]
        action: PresetsAction,
    },
}

#[derive(Subcommand)]
enum PresetsAction {
    /// List preset names
    List,
    /// Print a preset config
    Show { name: String },
}

fn overrides(args: &CommonArgs) -> RunOverrides {
    RunOverrides {
        dt: args.dt,
        horizon: args.horizon,
        parallel: args.parallel,
    }
}

fn run() -> nonmarkov_qdyn::Result<()> {
    match Cli::parse().command {
        Command::Simulate(args) => {
            let text = load_config_text(&args.config)?;
            let cfg = ScenarioConfig::from_json(&text)?;
            let report = run_scenario(&cfg, &args.out, &overrides(&args))?;
            if let Some(class) = &report.classification {
                println!("{}", serde_json::to_string(class)?);
            }
            eprintln!("wrote {}", report.out_dir.display());
        }
        Command::PhaseDiagram(args) => {
            let text = load_config_text(&args.config)?;
            let cfg = PhaseDiagramConfig::from_json(&text)?;
            let diagram = run_phase_diagram(&cfg, &args.out, &overrides(&args))?;
            eprintln!(
                "wrote {} ({} x {} grid, {} failures)",
                args.out.display(),
                diagram.etas.len(),
                diagram.seconds.len(),
                diagram.failures
            );
        }
        Command::WignerMovie(args) => {
            let text = load_config_text(&args.config)?;
            let cfg = ScenarioConfig::from_json(&text)?;
            let report = run_wigner_movie(&cfg, &args.out, &overrides(&args))?;
            eprintln!("wrote {}", report.out_dir.display());
        }
        Command::Presets { action } => match action {
            PresetsAction::List => {
                for name in preset_names() {
                    println!("{name}");
                }
            }
            PresetsAction::Show { name } => {
                print!("{}", preset_json(&name)?);
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
