use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gkdv::config::RunConfig;
use gkdv::io::{grid_function_from_csv, grid_function_to_csv, read_text, to_json, write_text};
use gkdv::pipeline::Pipeline;
use gkdv::{CliError, CliResult};
use gkdv_core::grid::Grid;
use gkdv_core::linearized::{spectrum_summary, LinearizedOperator};
use gkdv_core::modulation::{decompose_with, epsilon_h1_norm, DecomposeOptions, ModulationState};
use gkdv_core::soliton::SolitonConstants;

#[derive(Parser)]
#[command(
    name = "gkdv",
    version,
    about = "Minimal-mass blow-up toolkit for the quintic gKdV equation"
)]
struct Cli {
    /// Run configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory for artifacts and the manifest.
    #[arg(long, global = true, default_value = "run")]
    output_dir: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress progress output on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Configuration overrides, `key=value`.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Run parameters as flags; each is the same as the `key=value` override of the same name.
#[derive(Args)]
struct RunFlags {
    #[arg(long)]
    n: Option<u32>,
    #[arg(long = "K", alias = "order")]
    order: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    spacing: Option<f64>,
    /// `left,right`.
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    #[arg(long)]
    snapshot_stride: Option<usize>,
}

impl RunFlags {
    fn as_overrides(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push(format!("{k}={v}"));
            }
        };
        push("n", self.n.map(|v| v.to_string()));
        push("K", self.order.map(|v| v.to_string()));
        push("gamma", self.gamma.map(|v| v.to_string()));
        push("t_end", self.t_end.map(|v| v.to_string()));
        push("dt", self.dt.map(|v| v.to_string()));
        push("spacing", self.spacing.map(|v| v.to_string()));
        push("domain", self.domain.clone());
        push("snapshot_stride", self.snapshot_stride.map(|v| v.to_string()));
        out
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the soliton constants and (P, Q) for the configured order.
    Constants(Overrides),
    /// Spectrum of the linearized operator on [-L, L].
    Spectrum {
        #[arg(long, default_value_t = 20.0)]
        half_width: f64,
        #[arg(long, default_value_t = 1.0 / 32.0)]
        spacing: f64,
        #[command(flatten)]
        rest: Overrides,
    },
    /// Build the profiles P_1..P_K.
    Profiles(Overrides),
    /// Build the bootstrap data and evolve it.
    Evolve {
        #[command(flatten)]
        flags: RunFlags,
        #[command(flatten)]
        rest: Overrides,
    },
    /// Decompose the stored trajectory, or a single snapshot with `--input`.
    Decompose {
        /// Snapshot CSV as written by `evolve`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Initial guess `lambda,x,b` for `--input`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        guess: Option<Vec<f64>>,
        #[command(flatten)]
        rest: Overrides,
    },
    /// Run the acceptance checks on a stored run.
    Verify {
        /// Only rebuild report.md from the stored verification.
        #[arg(long)]
        report_only: bool,
        #[command(flatten)]
        rest: Overrides,
    },
    /// All stages; cached stages are skipped.
    Pipeline {
        #[command(flatten)]
        flags: RunFlags,
        #[command(flatten)]
        rest: Overrides,
    },
}

impl Command {
    /// Flags first, so that explicit `key=value` items win.
    fn overrides(&self) -> Vec<String> {
        match self {
            Command::Constants(o) | Command::Profiles(o) => o.overrides.clone(),
            Command::Spectrum { rest, .. } | Command::Decompose { rest, .. } | Command::Verify { rest, .. } => {
                rest.overrides.clone()
            }
            Command::Evolve { flags, rest } | Command::Pipeline { flags, rest } => {
                let mut all = flags.as_overrides();
                all.extend(rest.overrides.iter().cloned());
                all
            }
        }
    }
}

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    for o in cli.command.overrides() {
        cfg.apply_override(&o)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn pipeline(cli: &Cli, cfg: RunConfig) -> CliResult<Pipeline> {
    let mut p = Pipeline::new(&cli.output_dir, cfg)?;
    p.verbose = !cli.quiet;
    Ok(p)
}

fn print_criteria(v: &gkdv::pipeline::Verification) -> CliResult<()> {
    for c in &v.criteria {
        println!("{}", c.summary_line());
        for f in c.failures() {
            println!("    {}", f.describe());
        }
    }
    if v.passed() {
        Ok(())
    } else {
        let failed: Vec<String> = v
            .criteria
            .iter()
            .filter(|c| !c.passed())
            .map(|c| c.id.to_string())
            .collect();
        Err(CliError::Acceptance(format!("criteria {} failed", failed.join(", "))))
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Constants(_) => {
            let mut p = pipeline(cli, cfg)?;
            let ps = p.profiles(p.config.order)?;
            let c = SolitonConstants::compute().with_pq_pairing(ps.pq_pairing());
            let text = to_json(&c)?;
            write_text(&cli.output_dir.join("constants.json"), &text)?;
            print!("{text}");
        }
        Command::Spectrum {
            half_width, spacing, ..
        } => {
            let grid = Grid::line_with_spacing(-half_width, *half_width, *spacing)?;
            let s = spectrum_summary(&LinearizedOperator::new(&grid)?)?;
            print!("{}", to_json(&s)?);
        }
        Command::Profiles(_) => {
            let mut p = pipeline(cli, cfg)?;
            let ps = p.profiles(p.config.order)?;
            println!(
                "K = {}, betas = {:?}, (P, Q) = {:.10}",
                ps.order,
                ps.betas,
                ps.pq_pairing()
            );
        }
        Command::Evolve { .. } => {
            let mut p = pipeline(cli, cfg)?;
            let ps = p.profiles(p.config.order)?;
            let init = p.initial(&ps)?;
            let traj = p.evolve(&init)?;
            println!(
                "{} snapshots to t = {:.4}; mass drift {:.3e}, energy drift {:.3e}",
                traj.snapshots.len(),
                traj.snapshots.last().map_or(f64::NAN, |s| s.time),
                traj.max_relative_mass_drift(),
                traj.max_relative_energy_drift()
            );
        }
        Command::Decompose {
            input: Some(path),
            guess,
            ..
        } => {
            let g = guess
                .clone()
                .filter(|g| g.len() == 3)
                .ok_or_else(|| CliError::Config("--input needs --guess lambda,x,b".into()))?;
            let mut p = pipeline(cli, cfg)?;
            let ps = p.profiles(p.config.order)?;
            let u = grid_function_from_csv(&read_text(path)?)?;
            let opts = DecomposeOptions {
                gamma: Some(p.config.gamma),
                ..DecomposeOptions::default()
            };
            let start = ModulationState::exact(g[0], g[1], g[2], p.config.gamma, 0.0, &opts.reference_grid);
            let s = decompose_with(&u, &ps, &start, &opts)?;
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("snapshot");
            write_text(
                &cli.output_dir.join(format!("{stem}_eps.csv")),
                &grid_function_to_csv(&s.epsilon, "y"),
            )?;
            println!(
                "lambda = {:.12}, x = {:.12}, b = {:.12}, |eps|_H1 = {:.4e}, iterations = {}",
                s.lambda,
                s.x_center,
                s.b,
                epsilon_h1_norm(&s)?,
                s.iterations
            );
        }
        Command::Decompose { input: None, .. } => {
            let mut p = pipeline(cli, cfg)?;
            let ps = p.profiles(p.config.order)?;
            let init = p.initial(&ps)?;
            let traj = p.evolve(&init)?;
            let t = p.decompose(&traj, &ps, &init.state0)?;
            println!(
                "{} states tracked, {} within delta0 = {}",
                t.states.len(),
                t.in_window(),
                t.delta0
            );
            if let Some(stop) = &t.stopped {
                println!("tracking stopped at t = {:.4}: {}", stop.time, stop.reason);
            }
        }
        Command::Verify { report_only: true, .. } => {
            let path = gkdv::report::emit_report(&cli.output_dir)?;
            println!("{}", path.display());
        }
        Command::Verify { .. } => {
            let mut p = pipeline(cli, cfg)?;
            let v = p.verify_stored()?;
            print_criteria(&v)?;
        }
        Command::Pipeline { .. } => {
            let mut p = pipeline(cli, cfg)?;
            let (_, _, v) = p.run()?;
            print_criteria(&v)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
