use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vdem::exec::Execution;
use vdem::runner::{self, convergence_table, load_scenario, Overrides, RunnerError};

#[derive(Parser)]
#[command(name = "vdem", version, about = "Quasi-static brittle fracture with the variational discrete element method")]
struct Cli {
    /// Run loops sequentially.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Adjust {
    /// Mesh size (ring spacing for the slit disk).
    #[arg(long)]
    h: Option<f64>,
    /// Load increment.
    #[arg(long)]
    du: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Quasi-static run of a built-in scenario or a TOML config.
    Run {
        scenario: String,
        #[command(flatten)]
        adjust: Adjust,
    },
    /// Convergence study against the mode III reference.
    Convergence {
        scenario: String,
        /// Number of refinement levels to run.
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and check a config without running it.
    Validate { scenario: String },
    /// Print a built-in scenario as TOML.
    Show { scenario: String },
    /// List the built-in scenarios.
    List,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match dispatch(cli.command, exec) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command, exec: Execution) -> Result<u8, RunnerError> {
    match command {
        Command::Run { scenario, adjust } => {
            let mut s = load_scenario(&scenario)?;
            Overrides { h: adjust.h, du: adjust.du, seed: adjust.seed, out: adjust.out }.apply(&mut s);
            let report = runner::run_scenario(&s, exec)?;
            let t = &report.trace;
            println!(
                "{}: {} steps, {} crack facets, crack length {:.6}, reached boundary: {}",
                s.name,
                t.steps.len(),
                t.crack_facets.len(),
                report.final_mesh.crack_length(),
                t.reached_boundary
            );
            if let Some(v) = report.crack_speed {
                println!("crack speed {v:.6}");
            }
            if let Some(e) = &t.error {
                eprintln!("error: {e}");
                return Ok(3);
            }
            Ok(0)
        }
        Command::Convergence { scenario, levels, out } => {
            let mut s = load_scenario(&scenario)?;
            Overrides { out, ..Default::default() }.apply(&mut s);
            let reports = runner::run_convergence(&s, levels, exec)?;
            println!("{:>8} {:>12} {:>6} {:>12} {:>6}", "dofs", "L2", "rate", "energy", "rate");
            let rate = |r: Option<f64>| r.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
            for (n, l2, r1, en, r2) in convergence_table(&reports) {
                println!("{n:>8} {l2:>12.3e} {:>6} {en:>12.3e} {:>6}", rate(r1), rate(r2));
            }
            Ok(0)
        }
        Command::Validate { scenario } => {
            let s = load_scenario(&scenario)?;
            s.validate()?;
            let mesh = runner::build_mesh(&s)?;
            runner::load_spec(&s, &mesh)?;
            println!("{}: ok ({} cells)", s.name, mesh.num_cells());
            Ok(0)
        }
        Command::Show { scenario } => {
            print!("{}", load_scenario(&scenario)?.to_toml());
            Ok(0)
        }
        Command::List => {
            for n in runner::builtin_names() {
                println!("{n}");
            }
            Ok(0)
        }
    }
}
