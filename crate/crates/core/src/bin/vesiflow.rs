use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vesiflow::diagnostics::{keller_skalak, KsModel, KsPrediction};
use vesiflow::io::{self, read_config};
use vesiflow::Error;

#[derive(Parser)]
#[command(name = "vesiflow", version, about = "Level-set FEM simulator for inextensible membranes in shear and vortex flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured simulation.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Suppress per-step progress on stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Vortex grid-convergence study.
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// Cells per side, e.g. 16,32,64.
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
        /// Level-set degrees, e.g. 1,2.
        #[arg(long, value_delimiter = ',', required = true)]
        degrees: Vec<usize>,
    },
    /// Reduced models.
    Oracle {
        #[command(subcommand)]
        which: Oracle,
    },
}

#[derive(Subcommand)]
enum Oracle {
    /// Keller-Skalak prediction for reduced area XI and viscosity ratio BETA.
    Ks {
        #[arg(long)]
        xi: f64,
        #[arg(long)]
        beta: f64,
    },
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_FIXED_POINT: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Validation(_) | Error::Syntax { .. } | Error::InvalidParameter { .. } | Error::Precondition(_) => EXIT_VALIDATION,
        Error::FixedPointNotConverged { .. } => EXIT_FIXED_POINT,
        _ => EXIT_RUNTIME,
    }
}

fn fail(e: &Error, code: u8) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, output, quiet } => {
            let cfg = match read_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e, EXIT_VALIDATION),
            };
            let progress = |r: &vesiflow::diagnostics::DiagRecord| {
                if !quiet {
                    eprintln!(
                        "t={:.4} area={:.6} perimeter={:.6} xi2d={:.4} theta={:.4} fp_iters={}",
                        r.t, r.area, r.perimeter, r.xi2d, r.theta, r.fp_iters
                    );
                }
            };
            match io::run(&cfg, output.as_deref(), progress) {
                Ok(out) => {
                    if !out.unconverged_steps.is_empty() {
                        eprintln!(
                            "warning: {} step(s) accepted without fixed-point convergence (first: {})",
                            out.unconverged_steps.len(),
                            out.unconverged_steps[0]
                        );
                    }
                    let dir = output.unwrap_or(cfg.output.dir);
                    println!("{} steps written to {}", out.records.len(), dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e, exit_code(&e)),
            }
        }
        Command::Converge { config, levels, degrees } => {
            let cfg = match read_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e, EXIT_VALIDATION),
            };
            println!("k_phi,n,h,dt,steps,error,error_exact,order");
            let res = io::convergence_study_with(&cfg, &levels, &degrees, |r| {
                let order = r.order.map(|o| format!("{o:.4}")).unwrap_or_default();
                println!("{},{},{:.6e},{:.6e},{},{:.6e},{:.6e},{}", r.k_phi, r.n, r.h, r.dt, r.steps, r.error, r.error_exact, order);
            });
            match res {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => fail(&e, exit_code(&e)),
            }
        }
        Command::Oracle {
            which: Oracle::Ks { xi, beta },
        } => match keller_skalak(xi, beta).and_then(|p| Ok((p, KsModel::new(xi, beta)?))) {
            Ok((p, m)) => {
                println!("axes = {:.6}, {:.6}  A = {:.6}  B = {:.6}", m.axes[0], m.axes[1], m.a, m.b);
                match p {
                    KsPrediction::TankTreading { theta } => {
                        println!("regime = tank-treading  theta = {theta:.6} rad  theta/pi = {:.6}", theta / std::f64::consts::PI)
                    }
                    KsPrediction::Tumbling { period } => println!("regime = tumbling  period = {period:.6}"),
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e, EXIT_VALIDATION),
        },
    }
}
