//! Command-line entry point for the micro-robot workbench.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime/model error.

use clap::{Args, Parser, Subcommand};
use slipstick::actuator::Drive;
use slipstick::harness::{self, RunSummary, SweepParam, SweepSpec, TrackSpec};
use slipstick::identifier;
use slipstick::mlp;
use slipstick::params::{load_config, Config};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "slipstick",
    about = "Deterministic simulation and neural self-tuning PID control of a vibration-driven stick-slip micro-robot",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Configuration file (key = value lines); omitted keys use defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for traces, plots and metadata.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Seed override for network weight initialization.
    #[arg(long)]
    seed: Option<u64>,

    /// Simulated duration override, seconds.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Open-loop run with fixed motor speeds or constant voltages.
    Openloop {
        #[command(flatten)]
        common: CommonArgs,

        /// Motor speed for both rotors, rad/s (counter-rotating mounts).
        #[arg(long, default_value_t = 455.6, conflicts_with_all = ["ve", "vd"])]
        speed: f64,

        /// Constant voltage on motor e (requires --vd).
        #[arg(long, requires = "vd")]
        ve: Option<f64>,

        /// Constant voltage on motor d (requires --ve).
        #[arg(long, requires = "ve")]
        vd: Option<f64>,
    },

    /// Open-loop parameter sweep over the spring constant or the friction
    /// coefficient.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,

        /// Parameter to sweep: `k` or `mu`.
        #[arg(long)]
        param: String,

        /// Comma-separated, strictly increasing values. Defaults:
        /// k -> {7250.9185, 72509.185, 725091.85}, mu -> {0, 0.18, 0.36, 0.72}.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,

        /// Motor speed for both rotors, rad/s.
        #[arg(long, default_value_t = 455.6)]
        speed: f64,
    },

    /// Closed-loop tracking run with both self-tuning PID channels.
    Track {
        #[command(flatten)]
        common: CommonArgs,

        /// Reference body displacement, m.
        #[arg(long, default_value_t = 0.02)]
        xd: f64,

        /// Reference yaw angle, rad.
        #[arg(long, default_value_t = 0.0)]
        phid: f64,
    },

    /// Finite-difference checks of the network update rule and the
    /// identifier Jacobian.
    Gradcheck {
        /// Number of random seeds per suite.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
    },

    /// Train an identifier on a synthetic linear plant and report
    /// convergence.
    IdentDemo {
        /// SGD steps.
        #[arg(long, default_value_t = 5000)]
        steps: usize,

        /// Learning rate.
        #[arg(long, default_value_t = 0.01)]
        eta: f64,

        /// Weight-init seed.
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn load(common: &CommonArgs) -> slipstick::Result<Config> {
    let mut config = match &common.config {
        Some(path) => load_config(path)?,
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        config.sim.rng_seed = seed;
    }
    if let Some(duration) = common.duration {
        config.sim.duration = duration;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> slipstick::Result<()> {
    match cli.command {
        Command::Openloop {
            common,
            speed,
            ve,
            vd,
        } => {
            let config = load(&common)?;
            let drive = match (ve, vd) {
                (Some(v_e), Some(v_d)) => Drive::Voltages { v_e, v_d },
                _ => Drive::Speeds {
                    omega_e: speed,
                    omega_d: speed,
                },
            };
            let trace = slipstick::sim::run_open_loop(&config, drive, common.duration)?;
            let summary = RunSummary::from_trace(&trace);
            let text = format!(
                "final_X = {:.6e} m\nfinal_|Y| = {:.6e} m\nfinal_|phi| = {:.6e} rad\n",
                summary.final_x, summary.final_abs_y, summary.final_abs_phi
            );
            harness::emit_run(&trace, Some(&text), &common.out)?;
            print!("{text}");
            println!("wrote {}", common.out.display());
        }
        Command::Sweep {
            common,
            param,
            values,
            speed,
        } => {
            let config = load(&common)?;
            let param = SweepParam::parse(&param)?;
            let values = values.unwrap_or_else(|| match param {
                SweepParam::SpringK => vec![7250.9185, 72509.185, 725091.85],
                SweepParam::Mu => vec![0.0, 0.18, 0.36, 0.72],
            });
            let mut spec = SweepSpec::new(param, values);
            spec.drive_speed = speed;
            if let Some(duration) = common.duration {
                spec.duration = duration;
            }
            let result = harness::run_sweep(&spec, &config)?;
            harness::emit_sweep(&result, &config, &common.out)?;
            print!("{}", harness::sweep_summary_table(&result));
            println!("wrote {}", common.out.display());
            if result.runs.iter().any(|r| r.outcome.is_err()) {
                return Err(slipstick::Error::BadSpec(
                    "one or more sweep runs failed; see summary".into(),
                ));
            }
        }
        Command::Track { common, xd, phid } => {
            let config = load(&common)?;
            let spec = TrackSpec {
                x_d: xd,
                phi_d: phid,
                duration: common.duration.unwrap_or(config.sim.duration),
            };
            let (trace, summary) = harness::run_tracking(&spec, &config)?;
            let text = harness::track_summary_text(&summary);
            harness::emit_run(&trace, Some(&text), &common.out)?;
            print!("{text}");
            println!("wrote {}", common.out.display());
        }
        Command::Gradcheck { seeds } => {
            let mut worst_update = 0.0_f64;
            let mut worst_jacobian = 0.0_f64;
            for seed in 0..seeds {
                worst_update = worst_update.max(mlp::gradient_check(seed));
                worst_jacobian = worst_jacobian.max(identifier::jacobian_check(seed));
            }
            println!("network update rule vs central differences:");
            println!("  max relative error over {seeds} seeds = {worst_update:.3e}");
            println!("identifier Jacobian vs central differences:");
            println!("  max relative error over {seeds} seeds = {worst_jacobian:.3e}");
            if worst_update > 1e-4 || worst_jacobian > 1e-6 {
                return Err(slipstick::Error::BadSpec(format!(
                    "gradient check failed: update {worst_update:.3e} (limit 1e-4), \
                     jacobian {worst_jacobian:.3e} (limit 1e-6)"
                )));
            }
        }
        Command::IdentDemo { steps, eta, seed } => {
            let gain = 0.5;
            let (nmse, jacobian) = identifier::linear_plant_demo(gain, steps, eta, seed);
            println!("synthetic plant: y(k) = {gain} * u(k-1), u ~ U[-1, 1]");
            println!("steps = {steps}, eta = {eta}, seed = {seed}");
            println!("normalized MSE (last quarter) = {nmse:.3e}");
            println!("estimated Jacobian = {jacobian:.4} (true gain {gain})");
            if nmse >= 0.01 {
                return Err(slipstick::Error::BadSpec(format!(
                    "identifier did not converge: normalized MSE {nmse:.3e} >= 1e-2"
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successful outputs, not usage
            // errors.
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
