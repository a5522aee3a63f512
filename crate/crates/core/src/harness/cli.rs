//! `scenesync` command line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::io::{
    format_registration, parse_landmarks, parse_trace_csv, per_action_means, read_file, write_file,
};
use super::scalability::run_scalability;
use super::{run_experiment, scalability_report, sweep_velocities, ExperimentConfig, HarnessError};
use crate::mathcore::polyfit;
use crate::protocol::{action_frequency, classify_consistency, upshot_frequency, FrequencyProfile};
use crate::registration::{estimate_rigid_transform, registration_residual};

#[derive(Debug, Parser)]
#[command(
    name = "scenesync",
    version,
    about = "Shared-scene synchronization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Emulate latency with real link delay instead of velocity scaling.
    #[arg(long)]
    true_latency: bool,
}

impl ExperimentArgs {
    fn load(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut config = ExperimentConfig::from_json(&read_file(&self.config)?)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if self.true_latency {
            config.true_latency = true;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its drift trace.
    Run {
        #[command(flatten)]
        experiment: ExperimentArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// One trace per angular velocity.
    Sweep {
        #[command(flatten)]
        experiment: ExperimentArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        velocities: Vec<f64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Mean drift per participant count.
    Scale {
        #[command(flatten)]
        experiment: ExperimentArgs,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
        participants: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also write every raw trace here.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
    },
    /// Polynomial trend line over per-action mean drift.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Upshot vs action frequency for one participant.
    Classify {
        #[arg(long)]
        t_xy: f64,
        #[arg(long)]
        m: usize,
        /// Actions per object over the window.
        #[arg(long, value_delimiter = ',', required = true)]
        counts: Vec<u64>,
        #[arg(long)]
        dt: f64,
    },
    /// Rigid registration from a landmark file.
    Register {
        #[arg(long)]
        landmarks: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn create_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<(), HarnessError> {
    let say = |stdout: &mut dyn Write, text: String| {
        // A closed stdout is not worth failing the run over.
        let _ = writeln!(stdout, "{text}");
    };
    match command {
        Command::Run { experiment, out } => {
            let trace = run_experiment(&experiment.load()?)?;
            write_file(&out, &trace.to_csv_string())?;
            say(
                stdout,
                format!(
                    "{} samples, mean drift {:.6} deg, final {:.6} deg",
                    trace.samples.len(),
                    trace.mean_drift(),
                    trace.final_drift()
                ),
            );
        }
        Command::Sweep {
            experiment,
            velocities,
            out_dir,
        } => {
            let traces = sweep_velocities(&experiment.load()?, &velocities)?;
            create_dir(&out_dir)?;
            for trace in &traces {
                let v = trace.config.angular_velocity;
                let path = out_dir.join(format!("velocity_{v}.csv"));
                write_file(&path, &trace.to_csv_string())?;
                say(
                    stdout,
                    format!("omega={v} mean_drift={:.6}", trace.mean_drift()),
                );
            }
        }
        Command::Scale {
            experiment,
            participants,
            out,
            trace_dir,
        } => {
            let traces = run_scalability(&experiment.load()?, &participants)?;
            let report = scalability_report(&traces)?;
            if let Some(dir) = trace_dir {
                create_dir(&dir)?;
                for (n, reps) in &traces {
                    for (r, t) in reps.iter().enumerate() {
                        let path = dir.join(format!("participants_{n}_rep_{r}.csv"));
                        write_file(&path, &t.to_csv_string())?;
                    }
                }
            }
            write_file(&out, &report.to_csv_string())?;
            say(
                stdout,
                format!(
                    "slope={} intercept={} r_squared={} (ratio is 1 when psi_n = psi_1 = 0)",
                    report.slope, report.intercept, report.r_squared
                ),
            );
        }
        Command::Fit { input, degree, out } => {
            let samples = parse_trace_csv(&read_file(&input)?)?;
            let means = per_action_means(&samples);
            let points: Vec<(f64, f64)> = means.iter().map(|&(k, a)| (k as f64, a)).collect();
            let fit = polyfit(&points, degree)?;
            let mut csv = String::from("action_index,mean_alpha_deg,fitted_deg\n");
            for (k, a) in &means {
                csv.push_str(&format!("{k},{a},{}\n", fit.eval(*k as f64)));
            }
            write_file(&out, &csv)?;
            let coeffs: Vec<String> = fit.coefficients.iter().map(|c| c.to_string()).collect();
            say(stdout, format!("coefficients={}", coeffs.join(",")));
            say(stdout, format!("r_squared={}", fit.r_squared));
        }
        Command::Classify {
            t_xy,
            m,
            counts,
            dt,
        } => {
            if counts.len() != m {
                return Err(HarnessError::Input(format!(
                    "--counts has {} entries but --m is {m}",
                    counts.len()
                )));
            }
            let nu_0 = upshot_frequency(t_xy).map_err(|e| HarnessError::Input(e.to_string()))?;
            let profile = FrequencyProfile::single_participant(t_xy, &counts, dt);
            let nu_k =
                action_frequency(&profile, 0).map_err(|e| HarnessError::Input(e.to_string()))?;
            say(stdout, format!("nu_0={nu_0}"));
            say(stdout, format!("nu_k={nu_k}"));
            say(stdout, classify_consistency(nu_k, nu_0).to_string());
        }
        Command::Register { landmarks, out } => {
            let set = parse_landmarks(&read_file(&landmarks)?)?;
            let transform = estimate_rigid_transform(&set)?;
            let residual = registration_residual(&transform, &set);
            write_file(&out, &format_registration(&transform, residual))?;
            say(stdout, format!("residual={residual}"));
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn cli_main<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                2
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
