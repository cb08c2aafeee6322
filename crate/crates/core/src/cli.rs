//! Command-line front end behind the `falcon` binary.
//!
//! ```text
//! falcon run           --config c.toml [--seed S] [--horizon T] [--algo A] [--out run.csv]
//! falcon replicate     --config c.toml [--seed S] [--horizon T] [--algo A] [--out summary.json]
//! falcon verify        --config c.toml [--seed S] [--horizon T] [--algo A] [--out report.txt]
//! falcon schedule-info [--config c.toml] [--horizon T] [--schedule geometric|known-horizon]
//! ```
//!
//! Flags override values from the file. Every output carries the effective
//! config: `run` writes it next to the CSV as `<csv>.config.toml`, the
//! summary document embeds it under `config`, the verification report and
//! the SVG plot include it verbatim.
//!
//! Exit status is 0 on success, 1 on any configuration, parse or I/O error
//! (the message names the offending field), and 2 when a required
//! verification check fails.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::algo::{learning_rates, Algorithm};
use crate::config::{EnvironmentSpec, RunConfig, ScheduleSpec};
use crate::oracle::EstimationErrorCurve;
use crate::plot::{emit_plot, BoundParams};
use crate::schedule::EpochSchedule;
use crate::sim::{replicate, run, summarize, RunResult};
use crate::verify::{verify_config, VerifyReport};
use crate::{Error, Result};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_VERIFY: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "falcon",
    version,
    about = "Contextual bandits with offline regression oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Play one run and write the per-round CSV.
    Run(RunArgs),
    /// Run every configured seed in parallel and write the summary document.
    Replicate(RunArgs),
    /// Check the policy-space identities on every epoch of a run.
    Verify(RunArgs),
    /// Print epoch boundaries, learning rates and the oracle-call count.
    ScheduleInfo(ScheduleArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    /// falcon, falcon_plus, epsilon_greedy or uniform.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScheduleArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<u64>,
    /// Used when no config is given.
    #[arg(long, value_enum, default_value = "geometric")]
    schedule: ScheduleChoice,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScheduleChoice {
    Geometric,
    KnownHorizon,
}

/// Outcome of a subcommand that did not hit an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
}

/// Default `xi` curve for `--algo falcon_plus` when the file has none.
fn default_xi(env: &EnvironmentSpec) -> Result<EstimationErrorCurve> {
    match env {
        EnvironmentSpec::Planted { class_size, .. } => {
            EstimationErrorCurve::finite_class(*class_size, EstimationErrorCurve::DEFAULT_FINITE_C)
        }
        EnvironmentSpec::Explicit { tables, .. } => {
            EstimationErrorCurve::finite_class(tables.len(), EstimationErrorCurve::DEFAULT_FINITE_C)
        }
        EnvironmentSpec::Linear { dim, .. } => {
            EstimationErrorCurve::linear(*dim, EstimationErrorCurve::DEFAULT_LINEAR_C)
        }
    }
}

const DEFAULT_DELTA: f64 = 0.05;
const DEFAULT_EPSILON: f64 = 0.1;

/// Replaces the algorithm by name, keeping compatible parameters.
pub fn override_algorithm(config: &mut RunConfig, name: &str) -> Result<()> {
    let delta = config.algorithm.delta().unwrap_or(DEFAULT_DELTA);
    config.algorithm =
        match name.replace('-', "_").as_str() {
            "falcon" => Algorithm::Falcon { delta },
            "falcon_plus" => match config.algorithm {
                Algorithm::FalconPlus { .. } => config.algorithm,
                _ => Algorithm::FalconPlus {
                    delta,
                    xi: default_xi(&config.environment)?,
                },
            },
            "epsilon_greedy" => match config.algorithm {
                Algorithm::EpsilonGreedy { .. } => config.algorithm,
                _ => Algorithm::EpsilonGreedy {
                    epsilon: DEFAULT_EPSILON,
                },
            },
            "uniform" => Algorithm::Uniform,
            other => return Err(Error::config(
                "algorithm.kind",
                format!(
                    "unknown algorithm `{other}` (falcon, falcon_plus, epsilon_greedy, uniform)"
                ),
            )),
        };
    Ok(())
}

fn effective_config(args: &RunArgs) -> Result<RunConfig> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(horizon) = args.horizon {
        config.horizon = Some(horizon);
    }
    if let Some(algo) = &args.algo {
        override_algorithm(&mut config, algo)?;
    }
    config.validate()?;
    Ok(config)
}

/// Path of the config echo written beside a CSV.
pub fn config_echo_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".config.toml");
    PathBuf::from(name)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)
        .map_err(|e| Error::config("out", format!("cannot write {}: {e}", path.display())))
}

fn bound_params(config: &RunConfig) -> Result<Option<BoundParams>> {
    let delta = match config.algorithm.delta() {
        Some(d) => d,
        None => return Ok(None),
    };
    let class_size = match &config.environment {
        EnvironmentSpec::Planted { class_size, .. } => *class_size,
        EnvironmentSpec::Explicit { tables, .. } => tables.len(),
        EnvironmentSpec::Linear { .. } => return Ok(None),
    };
    let num_actions = match &config.environment {
        EnvironmentSpec::Planted { actions, .. } => *actions,
        EnvironmentSpec::Explicit { tables, .. } => tables[0].first().map_or(0, Vec::len),
        EnvironmentSpec::Linear { .. } => unreachable!(),
    };
    let tau_1 = config.build_schedule()?.boundary(1).unwrap();
    Ok(Some(BoundParams {
        num_actions,
        class_size,
        delta,
        tau_1,
    }))
}

fn run_line(result: &RunResult) -> String {
    let bound = result
        .bound
        .map_or("n/a".to_string(), |b| format!("{b:.1}"));
    format!(
        "seed={} rounds={} epochs={} oracle_calls={} final_regret={} pseudo_regret={:.3} bound={} clamps={}",
        result.seed,
        result.totals.rounds,
        result.totals.epochs,
        result.totals.oracle_calls,
        result.totals.final_regret,
        result.totals.final_pseudo_regret,
        bound,
        result.totals.clamp_events
    )
}

fn cmd_run(args: &RunArgs) -> Result<Outcome> {
    let config = effective_config(args)?;
    let echo = config.to_toml_string();
    let result = run(&config)?;
    let mut stdout = run_line(&result);
    stdout.push('\n');
    if let Some(csv) = args.out.as_ref().or(config.output.csv.as_ref()) {
        write_file(csv, &result.csv_string())?;
        write_file(&config_echo_path(csv), &echo)?;
        let _ = writeln!(stdout, "wrote {}", csv.display());
    }
    if let Some(path) = &config.output.summary {
        write_file(
            path,
            &summarize(&config, std::slice::from_ref(&result)).to_json(),
        )?;
        let _ = writeln!(stdout, "wrote {}", path.display());
    }
    if let Some(path) = &config.output.plot {
        let title = format!(
            "{} cumulative regret, seed {}",
            config.algorithm.name(),
            result.seed
        );
        emit_plot(&result, bound_params(&config)?, &title, &echo, path)
            .map_err(|e| Error::config("output.plot", e.to_string()))?;
        let _ = writeln!(stdout, "wrote {}", path.display());
    }
    Ok(Outcome {
        code: EXIT_OK,
        stdout,
    })
}

fn cmd_replicate(args: &RunArgs) -> Result<Outcome> {
    let config = effective_config(args)?;
    let seeds = config.replication_seeds();
    let (summary, _) = replicate(&config, &seeds)?;
    let mut stdout = String::new();
    for s in &summary.per_seed_final_regrets {
        let _ = writeln!(stdout, "seed={} final_regret={}", s.seed, s.final_regret);
    }
    let bound = summary
        .theoretical_bound
        .map_or("n/a".to_string(), |b| format!("{b:.1}"));
    let _ = writeln!(
        stdout,
        "runs={} mean={:.3} p10={:.3} p90={:.3} bound={}",
        seeds.len(),
        summary.mean,
        summary.p10,
        summary.p90,
        bound
    );
    let json = summary.to_json();
    match args.out.as_ref().or(config.output.summary.as_ref()) {
        Some(path) => {
            write_file(path, &json)?;
            let _ = writeln!(stdout, "wrote {}", path.display());
        }
        None => {
            stdout.push_str(&json);
            stdout.push('\n');
        }
    }
    Ok(Outcome {
        code: EXIT_OK,
        stdout,
    })
}

fn cmd_verify(args: &RunArgs) -> Result<Outcome> {
    let config = effective_config(args)?;
    let report = verify_config(&config)?;
    let outcome = verify_outcome(&config, &report);
    if let Some(path) = &args.out {
        write_file(path, &outcome.stdout)?;
    }
    Ok(outcome)
}

/// The report text, prefixed by the effective config, and its exit status.
pub fn verify_outcome(config: &RunConfig, report: &VerifyReport) -> Outcome {
    let mut text = String::new();
    for line in config.to_toml_string().lines() {
        let _ = writeln!(text, "# {line}");
    }
    let _ = writeln!(text, "{report}");
    Outcome {
        code: if report.passed() {
            EXIT_OK
        } else {
            EXIT_VERIFY
        },
        stdout: text,
    }
}

fn cmd_schedule_info(args: &ScheduleArgs) -> Result<Outcome> {
    let config = args.config.as_deref().map(RunConfig::load).transpose()?;
    let horizon = args
        .horizon
        .or(config.as_ref().and_then(|c| c.horizon))
        .ok_or_else(|| Error::config("horizon", "missing horizon"))?;
    if horizon == 0 {
        return Err(Error::config("horizon", "horizon must be at least 1"));
    }
    let schedule = match &config {
        Some(c) => {
            let mut c = c.clone();
            c.horizon = Some(horizon);
            c.build_schedule()?
        }
        None => match args.schedule {
            ScheduleChoice::Geometric => EpochSchedule::geometric(),
            ScheduleChoice::KnownHorizon => EpochSchedule::known_horizon(horizon)?,
        },
    };
    let taus = schedule.boundaries_through(horizon)?;
    let gammas = match &config {
        Some(c) => {
            let (k, size) = match &c.environment {
                EnvironmentSpec::Planted {
                    actions,
                    class_size,
                    ..
                } => (*actions, Some(*class_size)),
                EnvironmentSpec::Explicit { tables, .. } => {
                    (tables[0].first().map_or(0, Vec::len), Some(tables.len()))
                }
                EnvironmentSpec::Linear { actions, .. } => (*actions, None),
            };
            Some(learning_rates(&c.algorithm, &schedule, k, size, horizon)?)
        }
        None => None,
    };

    let mut stdout = String::new();
    let kind = match config.as_ref().map(|c| &c.schedule) {
        Some(ScheduleSpec::Custom { .. }) => "custom",
        Some(ScheduleSpec::KnownHorizon) => "known_horizon",
        Some(ScheduleSpec::Geometric) => "geometric",
        None => match args.schedule {
            ScheduleChoice::Geometric => "geometric",
            ScheduleChoice::KnownHorizon => "known_horizon",
        },
    };
    let _ = writeln!(stdout, "schedule={kind} horizon={horizon}");
    let _ = writeln!(stdout, "epoch,first_round,tau,length,gamma");
    let mut prev = 0;
    for (i, &tau) in taus.iter().enumerate() {
        let end = tau.min(horizon);
        let gamma = gammas.as_ref().map_or(String::new(), |g| g[i].to_string());
        let _ = writeln!(
            stdout,
            "{},{},{},{},{}",
            i + 1,
            prev + 1,
            tau,
            end - prev,
            gamma
        );
        prev = tau;
    }
    let _ = writeln!(
        stdout,
        "epochs={} oracle_calls={}",
        taus.len(),
        taus.len() - 1
    );
    if let Some(path) = &args.out {
        write_file(path, &stdout)?;
    }
    Ok(Outcome {
        code: EXIT_OK,
        stdout,
    })
}

/// Parses `argv` (including the program name) and runs the subcommand.
/// Never exits the process; returns the exit status and what to print.
pub fn execute<I, T>(argv: I) -> (u8, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            return (code, String::new(), e.render().to_string());
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Replicate(args) => cmd_replicate(args),
        Command::Verify(args) => cmd_verify(args),
        Command::ScheduleInfo(args) => cmd_schedule_info(args),
    };
    match outcome {
        Ok(Outcome { code, stdout }) => {
            let stderr = if code == EXIT_VERIFY {
                "verification failed\n".to_string()
            } else {
                String::new()
            };
            (code, stdout, stderr)
        }
        Err(e) => (EXIT_CONFIG, String::new(), format!("error: {e}\n")),
    }
}

pub fn main() -> ExitCode {
    let (code, stdout, stderr) = execute(std::env::args_os());
    print!("{stdout}");
    eprint!("{stderr}");
    ExitCode::from(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(dir: &Path, text: &str) -> PathBuf {
        let path = dir.join("c.toml");
        std::fs::write(&path, text).unwrap();
        path
    }

    const TINY: &str = r#"
horizon = 300
seed = 4
[algorithm]
kind = "falcon"
delta = 0.05
[environment]
kind = "planted"
contexts = 3
actions = 3
class_size = 5
gap = 0.3
[schedule]
kind = "geometric"
[verify]
mc_samples = 2000
"#;

    #[test]
    fn algo_override_keeps_delta() {
        let mut cfg = RunConfig::from_toml_str(&TINY.replace("0.05", "0.1")).unwrap();
        override_algorithm(&mut cfg, "falcon-plus").unwrap();
        assert_eq!(cfg.algorithm.delta(), Some(0.1));
        assert!(matches!(
            cfg.algorithm,
            Algorithm::FalconPlus {
                xi: EstimationErrorCurve::FiniteClass { size: 5, .. },
                ..
            }
        ));
        let err = override_algorithm(&mut cfg, "thompson").unwrap_err();
        assert!(matches!(err, Error::Config { field, .. } if field == "algorithm.kind"));
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), TINY);
        let out = dir.path().join("r.csv");
        let argv = [
            "falcon",
            "run",
            "--config",
            path.to_str().unwrap(),
            "--seed",
            "9",
            "--horizon",
            "50",
            "--out",
            out.to_str().unwrap(),
        ];
        let (code, stdout, _) = execute(argv);
        assert_eq!(code, 0);
        assert!(stdout.contains("seed=9 rounds=50"));
        let echo = RunConfig::load(&config_echo_path(&out)).unwrap();
        assert_eq!(echo.seed, 9);
        assert_eq!(echo.horizon, Some(50));
    }

    #[test]
    fn failed_required_check_is_exit_two() {
        use crate::verify::{CheckLine, Severity};
        let cfg = RunConfig::from_toml_str(TINY).unwrap();
        let line = |passed, severity| CheckLine {
            name: "exploration",
            epoch: 3,
            passed,
            severity,
            detail: String::new(),
        };
        let noted = VerifyReport {
            lines: vec![
                line(true, Severity::Required),
                line(false, Severity::Reported),
            ],
        };
        assert_eq!(verify_outcome(&cfg, &noted).code, EXIT_OK);
        let failed = VerifyReport {
            lines: vec![line(false, Severity::Required)],
        };
        let outcome = verify_outcome(&cfg, &failed);
        assert_eq!(outcome.code, EXIT_VERIFY);
        assert!(outcome.stdout.contains("FAIL exploration epoch=3"));
        assert!(outcome.stdout.starts_with("# horizon = 300"));
    }

    #[test]
    fn bad_flag_is_exit_one() {
        let (code, _, stderr) = execute(["falcon", "run", "--bogus"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(!stderr.is_empty());
    }

    #[test]
    fn schedule_info_without_config() {
        let (code, stdout, _) = execute([
            "falcon",
            "schedule-info",
            "--horizon",
            "100",
            "--schedule",
            "known-horizon",
        ]);
        assert_eq!(code, 0);
        assert!(stdout.contains("epochs=9 oracle_calls=8"));
        let (_, stdout, _) = execute(["falcon", "schedule-info", "--horizon", "100000"]);
        assert!(stdout.contains("epochs=17 oracle_calls=16"));
    }

    #[test]
    fn schedule_info_reports_learning_rates() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), TINY);
        let (code, stdout, _) = execute([
            "falcon",
            "schedule-info",
            "--config",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        assert!(stdout.contains("1,1,2,2,1\n"));
    }
}
