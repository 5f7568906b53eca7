use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qhd::harness::{
    export_outputs, export_plot_data, parse_override_args, relaxation_sweep, run_experiment, tau_convergence_study,
    verify_dumps, ExportOptions, HarnessError, RunConfig, Status, ENV_OUTPUT_ROOT, ENV_THREADS,
};

#[derive(Parser)]
#[command(name = "qhd", version, about = "Fractional-step quantum hydrodynamics simulator")]
#[command(after_help = format!(
    "Environment:\n  {ENV_OUTPUT_ROOT}  prefix for relative output directories\n  {ENV_THREADS}      worker threads for sweeps\n\n\
     Exit status: 0 all diagnostics pass, 1 diagnostic failure, 2 configuration error, 3 runtime failure."
))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML run configuration.
    config: PathBuf,

    /// Overrides as dotted keys, e.g. `--time.tau 0.05 --grid.points=256`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its outputs.
    Run(ConfigArgs),
    /// Repeat a run over several strip lengths and fit the residual order.
    SweepTau {
        /// Comma-separated strip lengths in geometric progression.
        #[arg(long, value_delimiter = ',', required = true)]
        taus: Vec<f64>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Repeat a run over decreasing relaxation times.
    SweepEpsilon {
        /// Comma-separated relaxation times, strictly decreasing.
        #[arg(long, value_delimiter = ',', required = true)]
        epsilons: Vec<f64>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Recompute pointwise diagnostics from the field dumps of a run directory.
    Verify { dir: PathBuf },
    /// Regenerate plot data files of a run directory.
    ExportPlots { dir: PathBuf },
}

fn load(args: &ConfigArgs) -> Result<RunConfig, HarnessError> {
    let text = fs::read_to_string(&args.config).map_err(|source| HarnessError::Io {
        path: args.config.clone(),
        source,
    })?;
    let overrides = parse_override_args(&args.overrides)?;
    let mut config = RunConfig::from_toml_with_overrides(&text, &overrides)?;
    config.apply_env()?;
    Ok(config)
}

fn write_report(dir: &Path, name: &str, text: &str, overwrite: bool) -> Result<PathBuf, HarnessError> {
    let io = |source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(io)?;
    let path = dir.join(name);
    if path.exists() && !overwrite {
        return Err(HarnessError::OutputExists(path));
    }
    fs::write(&path, text).map_err(io)?;
    Ok(path)
}

fn run(args: &ConfigArgs) -> Result<bool, HarnessError> {
    let config = load(args)?;
    let exp = match run_experiment(&config) {
        Ok(exp) => exp,
        Err(HarnessError::Run(failure)) => {
            let note = format!(
                "run aborted after {} strips: {}\n",
                failure.partial.strip_count(),
                failure.source
            );
            let _ = write_report(&config.output.dir, "FAILED", &note, true);
            return Err(HarnessError::Run(failure));
        }
        Err(e) => return Err(e),
    };
    let opts = ExportOptions {
        overwrite: config.output.overwrite,
        dump_fields: config.output.dump_fields,
    };
    export_outputs(&exp, &config.output.dir, opts)?;
    for d in &exp.manifest.diagnostics {
        let value = d.value.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"));
        let status = match d.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => "skipped",
            Status::Info => "info",
        };
        println!("{:<22} {:<8} {}", d.name, status, value);
    }
    println!("outputs in {}", config.output.dir.display());
    Ok(exp.manifest.passed())
}

fn dispatch(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Run(args) => run(&args),
        Command::SweepTau { taus, cfg } => {
            let config = load(&cfg)?;
            let study = tau_convergence_study(&config, &taus)?;
            println!("tau\tcontinuity\tmomentum");
            for ((t, c), m) in study.taus.iter().zip(&study.continuity).zip(&study.momentum) {
                println!("{t:.6e}\t{c:.6e}\t{m:.6e}");
            }
            println!(
                "fitted order: continuity {:.3}, momentum {:.3}",
                study.continuity_order, study.momentum_order
            );
            let text = toml::to_string(&study).map_err(|e| HarnessError::Manifest(e.to_string()))?;
            let p = write_report(&config.output.dir, "tau_study.toml", &text, config.output.overwrite)?;
            println!("report in {}", p.display());
            Ok(true)
        }
        Command::SweepEpsilon { epsilons, cfg } => {
            let config = load(&cfg)?;
            let study = relaxation_sweep(&config, &epsilons)?;
            println!("epsilon\tmean_current");
            for (e, j) in study.epsilons.iter().zip(&study.current_averages) {
                println!("{e:.6e}\t{j:.6e}");
            }
            println!("current decreasing with epsilon: {}", study.current_monotone);
            let text = toml::to_string(&study).map_err(|e| HarnessError::Manifest(e.to_string()))?;
            let p = write_report(&config.output.dir, "epsilon_study.toml", &text, config.output.overwrite)?;
            println!("report in {}", p.display());
            Ok(true)
        }
        Command::Verify { dir } => {
            let report = verify_dumps(&dir)?;
            println!("file\ttime\tmass\tenergy_gap\tnull_form\tirrotationality");
            for c in &report.checks {
                println!(
                    "{}\t{:.6e}\t{:.6e}\t{:.3e}\t{:.3e}\t{:.3e}",
                    c.file.display(),
                    c.time,
                    c.mass,
                    c.energy_gap,
                    c.null_form,
                    c.irrotationality
                );
            }
            Ok(report.passed)
        }
        Command::ExportPlots { dir } => {
            for p in export_plot_data(&dir)? {
                println!("{}", p.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let mut msg = e.to_string();
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                msg.push_str(&format!(": {s}"));
                source = s.source();
            }
            log::error!("{msg}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
