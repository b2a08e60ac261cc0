use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use oscgate_cli::report::{error_json, write_atomic, write_outputs};
use oscgate_cli::{run_experiment, ExperimentConfig, OutputFormat};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Runs one gate-synthesis experiment and writes its report.
#[derive(Debug, Parser)]
#[command(name = "oscgate", version)]
struct Args {
    /// field-1d, em-3d, genmatch, iontrap or oracle-check
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// csv writes report.json plus curve and matrix CSVs; json writes report.json only
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Overrides the seed from the config file
    #[arg(long)]
    seed: Option<u64>,
}

fn fail(out: &Path, code: u8, error: serde_json::Value) -> ExitCode {
    let text = serde_json::to_string(&error).expect("error serializes");
    eprintln!("{text}");
    if std::fs::create_dir_all(out).is_ok() {
        let _ = write_atomic(&out.join("error.json"), &(text + "\n"));
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            let msg = format!("{}: {e}", args.config.display());
            return fail(&args.out, 2, error_json("io", &msg, None, None));
        }
    };
    let mut cfg = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => return fail(&args.out, 2, error_json("config", &e.message, e.line, e.field.as_deref())),
    };
    if cfg.experiment() != args.experiment {
        let msg = format!(
            "command asks for {} but the config declares {}",
            args.experiment,
            cfg.experiment()
        );
        return fail(&args.out, 2, error_json("config", &msg, None, Some("experiment")));
    }
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let report = match run_experiment(&cfg, &base) {
        Ok(r) => r,
        Err(e) => return fail(&args.out, 1, error_json(e.kind(), &e.to_string(), None, e.field())),
    };
    let format = match args.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    if let Err(e) = write_outputs(&report, &args.out, format) {
        return fail(&args.out, 1, error_json("io", &e.to_string(), None, None));
    }
    println!("{} {}", report.status(), args.out.join("report.json").display());
    if report.failed() {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}
