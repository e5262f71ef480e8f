use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use semlint::orchestrator::{run, RunConfig};
use semlint::report::Format;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Html,
    Text,
    Machine,
}

/// Check XML documents against semantic consistency rules.
#[derive(Debug, Parser)]
#[command(name = "semlint", version)]
struct Cli {
    /// Rule file; repeat the flag to load several, read in order as one set.
    #[arg(long = "rules", required = true, value_name = "FILE")]
    rules: Vec<PathBuf>,

    /// Directory holding per-file pass-one results.
    #[arg(long, env = "SEMLINT_CACHE_DIR", value_name = "DIR")]
    cache_dir: PathBuf,

    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,

    /// Never probe URLs; testurl reports nothing.
    #[arg(long)]
    offline: bool,

    /// Seconds before a URL probe gives up.
    #[arg(long, value_name = "SECS", default_value_t = 10.0, value_parser = positive_f64)]
    url_timeout: f64,

    /// Maximum concurrent URL probes.
    #[arg(long, value_name = "N", default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    max_probes: u32,

    /// Ignore case and accents when matching member names.
    #[arg(long)]
    normalize_names: bool,

    /// Exit with status 1 when any warning is reported.
    #[arg(long)]
    fail_on_warnings: bool,

    /// Parallel pass-one workers.
    #[arg(long, value_name = "N", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,

    /// Write the report to FILE instead of standard output.
    #[arg(long, short, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Input documents, directories or glob patterns.
    #[arg(required = true, value_name = "INPUT")]
    inputs: Vec<String>,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("{s:?} is not a positive number")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = RunConfig {
        rule_files: cli.rules,
        inputs: cli.inputs,
        cache_dir: cli.cache_dir,
        format: match cli.format {
            FormatArg::Html => Format::Html,
            FormatArg::Text => Format::Text,
            FormatArg::Machine => Format::Machine,
        },
        offline: cli.offline,
        url_timeout_secs: cli.url_timeout,
        max_probes: cli.max_probes as usize,
        normalize_names: cli.normalize_names,
        fail_on_warnings: cli.fail_on_warnings,
        jobs: cli.jobs as usize,
        output: cli.output.clone(),
    };
    let outcome = run(&cfg);
    let stderr = std::io::stderr();
    let mut err = stderr.lock();
    for d in &outcome.diagnostics {
        let _ = writeln!(err, "{d}");
    }
    if cli.output.is_none() {
        let _ = std::io::stdout()
            .lock()
            .write_all(outcome.report.as_bytes());
    }
    ExitCode::from(outcome.exit_code as u8)
}
