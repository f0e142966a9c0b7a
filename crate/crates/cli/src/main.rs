use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use wavelab_cli::{run, CliError, RunConfig};

/// Run a wave-maps experiment or estimate check from a config file.
#[derive(Parser, Debug)]
#[command(name = "wmlab", version)]
struct Args {
    /// evolve | picard | scattering | norms | check-* | all-checks
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("WMLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("WMLAB_THREADS = `{v}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = threads()
        .and_then(|_| RunConfig::load(&args.config, Some(&args.experiment), args.seed, args.out.as_deref()))
        .and_then(|cfg| run(&cfg));
    match result {
        Ok(m) => {
            println!(
                "{}: {} ({} files in manifest)",
                m.experiment,
                if m.passed() { "pass" } else { "fail" },
                m.files.len()
            );
            ExitCode::from(if m.passed() { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("wmlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
