use clap::Parser;
use oddindex_cli::{emit_report, exit_code, run_experiment, ExperimentConfig};
use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cfg = ExperimentConfig::parse();
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let records = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let bytes = emit_report(&records, cfg.format);
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(exit_code(&records))
}
