use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use sflab::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.config(), &cli.exec) {
        Ok(done) => {
            // a closed pipe on stdout is not a failure of the run
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{}", done.summary.trim_end());
            let _ = writeln!(out, "report: {}", done.report_path.display());
            for p in &done.artifact_paths {
                let _ = writeln!(out, "wrote: {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
