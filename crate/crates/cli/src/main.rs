mod cli;
mod commands;
mod output;
mod verify;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use cli::{Cli, Command};
use commands::{CliError, CliResult};
use output::Report;

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("THERMOCLUSTER_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("THERMOCLUSTER_THREADS=`{raw}` is not a count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Failed(e.to_string()))
}

fn dispatch(cli: &Cli) -> CliResult<(Report, bool)> {
    let c = &cli.common;
    let report = match &cli.command {
        Command::PhaseDiagram { theta_steps, grid, kt_max, kt_steps } => {
            commands::phase_diagram(c, *theta_steps, *grid, *kt_max, *kt_steps)?
        }
        Command::Sample => commands::sample(c)?,
        Command::Percolation { pe } => commands::percolation(c, *pe)?,
        Command::Simulate { exact } => commands::simulate(c, *exact)?,
        Command::DecomposeBond { degree, degree_b } => commands::decompose_bond(c, *degree, *degree_b)?,
        Command::CriticalTemp => commands::critical_temp(c)?,
        Command::Verify { max_sites } => return verify::verify(*max_sites),
    };
    Ok((report, true))
}

fn emit(cli: &Cli, report: &Report) -> io::Result<()> {
    let mut w: Box<dyn Write> = match &cli.common.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    if cli.common.json {
        report.write_json(&mut w)?;
    } else {
        report.write_csv(&mut w)?;
    }
    w.flush()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    let result = configure_threads().and_then(|_| dispatch(&cli));
    match result {
        Ok((report, ok)) => {
            if let Err(e) = emit(&cli, &report) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Failed(_) => ExitCode::from(1),
            }
        }
    }
}
