use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use re_are_cli::{run, Cli, CliError};

fn report(err: &CliError, command: Option<&str>) -> ExitCode {
    eprintln!("{}", err.record(command));
    ExitCode::from(err.exit_code() as u8)
}

fn destination(cli: &Cli, ext: &str) -> Option<PathBuf> {
    let out = cli.command.output();
    match (&out.output, &out.out_dir) {
        (Some(p), _) if p.as_os_str() == "-" => None,
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => Some(dir.join(format!("{}.{ext}", cli.command.name()))),
        (None, None) => None,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            let message = first.strip_prefix("error: ").unwrap_or(first).to_string();
            return report(&CliError::Usage(message), None);
        }
    };
    let name = cli.command.name();
    let artifact = match run(&cli.command) {
        Ok(a) => a,
        Err(e) => return report(&e, Some(name)),
    };
    let written = match destination(&cli, artifact.format.extension()) {
        Some(path) => std::fs::write(&path, &artifact.bytes)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(&artifact.bytes)
            .map_err(|e| CliError::Io(e.to_string())),
    };
    if let Err(e) = written {
        return report(&e, Some(name));
    }
    match artifact.partial_failure {
        Some(e) => report(&e, Some(name)),
        None => ExitCode::SUCCESS,
    }
}
