mod args;
mod commands;
mod config;
mod error;
mod output;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{config as config_error, CliError, CliResult};
use output::{resolve_out, Format, Run};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    match execute(argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(mut argv: Vec<String>) -> CliResult<()> {
    if let Some(path) = config::take_config_flag(&mut argv)? {
        let text = config::load(Path::new(&path))?;
        config::merge(&mut argv, &text)?;
    }
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                    Err(config_error("no subcommand given"))
                } else {
                    Ok(())
                };
            }
            return Err(config_error(e.render().to_string().trim().to_string()));
        }
    };
    match &cli.command {
        Command::Plot(a) => commands::plot(a),
        Command::Rerun(a) => rerun(&a.manifest, a.out.as_deref()),
        cmd => {
            let out = cmd.out_args().expect("computing subcommand");
            if out.plot && out.format != Format::Csv {
                return Err(config_error("--plot needs --format csv"));
            }
            let mut run = Run::new(resolve_out(out.out.as_deref()), out.format)?;
            let result = commands::dispatch(cmd, &mut run);
            let status = match &result {
                Ok(()) => "ok",
                Err(CliError::Assertion(_)) => "assertion-failed",
                Err(_) => "error",
            };
            run.finish(cmd.name(), &argv[1..], serde_json::to_value(cmd)?, status)?;
            result
        }
    }
}

/// Replay the merged arguments recorded in a manifest into a new directory
/// (default `rerun/` beside the manifest).
fn rerun(manifest: &Path, out: Option<&Path>) -> CliResult<()> {
    let text = std::fs::read_to_string(manifest)
        .map_err(|e| config_error(format!("cannot read manifest {}: {e}", manifest.display())))?;
    let m: serde_json::Value = serde_json::from_str(&text)?;
    let recorded: Vec<String> = m["argv"]
        .as_array()
        .ok_or_else(|| config_error("manifest has no argv"))?
        .iter()
        .map(|v| v.as_str().map(str::to_string).ok_or_else(|| config_error("manifest argv must be strings")))
        .collect::<CliResult<_>>()?;
    let dir: PathBuf = match out {
        Some(p) => p.to_path_buf(),
        None => manifest.parent().unwrap_or(Path::new(".")).join("rerun"),
    };
    let mut argv = vec!["plateau".to_string()];
    let mut it = recorded.into_iter();
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
        } else if !a.starts_with("--out=") {
            argv.push(a);
        }
    }
    argv.push("--out".into());
    argv.push(dir.to_string_lossy().into_owned());
    execute(argv)
}
