mod config;
mod run;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgMatches};
use orlicz_frac::Error;
use serde_json::json;

use crate::config::{Command, RunConfig};

fn cli() -> clap::Command {
    let mut app = clap::Command::new("orlicz-frac")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Fractional Orlicz modulars, Young-function diagnostics and small-s studies")
        .subcommand_required(true);
    for command in Command::ALL {
        let mut sub = clap::Command::new(command.name()).about(command.about()).arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("key = value file or a JSON sidecar from an earlier run"),
        );
        for key in command.keys() {
            sub = sub.arg(Arg::new(key).long(key).value_name("VALUE").allow_hyphen_values(true));
        }
        app = app.subcommand(sub);
    }
    app
}

fn build_config(command: Command, matches: &ArgMatches) -> orlicz_frac::Result<RunConfig> {
    let mut params = BTreeMap::new();
    if let Some(path) = matches.get_one::<String>("config") {
        let (file_command, map) = config::read_file(Path::new(path))?;
        if let Some(fc) = file_command {
            if fc != command.name() {
                return Err(Error::InvalidParameter(format!(
                    "config file is for '{fc}', not '{}'",
                    command.name()
                )));
            }
        }
        params.extend(map);
    }
    for key in command.keys() {
        if let Some(v) = matches.get_one::<String>(key) {
            params.insert(key.to_string(), v.clone());
        }
    }
    RunConfig::new(command, params)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::DegenerateInput(_) => 1,
        Error::NumericFailure { .. } | Error::UnboundedNorm { .. } | Error::ConstructionFailure(_) => 2,
        Error::StudyFailure(_) => 3,
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {}: {}", e.code(), e.to_string().replace('\n', " "));
    ExitCode::from(exit_code(e))
}

fn write(path: &Path, body: &str) -> orlicz_frac::Result<()> {
    fs::write(path, body).map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", path.display())))
}

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut name = base.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn execute(cfg: &RunConfig) -> orlicz_frac::Result<()> {
    let format = cfg.str_or("format", "both");
    let (csv, json_out) = match format {
        "csv" => (true, false),
        "json" => (false, true),
        "both" => (true, true),
        other => return Err(Error::InvalidParameter(format!("unknown format '{other}' (csv, json, both)"))),
    };
    let artifacts = run::run(cfg)?;
    let quad = cfg.quadrature()?;
    let document = json!({
        "provenance": {
            "tool": "orlicz-frac",
            "version": env!("CARGO_PKG_VERSION"),
            "command": cfg.command.name(),
            "seed": quad.rng_seed,
            "config": cfg.echo(),
        },
        "result": artifacts.result,
    });
    let rendered = serde_json::to_string_pretty(&document).expect("JSON values always serialize");
    match cfg.get("out") {
        Some(out) => {
            let base = PathBuf::from(out);
            if csv {
                write(&with_suffix(&base, ".csv"), &artifacts.csv)?;
                for (suffix, body) in &artifacts.extra {
                    write(&with_suffix(&base, &format!(".{suffix}.csv")), body)?;
                }
            }
            if json_out {
                write(&with_suffix(&base, ".json"), &(rendered + "\n"))?;
            }
        }
        None => {
            if csv {
                print!("{}", artifacts.csv);
            }
            if json_out {
                println!("{rendered}");
            }
        }
    }
    Ok(())
}

fn configure_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("ORLICZ_FRAC_THREADS") {
        let threads: usize = v
            .parse()
            .ok()
            .filter(|&t| t > 0)
            .ok_or_else(|| Error::InvalidParameter(format!("ORLICZ_FRAC_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            return fail(&Error::InvalidParameter(first));
        }
    };
    if let Err(e) = configure_threads() {
        return fail(&e);
    }
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let command = Command::parse(name).expect("clap only accepts known subcommands");
    let outcome = build_config(command, sub).and_then(|cfg| execute(&cfg));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
