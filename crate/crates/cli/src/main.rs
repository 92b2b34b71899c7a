use std::path::PathBuf;
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches};
use replyset::commands::{self, Command};
use replyset::config::{RunConfig, KEYS};
use replyset::CliError;

fn flag(key: &str) -> String {
    key.replace('_', "-")
}

fn cli() -> clap::Command {
    let defaults = RunConfig::default();
    let mut cmd = clap::Command::new("replyset")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Bootstrap reply-set datasets, run diversified baselines and evaluate suggestions")
        .after_help("Precedence: built-in defaults < --config file < command-line flags.")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("flat key = value config file"),
        );
    for (key, help) in KEYS {
        let mut arg = Arg::new(*key).long(flag(key)).global(true).help(*help);
        if *key == "persona" {
            arg = arg.num_args(0..=1).default_missing_value("true").value_name("BOOL");
        } else {
            arg = arg.value_name(key.to_uppercase()).action(ArgAction::Set);
        }
        let default = defaults.get(key);
        if !default.is_empty() {
            arg = arg.default_value(default);
        }
        cmd = cmd.arg(arg);
    }
    for c in Command::ALL {
        cmd = cmd.subcommand(clap::Command::new(c.name()).about(c.about()));
    }
    cmd
}

fn resolve(top: &ArgMatches, sub: &ArgMatches) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = sub.get_one::<PathBuf>("config").or_else(|| top.get_one::<PathBuf>("config")) {
        cfg.apply_file(path)?;
    }
    for (key, _) in KEYS {
        for m in [top, sub] {
            if m.value_source(key) == Some(ValueSource::CommandLine) {
                if let Some(v) = m.get_one::<String>(key) {
                    cfg.set(key, v)?;
                }
            }
        }
    }
    Ok(cfg)
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    eprintln!("{}", e.to_json_line());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return fail(&CliError::Usage(e.kind().to_string()));
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let cmd = Command::ALL.into_iter().find(|c| c.name() == name).expect("known subcommand");
    let result = resolve(&matches, sub).and_then(|cfg| commands::run(cmd, &cfg));
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
