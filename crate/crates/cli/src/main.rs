mod cli;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command};
use commands::Failure;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("bad arguments");
            report("usage", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(error_kind(&e), &format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}

fn report(kind: &str, msg: &str) {
    let flat: String = msg.split_whitespace().collect::<Vec<_>>().join(" ");
    let _ = writeln!(std::io::stderr(), "error[{kind}]: {flat}");
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    e.chain()
        .find_map(|c| {
            c.downcast_ref::<Failure>()
                .map(|f| f.kind)
                .or_else(|| c.downcast_ref::<prism_core::Error>().map(prism_core::Error::kind))
        })
        .unwrap_or("cli")
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    let threads = if g.deterministic {
        Some(1)
    } else {
        g.threads.filter(|&t| t > 0)
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Pool(a) => commands::pool(g, a),
        Command::Train(a) => commands::train(g, a),
        Command::Embed(a) => commands::embed(g, a),
        Command::Score(a) => commands::score(g, a),
        Command::Rank(a) => commands::rank(g, a),
        Command::Masks(a) => commands::masks(g, a),
        Command::Corrupt(a) => commands::corrupt(g, a),
        Command::Validate(a) => commands::validate(g, a),
    }
}
