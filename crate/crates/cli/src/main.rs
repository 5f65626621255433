mod args;
mod commands;
mod config;
mod error;
mod output;
mod pipeline;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = match &cli.command {
        Command::Run(a) => a.common.jobs,
        Command::Compare(a) => a.common.jobs,
        Command::Ablate(a) => a.common.jobs,
        Command::GenScene(a) => a.common.jobs,
        Command::Oracle(a) => a.common.jobs,
    };
    if jobs > 0 {
        // worker count affects scheduling only, never results
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot configure worker pool: {e}");
            return ExitCode::from(1);
        }
    }

    let result = match &cli.command {
        Command::Run(a) => commands::cmd_run(a),
        Command::Compare(a) => commands::cmd_compare(a),
        Command::Ablate(a) => commands::cmd_ablate(a),
        Command::GenScene(a) => commands::cmd_gen_scene(a),
        Command::Oracle(a) => commands::cmd_oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
