mod args;
mod commands;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use args::{Cli, Command};

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    if cli.tol.is_nan() || cli.tol <= 0.0 {
        Cli::command()
            .error(ErrorKind::InvalidValue, "--tol must be positive")
            .exit();
    }
    match &cli.command {
        Command::Calibrate { data } => commands::calibrate_cmd(&cli, data),
        Command::Solve {
            game,
            dump_qp,
            iteration_log,
            skip_verify,
        } => commands::solve_cmd(&cli, game, *dump_qp, *iteration_log, *skip_verify),
        Command::Verify { game, report } => commands::verify_cmd(&cli, game, report),
        Command::SweepInvestors { range, template } => {
            if range.start == 0 {
                Cli::command()
                    .error(ErrorKind::InvalidValue, "investor counts start at 1")
                    .exit();
            }
            commands::sweep_investors_cmd(&cli, *range, template)
        }
        Command::SweepEfficiency { range, template } => {
            commands::sweep_efficiency_cmd(&cli, *range, template)
        }
        Command::SynthData { year } => commands::synth_data_cmd(&cli, *year),
    }
}
