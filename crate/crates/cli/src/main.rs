mod args;
mod commands;
mod output;

use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use args::{overlay, read_config, Cli, Command, ConfigFile, PresetName};
use commands::{presets, RunContext};
use mazer_core::ModeProfile;

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.globals.config {
        Some(path) => read_config(path)?,
        None => ConfigFile::default(),
    };
    let globals = overlay(Some(file.globals()), cli.globals.clone())?;
    if let Some(threads) = globals.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let ctx = RunContext::new(globals)?;
    match cli.command {
        Command::Scatter(a) => {
            let a = overlay(file.scatter, a)?;
            print!("{}", commands::scatter(&ctx, &a)?);
        }
        Command::Sweep(a) => report(commands::sweep(&ctx, &overlay(file.sweep, a)?)?),
        Command::SteadyState(a) => report(commands::steady_state(
            &ctx,
            &overlay(file.steady_state, a)?,
        )?),
        Command::Resonances(a) => {
            report(commands::resonances(&ctx, &overlay(file.resonances, a)?)?)
        }
        Command::Preset { name } => match name {
            PresetName::Fig1 => report(commands::sweep(&ctx, &presets::fig1())?),
            PresetName::Fig2a => report(commands::steady_state(&ctx, &presets::fig2a())?),
            PresetName::Fig2b => report(commands::steady_state(&ctx, &presets::fig2b())?),
            PresetName::Fig3 => report(commands::sweep(&ctx, &presets::fig3())?),
            PresetName::Fig4 => {
                for profile in ModeProfile::ALL {
                    report(commands::sweep(&ctx, &presets::fig4(profile))?);
                }
            }
        },
    }
    Ok(())
}

fn report(path: std::path::PathBuf) {
    eprintln!("wrote {}", path.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match &cli.command {
        Command::Preset { name } => format!("preset {}", name.name()),
        other => other.name().to_string(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mazer {command}: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
