//! `padic-walk`: tables of walk laws, heat kernels, scaling limits, simulations
//! and diffusion constants, each written with a run manifest.

mod commands;
mod output;

use clap::{Parser, Subcommand};
use output::OutputArgs;
use std::process::ExitCode;
use std::time::Instant;

/// Exit status when a run completes but one of its checks fails.
const CHECK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "padic-walk",
    version,
    about = "Hierarchical random walks on p-adic groups"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Shell probabilities, characteristic function, n-step laws and moments.
    Law {
        #[command(flatten)]
        args: commands::LawCmd,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Heat-kernel densities, shell masses and moments.
    Kernel {
        #[command(flatten)]
        args: commands::KernelCmd,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Distances between embedded walks and their limit along levels.
    Converge {
        #[command(flatten)]
        args: commands::ConvergeCmd,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Monte Carlo shell histograms.
    Simulate {
        #[command(flatten)]
        args: commands::SimulateCmd,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Diffusion constants, gaps and the endpoint scan.
    Critical {
        #[command(flatten)]
        args: commands::CriticalCmd,
        #[command(flatten)]
        out: OutputArgs,
    },
}

fn run(cmd: Cmd) -> anyhow::Result<bool> {
    let start = Instant::now();
    let (name, params, out, result) = match &cmd {
        Cmd::Law { args, out } => ("law", serde_json::to_value(args)?, out, commands::law(args)),
        Cmd::Kernel { args, out } => (
            "kernel",
            serde_json::to_value(args)?,
            out,
            commands::kernel(args),
        ),
        Cmd::Converge { args, out } => (
            "converge",
            serde_json::to_value(args)?,
            out,
            commands::converge(args),
        ),
        Cmd::Simulate { args, out } => (
            "simulate",
            serde_json::to_value(args)?,
            out,
            commands::simulate(args),
        ),
        Cmd::Critical { args, out } => (
            "critical",
            serde_json::to_value(args)?,
            out,
            commands::critical(args),
        ),
    };
    let manifest = output::write_run(name, params, out, result?, start.elapsed().as_secs_f64())?;
    for c in &manifest.checks {
        if c.passed {
            println!("{c}");
        } else {
            eprintln!("{c}");
        }
    }
    for f in &manifest.files {
        println!("wrote {}", out.out.join(f).display());
    }
    Ok(manifest.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CHECK_FAILED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
