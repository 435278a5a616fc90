mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use commands::CliError;
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "wlab", version, about = "Minimal surfaces, Shiffman functions and KdV flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override any configuration key, e.g. `--set flow.dt=5e-5`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write OBJ and PLY meshes with JSON metadata.
    Mesh {
        surface: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the checks for a surface and write a JSON report.
    Diagnose {
        surface: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// KdV tools.
    Kdv {
        #[command(subcommand)]
        action: KdvAction,
    },
    /// Shiffman flow on a cylinder line.
    Flow {
        surface: Option<String>,
        /// Flow horizon.
        #[arg(long = "T")]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Fit the asymptotic profile of one end.
    FitEnd {
        surface: Option<String>,
        /// Index into the declared ends.
        #[arg(long)]
        end: Option<usize>,
        #[arg(long)]
        radius: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum KdvAction {
    /// Print the hierarchy polynomials 𝒫₀..𝒫ₙ.
    Hierarchy {
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Real 1-soliton harness.
    Soliton {
        #[command(flatten)]
        common: Common,
    },
    /// Algebro-geometric rank test.
    Agtest {
        /// `rational`, `constant` or `riemann:λ=<value>`.
        #[arg(long)]
        u: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Same as `wlab flow`.
    Flow {
        #[arg(long)]
        surface: Option<String>,
        #[arg(long = "T")]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
}

fn build_config(common: &Common, extra: Vec<(&str, Option<String>)>) -> Result<RunConfig, String> {
    let mut o = Vec::new();
    if let Some(out) = &common.out {
        o.push(("out_dir".to_string(), format!("{:?}", out.display().to_string())));
    }
    for (k, v) in extra {
        if let Some(v) = v {
            o.push((k.to_string(), v));
        }
    }
    for s in &common.set {
        let (k, v) = s.split_once('=').ok_or_else(|| format!("override '{s}' is not KEY=VALUE"))?;
        o.push((k.trim().to_string(), v.trim().to_string()));
    }
    RunConfig::load(common.config.as_deref(), &o)
}

fn quoted(s: Option<String>) -> Option<String> {
    s.map(|s| format!("{s:?}"))
}

fn num<T: ToString>(v: Option<T>) -> Option<String> {
    v.map(|v| v.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = |common: &Common, extra| build_config(common, extra).map_err(CliError::Construction);
    match cli.command {
        Command::Mesh { surface, common } => commands::cmd_mesh(&cfg(&common, vec![("surface", quoted(surface))])?),
        Command::Diagnose { surface, common } => {
            commands::cmd_diagnose(&cfg(&common, vec![("surface", quoted(surface))])?)
        }
        Command::Flow { surface, t_end, dt, common } => commands::cmd_flow(&cfg(
            &common,
            vec![("surface", quoted(surface)), ("flow.t_end", num(t_end)), ("flow.dt", num(dt))],
        )?),
        Command::FitEnd { surface, end, radius, common } => commands::cmd_fit_end(&cfg(
            &common,
            vec![("surface", quoted(surface)), ("end.index", num(end)), ("end.r_start", num(radius))],
        )?),
        Command::Kdv { action } => match action {
            KdvAction::Hierarchy { n, common } => {
                let text = commands::cmd_kdv_hierarchy(&cfg(&common, vec![("kdv.order", num(n))])?)?;
                print!("{text}");
                Ok(())
            }
            KdvAction::Soliton { common } => commands::cmd_kdv_soliton(&cfg(&common, vec![])?),
            KdvAction::Agtest { u, common } => commands::cmd_kdv_agtest(&cfg(&common, vec![("kdv.potential", quoted(u))])?),
            KdvAction::Flow { surface, t_end, dt, common } => commands::cmd_flow(&cfg(
                &common,
                vec![("surface", quoted(surface)), ("flow.t_end", num(t_end)), ("flow.dt", num(dt))],
            )?),
        },
    }
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("WLAB_THREADS").ok().and_then(|s| s.parse::<usize>().ok()).filter(|&n| n > 0) {
        // ignore the error if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
