use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lobatto::commands::{cmd_benchmark, cmd_bound_states, cmd_hhg, cmd_nodes, cmd_optimize, cmd_scan};
use lobatto::config::RunConfig;
use lobatto::{AppError, AppResult};

#[derive(Parser)]
#[command(name = "lobatto", version, about = "Spectral-element bound states and HHG propagation")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output` of the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent trajectories.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides `seed` of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the GLL nodes, weights and corner derivative of order N.
    Nodes { order: usize },
    /// Eigenvalues of the configured system.
    BoundStates,
    /// Driven propagation with spectrum, Gabor and ionization output.
    Hhg,
    /// Yield over a grid of relative phases or rotation angles.
    Scan,
    /// Sequential optimization of the initial superposition.
    Optimize,
    /// Storage and timing table for (N, M) pairs.
    Benchmark,
}

fn load(cli: &Cli) -> AppResult<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| AppError::config("--config <path> is required"))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(o) = &cli.out {
        cfg.output = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> AppResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| AppError::config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Nodes { order } => {
            let r = cmd_nodes(order, cli.out.as_deref())?;
            println!("# j node weight");
            for (j, (x, w)) in r.nodes.iter().zip(&r.weights).enumerate() {
                println!("{j} {x:.17e} {w:.17e}");
            }
            println!("# D_00 = {:.17e}", r.corner_derivative);
        }
        Command::BoundStates => {
            let cfg = load(&cli)?;
            let r = cmd_bound_states(&cfg, &cfg.output)?;
            println!("points {}", r.points);
            for l in &r.levels {
                match l.error() {
                    Some(e) => println!("{:>5} {:.12} residual {:.2e} error {:.3e}", l.index, l.energy, l.residual, e),
                    None => println!("{:>5} {:.12} residual {:.2e}", l.index, l.energy, l.residual),
                }
            }
        }
        Command::Hhg => {
            let cfg = load(&cli)?;
            let r = cmd_hhg(&cfg, &cfg.output)?;
            println!(
                "cutoff {:.2} (ground state {:.2}, (Ip + 3.17 Up)/w0 = {:.2}), yield {:.6e} over [{:.4}, {:.4}], norm drift {:.2e}",
                r.cutoff.order, r.ground_cutoff.order, r.standard_cutoff, r.yield_value, r.band.0, r.band.1, r.norm_drift
            );
        }
        Command::Scan => {
            let cfg = load(&cli)?;
            for row in cmd_scan(&cfg, &cfg.output)? {
                match row.flipped {
                    Some((j, d)) => println!("{:.6} {:.6e} {:.6e} {:.6e} {:.6e}", row.value, row.yield_value, row.ddot0, j, d),
                    None => println!("{:.6} {:.6e} {:.6e}", row.value, row.yield_value, row.ddot0),
                }
            }
        }
        Command::Optimize => {
            let cfg = load(&cli)?;
            let r = cmd_optimize(&cfg, &cfg.output)?;
            let mags: Vec<String> = r.coefficients.iter().map(|(a, b)| format!("{:.4}", a.hypot(*b))).collect();
            println!("|c| = [{}], J = {:.6e}, {:+.2}% over equal weights", mags.join(", "), r.yield_value, 100.0 * r.improvement);
        }
        Command::Benchmark => {
            let cfg = load(&cli)?;
            for r in cmd_benchmark(&cfg, &cfg.output)? {
                println!(
                    "N={} M={} dim={} stored={} formula={} dense={} width={:.4e} matvec={:.3e}s step={:.3e}s",
                    r.order,
                    r.elements,
                    r.dimension,
                    r.stored,
                    r.formula.map(|f| f.to_string()).unwrap_or_else(|| "-".into()),
                    r.dense,
                    r.spectral_width,
                    r.matvec_seconds,
                    r.step_seconds
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
