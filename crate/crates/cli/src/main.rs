use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bandit_core::runner::{aggregate_runs, compare, emit_results, run_experiment, ExperimentConfig};
use bandit_core::synthetic::{generate_spec, grid_heatmap, SyntheticEnvSpec};
use bandit_core::Error;

#[derive(Parser)]
#[command(name = "banditlab", version, about = "Contextual-bandit benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy under an experiment config and write regret CSVs
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate a synthetic environment spec and write it as JSON
    GenEnv(GenEnvArgs),
    /// Evaluate the action-averaged reward surface on a grid and write a CSV matrix
    Heatmap(HeatmapArgs),
    /// Run the meta-learner, random, and online-baseline policies under one
    /// config and write a combined regret.csv with a policy column
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct GenEnvArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    factors: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    sigma_lo: f64,
    #[arg(long, default_value_t = 0.3)]
    sigma_hi: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_std: f64,
}

#[derive(Args)]
struct HeatmapArgs {
    #[arg(long)]
    env: PathBuf,
    /// Two context dimensions to sweep, e.g. "0,1"
    #[arg(long)]
    dims: String,
    #[arg(long)]
    res: usize,
    #[arg(long)]
    out: PathBuf,
    /// Value held fixed on all other dimensions
    #[arg(long, default_value_t = 0.5)]
    fixed: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Io(_) => 4,
        Error::Json(_) | Error::Csv(_) => 4,
        _ => 3,
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_json_file(&config)?;
            let results = run_experiment(&cfg)?;
            let aggregate = aggregate_runs(&results)?;
            std::fs::create_dir_all(&cfg.output_path)?;
            emit_results(&aggregate, &results, &cfg, &cfg.output_path)?;
            println!(
                "wrote {} runs ({} steps each) to {}",
                results.len(),
                results[0].regret.horizon,
                cfg.output_path.display()
            );
            Ok(())
        }
        Command::GenEnv(args) => {
            let spec = generate_spec(
                args.d,
                args.k,
                args.factors,
                (args.sigma_lo, args.sigma_hi),
                args.noise_std,
                args.seed,
            )?;
            std::fs::write(&args.out, serde_json::to_string_pretty(&spec)?)?;
            println!("wrote spec to {}", args.out.display());
            Ok(())
        }
        Command::Heatmap(args) => {
            let text = std::fs::read_to_string(&args.env)?;
            let spec: SyntheticEnvSpec = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", args.env.display())))?;
            spec.validate()?;
            let dims = parse_dims(&args.dims)?;
            let fixed = vec![args.fixed; spec.d];
            let matrix = grid_heatmap(&spec, dims, args.res, &fixed)?;
            let mut out = String::new();
            for row in &matrix {
                let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            std::fs::write(&args.out, out)?;
            println!("wrote {0}x{0} heatmap to {1}", args.res, args.out.display());
            Ok(())
        }
        Command::Compare { config } => {
            let cfg = ExperimentConfig::from_json_file(&config)?;
            compare(&cfg)?;
            println!("wrote comparison to {}", cfg.output_path.display());
            Ok(())
        }
    }
}

fn parse_dims(s: &str) -> Result<(usize, usize), Error> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!("--dims expects \"i,j\", got \"{s}\"")));
    }
    let i = parts[0]
        .trim()
        .parse()
        .map_err(|e| Error::Config(format!("bad dim '{}': {e}", parts[0])))?;
    let j = parts[1]
        .trim()
        .parse()
        .map_err(|e| Error::Config(format!("bad dim '{}': {e}", parts[1])))?;
    Ok((i, j))
}
