use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use dcalm::dataset::{generate_synthetic, SyntheticConfig};
use dcalm::harness::{compare_files, run_experiment, ExperimentConfig, DEFAULT_THRESHOLDS};
use dcalm_service::SessionManager;

#[derive(Parser)]
#[command(name = "dcalm", version, about = "Clustering-based active learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every strategy × budget × seed cell of an experiment file.
    Run {
        config: PathBuf,
        /// Overrides `output_dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Overrides `seeds`, comma separated.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Overrides `budgets`, comma separated.
        #[arg(long, value_delimiter = ',')]
        budgets: Option<Vec<usize>>,
    },
    /// Count budgets where the reference strategy beats each baseline.
    Compare {
        #[arg(required = true)]
        curves: Vec<PathBuf>,
        #[arg(long, default_value = "dcalm")]
        reference: String,
        /// Macro-F1 gaps in points, comma separated.
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Write a Gaussian-blob corpus as JSONL.
    Synth {
        /// Instances per class, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "500,50")]
        class_counts: Vec<usize>,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        center_std: f64,
        #[arg(long, default_value_t = 1.0)]
        cluster_std: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when absent.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Start the annotation service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory of session event logs; sessions live in memory only when absent.
        #[arg(long)]
        state_dir: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            output_dir,
            seeds,
            budgets,
        } => run(&config, output_dir, seeds, budgets),
        Command::Compare {
            curves,
            reference,
            thresholds,
            json,
        } => {
            let paths: Vec<&Path> = curves.iter().map(PathBuf::as_path).collect();
            let thresholds = thresholds.unwrap_or_else(|| DEFAULT_THRESHOLDS.to_vec());
            let report = compare_files(&paths, &reference, &thresholds)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{report}");
            }
            Ok(())
        }
        Command::Synth {
            class_counts,
            dim,
            center_std,
            cluster_std,
            seed,
            output,
        } => {
            let config = SyntheticConfig {
                class_counts,
                dim,
                center_std,
                cluster_std,
                class_names: None,
            };
            let corpus = generate_synthetic(&config, seed)?;
            match output {
                Some(path) => {
                    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                    let mut out = BufWriter::new(file);
                    corpus.write_jsonl(&mut out)?;
                    out.flush()?;
                }
                None => corpus.write_jsonl(io::stdout().lock())?,
            }
            Ok(())
        }
        Command::Serve { addr, state_dir } => {
            let manager = match &state_dir {
                Some(dir) => SessionManager::open(dir)?,
                None => SessionManager::in_memory(),
            };
            eprintln!("serving {} session(s) on http://{addr}", manager.len());
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(dcalm_service::serve(Arc::new(manager), addr))?;
            Ok(())
        }
    }
}

fn run(
    path: &Path,
    output_dir: Option<PathBuf>,
    seeds: Option<Vec<u64>>,
    budgets: Option<Vec<usize>>,
) -> Result<()> {
    let mut config = ExperimentConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(dir) = output_dir {
        config.output_dir = dir;
    }
    if let Some(seeds) = seeds {
        config.seeds = seeds;
    }
    if let Some(budgets) = budgets {
        config.budgets = budgets;
    }
    let output = run_experiment(&config)?;
    println!("{:<16} {:>7} {:>6} {:>9} {:>9}", "strategy", "budget", "seed", "macro_f1", "accuracy");
    for p in &output.points {
        println!(
            "{:<16} {:>7} {:>6} {:>9.4} {:>9.4}",
            p.strategy, p.budget, p.seed, p.macro_f1, p.accuracy
        );
    }
    println!("curves: {}", output.curves_path.display());
    println!("seed means: {}", output.mean_curves_path.display());
    Ok(())
}
