use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lbpforest::imagio::ColorSpace;
use lbpforest_cli::config::{Aggregation, Overrides, Protocol, RunConfig};
use lbpforest_cli::error::{CliError, EXIT_BAD_INPUT};
use lbpforest_cli::{pipeline, synth};

#[derive(Parser, Debug)]
#[command(name = "lbpforest", version, about = "Face anti-spoofing with color LBP and a multi-scale deep forest")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract the three LBP scales of every manifest image into a cache file
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Train the cascade (and optionally the scanning baseline)
    Train {
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Output model directory
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Score the test folds of a trained model and write reports
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Output report directory
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        aggregate: Option<Aggregation>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the spoof probability of one image
    Score {
        #[arg(long)]
        model: PathBuf,
        /// Which fold's cascade to use
        #[arg(long, default_value_t = 0)]
        fold: usize,
        image: PathBuf,
    },
    /// Generate the synthetic genuine/spoof benchmark
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        per_class: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Args, Debug, Clone)]
struct RunFlags {
    /// key = value file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_space)]
    color_space: Option<ColorSpace>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    max_layers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    aggregate: Option<Aggregation>,
    /// Also train the grained-scanning baseline
    #[arg(long)]
    gsm: bool,
    #[arg(long, value_enum)]
    protocol: Option<Protocol>,
}

fn parse_space(s: &str) -> Result<ColorSpace, String> {
    s.parse().map_err(|e: lbpforest::Error| e.to_string())
}

impl RunFlags {
    fn resolve(&self, workers: Option<usize>) -> lbpforest_cli::Result<RunConfig> {
        let overrides = Overrides {
            color_space: self.color_space,
            trees: self.trees,
            folds: self.folds,
            patience: self.patience,
            max_layers: self.max_layers,
            seed: self.seed,
            aggregate: self.aggregate,
            gsm: self.gsm.then_some(true),
            protocol: self.protocol,
            workers,
        };
        RunConfig::resolve(self.config.as_deref(), &overrides)
    }
}

fn run(cli: Cli) -> lbpforest_cli::Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Extract { manifest, out, run } => {
            let cfg = run.resolve(cli.workers)?;
            let cache = pipeline::cmd_extract(&manifest, &cfg, &out)?;
            let [a, b, c] = cache.scale_lengths();
            eprintln!("{} samples, scale lengths {a}/{b}/{c} -> {}", cache.n_samples(), out.display());
        }
        Command::Train { cache, manifest, out, run } => {
            let cfg = run.resolve(cli.workers)?;
            let model = pipeline::cmd_train(&cache, &manifest, &cfg, &out)?;
            for f in &model.folds {
                let cascade = model.cascade(&out, f.fold)?;
                eprintln!(
                    "fold {}: {} train / {} val rows, {} layers, best layer {}",
                    f.fold,
                    f.n_train,
                    f.n_val,
                    cascade.layers.len(),
                    cascade.best_layer
                );
            }
        }
        Command::Eval { model, cache, manifest, out, aggregate, config } => {
            let mut cfg = RunConfig::default();
            if let Some(path) = config {
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io { path, source: e })?;
                cfg.apply_text(&text)?;
            }
            let aggregate = aggregate.unwrap_or(cfg.aggregate);
            let output = pipeline::cmd_eval(&model, &cache, &manifest, aggregate, &out)?;
            print!("{}", output.lbp.to_text());
            if let Some(gsm) = output.gsm {
                println!("scanning baseline:");
                print!("{}", gsm.to_text());
            }
        }
        Command::Score { model, fold, image } => {
            println!("{}", pipeline::cmd_score(&model, &image, fold)?);
        }
        Command::Synth { out, per_class, seed } => {
            let manifest = synth::generate(&out, per_class, seed)?;
            eprintln!("{} images -> {}", manifest.len(), out.join("manifest.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
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
