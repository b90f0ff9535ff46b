use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kltext::ga::GaConfig;
use kltext::harness::{self, EvalOptions, HarnessError, Method, SynthOptions, TrainOptions};
use kltext::kl::IterationConfig;

#[derive(Debug, Parser)]
#[command(
    name = "kltext",
    version,
    about = "Train, reduce and evaluate wordform-vector text classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a model from a corpus directory (one subdirectory per class).
    Train(TrainArgs),
    /// Classify a text file or every `*.txt` file below a directory.
    Classify(ClassifyArgs),
    /// Search per-class wordform masks with the genetic algorithm.
    Reduce(ReduceArgs),
    /// Score a model on a corpus and write a JSON report.
    Evaluate(EvaluateArgs),
    /// Write a seeded synthetic corpus.
    GenSynthetic(SynthArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    corpus: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    /// Maximum principal components per class.
    #[arg(short = 'm', long, default_value_t = TrainOptions::default().components)]
    components: usize,
    #[arg(long, default_value_t = IterationConfig::default().tolerance)]
    kl_tolerance: f64,
    #[arg(long, default_value_t = IterationConfig::default().max_iterations)]
    kl_max_iter: usize,
    #[arg(long, default_value_t = TrainOptions::default().smoothing)]
    smoothing: f64,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    model: PathBuf,
    input: PathBuf,
    /// pc, cosine or bayes.
    #[arg(long, default_value = "pc")]
    method: String,
}

#[derive(Debug, Args)]
struct ReduceArgs {
    model: PathBuf,
    corpus: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    /// Path of the per-class CSV report.
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value_t = GaConfig::default().theta)]
    theta: f64,
    #[arg(long, default_value_t = GaConfig::default().rho)]
    rho: f64,
    #[arg(long, default_value_t = GaConfig::default().population_size)]
    population: usize,
    #[arg(long, default_value_t = GaConfig::default().mutation_probability)]
    mutation: f64,
    #[arg(long, default_value_t = GaConfig::default().max_generations)]
    generations: usize,
    /// Stop after this many generations without improvement.
    #[arg(long, default_value_t = GaConfig::default().stagnation_limit)]
    stagnation: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    model: PathBuf,
    corpus: PathBuf,
    /// Path of the JSON report.
    #[arg(short, long)]
    report: PathBuf,
    /// Held-out fraction per class; 0 scores the training corpus.
    #[arg(long, default_value_t = 0.0)]
    split_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "pc")]
    method: String,
}

#[derive(Debug, Args)]
struct SynthArgs {
    out: PathBuf,
    #[arg(long, default_value_t = SynthOptions::default().classes)]
    classes: usize,
    #[arg(long, default_value_t = SynthOptions::default().docs_per_class)]
    docs_per_class: usize,
    #[arg(long, default_value_t = SynthOptions::default().signal_terms)]
    signal_terms: usize,
    #[arg(long, default_value_t = SynthOptions::default().noise_terms)]
    noise_terms: usize,
    #[arg(long, default_value_t = SynthOptions::default().min_tokens)]
    min_tokens: usize,
    #[arg(long, default_value_t = SynthOptions::default().max_tokens)]
    max_tokens: usize,
    #[arg(long, default_value_t = SynthOptions::default().seed)]
    seed: u64,
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Train(a) => {
            let opts = TrainOptions {
                components: a.components,
                kl: IterationConfig {
                    max_iterations: a.kl_max_iter,
                    tolerance: a.kl_tolerance,
                },
                smoothing: a.smoothing,
            };
            for line in harness::cmd_train(&a.corpus, &a.out, &opts)? {
                println!("{line}");
            }
        }
        Command::Classify(a) => {
            let method: Method = a.method.parse()?;
            let lines = harness::cmd_classify(&a.model, &a.input, method)?;
            for line in &lines {
                println!("{line}");
            }
            if !lines.is_empty() && lines.iter().all(|l| l.prediction.winner.is_none()) {
                return Err(HarnessError::Model("no document could be classified".into()));
            }
        }
        Command::Reduce(a) => {
            let cfg = GaConfig {
                population_size: a.population,
                mutation_probability: a.mutation,
                max_generations: a.generations,
                stagnation_limit: a.stagnation,
                theta: a.theta,
                rho: a.rho,
                seed: a.seed,
            };
            let rows = harness::cmd_reduce(&a.model, &a.corpus, &a.out, &a.csv, &cfg)?;
            print!("{}", harness::reduction_csv(&rows));
            for r in rows.iter().filter(|r| r.generations.is_none()) {
                eprintln!(
                    "warning: class `{}` is inseparable at theta {} (containment {:.6})",
                    r.class, cfg.theta, r.containment
                );
            }
        }
        Command::Evaluate(a) => {
            let opts = EvalOptions {
                split_fraction: a.split_fraction,
                seed: a.seed,
                method: a.method.parse()?,
            };
            let report = harness::cmd_evaluate(&a.model, &a.corpus, &a.report, &opts)?;
            print!("{}", report.table());
        }
        Command::GenSynthetic(a) => {
            let opts = SynthOptions {
                classes: a.classes,
                docs_per_class: a.docs_per_class,
                signal_terms: a.signal_terms,
                noise_terms: a.noise_terms,
                min_tokens: a.min_tokens,
                max_tokens: a.max_tokens,
                seed: a.seed,
            };
            let n = harness::gen_synthetic(&a.out, &opts)?;
            println!("wrote {n} documents to {}", a.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
