use std::path::PathBuf;
use std::process::ExitCode;

use bookprobe::grammaticality::CorruptionSetting;
use bookprobe_cli::commands::{cmd_corrupt, cmd_gloss_train, cmd_split_book};
use bookprobe_cli::config::ExperimentConfig;
use bookprobe_cli::report::{cmd_report, headline};
use bookprobe_cli::runner::{cmd_run, prompt_for, RunOptions};
use bookprobe_cli::CliError;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bookprobe", version, about = "Grammar-book prompting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a raw grammar book into parallel and prose subsets.
    SplitBook {
        book: PathBuf,
        /// JSON file of example-markup regexes.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long, default_value = "kgv")]
        lang: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the prompt for one test example.
    BuildPrompt {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Keep ok records from an earlier run with the same prompts.
        #[arg(long)]
        resume: bool,
        /// Only the first N test examples.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Tabulate finished runs.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Directory for report.txt, report.csv and scatter CSVs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate grammaticality-judgment items.
    Corrupt {
        /// Parallel JSONL; the low-resource side is corrupted.
        input: PathBuf,
        #[arg(long, value_parser = parse_corruption)]
        setting: CorruptionSetting,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the Top-Class glosser.
    GlossTrain {
        train: PathBuf,
        #[arg(long, default_value = "kgv")]
        lang: String,
        #[arg(long)]
        out: PathBuf,
        /// IGT JSONL to score the trained model on.
        #[arg(long)]
        eval: Option<PathBuf>,
    },
}

fn parse_corruption(s: &str) -> Result<CorruptionSetting, String> {
    CorruptionSetting::parse(s).ok_or_else(|| format!("expected swap_adj, swap_ran or shuffle, got {s:?}"))
}

fn write(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::SplitBook { book, rules, lang, out } => {
            let stats = cmd_split_book(&book, rules.as_deref(), &lang, &out)?;
            println!("{}", serde_json::to_string_pretty(&stats).unwrap());
        }
        Command::BuildPrompt { config, index, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let prompt = prompt_for(&cfg, index)?;
            eprintln!(
                "{} data tokens, digest {}",
                bookprobe::prompts::count_prompt_tokens(&prompt),
                prompt.digest()
            );
            match out {
                Some(path) => write(&path, &prompt.text())?,
                None => print!("{}", prompt.text()),
            }
        }
        Command::Run { config, out, seed, resume, limit } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(out) = out {
                cfg.out_dir = out;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if limit.is_some() {
                cfg.limit = limit;
            }
            let outcome = cmd_run(&cfg, &RunOptions { resume })?;
            let s = &outcome.summary;
            println!(
                "{} {} {}: {} ok, {} error, {} infeasible; score {}",
                s.setting,
                s.direction,
                outcome.out_dir.display(),
                s.n_ok,
                s.n_error,
                s.n_infeasible,
                headline(s).map_or("--".into(), |v| format!("{v:.1}"))
            );
        }
        Command::Report { dirs, out } => {
            let report = cmd_report(&dirs)?;
            print!("{}", report.text);
            if let Some(out) = out {
                std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
                write(&out.join("report.txt"), &report.text)?;
                write(&out.join("report.csv"), &report.csv)?;
                for (dir, csv) in &report.scatter {
                    write(&out.join(format!("coverage_{dir}.csv")), csv)?;
                }
            }
            if !report.inconsistencies.is_empty() {
                return Err(CliError::Inconsistent(report.inconsistencies.join("\n")));
            }
        }
        Command::Corrupt { input, setting, seed, limit, out } => {
            let items = cmd_corrupt(&input, setting, seed, limit, Some(&out))?;
            println!("{} items written to {}", items.len(), out.display());
        }
        Command::GlossTrain { train, lang, out, eval } => {
            let outcome = cmd_gloss_train(&train, &lang, &out, eval.as_deref())?;
            println!("{} morphemes in model", outcome.model.total_morphemes());
            if let Some(s) = outcome.eval {
                println!(
                    "morph {:.1}  word {:.1}  stem F1 {:.1}  gram F1 {:.1}",
                    s.morph_acc, s.word_acc, s.stem_f1, s.gram_f1
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
