//! Command-line front end for the descriptor, tiering and schedule pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use molcurriculum::pipeline::{
    cmd_annotate, cmd_bench, cmd_prevalence, cmd_schedule, cmd_stats, correlate_files, loss_check, PipelineConfig,
    PipelineError, ScheduleSource,
};

#[derive(Debug, Parser)]
#[command(name = "molcurriculum", version, about = "Structural descriptors, curriculum tiers and sampling schedules for SMILES corpora")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Key-value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, as key=value. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Functional-group prevalence table and top groups.
    Prevalence {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Descriptors and tier for every parseable molecule.
    Annotate {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Use this prevalence table instead of computing one.
        #[arg(long)]
        prevalence: Option<PathBuf>,
    },
    /// Per-epoch budget and optional manifests.
    Schedule {
        /// Annotated JSON-lines file.
        #[arg(long, conflicts_with = "counts", required_unless_present = "counts")]
        annotated: Option<PathBuf>,
        /// Tier counts T0..T4, comma-separated.
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<u64>>,
        #[arg(long)]
        regime: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        hard_start: Option<f64>,
        /// Write one manifest file per epoch.
        #[arg(long)]
        manifests: bool,
    },
    /// Summary statistics of an annotated file.
    Stats { annotated: PathBuf },
    /// Throughput with one worker and with the configured worker count.
    Bench {
        /// Size of the synthetic corpus when no input is configured.
        #[arg(long, default_value_t = 10_000)]
        molecules: usize,
    },
    /// Gradient and identity checks of the loss kernels.
    LossCheck {
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        /// Also report distance correlation between two embedding files.
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        embeddings: Option<Vec<PathBuf>>,
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
    },
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Failure {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

fn config(common: &Common, extra: &[(&str, Option<String>)]) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    let flags = [
        ("workers", common.workers.map(|v| v.to_string())),
        ("seed", common.seed.map(|v| v.to_string())),
        ("output_dir", common.output_dir.as_ref().map(|p| p.display().to_string())),
    ];
    for (key, value) in flags.iter().chain(extra) {
        if let Some(value) = value {
            cfg.set(key, value)?;
        }
    }
    for item in &common.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| PipelineError::Config(format!("--set expects key=value, got {item:?}")))?;
        cfg.set(key.trim(), value.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn path(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = &cli.common;
    match &cli.command {
        Command::Prevalence { input } => {
            let cfg = config(common, &[("input", path(input))])?;
            let r = cmd_prevalence(&cfg)?;
            println!("molecules\t{}", r.molecules);
            println!("skipped\t{}", r.skipped);
            println!("top\t{}", r.top.join(","));
            println!("table\t{}", r.table_path.display());
        }
        Command::Annotate { input, prevalence } => {
            let cfg = config(common, &[("input", path(input)), ("prevalence", path(prevalence))])?;
            let r = cmd_annotate(&cfg)?;
            println!("written\t{}", r.written);
            println!("skipped\t{}", r.skipped);
            for (t, n) in r.histogram.iter().enumerate() {
                println!("T{t}\t{n}");
            }
            println!("output\t{}", r.output.display());
        }
        Command::Schedule {
            annotated,
            counts,
            regime,
            epochs,
            hard_start,
            manifests,
        } => {
            let cfg = config(
                common,
                &[
                    ("regime", regime.clone()),
                    ("epochs", epochs.map(|v| v.to_string())),
                    ("hard_start", hard_start.map(|v| v.to_string())),
                ],
            )?;
            let source = match (annotated, counts) {
                (Some(p), _) => ScheduleSource::Annotated(p.clone()),
                (None, Some(c)) => {
                    let c: [u64; 5] = c
                        .as_slice()
                        .try_into()
                        .map_err(|_| Failure::Usage("--counts needs five values".into()))?;
                    ScheduleSource::Counts(c)
                }
                (None, None) => return Err(Failure::Usage("give --annotated or --counts".into())),
            };
            let r = cmd_schedule(&cfg, &source, *manifests)?;
            println!("regime\t{}", r.regime);
            println!("epoch\tviews\tsampled\tcumulative");
            for e in &r.epochs {
                let sampled = e.sampled.map_or_else(|| "-".to_string(), |n| n.to_string());
                println!("{}\t{}\t{}\t{}", e.epoch, e.views, sampled, e.cumulative);
            }
            println!("total\t{}", r.total);
            println!("baseline\t{}", r.baseline);
            println!("ratio\t{}", r.ratio_text());
            println!("summary\t{}", r.summary_path.display());
        }
        Command::Stats { annotated } => {
            let r = cmd_stats(annotated)?;
            print!("{r}");
        }
        Command::Bench { molecules } => {
            let cfg = config(common, &[])?;
            let r = cmd_bench(&cfg, *molecules)?;
            println!("workers\tmolecules\tseconds\tms_per_mol\tmol_per_sec");
            for run in [&r.single, &r.parallel] {
                println!(
                    "{}\t{}\t{:.3}\t{:.4}\t{:.0}",
                    run.workers, run.molecules, run.seconds, run.ms_per_mol, run.mol_per_sec
                );
            }
            println!("speedup\t{:.2}", r.speedup);
            println!("efficiency\t{:.2}", r.efficiency);
            println!("available_cpus\t{}", r.available_cpus);
        }
        Command::LossCheck {
            seeds,
            embeddings,
            pairs,
        } => {
            let cfg = config(common, &[])?;
            let report = loss_check(*seeds, cfg.seed)?;
            print!("{report}");
            if let Some(files) = embeddings {
                let (rho, r) = correlate_files(&files[0], &files[1], *pairs, cfg.seed)?;
                println!("spearman\t{rho:.6}");
                println!("pearson\t{r:.6}");
            }
            if !report.passed() {
                return Err(Failure::Data("loss checks failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
