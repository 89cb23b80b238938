use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use specpipe_core::pipeline::{
    compare_runs, evaluate_stage, generate_stage, load_config, run, segment_stage,
    spectrogram_stage, train_stage, with_jobs, PipelineConfig, PipelineError,
};

/// Spectrogram classification pipeline.
///
/// Exit codes: 0 success, 1 config or usage error, 2 data or i/o error,
/// 3 numerical failure. Log level comes from SPECPIPE_LOG (default info).
#[derive(Parser, Debug)]
#[command(name = "specpipe", version, about)]
struct Cli {
    /// JSON config; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the synthetic pass/fail corpus (`--seed` sets the corpus seed).
    Generate,
    /// Dump raw segments of every active clip.
    Segment,
    /// Compute features and export spectrogram images.
    Spectrogram,
    /// Train all configured stages and write the checkpoint.
    Train,
    /// Evaluate a checkpoint on the test split.
    Evaluate {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Spectrogram, train and evaluate in one go.
    Run,
    /// Tabulate AUC, sensitivity and specificity across runs.
    Compare {
        /// Run directories or report files.
        runs: Vec<PathBuf>,
    },
}

fn resolve(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = Some(j);
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: PathBuf, text: &str) -> Result<(), PipelineError> {
    fs::write(&path, text).map_err(|e| PipelineError::Data(format!("io: {}: {e}", path.display())))
}

fn execute(cli: &Cli) -> Result<(), PipelineError> {
    let mut cfg = resolve(cli)?;
    match &cli.command {
        Command::Generate => {
            if let Some(s) = cli.seed {
                cfg.corpus.seed = s;
            }
            let m = with_jobs(cfg.jobs, || generate_stage(&cfg.corpus, &cfg.out_dir))??;
            println!(
                "wrote {} clips for {} participants to {}",
                m.n_clips(),
                m.participants.len(),
                cfg.out_dir.display()
            );
        }
        Command::Segment => {
            let n = with_jobs(cfg.jobs, || segment_stage(&cfg))??;
            println!(
                "wrote {n} segments to {}",
                cfg.out_dir.join("segments").display()
            );
        }
        Command::Spectrogram => {
            let n = with_jobs(cfg.jobs, || spectrogram_stage(&cfg))??;
            println!("computed features for {n} segments");
        }
        Command::Train => {
            let t = with_jobs(cfg.jobs, || train_stage(&cfg))??;
            for s in &t.log.stages {
                println!(
                    "stage {} ({}): loss {:.4} -> {:.4}",
                    s.stage, s.dataset_id, s.initial_loss, s.final_loss
                );
            }
            println!("checkpoint {}", t.checkpoint.display());
        }
        Command::Evaluate { checkpoint } => {
            let r = with_jobs(cfg.jobs, || evaluate_stage(&cfg, checkpoint.as_deref()))??;
            println!("{}", r.to_json().trim_end());
        }
        Command::Run => {
            let s = with_jobs(cfg.jobs, || run(&cfg))??;
            let f = |v: Option<f64>| v.map_or_else(|| "-".into(), |x| format!("{x:.3}"));
            println!(
                "{}: AUC {} ST {} SP {} (config {})",
                s.mode.tag(),
                f(s.metrics.auc),
                f(s.metrics.sensitivity),
                f(s.metrics.specificity),
                &s.config_hash[..12]
            );
        }
        Command::Compare { runs } => {
            let table = compare_runs(runs)?;
            if let Some(out) = &cli.out {
                fs::create_dir_all(out)
                    .map_err(|e| PipelineError::Data(format!("io: {}: {e}", out.display())))?;
                write(out.join("compare.csv"), &table.to_csv())?;
                write(out.join("compare.txt"), &table.to_text())?;
                info!("wrote compare.csv and compare.txt to {}", out.display());
            }
            print!("{}", table.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPECPIPE_LOG", "info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
