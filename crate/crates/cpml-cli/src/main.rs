//! Command-line front end: each subcommand drives one pipeline stage (or the
//! whole run) from a JSON config, with optional seed and output-directory
//! overrides. Exits nonzero with a stage-named diagnostic on failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cpml_core::pipeline::{
    run_pipeline, stage_eval, stage_featurize, stage_split, stage_synth, stage_train,
    PipelineConfig,
};

#[derive(Parser)]
#[command(
    name = "cpml",
    version,
    about = "COPD risk prediction pipelines over clinical notes and vital signs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run synth, split, featurize, train and eval for every seed, then
    /// write the seed-averaged summary
    Run(StageArgs),
    /// Generate the configured synthetic cohort for each seed
    Synth(StageArgs),
    /// Partition records and downsample training negatives
    Split(StageArgs),
    /// Build feature artifacts from the data and the split manifest
    Featurize(StageArgs),
    /// Fit the reduction and train the selected classifiers
    Train(StageArgs),
    /// Score validation rows, writing ROC curves and summaries
    Eval(StageArgs),
}

#[derive(Args)]
struct StageArgs {
    /// Pipeline configuration file (JSON)
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Operate on this seed only, overriding the config's seed list
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Write artifacts under this directory, overriding output_dir
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl StageArgs {
    fn load(&self) -> Result<PipelineConfig, cpml_core::Error> {
        let mut config = PipelineConfig::load(&self.config)?;
        if let Some(dir) = &self.out {
            config.output_dir = dir.clone();
        }
        if let Some(seed) = self.seed {
            config.seeds = vec![seed];
        }
        Ok(config)
    }
}

fn each_seed(
    args: &StageArgs,
    stage: fn(&PipelineConfig, u64) -> Result<(), cpml_core::Error>,
) -> Result<(), cpml_core::Error> {
    let config = args.load()?;
    for &seed in &config.seeds {
        stage(&config, seed)?;
    }
    Ok(())
}

fn execute(command: &Command) -> Result<(), cpml_core::Error> {
    match command {
        Command::Run(args) => {
            let config = args.load()?;
            let summary = run_pipeline(&config)?;
            for (name, auc) in &summary.mean_auc {
                println!(
                    "{name}: mean AUC {auc:.4}, mean accuracy {:.4} over {} seed(s)",
                    summary.mean_accuracy[name],
                    summary.seeds.len()
                );
            }
            Ok(())
        }
        Command::Synth(args) => each_seed(args, stage_synth),
        Command::Split(args) => each_seed(args, stage_split),
        Command::Featurize(args) => each_seed(args, stage_featurize),
        Command::Train(args) => each_seed(args, stage_train),
        Command::Eval(args) => {
            let config = args.load()?;
            for &seed in &config.seeds {
                let summary = stage_eval(&config, seed)?;
                for (name, report) in &summary.reports {
                    println!(
                        "seed {seed} {name}: AUC {:.4}, accuracy {:.4}",
                        report.auc, report.accuracy
                    );
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
