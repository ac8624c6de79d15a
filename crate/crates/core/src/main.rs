use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use facemkl::pipeline::synth::{generate_synthetic, write_dataset, SynthParams};
use facemkl::pipeline::{load_manifest, run_stages, PipelineConfig, Stage};
use facemkl::Error;

#[derive(Parser)]
#[command(
    name = "facemkl",
    about = "Gallery/probe recognition via multiple feature-kernel learning with domain adaptation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// Pipeline configuration (TOML), or `profile:<name>` for an embedded
    /// dataset profile (fr_surv, scface, chokepoint).
    #[arg(long)]
    config: String,
    /// Dataset manifest file.
    #[arg(long)]
    manifest: PathBuf,
    /// Run directory for checkpoints and reports.
    #[arg(long)]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Degrade gallery and enhance probe images.
    Preprocess(StageArgs),
    /// Extract or ingest the feature bank.
    Extract(StageArgs),
    /// Learn feature weights per kernel and select feature-kernel pairs.
    TrainMfkc(StageArgs),
    /// Embed selected pairs and learn the domain transforms.
    Adapt(StageArgs),
    /// Score probes and write the evaluation report.
    Evaluate(StageArgs),
    /// Run every stage.
    Run {
        #[command(flatten)]
        stage: StageArgs,
        /// Resume from this stage using existing checkpoints.
        #[arg(long)]
        stage_from: Option<String>,
    },
    /// Generate a seeded synthetic domain-shift dataset.
    Synth {
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        classes: usize,
        #[arg(long, default_value_t = 20)]
        gallery_per_class: usize,
        #[arg(long, default_value_t = 10)]
        probe_per_class: usize,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        /// Norm of the translation part of the domain shift.
        #[arg(long, default_value_t = 3.0)]
        shift: f64,
        /// Magnitude of the linear part of the domain shift.
        #[arg(long, default_value_t = 0.1)]
        shift_linear: f64,
        /// Extra noise on target samples.
        #[arg(long, default_value_t = 0.2)]
        noise: f64,
        /// Also render blob images (probes carry an inverse contrast warp).
        #[arg(long, default_value_t = false)]
        images: bool,
        /// Contrast warp applied to rendered probe images.
        #[arg(long, default_value_t = 1.5)]
        contrast_gamma: f64,
    },
}

fn load_config(arg: &str, seed: Option<u64>) -> Result<PipelineConfig, Error> {
    let mut config = if let Some(name) = arg.strip_prefix("profile:") {
        PipelineConfig::profile(name)?
    } else {
        PipelineConfig::load(&PathBuf::from(arg))?
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

fn run_stage_list(args: &StageArgs, stages: &[Stage]) -> Result<(), Error> {
    let config = load_config(&args.config, args.seed)?;
    let manifest = load_manifest(&args.manifest)?;
    let report = run_stages(&config, &manifest, &args.out, stages)?;
    if let Some(r) = report {
        println!("rank1 {}", r.rank1);
        println!("auc {}", r.auc);
        println!("report {}", args.out.join("report").display());
    } else {
        println!("completed {:?}", stages.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Preprocess(args) => run_stage_list(&args, &[Stage::Preprocess]),
        Command::Extract(args) => run_stage_list(&args, &[Stage::Extract]),
        Command::TrainMfkc(args) => run_stage_list(&args, &[Stage::TrainMfkc]),
        Command::Adapt(args) => run_stage_list(&args, &[Stage::Adapt]),
        Command::Evaluate(args) => run_stage_list(&args, &[Stage::Evaluate]),
        Command::Run { stage, stage_from } => {
            let start = match stage_from {
                Some(name) => Stage::from_str(&name)?,
                None => Stage::Preprocess,
            };
            let idx = Stage::ALL.iter().position(|&s| s == start).unwrap();
            run_stage_list(&stage, &Stage::ALL[idx..])
        }
        Command::Synth {
            out,
            seed,
            classes,
            gallery_per_class,
            probe_per_class,
            dim,
            shift,
            shift_linear,
            noise,
            images,
            contrast_gamma,
        } => {
            let params = SynthParams {
                classes,
                gallery_per_class,
                probe_per_class,
                dim,
                shift_translation: shift,
                shift_linear,
                noise_sigma: noise,
                contrast_gamma,
                render_images: images,
                ..SynthParams::default()
            };
            let dataset = generate_synthetic(&params, seed)?;
            let manifest_path = write_dataset(&dataset, &out)?;
            println!("manifest {}", manifest_path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
