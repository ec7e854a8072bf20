use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ownvoice::cli::{self, Condition, PipelineConfig, SimulateOptions};
use ownvoice::dataset::WavEncoding;
use ownvoice::simulate::SimulationMode;

/// Own-voice in-ear speech: transfer-function identification, simulation and evaluation.
#[derive(Parser, Debug)]
#[command(name = "ownvoice", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalFlags {
    #[arg(long, global = true, default_value_t = 5000)]
    sample_rate: u32,
    #[arg(long, global = true, default_value_t = 256)]
    frame_len: usize,
    #[arg(long, global = true, default_value_t = 128)]
    hop: usize,
    /// Prediction delay in samples applied to the in-ear signal.
    #[arg(long, global = true, default_value_t = 11)]
    delay: usize,
    /// Absolute regularizer added to the outer power. Default: 1e-10 x mean power.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Frames a class needs before it gets its own RTF.
    #[arg(long, global = true, default_value_t = 5)]
    min_frames: u64,
    /// Spectral floor of the LSD, in dB re. magnitude 1.
    #[arg(long, global = true, default_value_t = -160.0, allow_negative_numbers = true)]
    floor_db: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Number of phoneme classes in label files.
    #[arg(long, global = true, default_value_t = 62)]
    num_classes: usize,
}

impl GlobalFlags {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            sample_rate_hz: self.sample_rate,
            frame_len: self.frame_len,
            hop: self.hop,
            delay_samples: self.delay,
            eps: self.eps,
            min_frames: self.min_frames,
            floor_db: self.floor_db,
            seed: self.seed,
            jobs: self.jobs,
            num_classes: self.num_classes,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    SpeechIndependent,
    SpeechDependent,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ConditionArg {
    SameTalker,
    TalkerMismatch,
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate one model per talker from paired recordings.
    Identify {
        manifest: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Simulate in-ear signals from outer-microphone recordings.
    Simulate {
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::SpeechDependent)]
        mode: Mode,
        /// Drop the prediction delay from the output.
        #[arg(long)]
        compensate_delay: bool,
        /// pcm16, pcm24, pcm32 or float32.
        #[arg(long, default_value = "float32")]
        encoding: WavEncoding,
    },
    /// Log-spectral distance between real and simulated in-ear signals.
    Evaluate {
        manifest: PathBuf,
        #[arg(long)]
        sim_dir: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Same-talker and/or talker-mismatch experiment.
    Experiment {
        manifest: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = ConditionArg::Both)]
        condition: ConditionArg,
        /// Crop every utterance to this many seconds.
        #[arg(long)]
        crop_secs: Option<f64>,
    },
    /// Pseudo-phoneme labels by clustering outer-microphone spectra.
    ClusterLabels {
        manifest: PathBuf,
        #[arg(long, short = 'p', default_value_t = 62)]
        classes: usize,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Print a summary of a model file.
    InspectModel { model: PathBuf },
}

fn run(cli: Cli) -> ownvoice::Result<()> {
    let config = cli.global.config();
    match cli.command {
        Command::Identify { manifest, out } => {
            for path in cli::identify(&manifest, &out, &config)? {
                println!("{}", path.display());
            }
        }
        Command::Simulate {
            manifest,
            model,
            out,
            mode,
            compensate_delay,
            encoding,
        } => {
            let options = SimulateOptions {
                mode: match mode {
                    Mode::SpeechIndependent => SimulationMode::SpeechIndependent,
                    Mode::SpeechDependent => SimulationMode::SpeechDependent,
                },
                compensate_delay,
                encoding,
            };
            let results = cli::simulate(&manifest, &model, &out, &config, &options)?;
            println!("simulated {} utterances into {}", results.len(), out.display());
        }
        Command::Evaluate { manifest, sim_dir, out } => {
            let report = cli::evaluate(&manifest, &sim_dir, &out, &config)?;
            let s = report.summary;
            println!(
                "{} utterances: mean {:.3} dB, median {:.3} dB, IQR [{:.3}, {:.3}] dB",
                s.count, s.mean, s.median, s.q1, s.q3
            );
        }
        Command::Experiment {
            manifest,
            models,
            out,
            condition,
            crop_secs,
        } => {
            let conditions: &[Condition] = match condition {
                ConditionArg::SameTalker => &[Condition::SameTalker],
                ConditionArg::TalkerMismatch => &[Condition::TalkerMismatch],
                ConditionArg::Both => &[Condition::SameTalker, Condition::TalkerMismatch],
            };
            for &c in conditions {
                let r = cli::experiment(&manifest, &models, &out, c, crop_secs, &config)?;
                println!(
                    "{}: speech-independent mean {:.3} dB, speech-dependent mean {:.3} dB",
                    c.name(),
                    r.speech_independent.mean,
                    r.speech_dependent.mean
                );
            }
        }
        Command::ClusterLabels { manifest, classes, out } => {
            let written = cli::cluster_labels(&manifest, classes, &out, &config)?;
            println!("wrote {} label files to {}", written.len(), out.display());
        }
        Command::InspectModel { model } => print!("{}", cli::inspect_model(&model)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}

