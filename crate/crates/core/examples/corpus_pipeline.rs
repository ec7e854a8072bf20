//! End to end on a synthetic two-talker corpus written to disk: identify,
//! simulate, evaluate and run both experiment conditions, the same steps the
//! `ownvoice` binary exposes.
//!
//!     cargo run --release --example corpus_pipeline -- [work_dir]

use std::path::PathBuf;

use ownvoice::cli::{self, Condition, PipelineConfig, SimulateOptions};
use ownvoice::simulate::SimulationMode;
use ownvoice::synthetic::{write_corpus, CorpusSpec};

fn main() -> ownvoice::Result<()> {
    let work: PathBuf = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("ownvoice_corpus"));
    let config = PipelineConfig {
        num_classes: 4,
        ..Default::default()
    };
    let (manifest, _) = write_corpus(work.join("corpus"), &config.stft()?, &CorpusSpec::default())?;
    println!("corpus:  {}", manifest.display());

    let models = work.join("models");
    for m in cli::identify(&manifest, &models, &config)? {
        println!("model:   {}", m.display());
    }

    for mode in [SimulationMode::SpeechIndependent, SimulationMode::SpeechDependent] {
        let sim_dir = work.join(format!("sim_{mode:?}").to_lowercase());
        let options = SimulateOptions { mode, ..Default::default() };
        cli::simulate(&manifest, &models.join("talker00.json"), &sim_dir, &config, &options)?;
        let report = cli::evaluate(&manifest, &sim_dir, &sim_dir, &config)?;
        println!("{mode:?} with talker00's model:");
        for s in &report.scores {
            println!("  {} ({}): {:.2} dB", s.utterance_id, s.talker_id, s.lsd_db);
        }
    }

    for condition in [Condition::SameTalker, Condition::TalkerMismatch] {
        let r = cli::experiment(&manifest, &models, &work.join("experiment"), condition, None, &config)?;
        println!(
            "{:<16} speech-independent {:6.2} dB   speech-dependent {:6.2} dB",
            condition.name(),
            r.speech_independent.mean,
            r.speech_dependent.mean
        );
    }
    Ok(())
}
