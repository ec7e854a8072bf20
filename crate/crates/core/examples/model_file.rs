//! Estimate a model, save it as JSON, load it back and print its summary.
//!
//!     cargo run --example model_file -- [path]

use ownvoice::cli::inspect_model;
use ownvoice::rtf::{load_model, save_model, EstimatorOptions, RtfAccumulator};
use ownvoice::stft::StftConfig;
use ownvoice::synthetic::{random_frame_labels, spectrogram_pair, SyntheticTalker};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ownvoice::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("ownvoice_demo_model.json"));
    let cfg = StftConfig::new(256, 5000)?;
    let talker = SyntheticTalker::new("demo", 6, cfg.num_bins(), 9);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    // class 5 appears only briefly and falls below min_frames
    let mut labels = random_frame_labels(300, 5, 3, 8, &mut rng).labels().to_vec();
    labels[100..103].fill(Some(5));
    let labels = ownvoice::labels::FrameLabels::new(labels, 6)?;
    let (outer, inear) = spectrogram_pair(&labels, &talker.rtfs, &cfg, &mut rng);

    let mut acc = RtfAccumulator::new(cfg, 6, 11);
    acc.accumulate(&outer, &inear, Some(&labels))?;
    let model = acc.finalize_speech_dependent(&EstimatorOptions::default())?.with_talker_id("demo");
    save_model(&model, &path)?;
    let loaded = load_model(&path)?;
    assert_eq!(loaded, model, "JSON round trip is exact");
    println!("saved {}\n", path.display());
    print!("{}", inspect_model(&path)?);
    Ok(())
}
