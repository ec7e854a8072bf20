//! Per-class transfer functions versus a single one on a labeled corpus,
//! scored by log-spectral distance.
//!
//!     cargo run --example phoneme_dependent_rtf -- [num_classes]

use ownvoice::metrics::{lsd, DEFAULT_FLOOR};
use ownvoice::rtf::{EstimatorOptions, RtfAccumulator};
use ownvoice::simulate::{apply_speech_dependent, apply_speech_independent};
use ownvoice::stft::StftConfig;
use ownvoice::synthetic::{random_frame_labels, spectrogram_pair, SyntheticTalker};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ownvoice::Result<()> {
    let classes: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let cfg = StftConfig::new(256, 5000)?;
    let talker = SyntheticTalker::new("demo", classes, cfg.num_bins(), 3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    let labels = random_frame_labels(600, classes, 3, 10, &mut rng);
    let (outer, inear) = spectrogram_pair(&labels, &talker.rtfs, &cfg, &mut rng);

    let mut acc = RtfAccumulator::new(cfg, classes, 0);
    acc.accumulate(&outer, &inear, Some(&labels))?;
    let model = acc.finalize_speech_dependent(&EstimatorOptions::default())?;
    println!(
        "{} frames, {} of {} classes estimated",
        model.global_frame_count,
        model.num_estimated_classes(),
        model.num_classes()
    );
    for c in 0..classes {
        let est = model.phoneme_rtf(c).expect("every class is populated");
        let err = est
            .iter()
            .zip(&talker.rtfs[c])
            .map(|(e, t)| (e - t).norm() / t.norm())
            .fold(0.0, f64::max);
        println!("  class {c}: {} frames, max relative error {err:.1e}", model.phonemes[c].frame_count);
    }

    let si = apply_speech_independent(&outer, &model.global_rtf)?;
    let (sd, report) = apply_speech_dependent(&outer, &labels, &model)?;
    println!("speech-independent LSD {:.2} dB", lsd(&inear, &si, DEFAULT_FLOOR)?.utterance_lsd_db);
    println!(
        "speech-dependent   LSD {:.2} dB ({} fallback frames)",
        lsd(&inear, &sd, DEFAULT_FLOOR)?.utterance_lsd_db,
        report.fallback_frames
    );
    Ok(())
}
