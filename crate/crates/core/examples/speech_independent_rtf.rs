//! Estimate a single relative transfer function from a noisy
//! outer / in-ear spectrogram pair and compare it with the true one.
//!
//!     cargo run --example speech_independent_rtf

use num_complex::Complex64;
use ownvoice::labels::FrameLabels;
use ownvoice::rtf::{Regularization, RtfAccumulator};
use ownvoice::stft::{Spectrogram, StftConfig};
use ownvoice::synthetic::{random_rtf, spectrogram_pair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ownvoice::Result<()> {
    let cfg = StftConfig::new(256, 5000)?;
    let truth = random_rtf(cfg.num_bins(), 11);
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    for noise in [0.0, 0.01, 0.1] {
        let labels = FrameLabels::uniform(400, 0, 1)?;
        let (outer, clean) = spectrogram_pair(&labels, std::slice::from_ref(&truth), &cfg, &mut rng);
        let noisy: Vec<Complex64> = clean
            .coefficients()
            .iter()
            .map(|&c| c + Complex64::new(rng.gen_range(-noise..=noise), rng.gen_range(-noise..=noise)))
            .collect();
        let inear = Spectrogram::from_coefficients(noisy, clean.num_frames(), cfg)?;

        let mut acc = RtfAccumulator::new(cfg, 1, 0);
        acc.accumulate(&outer, &inear, None)?;
        let h = acc.finalize_speech_independent(Regularization::Absolute(0.0))?;
        let worst = h
            .iter()
            .zip(&truth)
            .map(|(e, t)| (e - t).norm() / t.norm())
            .fold(0.0, f64::max);
        println!("noise ±{noise:<5} -> worst relative error over bins {worst:.2e}");
    }
    Ok(())
}
