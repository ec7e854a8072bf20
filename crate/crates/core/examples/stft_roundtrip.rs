//! Analyze a noisy chirp, resynthesize it and report the reconstruction error.
//!
//!     cargo run --example stft_roundtrip -- [frame_len]

use std::f64::consts::PI;

use ownvoice::stft::{AudioClip, StftConfig, StftProcessor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ownvoice::Result<()> {
    let frame_len: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(256);
    let fs = 5000;
    let cfg = StftConfig::new(frame_len, fs)?;
    let stft = StftProcessor::new(cfg);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples: Vec<f64> = (0..2 * fs as usize)
        .map(|n| {
            let t = n as f64 / fs as f64;
            (2.0 * PI * (100.0 + 400.0 * t) * t).sin() + 0.05 * rng.gen_range(-1.0..1.0)
        })
        .collect();
    let clip = AudioClip::new(samples, fs)?;

    let spec = stft.analyze(&clip)?;
    let back = stft.synthesize(&spec)?;
    println!(
        "K={} hop={} -> {} frames x {} bins, {} output samples",
        cfg.frame_len(),
        cfg.hop(),
        spec.num_frames(),
        spec.num_bins(),
        back.len()
    );

    // the first and last half-frames only get one window
    let interior = cfg.frame_len() / 2..back.len() - cfg.frame_len() / 2;
    let err = interior
        .clone()
        .map(|n| (back.samples()[n] - clip.samples()[n]).abs())
        .fold(0.0, f64::max);
    println!("interior {interior:?}: max abs error {err:.3e}");

    let mid = spec.frame(spec.num_frames() / 2);
    let loudest = (0..spec.num_bins())
        .max_by(|&a, &b| mid[a].norm().total_cmp(&mid[b].norm()))
        .unwrap();
    println!("strongest bin mid-clip: {loudest} ({:.1} Hz)", cfg.bin_frequency_hz(loudest));
    Ok(())
}
