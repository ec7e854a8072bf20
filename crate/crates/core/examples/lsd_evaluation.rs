//! Log-spectral distance basics: a constant gain, a phase change, and the
//! effect of the spectral floor on near-silent bins.
//!
//!     cargo run --example lsd_evaluation

use num_complex::Complex64;
use ownvoice::metrics::{floor_from_db, lsd, SummaryStats, DEFAULT_FLOOR};
use ownvoice::stft::{AudioClip, StftConfig, StftProcessor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> ownvoice::Result<()> {
    let cfg = StftConfig::new(256, 5000)?;
    let stft = StftProcessor::new(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noise: Vec<f64> = (0..5000).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let reference = stft.analyze(&AudioClip::new(noise.clone(), 5000)?)?;

    let scaled = stft.analyze(&AudioClip::new(noise.iter().map(|x| x * 10.0).collect(), 5000)?)?;
    println!("x10 gain:      {:.6} dB", lsd(&reference, &scaled, DEFAULT_FLOOR)?.utterance_lsd_db);

    let mut rotated = reference.clone();
    for frame in rotated.frames_mut() {
        for c in frame {
            *c *= Complex64::from_polar(1.0, 1.0);
        }
    }
    println!("phase rotated: {:.6} dB", lsd(&reference, &rotated, DEFAULT_FLOOR)?.utterance_lsd_db);

    let quiet = stft.analyze(&AudioClip::new(noise.iter().map(|x| x * 1e-9).collect(), 5000)?)?;
    for floor_db in [-200.0, -160.0, -120.0] {
        let r = lsd(&reference, &quiet, floor_from_db(floor_db))?;
        println!("1e-9 gain, floor {floor_db} dB: {:.2} dB", r.utterance_lsd_db);
    }

    let per_frame = lsd(&reference, &quiet, DEFAULT_FLOOR)?.per_frame_lsd_db;
    let s = SummaryStats::from_values(&per_frame).expect("frames");
    println!("per-frame: median {:.2} dB, IQR [{:.2}, {:.2}] dB", s.median, s.q1, s.q3);
    Ok(())
}
