//! Seeded synthetic two-microphone corpora.
//!
//! Outer-microphone signals are synthesized from random STFT coefficients
//! shaped by a per-class spectral envelope, so frames of the same class look
//! alike (enough for pseudo-phoneme clustering to find them). The in-ear
//! signal applies a per-class talker RTF frame by frame and arrives
//! `delay_samples` earlier than the outer signal.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{write_wav, Manifest, ManifestEntry, WavEncoding};
use crate::error::{Error, Result};
use crate::labels::{frames_to_segments, save_segments, FrameLabels, LabelSegment};
use crate::stft::{AudioClip, Spectrogram, StftConfig, StftProcessor};

/// Smooth random complex response: log-magnitude is a sum of a few random
/// cosines over frequency, phase a random linear ramp plus a slow wobble.
pub fn random_rtf(num_bins: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(f64, f64, f64)> = (0..4)
        .map(|i| {
            (
                rng.gen_range(-0.6..0.6),
                (i + 1) as f64 * rng.gen_range(0.5..1.5),
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let slope = rng.gen_range(-3.0..3.0);
    let wobble = rng.gen_range(-0.5..0.5);
    let span = (num_bins - 1).max(1) as f64;
    (0..num_bins)
        .map(|k| {
            let x = k as f64 / span;
            let log_mag: f64 = terms.iter().map(|(a, f, p)| a * (PI * f * x + p).cos()).sum();
            let phase = slope * PI * x + wobble * (2.0 * PI * x).sin();
            Complex64::from_polar(log_mag.exp(), phase)
        })
        .collect()
}

/// Per-class spectral envelopes shared by every talker of a corpus.
#[derive(Debug, Clone)]
pub struct ClassEnvelopes {
    envelopes: Vec<Vec<f64>>,
}

impl ClassEnvelopes {
    pub fn new(num_classes: usize, num_bins: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let envelopes = (0..num_classes)
            .map(|_| {
                // two formant-like peaks on a falling slope
                let peaks: Vec<(f64, f64)> = (0..2)
                    .map(|_| (rng.gen_range(0.05..0.9), rng.gen_range(0.03..0.12)))
                    .collect();
                let tilt = rng.gen_range(0.5..3.0);
                (0..num_bins)
                    .map(|k| {
                        let x = k as f64 / (num_bins - 1) as f64;
                        let formants: f64 = peaks
                            .iter()
                            .map(|(c, w)| 4.0 * (-(x - c).powi(2) / (2.0 * w * w)).exp())
                            .sum();
                        (-tilt * x).exp() * (0.1 + formants)
                    })
                    .collect()
            })
            .collect();
        ClassEnvelopes { envelopes }
    }

    pub fn num_classes(&self) -> usize {
        self.envelopes.len()
    }

    pub fn envelope(&self, class_id: usize) -> &[f64] {
        &self.envelopes[class_id]
    }
}

/// One talker: an RTF per class.
#[derive(Debug, Clone)]
pub struct SyntheticTalker {
    pub talker_id: String,
    pub rtfs: Vec<Vec<Complex64>>,
}

impl SyntheticTalker {
    pub fn new(talker_id: impl Into<String>, num_classes: usize, num_bins: usize, seed: u64) -> Self {
        SyntheticTalker {
            talker_id: talker_id.into(),
            rtfs: (0..num_classes)
                .map(|c| random_rtf(num_bins, seed.wrapping_mul(1000).wrapping_add(c as u64)))
                .collect(),
        }
    }
}

/// Random class sequence in runs of `min_run..=max_run` frames.
pub fn random_frame_labels(
    num_frames: usize,
    num_classes: usize,
    min_run: usize,
    max_run: usize,
    rng: &mut impl Rng,
) -> FrameLabels {
    let mut labels = Vec::with_capacity(num_frames);
    let mut prev = None;
    while labels.len() < num_frames {
        let mut c = rng.gen_range(0..num_classes);
        if num_classes > 1 && Some(c) == prev {
            c = (c + 1) % num_classes;
        }
        prev = Some(c);
        let run = rng.gen_range(min_run..=max_run);
        labels.extend(std::iter::repeat_n(Some(c), run));
    }
    labels.truncate(num_frames);
    FrameLabels::new(labels, num_classes).expect("classes drawn in range")
}

/// Random outer spectrogram and its exact per-frame filtered in-ear
/// counterpart `Yi(k, l) = H_{p(l)}(k) Yo(k, l)`.
pub fn spectrogram_pair(
    labels: &FrameLabels,
    rtfs: &[Vec<Complex64>],
    cfg: &StftConfig,
    rng: &mut impl Rng,
) -> (Spectrogram, Spectrogram) {
    let bins = cfg.num_bins();
    let outer: Vec<Complex64> = (0..labels.len() * bins)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let inear = outer
        .chunks_exact(bins)
        .zip(labels.labels())
        .flat_map(|(frame, label)| {
            let h = &rtfs[label.expect("synthetic frames are labeled")];
            frame.iter().zip(h).map(|(y, h)| h * y).collect::<Vec<_>>()
        })
        .collect();
    (
        Spectrogram::from_coefficients(outer, labels.len(), *cfg).expect("finite"),
        Spectrogram::from_coefficients(inear, labels.len(), *cfg).expect("finite"),
    )
}

#[derive(Debug, Clone)]
pub struct SyntheticUtterance {
    pub outer: AudioClip,
    /// Physical in-ear signal, `delay_samples` ahead of the outer signal.
    pub inear: AudioClip,
    pub labels: FrameLabels,
    pub segments: Vec<LabelSegment>,
}

#[derive(Debug, Clone)]
pub struct UtteranceSpec {
    pub num_frames: usize,
    /// Silent frames at the start.
    pub lead_frames: usize,
    pub min_run: usize,
    pub max_run: usize,
    pub delay_samples: usize,
    /// Standard deviation of white noise added to the in-ear signal.
    pub inear_noise: f64,
}

impl Default for UtteranceSpec {
    fn default() -> Self {
        UtteranceSpec {
            num_frames: 195, // 5 s at 5 kHz with K = 256
            lead_frames: 2,
            min_run: 3,
            max_run: 10,
            delay_samples: 11,
            inear_noise: 0.0,
        }
    }
}

pub fn render_utterance(
    talker: &SyntheticTalker,
    envelopes: &ClassEnvelopes,
    stft: &StftProcessor,
    spec: &UtteranceSpec,
    seed: u64,
) -> Result<SyntheticUtterance> {
    let cfg = *stft.config();
    let bins = cfg.num_bins();
    let num_classes = envelopes.num_classes();
    if talker.rtfs.len() != num_classes {
        return Err(Error::InvalidConfig(format!(
            "talker has {} RTFs for {num_classes} classes",
            talker.rtfs.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = random_frame_labels(spec.num_frames, num_classes, spec.min_run, spec.max_run, &mut rng);

    let mut coeffs = vec![Complex64::new(0.0, 0.0); spec.num_frames * bins];
    for (l, frame) in coeffs.chunks_exact_mut(bins).enumerate().skip(spec.lead_frames) {
        let env = envelopes.envelope(labels.get(l).expect("labeled"));
        for (x, e) in frame.iter_mut().zip(env) {
            *x = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (e * 0.5);
        }
    }
    let source = Spectrogram::from_coefficients(coeffs, spec.num_frames, cfg)?;
    let outer = stft.synthesize(&source)?;
    let n = outer.len();

    let analyzed = stft.analyze(&outer)?;
    let mut filtered = analyzed.clone();
    for (frame, label) in filtered.frames_mut().zip(labels.labels()) {
        let h = &talker.rtfs[label.expect("labeled")];
        for (x, h) in frame.iter_mut().zip(h) {
            *x = h * *x;
        }
    }
    let delayed = stft.synthesize(&filtered)?.into_samples();
    let mut inear: Vec<f64> = delayed.iter().skip(spec.delay_samples).copied().collect();
    inear.resize(n, 0.0);
    if spec.inear_noise > 0.0 {
        for s in &mut inear {
            // sum of uniforms, variance-matched to the requested std
            let u: f64 = (0..4).map(|_| rng.gen_range(-1.0..1.0)).sum();
            *s += u * spec.inear_noise * (3.0f64 / 4.0).sqrt();
        }
    }
    let segments = frames_to_segments(&labels, &cfg, n);
    Ok(SyntheticUtterance {
        outer,
        inear: AudioClip::new(inear, cfg.sample_rate_hz())?,
        labels,
        segments,
    })
}

/// Layout of a synthetic corpus written to disk.
#[derive(Debug, Clone)]
pub struct CorpusSpec {
    pub num_talkers: usize,
    pub utterances_per_talker: usize,
    pub num_classes: usize,
    pub utterance: UtteranceSpec,
    pub write_labels: bool,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            num_talkers: 2,
            utterances_per_talker: 3,
            num_classes: 4,
            utterance: UtteranceSpec::default(),
            write_labels: true,
            seed: 0,
        }
    }
}

/// Writes WAV files (float32), label files and `manifest.csv` into `dir`,
/// returning the manifest path and the talkers used.
pub fn write_corpus(
    dir: impl AsRef<Path>,
    cfg: &StftConfig,
    spec: &CorpusSpec,
) -> Result<(PathBuf, Vec<SyntheticTalker>)> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stft = StftProcessor::new(*cfg);
    let envelopes = ClassEnvelopes::new(spec.num_classes, cfg.num_bins(), spec.seed);
    let talkers: Vec<SyntheticTalker> = (0..spec.num_talkers)
        .map(|t| {
            SyntheticTalker::new(
                format!("talker{t:02}"),
                spec.num_classes,
                cfg.num_bins(),
                spec.seed.wrapping_add(1 + t as u64),
            )
        })
        .collect();
    let mut entries = Vec::new();
    for (t, talker) in talkers.iter().enumerate() {
        for u in 0..spec.utterances_per_talker {
            let id = format!("{}_u{u:02}", talker.talker_id);
            let seed = spec.seed ^ ((t as u64) << 32 | u as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let utt = render_utterance(talker, &envelopes, &stft, &spec.utterance, seed)?;
            let outer_path = dir.join(format!("{id}_outer.wav"));
            let inear_path = dir.join(format!("{id}_inear.wav"));
            write_wav(&utt.outer, &outer_path, WavEncoding::Float32)?;
            write_wav(&utt.inear, &inear_path, WavEncoding::Float32)?;
            let labels_path = if spec.write_labels {
                let p = dir.join(format!("{id}_labels.csv"));
                save_segments(&p, &utt.segments)?;
                Some(p)
            } else {
                None
            };
            entries.push(ManifestEntry {
                utterance_id: id,
                talker_id: talker.talker_id.clone(),
                outer_path,
                inear_path: Some(inear_path),
                labels_path,
            });
        }
    }
    let manifest = Manifest {
        entries,
        sample_rate_hz: cfg.sample_rate_hz(),
    };
    let path = dir.join("manifest.csv");
    manifest.save(&path)?;
    Ok((path, talkers))
}
