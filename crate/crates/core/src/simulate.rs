//! In-ear speech simulation from an outer-microphone recording.
//!
//! The simulated signal lives on the delayed in-ear timeline used during
//! identification. Set [`SimulationConfig::compensate_delay`] to drop the
//! first `delay_samples` samples and re-align with the physical in-ear
//! timeline.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::labels::FrameLabels;
use crate::rtf::RtfModel;
use crate::stft::{AudioClip, Spectrogram, StftConfig, StftProcessor};

pub const DEFAULT_DELAY_SAMPLES: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationConfig {
    pub delay_samples: usize,
    pub compensate_delay: bool,
    pub stft: StftConfig,
}

impl SimulationConfig {
    pub fn new(stft: StftConfig) -> Self {
        SimulationConfig {
            delay_samples: DEFAULT_DELAY_SAMPLES,
            compensate_delay: false,
            stft,
        }
    }

    /// Configuration matching an estimated model.
    pub fn for_model(model: &RtfModel) -> Self {
        SimulationConfig {
            delay_samples: model.delay_samples,
            compensate_delay: false,
            stft: model.config,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimulationMode {
    /// One RTF for every frame.
    SpeechIndependent,
    /// Per-frame RTF chosen by the frame label.
    #[default]
    SpeechDependent,
}

/// How frames were filtered in one utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FallbackReport {
    pub frames: usize,
    /// Frames filtered by the global RTF.
    pub fallback_frames: usize,
    pub unlabeled_frames: usize,
    /// Labeled frames whose class has no RTF in the model.
    pub below_threshold_frames: usize,
    /// Speech-dependent filtering was requested but no labels were given.
    pub labels_missing: bool,
}

/// `output[n] = input[n - delay]`, zero-filled, same length as the input.
pub fn apply_prediction_delay(clip: &AudioClip, delay_samples: usize) -> AudioClip {
    let x = clip.samples();
    let n = x.len();
    let d = delay_samples.min(n);
    let mut out = vec![0.0; n];
    out[d..].copy_from_slice(&x[..n - d]);
    AudioClip::new(out, clip.sample_rate_hz()).expect("delayed clip of a valid clip is valid")
}

/// Multiplies every frame bin-wise by `rtf`.
pub fn apply_speech_independent(spec: &Spectrogram, rtf: &[Complex64]) -> Result<Spectrogram> {
    if rtf.len() != spec.num_bins() {
        return Err(Error::Pairing(format!(
            "RTF has {} bins, spectrogram {}",
            rtf.len(),
            spec.num_bins()
        )));
    }
    let mut out = spec.clone();
    for frame in out.frames_mut() {
        for (x, h) in frame.iter_mut().zip(rtf) {
            *x = h * *x;
        }
    }
    Ok(out)
}

/// Multiplies frame `l` by the RTF of its class, or by the global RTF when
/// the frame is unlabeled or its class has no estimate.
pub fn apply_speech_dependent(
    spec: &Spectrogram,
    labels: &FrameLabels,
    model: &RtfModel,
) -> Result<(Spectrogram, FallbackReport)> {
    if labels.num_classes() != model.num_classes() {
        return Err(Error::Pairing(format!(
            "labels use {} classes, model {}",
            labels.num_classes(),
            model.num_classes()
        )));
    }
    if labels.len() != spec.num_frames() {
        return Err(Error::Pairing(format!(
            "{} labels for {} frames",
            labels.len(),
            spec.num_frames()
        )));
    }
    if model.global_rtf.len() != spec.num_bins() {
        return Err(Error::Pairing(format!(
            "model has {} bins, spectrogram {}",
            model.global_rtf.len(),
            spec.num_bins()
        )));
    }
    let mut report = FallbackReport {
        frames: spec.num_frames(),
        ..Default::default()
    };
    let mut out = spec.clone();
    for (frame, label) in out.frames_mut().zip(labels.labels()) {
        let rtf = match label {
            None => {
                report.unlabeled_frames += 1;
                &model.global_rtf[..]
            }
            Some(c) => match model.phoneme_rtf(*c) {
                Some(rtf) => rtf,
                None => {
                    report.below_threshold_frames += 1;
                    &model.global_rtf[..]
                }
            },
        };
        for (x, h) in frame.iter_mut().zip(rtf) {
            *x = h * *x;
        }
    }
    report.fallback_frames = report.unlabeled_frames + report.below_threshold_frames;
    Ok((out, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub clip: AudioClip,
    pub report: FallbackReport,
}

/// analyze -> filter -> synthesize.
///
/// The synthesized signal is zero-padded to the input length (the trailing
/// partial frame is not analyzed), then the first `delay_samples` samples are
/// removed if `compensate_delay` is set. Speech-dependent mode without labels
/// degrades to the global RTF and sets `labels_missing`.
pub fn simulate_inear(
    outer: &AudioClip,
    labels: Option<&FrameLabels>,
    model: &RtfModel,
    mode: SimulationMode,
    sim: &SimulationConfig,
) -> Result<SimulationOutput> {
    if sim.stft != model.config {
        return Err(Error::Pairing(
            "simulation STFT configuration differs from the model".into(),
        ));
    }
    let stft = StftProcessor::new(sim.stft);
    let spec = stft.analyze(outer)?;
    let (filtered, report) = match (mode, labels) {
        (SimulationMode::SpeechDependent, Some(labels)) => apply_speech_dependent(&spec, labels, model)?,
        (mode, _) => {
            let labels_missing = mode == SimulationMode::SpeechDependent;
            if labels_missing {
                log::warn!("no frame labels; falling back to speech-independent filtering");
            }
            let report = FallbackReport {
                frames: spec.num_frames(),
                fallback_frames: if labels_missing { spec.num_frames() } else { 0 },
                labels_missing,
                ..Default::default()
            };
            (apply_speech_independent(&spec, &model.global_rtf)?, report)
        }
    };
    let mut samples = stft.synthesize(&filtered)?.into_samples();
    samples.resize(outer.len(), 0.0);
    if sim.compensate_delay {
        let d = sim.delay_samples.min(samples.len().saturating_sub(1));
        samples.drain(..d);
    }
    Ok(SimulationOutput {
        clip: AudioClip::new(samples, outer.sample_rate_hz())?,
        report,
    })
}
