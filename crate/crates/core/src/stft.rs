//! Short-time Fourier transform with square-root Hann analysis and synthesis
//! windows at 50% overlap.
//!
//! Conventions:
//!
//! * frame `l` covers samples `[l * hop, l * hop + K)`; there is no leading
//!   padding and a trailing partial frame is dropped, so
//!   `L = (N - K) / hop + 1`;
//! * the forward DFT is un-normalized, `X[k] = sum_n w[n] x[n] e^{-j 2 pi k n / K}`,
//!   and only bins `0..=K/2` are kept;
//! * the inverse applies `1/K`, multiplies by the synthesis window and
//!   overlap-adds at `hop`.
//!
//! With these conventions the spectral energy of a frame relates to the
//! windowed time-domain energy by `|X_0|^2 + |X_{K/2}|^2 + 2 sum_{0<k<K/2} |X_k|^2
//! = K sum_n (w[n] x[n])^2`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    frame_len: usize,
    hop: usize,
    sample_rate_hz: u32,
}

impl StftConfig {
    /// Frame length `K`, hop `K/2`.
    pub fn new(frame_len: usize, sample_rate_hz: u32) -> Result<Self> {
        Self::with_hop(frame_len, frame_len / 2, sample_rate_hz)
    }

    /// Validates an explicit hop. Only `hop == frame_len / 2` is supported.
    pub fn with_hop(frame_len: usize, hop: usize, sample_rate_hz: u32) -> Result<Self> {
        if frame_len < 4 || !frame_len.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "frame length must be even and at least 4, got {frame_len}"
            )));
        }
        if hop != frame_len / 2 {
            return Err(Error::InvalidConfig(format!(
                "hop must be half the frame length ({}), got {hop}",
                frame_len / 2
            )));
        }
        if sample_rate_hz == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        Ok(StftConfig {
            frame_len,
            hop,
            sample_rate_hz,
        })
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    /// Number of one-sided bins, `K/2 + 1`.
    pub fn num_bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    /// Number of complete frames in a clip of `num_samples` samples.
    pub fn num_frames(&self, num_samples: usize) -> usize {
        if num_samples < self.frame_len {
            0
        } else {
            (num_samples - self.frame_len) / self.hop + 1
        }
    }

    /// Length of the overlap-add output for `num_frames` frames.
    pub fn output_len(&self, num_frames: usize) -> usize {
        if num_frames == 0 {
            0
        } else {
            (num_frames - 1) * self.hop + self.frame_len
        }
    }

    /// Center frequency of bin `k` in Hz.
    pub fn bin_frequency_hz(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate_hz as f64 / self.frame_len as f64
    }
}

/// Mono waveform, samples nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidAudio("clip has no samples".into()));
        }
        if sample_rate_hz == 0 {
            return Err(Error::InvalidAudio("sample rate must be positive".into()));
        }
        if let Some(n) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidAudio(format!("non-finite sample at index {n}")));
        }
        Ok(AudioClip {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

/// Complex STFT grid stored frame-major: `L` frames of `K/2 + 1` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    coefficients: Vec<Complex64>,
    num_frames: usize,
    config: StftConfig,
}

impl Spectrogram {
    pub fn from_coefficients(
        coefficients: Vec<Complex64>,
        num_frames: usize,
        config: StftConfig,
    ) -> Result<Self> {
        if num_frames == 0 {
            return Err(Error::InvalidConfig("spectrogram needs at least one frame".into()));
        }
        if coefficients.len() != num_frames * config.num_bins() {
            return Err(Error::InvalidConfig(format!(
                "expected {} coefficients for {num_frames} frames of {} bins, got {}",
                num_frames * config.num_bins(),
                config.num_bins(),
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidConfig("non-finite spectrogram coefficient".into()));
        }
        Ok(Spectrogram {
            coefficients,
            num_frames,
            config,
        })
    }

    pub fn zeros(num_frames: usize, config: StftConfig) -> Result<Self> {
        Self::from_coefficients(
            vec![Complex64::new(0.0, 0.0); num_frames * config.num_bins()],
            num_frames,
            config,
        )
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn num_bins(&self) -> usize {
        self.config.num_bins()
    }

    pub fn frame(&self, l: usize) -> &[Complex64] {
        let b = self.num_bins();
        &self.coefficients[l * b..(l + 1) * b]
    }

    pub fn frame_mut(&mut self, l: usize) -> &mut [Complex64] {
        let b = self.num_bins();
        &mut self.coefficients[l * b..(l + 1) * b]
    }

    pub fn frames(&self) -> std::slice::ChunksExact<'_, Complex64> {
        self.coefficients.chunks_exact(self.num_bins())
    }

    pub fn frames_mut(&mut self) -> std::slice::ChunksExactMut<'_, Complex64> {
        let b = self.num_bins();
        self.coefficients.chunks_exact_mut(b)
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.coefficients[l * self.num_bins() + k]
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Same shape and configuration.
    pub fn same_shape(&self, other: &Spectrogram) -> bool {
        self.config == other.config && self.num_frames == other.num_frames
    }
}

/// Square root of the periodic Hann window of length `frame_len`.
pub fn sqrt_hann_window(frame_len: usize) -> Result<Vec<f64>> {
    if frame_len < 4 || !frame_len.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "window length must be even and at least 4, got {frame_len}"
        )));
    }
    let k = frame_len as f64;
    Ok((0..frame_len)
        .map(|n| (0.5 * (1.0 - (2.0 * PI * n as f64 / k).cos())).sqrt())
        .collect())
}

/// Reusable FFT plans and window for one configuration.
pub struct StftProcessor {
    config: StftConfig,
    window: Vec<f64>,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl StftProcessor {
    pub fn new(config: StftConfig) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(config.frame_len);
        let inverse = planner.plan_fft_inverse(config.frame_len);
        let window = sqrt_hann_window(config.frame_len).expect("config validated frame length");
        StftProcessor {
            config,
            window,
            forward,
            inverse,
        }
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    pub fn analyze(&self, clip: &AudioClip) -> Result<Spectrogram> {
        let cfg = self.config;
        if clip.sample_rate_hz() != cfg.sample_rate_hz {
            return Err(Error::SampleRateMismatch {
                expected: cfg.sample_rate_hz,
                actual: clip.sample_rate_hz(),
            });
        }
        let x = clip.samples();
        if x.len() < cfg.frame_len {
            return Err(Error::TooShort {
                len: x.len(),
                needed: cfg.frame_len,
            });
        }
        let num_frames = cfg.num_frames(x.len());
        let bins = cfg.num_bins();
        let mut coefficients = vec![Complex64::new(0.0, 0.0); num_frames * bins];
        let mut frame = self.forward.make_input_vec();
        let mut scratch = self.forward.make_scratch_vec();
        for (l, out) in coefficients.chunks_exact_mut(bins).enumerate() {
            let start = l * cfg.hop;
            for ((f, &s), &w) in frame
                .iter_mut()
                .zip(&x[start..start + cfg.frame_len])
                .zip(&self.window)
            {
                *f = s * w;
            }
            self.forward
                .process_with_scratch(&mut frame, out, &mut scratch)
                .expect("buffer sizes match the plan");
        }
        Spectrogram::from_coefficients(coefficients, num_frames, cfg)
    }

    pub fn synthesize(&self, spec: &Spectrogram) -> Result<AudioClip> {
        let cfg = self.config;
        if *spec.config() != cfg {
            return Err(Error::Pairing(
                "spectrogram configuration differs from the processor".into(),
            ));
        }
        let k = cfg.frame_len;
        let norm = 1.0 / k as f64;
        let mut out = vec![0.0; cfg.output_len(spec.num_frames())];
        let mut bins = self.inverse.make_input_vec();
        let mut frame = self.inverse.make_output_vec();
        let mut scratch = self.inverse.make_scratch_vec();
        for (l, coeffs) in spec.frames().enumerate() {
            bins.copy_from_slice(coeffs);
            // A real frame has real DC and Nyquist bins.
            bins[0].im = 0.0;
            bins[k / 2].im = 0.0;
            self.inverse
                .process_with_scratch(&mut bins, &mut frame, &mut scratch)
                .expect("buffer sizes match the plan");
            let start = l * cfg.hop;
            for ((o, &s), &w) in out[start..start + k].iter_mut().zip(&frame).zip(&self.window) {
                *o += s * norm * w;
            }
        }
        AudioClip::new(out, cfg.sample_rate_hz)
    }
}

pub fn analyze(clip: &AudioClip, cfg: &StftConfig) -> Result<Spectrogram> {
    StftProcessor::new(*cfg).analyze(clip)
}

pub fn synthesize(spec: &Spectrogram) -> Result<AudioClip> {
    StftProcessor::new(*spec.config()).synthesize(spec)
}
