//! Log-spectral distance.
//!
//! Per frame, the RMS over all `K/2 + 1` bins of the dB magnitude difference
//! `20 log10(|ref| + floor) - 20 log10(|est| + floor)`; the utterance score is
//! the mean over every frame (no voice-activity gating).

use crate::error::{Error, Result};
use crate::stft::Spectrogram;

/// Default spectral floor on linear magnitude.
pub const DEFAULT_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LsdResult {
    pub utterance_lsd_db: f64,
    pub per_frame_lsd_db: Vec<f64>,
    pub frames_used: usize,
}

pub fn lsd(reference: &Spectrogram, estimate: &Spectrogram, floor: f64) -> Result<LsdResult> {
    if !reference.same_shape(estimate) {
        return Err(Error::Pairing(format!(
            "reference has {} frames, estimate {} (or configurations differ)",
            reference.num_frames(),
            estimate.num_frames()
        )));
    }
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::InvalidConfig(format!("spectral floor must be positive, got {floor}")));
    }
    let bins = reference.num_bins() as f64;
    let per_frame_lsd_db: Vec<f64> = reference
        .frames()
        .zip(estimate.frames())
        .map(|(r, e)| {
            let sum: f64 = r
                .iter()
                .zip(e)
                .map(|(a, b)| {
                    let d = 20.0 * (a.norm() + floor).log10() - 20.0 * (b.norm() + floor).log10();
                    d * d
                })
                .sum();
            (sum / bins).sqrt()
        })
        .collect();
    let frames_used = per_frame_lsd_db.len();
    let utterance_lsd_db = per_frame_lsd_db.iter().sum::<f64>() / frames_used as f64;
    Ok(LsdResult {
        utterance_lsd_db,
        per_frame_lsd_db,
        frames_used,
    })
}

/// Converts a floor given in dB (re. magnitude 1) to linear magnitude.
pub fn floor_from_db(floor_db: f64) -> f64 {
    10f64.powf(floor_db / 20.0)
}

/// Box-plot statistics of a set of scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

impl SummaryStats {
    /// Quartiles by linear interpolation between order statistics.
    /// Returns `None` for an empty input.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let quantile = |q: f64| {
            let pos = q * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(SummaryStats {
            count: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: quantile(0.5),
            q1: quantile(0.25),
            q3: quantile(0.75),
            min: v[0],
            max: v[v.len() - 1],
        })
    }
}
