//! Least-squares relative transfer function (RTF) estimation.
//!
//! The speech-independent estimate per bin is
//!
//! ```text
//! H(k) = sum_l conj(Yo(k,l)) * Yi(k,l) / sum_l |Yo(k,l)|^2
//! ```
//!
//! and the speech-dependent model repeats the same quotient restricted to the
//! frames carrying each class. Both are computed from an [`RtfAccumulator`]
//! holding the numerator and denominator sums, which can be filled one
//! utterance at a time and merged across workers.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::FrameLabels;
use crate::stft::{Spectrogram, StftConfig};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Regularizer added to the denominator of every quotient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularization {
    /// `factor * mean_k(power_global(k))`.
    Relative(f64),
    Absolute(f64),
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization::Relative(1e-10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    pub regularization: Regularization,
    /// Classes seen in fewer frames get no RTF of their own.
    pub min_frames: u64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            regularization: Regularization::default(),
            min_frames: 5,
        }
    }
}

impl EstimatorOptions {
    pub fn exact() -> Self {
        EstimatorOptions {
            regularization: Regularization::Absolute(0.0),
            min_frames: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ClassSums {
    cross: Vec<Complex64>,
    power: Vec<f64>,
    frame_count: u64,
}

impl ClassSums {
    fn new(bins: usize) -> Self {
        ClassSums {
            cross: vec![Complex64::new(0.0, 0.0); bins],
            power: vec![0.0; bins],
            frame_count: 0,
        }
    }

    #[inline]
    fn add_frame(&mut self, outer: &[Complex64], inear: &[Complex64]) {
        for (((c, p), o), i) in self.cross.iter_mut().zip(&mut self.power).zip(outer).zip(inear) {
            *c += o.conj() * i;
            *p += o.norm_sqr();
        }
        self.frame_count += 1;
    }

    fn add(&mut self, other: &ClassSums) {
        for (a, b) in self.cross.iter_mut().zip(&other.cross) {
            *a += b;
        }
        for (a, b) in self.power.iter_mut().zip(&other.power) {
            *a += b;
        }
        self.frame_count += other.frame_count;
    }

    fn quotient(&self, eps: f64) -> Vec<Complex64> {
        self.cross
            .iter()
            .zip(&self.power)
            .map(|(&c, &p)| {
                if p == 0.0 {
                    // No excitation in this bin; the cross term is zero too.
                    Complex64::new(0.0, 0.0)
                } else {
                    c / (p + eps)
                }
            })
            .collect()
    }
}

/// Running cross- and auto-spectral sums, globally and per class.
#[derive(Debug, Clone, PartialEq)]
pub struct RtfAccumulator {
    config: StftConfig,
    num_classes: usize,
    delay_samples: usize,
    global: ClassSums,
    classes: Vec<ClassSums>,
}

impl RtfAccumulator {
    pub fn new(config: StftConfig, num_classes: usize, delay_samples: usize) -> Self {
        let bins = config.num_bins();
        RtfAccumulator {
            config,
            num_classes,
            delay_samples,
            global: ClassSums::new(bins),
            classes: vec![ClassSums::new(bins); num_classes],
        }
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn delay_samples(&self) -> usize {
        self.delay_samples
    }

    pub fn global_frame_count(&self) -> u64 {
        self.global.frame_count
    }

    pub fn class_frame_count(&self, class_id: usize) -> u64 {
        self.classes[class_id].frame_count
    }

    pub fn global_cross(&self) -> &[Complex64] {
        &self.global.cross
    }

    pub fn global_power(&self) -> &[f64] {
        &self.global.power
    }

    pub fn class_cross(&self, class_id: usize) -> &[Complex64] {
        &self.classes[class_id].cross
    }

    pub fn class_power(&self, class_id: usize) -> &[f64] {
        &self.classes[class_id].power
    }

    /// Adds one utterance pair. `inear` must already carry the prediction
    /// delay. Unlabeled frames only enter the global sums.
    pub fn accumulate(
        &mut self,
        outer: &Spectrogram,
        inear: &Spectrogram,
        labels: Option<&FrameLabels>,
    ) -> Result<()> {
        if *outer.config() != self.config || *inear.config() != self.config {
            return Err(Error::Pairing(
                "spectrogram configuration differs from the accumulator".into(),
            ));
        }
        if outer.num_frames() != inear.num_frames() {
            return Err(Error::Pairing(format!(
                "outer has {} frames, in-ear has {}",
                outer.num_frames(),
                inear.num_frames()
            )));
        }
        if let Some(labels) = labels {
            if labels.len() != outer.num_frames() {
                return Err(Error::Pairing(format!(
                    "{} labels for {} frames",
                    labels.len(),
                    outer.num_frames()
                )));
            }
            if labels.num_classes() != self.num_classes {
                return Err(Error::Pairing(format!(
                    "labels use {} classes, accumulator {}",
                    labels.num_classes(),
                    self.num_classes
                )));
            }
        }
        for (l, (o, i)) in outer.frames().zip(inear.frames()).enumerate() {
            self.global.add_frame(o, i);
            if let Some(c) = labels.and_then(|lab| lab.get(l)) {
                self.classes[c].add_frame(o, i);
            }
        }
        Ok(())
    }

    fn check_compatible(&self, other: &RtfAccumulator) -> Result<()> {
        if self.config != other.config
            || self.num_classes != other.num_classes
            || self.delay_samples != other.delay_samples
        {
            return Err(Error::Pairing(
                "accumulators differ in configuration, class count or delay".into(),
            ));
        }
        Ok(())
    }

    /// Adds `other`'s sums into `self`.
    pub fn merge_from(&mut self, other: &RtfAccumulator) -> Result<()> {
        self.check_compatible(other)?;
        self.global.add(&other.global);
        for (a, b) in self.classes.iter_mut().zip(&other.classes) {
            a.add(b);
        }
        Ok(())
    }

    pub fn merge(mut self, other: &RtfAccumulator) -> Result<RtfAccumulator> {
        self.merge_from(other)?;
        Ok(self)
    }

    /// Absolute regularizer for the given policy.
    pub fn resolve_eps(&self, regularization: Regularization) -> f64 {
        match regularization {
            Regularization::Absolute(eps) => eps,
            Regularization::Relative(factor) => {
                let p = &self.global.power;
                factor * p.iter().sum::<f64>() / p.len() as f64
            }
        }
    }

    pub fn finalize_speech_independent(&self, regularization: Regularization) -> Result<Vec<Complex64>> {
        if self.global.frame_count == 0 {
            return Err(Error::NoData);
        }
        Ok(self.global.quotient(self.resolve_eps(regularization)))
    }

    pub fn finalize_speech_dependent(&self, options: &EstimatorOptions) -> Result<RtfModel> {
        if self.global.frame_count == 0 {
            return Err(Error::NoData);
        }
        let eps = self.resolve_eps(options.regularization);
        let phonemes = self
            .classes
            .iter()
            .map(|sums| PhonemeRtf {
                rtf: (sums.frame_count >= options.min_frames.max(1)).then(|| sums.quotient(eps)),
                frame_count: sums.frame_count,
            })
            .collect();
        Ok(RtfModel {
            config: self.config,
            delay_samples: self.delay_samples,
            eps,
            min_frames: options.min_frames,
            talker_id: String::new(),
            global_rtf: self.global.quotient(eps),
            global_frame_count: self.global.frame_count,
            phonemes,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhonemeRtf {
    /// Present iff `frame_count >= min_frames`.
    pub rtf: Option<Vec<Complex64>>,
    pub frame_count: u64,
}

/// A global RTF plus a database of per-class RTFs.
#[derive(Debug, Clone, PartialEq)]
pub struct RtfModel {
    pub config: StftConfig,
    pub delay_samples: usize,
    pub eps: f64,
    pub min_frames: u64,
    pub talker_id: String,
    pub global_rtf: Vec<Complex64>,
    pub global_frame_count: u64,
    pub phonemes: Vec<PhonemeRtf>,
}

impl RtfModel {
    /// Model whose every RTF is one.
    pub fn identity(config: StftConfig, num_classes: usize, delay_samples: usize) -> Self {
        let one = vec![Complex64::new(1.0, 0.0); config.num_bins()];
        RtfModel {
            config,
            delay_samples,
            eps: 0.0,
            min_frames: 1,
            talker_id: String::new(),
            global_rtf: one.clone(),
            global_frame_count: 0,
            phonemes: vec![
                PhonemeRtf {
                    rtf: Some(one),
                    frame_count: 0,
                };
                num_classes
            ],
        }
    }

    pub fn with_talker_id(mut self, talker_id: impl Into<String>) -> Self {
        self.talker_id = talker_id.into();
        self
    }

    pub fn num_classes(&self) -> usize {
        self.phonemes.len()
    }

    pub fn phoneme_rtf(&self, class_id: usize) -> Option<&[Complex64]> {
        self.phonemes.get(class_id)?.rtf.as_deref()
    }

    /// Number of classes with their own RTF.
    pub fn num_estimated_classes(&self) -> usize {
        self.phonemes.iter().filter(|p| p.rtf.is_some()).count()
    }

    pub fn validate(&self) -> Result<()> {
        let bins = self.config.num_bins();
        let finite = |v: &[Complex64]| v.iter().all(|c| c.re.is_finite() && c.im.is_finite());
        if self.global_rtf.len() != bins {
            return Err(Error::MalformedModel(format!(
                "global RTF has {} bins, expected {bins}",
                self.global_rtf.len()
            )));
        }
        if !finite(&self.global_rtf) {
            return Err(Error::MalformedModel("non-finite global RTF coefficient".into()));
        }
        if !self.eps.is_finite() || self.eps < 0.0 {
            return Err(Error::MalformedModel(format!("invalid eps {}", self.eps)));
        }
        for (c, p) in self.phonemes.iter().enumerate() {
            if let Some(rtf) = &p.rtf {
                if rtf.len() != bins {
                    return Err(Error::MalformedModel(format!(
                        "class {c} RTF has {} bins, expected {bins}",
                        rtf.len()
                    )));
                }
                if !finite(rtf) {
                    return Err(Error::MalformedModel(format!(
                        "non-finite RTF coefficient in class {c}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let split = |v: &[Complex64]| ComplexArray {
            re: v.iter().map(|c| c.re).collect(),
            im: v.iter().map(|c| c.im).collect(),
        };
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            frame_len: self.config.frame_len(),
            hop: self.config.hop(),
            sample_rate_hz: self.config.sample_rate_hz(),
            delay_samples: self.delay_samples,
            num_classes: self.num_classes(),
            eps: self.eps,
            min_frames: self.min_frames,
            talker_id: self.talker_id.clone(),
            global_frame_count: self.global_frame_count,
            global_rtf: split(&self.global_rtf),
            phonemes: self
                .phonemes
                .iter()
                .enumerate()
                .filter_map(|(c, p)| {
                    let rtf = p.rtf.as_ref()?;
                    let ComplexArray { re, im } = split(rtf);
                    Some((
                        c,
                        PhonemeEntry {
                            re,
                            im,
                            frame_count: p.frame_count,
                        },
                    ))
                })
                .collect(),
            class_frame_counts: self.phonemes.iter().map(|p| p.frame_count).collect(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::MalformedModel(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::MalformedModel(e.to_string()))?;
        match value.get("format_version") {
            None => return Err(Error::MalformedModel("missing format_version".into())),
            Some(v) => {
                let version = match v {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                if version != MODEL_FORMAT_VERSION.to_string() {
                    return Err(Error::UnsupportedVersion(version));
                }
            }
        }
        let mut value = value;
        value["format_version"] = serde_json::json!(MODEL_FORMAT_VERSION);
        let file: ModelFile =
            serde_json::from_value(value).map_err(|e| Error::MalformedModel(e.to_string()))?;

        let config = StftConfig::with_hop(file.frame_len, file.hop, file.sample_rate_hz)
            .map_err(|e| Error::MalformedModel(e.to_string()))?;
        let join = |re: &[f64], im: &[f64], what: &str| -> Result<Vec<Complex64>> {
            if re.len() != im.len() {
                return Err(Error::MalformedModel(format!(
                    "{what}: re has {} entries, im has {}",
                    re.len(),
                    im.len()
                )));
            }
            Ok(re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect())
        };
        if file.class_frame_counts.len() != file.num_classes {
            return Err(Error::MalformedModel(format!(
                "class_frame_counts has {} entries for P = {}",
                file.class_frame_counts.len(),
                file.num_classes
            )));
        }
        let mut phonemes: Vec<PhonemeRtf> = file
            .class_frame_counts
            .iter()
            .map(|&frame_count| PhonemeRtf {
                rtf: None,
                frame_count,
            })
            .collect();
        for (c, entry) in &file.phonemes {
            let slot = phonemes.get_mut(*c).ok_or_else(|| {
                Error::MalformedModel(format!("class {c} out of range for P = {}", file.num_classes))
            })?;
            if slot.frame_count != entry.frame_count {
                return Err(Error::MalformedModel(format!(
                    "class {c}: frame_count {} disagrees with class_frame_counts {}",
                    entry.frame_count, slot.frame_count
                )));
            }
            slot.rtf = Some(join(&entry.re, &entry.im, &format!("class {c}"))?);
        }
        let model = RtfModel {
            config,
            delay_samples: file.delay_samples,
            eps: file.eps,
            min_frames: file.min_frames,
            talker_id: file.talker_id,
            global_rtf: join(&file.global_rtf.re, &file.global_rtf.im, "global_rtf")?,
            global_frame_count: file.global_frame_count,
            phonemes,
        };
        model.validate()?;
        Ok(model)
    }
}

pub fn save_model(model: &RtfModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let json = model.to_json()?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RtfModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RtfModel::from_json(&text)
}

#[derive(Serialize, Deserialize)]
struct ComplexArray {
    re: Vec<f64>,
    im: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PhonemeEntry {
    re: Vec<f64>,
    im: Vec<f64>,
    frame_count: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    #[serde(rename = "K")]
    frame_len: usize,
    hop: usize,
    sample_rate_hz: u32,
    delay_samples: usize,
    #[serde(rename = "P")]
    num_classes: usize,
    eps: f64,
    min_frames: u64,
    talker_id: String,
    global_frame_count: u64,
    global_rtf: ComplexArray,
    phonemes: BTreeMap<usize, PhonemeEntry>,
    class_frame_counts: Vec<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> StftConfig {
        StftConfig::new(256, 5000).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_spec(frames: usize, rng: &mut ChaCha8Rng) -> Spectrogram {
        let n = frames * cfg().num_bins();
        let data = (0..n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        Spectrogram::from_coefficients(data, frames, cfg()).unwrap()
    }

    fn scaled(spec: &Spectrogram, per_frame: impl Fn(usize) -> Complex64) -> Spectrogram {
        let mut out = spec.clone();
        for (l, f) in out.frames_mut().enumerate() {
            let g = per_frame(l);
            for x in f {
                *x *= g;
            }
        }
        out
    }

    /// Direct per-bin least-squares quotient over explicit frame lists.
    fn oracle_quotient(outer: &Spectrogram, inear: &Spectrogram, frames: &[usize], k: usize) -> Complex64 {
        let mut num = c(0.0, 0.0);
        let mut den = 0.0;
        for &l in frames {
            num += outer.get(k, l).conj() * inear.get(k, l);
            den += outer.get(k, l).norm_sqr();
        }
        num / den
    }

    #[test]
    fn zero_spectrograms_only_count_frames() {
        let z = Spectrogram::zeros(4, cfg()).unwrap();
        let mut acc = RtfAccumulator::new(cfg(), 3, 11);
        acc.accumulate(&z, &z, None).unwrap();
        assert_eq!(acc.global_frame_count(), 4);
        assert!(acc.global_cross().iter().all(|x| *x == c(0.0, 0.0)));
        assert!(acc.global_power().iter().all(|&p| p == 0.0));
        let h = acc.finalize_speech_independent(Regularization::Absolute(0.0)).unwrap();
        assert!(h.iter().all(|x| *x == c(0.0, 0.0)));
    }

    #[test]
    fn single_bin_direct_formula() {
        let mut outer = Spectrogram::zeros(1, cfg()).unwrap();
        let mut inear = Spectrogram::zeros(1, cfg()).unwrap();
        outer.frame_mut(0)[5] = c(1.0, 0.0);
        inear.frame_mut(0)[5] = c(2.0, 0.0);
        let mut acc = RtfAccumulator::new(cfg(), 1, 0);
        acc.accumulate(&outer, &inear, None).unwrap();
        assert_eq!(acc.global_cross()[5], c(2.0, 0.0));
        assert_eq!(acc.global_power()[5], 1.0);
    }

    #[test]
    fn constant_ratio_and_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let outer = random_spec(6, &mut rng);
        for g in [c(2.0, 0.0), c(0.0, 1.0)] {
            let inear = scaled(&outer, |_| g);
            let mut acc = RtfAccumulator::new(cfg(), 1, 0);
            acc.accumulate(&outer, &inear, None).unwrap();
            let h = acc.finalize_speech_independent(Regularization::Absolute(0.0)).unwrap();
            for x in &h {
                assert!((x - g).norm() < 1e-14);
            }
            // the default relative floor barely moves excited bins
            let h = acc.finalize_speech_independent(Regularization::default()).unwrap();
            for x in &h {
                assert!((x - g).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn matches_quotient_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let outer = random_spec(10, &mut rng);
        let inear = random_spec(10, &mut rng);
        let mut acc = RtfAccumulator::new(cfg(), 1, 0);
        acc.accumulate(&outer, &inear, None).unwrap();
        let h = acc.finalize_speech_independent(Regularization::Absolute(0.0)).unwrap();
        let all: Vec<usize> = (0..10).collect();
        for (k, x) in h.iter().enumerate() {
            let o = oracle_quotient(&outer, &inear, &all, k);
            assert!((x - o).norm() <= 1e-12 * o.norm());
        }
    }

    #[test]
    fn sequential_equals_merged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs: Vec<_> = (0..2)
            .map(|_| (random_spec(5, &mut rng), random_spec(5, &mut rng)))
            .collect();
        let mut seq = RtfAccumulator::new(cfg(), 1, 0);
        let mut parts = Vec::new();
        for (o, i) in &pairs {
            seq.accumulate(o, i, None).unwrap();
            let mut a = RtfAccumulator::new(cfg(), 1, 0);
            a.accumulate(o, i, None).unwrap();
            parts.push(a);
        }
        let merged = parts[0].clone().merge(&parts[1]).unwrap();
        assert_eq!(merged.global_frame_count(), seq.global_frame_count());
        for (a, b) in merged.global_cross().iter().zip(seq.global_cross()) {
            assert!((a - b).norm() <= 1e-12 * b.norm());
        }
    }

    #[test]
    fn merge_identity_and_commutativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let labels = FrameLabels::new((0..6).map(|l| Some(l % 2)).collect(), 2).unwrap();
        let mut a = RtfAccumulator::new(cfg(), 2, 11);
        a.accumulate(&random_spec(6, &mut rng), &random_spec(6, &mut rng), Some(&labels))
            .unwrap();
        let mut b = RtfAccumulator::new(cfg(), 2, 11);
        b.accumulate(&random_spec(6, &mut rng), &random_spec(6, &mut rng), Some(&labels))
            .unwrap();
        let empty = RtfAccumulator::new(cfg(), 2, 11);
        assert_eq!(a.clone().merge(&empty).unwrap(), a);
        let ab = a.clone().merge(&b).unwrap();
        let ba = b.clone().merge(&a).unwrap();
        assert_eq!(ab, ba);
        assert!(a.clone().merge(&RtfAccumulator::new(cfg(), 2, 0)).is_err());
        assert!(a.merge(&RtfAccumulator::new(cfg(), 3, 11)).is_err());
    }

    #[test]
    fn pairing_errors() {
        let mut acc = RtfAccumulator::new(cfg(), 2, 0);
        let a = Spectrogram::zeros(3, cfg()).unwrap();
        let b = Spectrogram::zeros(4, cfg()).unwrap();
        assert!(matches!(acc.accumulate(&a, &b, None), Err(Error::Pairing(_))));
        let other = Spectrogram::zeros(3, StftConfig::new(128, 5000).unwrap()).unwrap();
        assert!(matches!(acc.accumulate(&a, &other, None), Err(Error::Pairing(_))));
        let short = FrameLabels::unlabeled(2, 2);
        assert!(matches!(acc.accumulate(&a, &a, Some(&short)), Err(Error::Pairing(_))));
        let wrong_p = FrameLabels::unlabeled(3, 5);
        assert!(matches!(acc.accumulate(&a, &a, Some(&wrong_p)), Err(Error::Pairing(_))));
    }

    #[test]
    fn empty_accumulator_is_an_error() {
        let acc = RtfAccumulator::new(cfg(), 2, 0);
        assert!(matches!(
            acc.finalize_speech_independent(Regularization::default()),
            Err(Error::NoData)
        ));
        assert!(matches!(
            acc.finalize_speech_dependent(&EstimatorOptions::default()),
            Err(Error::NoData)
        ));
    }

    #[test]
    fn single_class_equals_speech_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let outer = random_spec(8, &mut rng);
        let inear = random_spec(8, &mut rng);
        let labels = FrameLabels::uniform(8, 1, 3).unwrap();
        let mut acc = RtfAccumulator::new(cfg(), 3, 0);
        acc.accumulate(&outer, &inear, Some(&labels)).unwrap();
        let opts = EstimatorOptions {
            min_frames: 1,
            ..Default::default()
        };
        let model = acc.finalize_speech_dependent(&opts).unwrap();
        let si = acc.finalize_speech_independent(opts.regularization).unwrap();
        assert_eq!(model.phoneme_rtf(1).unwrap(), &si[..]);
        assert_eq!(model.global_rtf, si);
        assert!(model.phoneme_rtf(0).is_none());
    }

    #[test]
    fn two_classes_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let outer = random_spec(10, &mut rng);
        let inear = scaled(&outer, |l| if l % 2 == 0 { c(2.0, 0.0) } else { c(3.0, 0.0) });
        let labels = FrameLabels::new((0..10).map(|l| Some(l % 2)).collect(), 2).unwrap();
        let mut acc = RtfAccumulator::new(cfg(), 2, 0);
        acc.accumulate(&outer, &inear, Some(&labels)).unwrap();
        let model = acc.finalize_speech_dependent(&EstimatorOptions::exact()).unwrap();
        for (class, g) in [(0, 2.0), (1, 3.0)] {
            for x in model.phoneme_rtf(class).unwrap() {
                assert!((x - c(g, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn min_frames_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let outer = random_spec(10, &mut rng);
        let inear = random_spec(10, &mut rng);
        let mut l = vec![Some(0); 10];
        l[3] = Some(1);
        l[7] = Some(1);
        let labels = FrameLabels::new(l, 2).unwrap();
        let mut acc = RtfAccumulator::new(cfg(), 2, 0);
        acc.accumulate(&outer, &inear, Some(&labels)).unwrap();
        let model = acc.finalize_speech_dependent(&EstimatorOptions::default()).unwrap();
        assert!(model.phoneme_rtf(0).is_some());
        assert!(model.phoneme_rtf(1).is_none());
        assert_eq!(model.phonemes[1].frame_count, 2);
        assert_eq!(model.num_estimated_classes(), 1);
    }

    #[test]
    fn unlabeled_frames_only_count_globally() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let outer = random_spec(4, &mut rng);
        let labels = FrameLabels::new(vec![Some(0), None, None, Some(0)], 1).unwrap();
        let mut acc = RtfAccumulator::new(cfg(), 1, 0);
        acc.accumulate(&outer, &outer, Some(&labels)).unwrap();
        assert_eq!(acc.global_frame_count(), 4);
        assert_eq!(acc.class_frame_count(0), 2);
    }

    #[test]
    fn relative_eps_resolution() {
        let mut outer = Spectrogram::zeros(1, cfg()).unwrap();
        outer.frame_mut(0)[0] = c(129.0f64.sqrt(), 0.0);
        let mut acc = RtfAccumulator::new(cfg(), 1, 0);
        acc.accumulate(&outer, &outer, None).unwrap();
        // mean power = 129 / 129 = 1
        assert!((acc.resolve_eps(Regularization::default()) - 1e-10).abs() < 1e-24);
        assert_eq!(acc.resolve_eps(Regularization::Absolute(0.5)), 0.5);
    }

    fn sample_model(num_classes: usize) -> RtfModel {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let outer = random_spec(400, &mut rng);
        let inear = random_spec(400, &mut rng);
        let labels =
            FrameLabels::new((0..400).map(|l| Some((l * 7) % num_classes)).collect(), num_classes)
                .unwrap();
        let mut acc = RtfAccumulator::new(cfg(), num_classes, 11);
        acc.accumulate(&outer, &inear, Some(&labels)).unwrap();
        acc.finalize_speech_dependent(&EstimatorOptions {
            min_frames: 7,
            ..Default::default()
        })
        .unwrap()
        .with_talker_id("talker-01")
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let model = sample_model(62);
        // 400 frames over 62 classes: some classes fall below 7 frames
        assert!(model.num_estimated_classes() > 0);
        assert!(model.num_estimated_classes() < 62);
        let back = RtfModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
        for (a, b) in back.global_rtf.iter().zip(&model.global_rtf) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        assert_eq!(back.delay_samples, 11);
        assert_eq!(back.min_frames, 7);
        assert_eq!(back.eps.to_bits(), model.eps.to_bits());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let model = sample_model(4);
        save_model(&model, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), model);
        assert!(load_model(dir.path().join("missing.json")).unwrap_err().is_io());
    }

    #[test]
    fn unsupported_version() {
        let json = sample_model(2).to_json().unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["format_version"] = serde_json::json!("99");
        assert!(matches!(
            RtfModel::from_json(&v.to_string()),
            Err(Error::UnsupportedVersion(s)) if s == "99"
        ));
        v["format_version"] = serde_json::json!(99);
        assert!(matches!(RtfModel::from_json(&v.to_string()), Err(Error::UnsupportedVersion(_))));
    }

    #[test]
    fn malformed_files() {
        assert!(matches!(RtfModel::from_json("{"), Err(Error::MalformedModel(_))));
        let json = sample_model(2).to_json().unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["global_rtf"]["re"][0] = serde_json::Value::Null;
        assert!(matches!(RtfModel::from_json(&v.to_string()), Err(Error::MalformedModel(_))));

        let overflow = json.replacen("\"re\": [\n    ", "\"re\": [\n    1e400, ", 1);
        assert!(RtfModel::from_json(&overflow).is_err());

        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["global_rtf"]["im"].as_array_mut().unwrap().pop();
        assert!(matches!(RtfModel::from_json(&v.to_string()), Err(Error::MalformedModel(_))));
    }

    #[test]
    fn non_finite_model_is_rejected() {
        let mut model = sample_model(2);
        model.global_rtf[3] = c(f64::NAN, 0.0);
        assert!(matches!(model.to_json(), Err(Error::MalformedModel(_))));
        assert!(model.validate().is_err());
    }
}
