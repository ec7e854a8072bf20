//! Corpus-level commands: identification, simulation, evaluation, the
//! same-talker / talker-mismatch experiment, pseudo-label generation and
//! model inspection.
//!
//! Every command processes utterances in parallel on `jobs` worker threads
//! and reduces results in manifest order, so outputs are identical for any
//! worker count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{csv_error, load_manifest, read_wav, write_wav, Manifest, ManifestEntry, WavEncoding};
use crate::error::{Error, Result};
use crate::labels::{
    cluster_pseudo_phonemes_joint, frames_to_segments, load_segments, save_segments, segments_to_frames,
    FrameLabels,
};
use crate::metrics::{floor_from_db, lsd, SummaryStats};
use crate::rtf::{load_model, save_model, EstimatorOptions, Regularization, RtfAccumulator, RtfModel};
use crate::simulate::{apply_prediction_delay, simulate_inear, FallbackReport, SimulationConfig, SimulationMode};
use crate::stft::{AudioClip, StftConfig, StftProcessor};

/// Settings shared by every command.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub sample_rate_hz: u32,
    pub frame_len: usize,
    pub hop: usize,
    pub delay_samples: usize,
    /// Absolute regularizer; `None` uses the relative default.
    pub eps: Option<f64>,
    pub min_frames: u64,
    pub floor_db: f64,
    pub seed: u64,
    /// Worker threads; 0 lets the thread pool decide.
    pub jobs: usize,
    pub num_classes: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sample_rate_hz: 5000,
            frame_len: 256,
            hop: 128,
            delay_samples: 11,
            eps: None,
            min_frames: 5,
            floor_db: -160.0,
            seed: 0,
            jobs: 0,
            num_classes: 62,
        }
    }
}

impl PipelineConfig {
    pub fn stft(&self) -> Result<StftConfig> {
        StftConfig::with_hop(self.frame_len, self.hop, self.sample_rate_hz)
    }

    pub fn estimator_options(&self) -> EstimatorOptions {
        EstimatorOptions {
            regularization: match self.eps {
                Some(eps) => Regularization::Absolute(eps),
                None => Regularization::default(),
            },
            min_frames: self.min_frames,
        }
    }

    fn run<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(f))
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn check_file_stem(id: &str) -> Result<()> {
    if id.is_empty() || id.contains(['/', '\\']) || id == "." || id == ".." {
        return Err(Error::Validation(format!("{id:?} cannot be used as a file name")));
    }
    Ok(())
}

fn model_path(models_dir: &Path, talker_id: &str) -> PathBuf {
    models_dir.join(format!("{talker_id}.json"))
}

fn frame_labels_for(
    entry: &ManifestEntry,
    cfg: &StftConfig,
    num_frames: usize,
    num_classes: usize,
) -> Result<Option<FrameLabels>> {
    match &entry.labels_path {
        None => Ok(None),
        Some(path) => {
            let segments = load_segments(path, num_classes)?;
            Ok(Some(segments_to_frames(&segments, cfg, num_frames, num_classes)))
        }
    }
}

fn read_pair(entry: &ManifestEntry, crop: Option<usize>) -> Result<(AudioClip, AudioClip)> {
    let inear_path = entry.inear_path.as_ref().ok_or_else(|| {
        Error::Validation(format!("utterance {:?} has no in-ear recording", entry.utterance_id))
    })?;
    let outer = read_wav(&entry.outer_path)?;
    let inear = read_wav(inear_path)?;
    if outer.len() != inear.len() {
        return Err(Error::Validation(format!(
            "utterance {:?}: outer has {} samples, in-ear {}",
            entry.utterance_id,
            outer.len(),
            inear.len()
        )));
    }
    Ok((crop_clip(outer, crop), crop_clip(inear, crop)))
}

fn crop_clip(clip: AudioClip, crop: Option<usize>) -> AudioClip {
    match crop {
        Some(n) if n < clip.len() && n > 0 => {
            let rate = clip.sample_rate_hz();
            let mut s = clip.into_samples();
            s.truncate(n);
            AudioClip::new(s, rate).expect("non-empty prefix of a valid clip")
        }
        _ => clip,
    }
}

fn with_utterance<T>(entry: &ManifestEntry, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io { .. } | Error::Validation(_) | Error::Manifest(_) => e,
        other => Error::Validation(format!("utterance {:?}: {other}", entry.utterance_id)),
    })
}

/// Accumulator for one utterance of a paired corpus.
pub fn accumulate_utterance(entry: &ManifestEntry, config: &PipelineConfig) -> Result<RtfAccumulator> {
    let cfg = config.stft()?;
    let stft = StftProcessor::new(cfg);
    with_utterance(entry, (|| {
        let (outer, inear) = read_pair(entry, None)?;
        let inear = apply_prediction_delay(&inear, config.delay_samples);
        let so = stft.analyze(&outer)?;
        let si = stft.analyze(&inear)?;
        let labels = frame_labels_for(entry, &cfg, so.num_frames(), config.num_classes)?;
        let mut acc = RtfAccumulator::new(cfg, config.num_classes, config.delay_samples);
        acc.accumulate(&so, &si, labels.as_ref())?;
        Ok(acc)
    })())
}

/// Estimates one model per talker over all of that talker's utterances and
/// writes `<out_dir>/<talker_id>.json`. Returns the written paths in talker
/// order.
pub fn identify(manifest_path: &Path, out_dir: &Path, config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let cfg = config.stft()?;
    let manifest = load_manifest(manifest_path, config.sample_rate_hz)?;
    if let Some(e) = manifest.entries.iter().find(|e| e.inear_path.is_none()) {
        return Err(Error::Validation(format!(
            "utterance {:?} (talker {:?}) has no in-ear recording",
            e.utterance_id, e.talker_id
        )));
    }
    for t in manifest.talkers() {
        check_file_stem(t)?;
    }
    let accumulators: Vec<RtfAccumulator> = config.run(|| {
        manifest
            .entries
            .par_iter()
            .map(|e| accumulate_utterance(e, config))
            .collect::<Result<Vec<_>>>()
    })??;

    create_dir(out_dir)?;
    let mut written = Vec::new();
    for talker in manifest.talkers() {
        let mut total = RtfAccumulator::new(cfg, config.num_classes, config.delay_samples);
        for (e, acc) in manifest.entries.iter().zip(&accumulators) {
            if e.talker_id == talker {
                total.merge_from(acc)?;
            }
        }
        let model = total
            .finalize_speech_dependent(&config.estimator_options())?
            .with_talker_id(talker);
        let path = model_path(out_dir, talker);
        save_model(&model, &path)?;
        log::info!(
            "talker {talker}: {} frames, {} of {} classes estimated",
            model.global_frame_count,
            model.num_estimated_classes(),
            model.num_classes()
        );
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulateOptions {
    pub mode: SimulationMode,
    pub compensate_delay: bool,
    pub encoding: WavEncoding,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        SimulateOptions {
            mode: SimulationMode::SpeechDependent,
            compensate_delay: false,
            encoding: WavEncoding::Float32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedUtterance {
    pub utterance_id: String,
    pub talker_id: String,
    pub output: PathBuf,
    pub report: FallbackReport,
}

fn mode_name(mode: SimulationMode) -> &'static str {
    match mode {
        SimulationMode::SpeechIndependent => "speech_independent",
        SimulationMode::SpeechDependent => "speech_dependent",
    }
}

fn simulate_entry(
    entry: &ManifestEntry,
    model: &RtfModel,
    mode: SimulationMode,
    sim: &SimulationConfig,
    crop: Option<usize>,
) -> Result<(AudioClip, FallbackReport)> {
    with_utterance(entry, (|| {
        let outer = crop_clip(read_wav(&entry.outer_path)?, crop);
        let num_frames = model.config.num_frames(outer.len());
        let labels = if mode == SimulationMode::SpeechDependent {
            frame_labels_for(entry, &model.config, num_frames, model.num_classes())?
        } else {
            None
        };
        let out = simulate_inear(&outer, labels.as_ref(), model, mode, sim)?;
        Ok((out.clip, out.report))
    })())
}

/// Applies one model to every utterance of the manifest, writing
/// `<out_dir>/<utterance_id>.wav` and `<out_dir>/simulation_report.csv`.
pub fn simulate(
    manifest_path: &Path,
    model_file: &Path,
    out_dir: &Path,
    config: &PipelineConfig,
    options: &SimulateOptions,
) -> Result<Vec<SimulatedUtterance>> {
    let model = load_model(model_file)?;
    if model.config.sample_rate_hz() != config.sample_rate_hz {
        return Err(Error::Validation(format!(
            "model was estimated at {} Hz, pipeline runs at {} Hz",
            model.config.sample_rate_hz(),
            config.sample_rate_hz
        )));
    }
    let manifest = load_manifest(manifest_path, config.sample_rate_hz)?;
    for e in &manifest.entries {
        check_file_stem(&e.utterance_id)?;
    }
    let sim = SimulationConfig {
        compensate_delay: options.compensate_delay,
        ..SimulationConfig::for_model(&model)
    };
    create_dir(out_dir)?;
    let results = config.run(|| {
        manifest
            .entries
            .par_iter()
            .map(|e| {
                let (clip, report) = simulate_entry(e, &model, options.mode, &sim, None)?;
                let output = out_dir.join(format!("{}.wav", e.utterance_id));
                write_wav(&clip, &output, options.encoding)?;
                Ok(SimulatedUtterance {
                    utterance_id: e.utterance_id.clone(),
                    talker_id: e.talker_id.clone(),
                    output,
                    report,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let report_path = out_dir.join("simulation_report.csv");
    let mut w = csv::Writer::from_path(&report_path).map_err(|e| csv_error(&report_path, e))?;
    w.write_record([
        "utterance_id",
        "talker_id",
        "model_talker_id",
        "mode",
        "frames",
        "fallback_frames",
        "unlabeled_frames",
        "below_threshold_frames",
        "warning",
    ])
    .map_err(|e| csv_error(&report_path, e))?;
    for r in &results {
        let warning = if r.report.labels_missing {
            log::warn!("{}: no labels, used speech-independent filtering", r.utterance_id);
            "labels missing: speech-independent filtering"
        } else {
            ""
        };
        w.write_record([
            r.utterance_id.as_str(),
            r.talker_id.as_str(),
            model.talker_id.as_str(),
            mode_name(options.mode),
            &r.report.frames.to_string(),
            &r.report.fallback_frames.to_string(),
            &r.report.unlabeled_frames.to_string(),
            &r.report.below_threshold_frames.to_string(),
            warning,
        ])
        .map_err(|e| csv_error(&report_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&report_path, e))?;
    Ok(results)
}

/// LSD of one utterance against its delayed real in-ear recording.
fn utterance_lsd(
    real_inear: &AudioClip,
    simulated: &AudioClip,
    stft: &StftProcessor,
    delay_samples: usize,
    floor: f64,
) -> Result<(f64, usize)> {
    let n = real_inear.len().min(simulated.len());
    let reference = apply_prediction_delay(&crop_clip(real_inear.clone(), Some(n)), delay_samples);
    let estimate = crop_clip(simulated.clone(), Some(n));
    let r = lsd(&stft.analyze(&reference)?, &stft.analyze(&estimate)?, floor)?;
    Ok((r.utterance_lsd_db, r.frames_used))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceScore {
    pub utterance_id: String,
    pub talker_id: String,
    pub frames: usize,
    pub lsd_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub scores: Vec<UtteranceScore>,
    pub summary: SummaryStats,
}

fn write_summary(path: &Path, rows: &[(&str, SummaryStats)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["model", "count", "mean_db", "median_db", "q1_db", "q3_db", "min_db", "max_db"])
        .map_err(|e| csv_error(path, e))?;
    for (name, s) in rows {
        w.write_record([
            name.to_string(),
            s.count.to_string(),
            s.mean.to_string(),
            s.median.to_string(),
            s.q1.to_string(),
            s.q3.to_string(),
            s.min.to_string(),
            s.max.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Compares `<sim_dir>/<utterance_id>.wav` against each real in-ear
/// recording (delayed by `delay_samples`). Writes `lsd_report.csv` and
/// `lsd_summary.csv` into `out_dir`.
pub fn evaluate(
    manifest_path: &Path,
    sim_dir: &Path,
    out_dir: &Path,
    config: &PipelineConfig,
) -> Result<EvaluationReport> {
    let cfg = config.stft()?;
    let manifest = load_manifest(manifest_path, config.sample_rate_hz)?;
    let floor = floor_from_db(config.floor_db);
    let stft = StftProcessor::new(cfg);
    let scores = config.run(|| {
        manifest
            .entries
            .par_iter()
            .map(|e| {
                let inear_path = e.inear_path.as_ref().ok_or_else(|| {
                    Error::Validation(format!("utterance {:?} has no real in-ear recording", e.utterance_id))
                })?;
                let sim_path = sim_dir.join(format!("{}.wav", e.utterance_id));
                if !sim_path.is_file() {
                    return Err(Error::Validation(format!(
                        "utterance {:?}: simulated file {} is missing",
                        e.utterance_id,
                        sim_path.display()
                    )));
                }
                with_utterance(e, (|| {
                    let real = read_wav(inear_path)?;
                    let sim = read_wav(&sim_path)?;
                    if sim.sample_rate_hz() != real.sample_rate_hz() {
                        return Err(Error::SampleRateMismatch {
                            expected: real.sample_rate_hz(),
                            actual: sim.sample_rate_hz(),
                        });
                    }
                    let (lsd_db, frames) = utterance_lsd(&real, &sim, &stft, config.delay_samples, floor)?;
                    Ok(UtteranceScore {
                        utterance_id: e.utterance_id.clone(),
                        talker_id: e.talker_id.clone(),
                        frames,
                        lsd_db,
                    })
                })())
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let summary = SummaryStats::from_values(&scores.iter().map(|s| s.lsd_db).collect::<Vec<_>>())
        .ok_or_else(|| Error::Validation("manifest has no utterances".into()))?;

    create_dir(out_dir)?;
    let path = out_dir.join("lsd_report.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(["utterance_id", "talker_id", "frames", "lsd_db"])
        .map_err(|e| csv_error(&path, e))?;
    for s in &scores {
        w.write_record([
            s.utterance_id.clone(),
            s.talker_id.clone(),
            s.frames.to_string(),
            s.lsd_db.to_string(),
        ])
        .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_summary(&out_dir.join("lsd_summary.csv"), &[("simulated", summary)])?;
    Ok(EvaluationReport { scores, summary })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    SameTalker,
    TalkerMismatch,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::SameTalker => "same_talker",
            Condition::TalkerMismatch => "talker_mismatch",
        }
    }
}

/// Which talker's model simulates each utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentPlan {
    pub condition: Condition,
    /// utterance id -> model talker id
    pub assignments: BTreeMap<String, String>,
    pub seed: u64,
}

impl ExperimentPlan {
    /// Same-talker plans ignore the seed. Mismatch plans draw, per utterance
    /// in manifest order, uniformly among the other talkers.
    pub fn new(manifest: &Manifest, condition: Condition, seed: u64) -> Result<Self> {
        let talkers = manifest.talkers();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut assignments = BTreeMap::new();
        for e in &manifest.entries {
            let model_talker = match condition {
                Condition::SameTalker => e.talker_id.clone(),
                Condition::TalkerMismatch => {
                    let others: Vec<&str> = talkers.iter().copied().filter(|t| *t != e.talker_id).collect();
                    if others.is_empty() {
                        return Err(Error::Validation(
                            "talker-mismatch condition needs at least two talkers".into(),
                        ));
                    }
                    others[rng.gen_range(0..others.len())].to_string()
                }
            };
            assignments.insert(e.utterance_id.clone(), model_talker);
        }
        Ok(ExperimentPlan {
            condition,
            assignments,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub utterance_id: String,
    pub talker_id: String,
    pub model_talker_id: String,
    pub lsd_speech_independent_db: f64,
    pub lsd_speech_dependent_db: f64,
    pub fallback_frames: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub plan: ExperimentPlan,
    pub rows: Vec<ExperimentRow>,
    pub speech_independent: SummaryStats,
    pub speech_dependent: SummaryStats,
}

/// Runs one condition: simulates every utterance with both model types of
/// its assigned talker and scores them against the real in-ear recording.
/// Writes `experiment_<condition>.csv` and `experiment_<condition>_summary.csv`.
pub fn experiment(
    manifest_path: &Path,
    models_dir: &Path,
    out_dir: &Path,
    condition: Condition,
    crop_secs: Option<f64>,
    config: &PipelineConfig,
) -> Result<ExperimentReport> {
    let manifest = load_manifest(manifest_path, config.sample_rate_hz)?;
    let plan = ExperimentPlan::new(&manifest, condition, config.seed)?;
    let mut models = BTreeMap::new();
    for talker in plan.assignments.values() {
        if !models.contains_key(talker) {
            let model = load_model(model_path(models_dir, talker))?;
            if model.config.sample_rate_hz() != config.sample_rate_hz {
                return Err(Error::Validation(format!(
                    "model of talker {talker:?} was estimated at {} Hz",
                    model.config.sample_rate_hz()
                )));
            }
            models.insert(talker.clone(), model);
        }
    }
    let crop = crop_secs.map(|s| (s * config.sample_rate_hz as f64).round() as usize);
    let floor = floor_from_db(config.floor_db);

    let rows = config.run(|| {
        manifest
            .entries
            .par_iter()
            .map(|e| {
                let model_talker = &plan.assignments[&e.utterance_id];
                let model = &models[model_talker];
                let stft = StftProcessor::new(model.config);
                let sim = SimulationConfig::for_model(model);
                let (_, real) = with_utterance(e, read_pair(e, crop))?;
                let score = |mode| -> Result<(f64, FallbackReport)> {
                    let (clip, report) = simulate_entry(e, model, mode, &sim, crop)?;
                    let (d, _) = with_utterance(e, utterance_lsd(&real, &clip, &stft, model.delay_samples, floor))?;
                    Ok((d, report))
                };
                let (si, _) = score(SimulationMode::SpeechIndependent)?;
                let (sd, report) = score(SimulationMode::SpeechDependent)?;
                Ok(ExperimentRow {
                    utterance_id: e.utterance_id.clone(),
                    talker_id: e.talker_id.clone(),
                    model_talker_id: model_talker.clone(),
                    lsd_speech_independent_db: si,
                    lsd_speech_dependent_db: sd,
                    fallback_frames: report.fallback_frames,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let stats = |f: fn(&ExperimentRow) -> f64| {
        SummaryStats::from_values(&rows.iter().map(f).collect::<Vec<_>>())
            .ok_or_else(|| Error::Validation("manifest has no utterances".into()))
    };
    let speech_independent = stats(|r| r.lsd_speech_independent_db)?;
    let speech_dependent = stats(|r| r.lsd_speech_dependent_db)?;

    create_dir(out_dir)?;
    let path = out_dir.join(format!("experiment_{}.csv", condition.name()));
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record([
        "utterance_id",
        "talker_id",
        "model_talker_id",
        "lsd_speech_independent_db",
        "lsd_speech_dependent_db",
        "fallback_frames",
    ])
    .map_err(|e| csv_error(&path, e))?;
    for r in &rows {
        w.write_record([
            r.utterance_id.clone(),
            r.talker_id.clone(),
            r.model_talker_id.clone(),
            r.lsd_speech_independent_db.to_string(),
            r.lsd_speech_dependent_db.to_string(),
            r.fallback_frames.to_string(),
        ])
        .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_summary(
        &out_dir.join(format!("experiment_{}_summary.csv", condition.name())),
        &[
            ("speech_independent", speech_independent),
            ("speech_dependent", speech_dependent),
        ],
    )?;
    Ok(ExperimentReport {
        plan,
        rows,
        speech_independent,
        speech_dependent,
    })
}

/// Clusters the outer-microphone frames of the whole manifest jointly into
/// `num_classes` pseudo-phonemes and writes `<out_dir>/<utterance_id>.csv`
/// label files plus `labeled_manifest.csv` pointing at them.
pub fn cluster_labels(
    manifest_path: &Path,
    num_classes: usize,
    out_dir: &Path,
    config: &PipelineConfig,
) -> Result<Vec<PathBuf>> {
    let cfg = config.stft()?;
    let mut manifest = load_manifest(manifest_path, config.sample_rate_hz)?;
    for e in &manifest.entries {
        check_file_stem(&e.utterance_id)?;
    }
    let stft = StftProcessor::new(cfg);
    let analyzed = config.run(|| {
        manifest
            .entries
            .par_iter()
            .map(|e| {
                with_utterance(e, (|| {
                    let clip = read_wav(&e.outer_path)?;
                    let spec = stft.analyze(&clip)?;
                    Ok((clip.len(), spec))
                })())
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let specs: Vec<_> = analyzed.iter().map(|(_, s)| s).collect();
    let labels = config.run(|| cluster_pseudo_phonemes_joint(&specs, num_classes, config.seed))??;

    create_dir(out_dir)?;
    let mut written = Vec::new();
    for ((entry, (len, _)), frame_labels) in manifest.entries.iter_mut().zip(&analyzed).zip(&labels) {
        let path = out_dir.join(format!("{}.csv", entry.utterance_id));
        save_segments(&path, &frames_to_segments(frame_labels, &cfg, *len))?;
        entry.labels_path = Some(path.clone());
        written.push(path);
    }
    manifest.save(out_dir.join("labeled_manifest.csv"))?;
    Ok(written)
}

/// Human-readable summary of a model file.
pub fn inspect_model(path: &Path) -> Result<String> {
    let m = load_model(path)?;
    let cfg = m.config;
    let mut out = String::new();
    let _ = writeln!(out, "talker_id:      {}", m.talker_id);
    let _ = writeln!(
        out,
        "stft:           K={} hop={} fs={} Hz ({} bins)",
        cfg.frame_len(),
        cfg.hop(),
        cfg.sample_rate_hz(),
        cfg.num_bins()
    );
    let _ = writeln!(out, "delay_samples:  {}", m.delay_samples);
    let _ = writeln!(out, "eps:            {:e}", m.eps);
    let _ = writeln!(out, "min_frames:     {}", m.min_frames);
    let _ = writeln!(out, "frames:         {}", m.global_frame_count);
    let _ = writeln!(
        out,
        "classes:        {} of {} estimated",
        m.num_estimated_classes(),
        m.num_classes()
    );
    let _ = writeln!(out, "global RTF magnitude (dB):");
    let step = (cfg.num_bins() / 8).max(1);
    for k in (0..cfg.num_bins()).step_by(step) {
        let _ = writeln!(
            out,
            "  {:>8.1} Hz  {:>8.2}",
            cfg.bin_frequency_hz(k),
            20.0 * m.global_rtf[k].norm().max(1e-300).log10()
        );
    }
    let _ = writeln!(out, "class  frames  estimated");
    for (c, p) in m.phonemes.iter().enumerate() {
        if p.frame_count > 0 || p.rtf.is_some() {
            let _ = writeln!(out, "{c:>5}  {:>6}  {}", p.frame_count, if p.rtf.is_some() { "yes" } else { "no" });
        }
    }
    Ok(out)
}
