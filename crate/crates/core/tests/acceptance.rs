//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Run with `cargo test --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use ownvoice::cli::{self, PipelineConfig};
use ownvoice::labels::FrameLabels;
use ownvoice::metrics::{lsd, DEFAULT_FLOOR};
use ownvoice::rtf::{load_model, EstimatorOptions, Regularization, RtfAccumulator, RtfModel};
use ownvoice::simulate::{apply_speech_dependent, apply_speech_independent};
use ownvoice::stft::{sqrt_hann_window, AudioClip, Spectrogram, StftConfig, StftProcessor};
use ownvoice::synthetic::{random_frame_labels, random_rtf, spectrogram_pair, write_corpus, CorpusSpec, UtteranceSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn cfg256() -> StftConfig {
    StftConfig::new(256, 5000).unwrap()
}

fn rel_err(est: &[Complex64], truth: &[Complex64]) -> f64 {
    est.iter()
        .zip(truth)
        .map(|(e, t)| (e - t).norm() / t.norm())
        .fold(0.0, f64::max)
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    if took < limit {
        Ok(took)
    } else {
        Err(format!("took {took:.2?}, limit {limit:?}"))
    }
}

fn stft_correctness() -> Outcome {
    let start = Instant::now();
    let cfg = cfg256();
    let stft = StftProcessor::new(cfg);
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..4096).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = stft.synthesize(&stft.analyze(&AudioClip::new(x.clone(), 5000).unwrap()).unwrap()).unwrap();
        let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for n in 128..y.len() - 128 {
            worst = worst.max((y.samples()[n] - x[n]).abs() / peak);
        }
    }
    let mut cola = 0.0f64;
    for k in [8, 64, 256, 1024] {
        let w = sqrt_hann_window(k).unwrap();
        for n in 0..k / 2 {
            cola = cola.max((w[n] * w[n] + w[n + k / 2] * w[n + k / 2] - 1.0).abs());
        }
    }
    let took = within(Duration::from_secs(1), start)?;
    if worst < 1e-10 && cola < 1e-12 {
        Ok(format!("round-trip rel err {worst:.1e}, COLA dev {cola:.1e}, {took:.2?}"))
    } else {
        Err(format!("round-trip rel err {worst:.1e}, COLA dev {cola:.1e}"))
    }
}

fn estimator_exactness() -> Outcome {
    let start = Instant::now();
    let cfg = cfg256();
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let h0 = random_rtf(cfg.num_bins(), 100 + seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels = FrameLabels::uniform(50, 0, 1).unwrap();
        let (outer, inear) = spectrogram_pair(&labels, std::slice::from_ref(&h0), &cfg, &mut rng);
        let mut acc = RtfAccumulator::new(cfg, 1, 0);
        acc.accumulate(&outer, &inear, None).unwrap();
        let h = acc.finalize_speech_independent(Regularization::Absolute(0.0)).unwrap();
        worst = worst.max(rel_err(&h, &h0));
    }
    let took = within(Duration::from_secs(1), start)?;
    if worst < 1e-10 {
        Ok(format!("max rel err {worst:.1e} over 10 pairs, {took:.2?}"))
    } else {
        Err(format!("max rel err {worst:.1e}"))
    }
}

fn least_squares_optimality() -> Outcome {
    let start = Instant::now();
    let cfg = cfg256();
    let frames = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h0 = random_rtf(cfg.num_bins(), 3);
    let labels = FrameLabels::uniform(frames, 0, 1).unwrap();
    let (outer, clean) = spectrogram_pair(&labels, std::slice::from_ref(&h0), &cfg, &mut rng);
    let noisy: Vec<Complex64> = clean
        .coefficients()
        .iter()
        .map(|c| c + Complex64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)))
        .collect();
    let inear = Spectrogram::from_coefficients(noisy, frames, cfg).unwrap();
    let mut acc = RtfAccumulator::new(cfg, 1, 0);
    acc.accumulate(&outer, &inear, None).unwrap();
    let h = acc.finalize_speech_independent(Regularization::Absolute(0.0)).unwrap();

    let residual = |k: usize, hk: Complex64| -> f64 {
        (0..frames).map(|l| (inear.get(k, l) - hk * outer.get(k, l)).norm_sqr()).sum()
    };
    let mut violations = 0;
    let mut smallest_gain = f64::INFINITY;
    for k in 0..cfg.num_bins() {
        let best = residual(k, h[k]);
        for _ in 0..64 {
            // perturbation sizes spread from 1e-8 to 1 relative to |H|
            let size = h[k].norm() * 10f64.powf(rng.gen_range(-8.0..0.0));
            let d = Complex64::from_polar(size, rng.gen_range(0.0..std::f64::consts::TAU));
            let r = residual(k, h[k] + d);
            smallest_gain = smallest_gain.min((r - best) / best);
            if r < best * (1.0 - 1e-12) {
                violations += 1;
            }
        }
    }
    let took = within(Duration::from_secs(5), start)?;
    if violations == 0 {
        Ok(format!(
            "0 of {} perturbations lower the residual (min rel increase {smallest_gain:.1e}), {took:.2?}",
            64 * cfg.num_bins()
        ))
    } else {
        Err(format!("{violations} perturbations lower the residual"))
    }
}

struct Utterance {
    labels: FrameLabels,
    outer: Spectrogram,
    inear: Spectrogram,
}

fn utterances(rtfs: &[Vec<Complex64>], count: usize, seed: u64) -> Vec<Utterance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let labels = random_frame_labels(195, rtfs.len(), 3, 10, &mut rng);
            let (outer, inear) = spectrogram_pair(&labels, rtfs, &cfg256(), &mut rng);
            Utterance { labels, outer, inear }
        })
        .collect()
}

fn identify(utts: &[Utterance], classes: usize) -> RtfModel {
    let mut acc = RtfAccumulator::new(cfg256(), classes, 11);
    for u in utts {
        acc.accumulate(&u.outer, &u.inear, Some(&u.labels)).unwrap();
    }
    acc.finalize_speech_dependent(&EstimatorOptions::default()).unwrap()
}

/// Mean LSD of (speech-independent, speech-dependent) simulation.
fn mean_lsd(utts: &[Utterance], model: &RtfModel) -> (f64, f64) {
    let mut si = 0.0;
    let mut sd = 0.0;
    for u in utts {
        let a = apply_speech_independent(&u.outer, &model.global_rtf).unwrap();
        let (b, _) = apply_speech_dependent(&u.outer, &u.labels, model).unwrap();
        si += lsd(&u.inear, &a, DEFAULT_FLOOR).unwrap().utterance_lsd_db;
        sd += lsd(&u.inear, &b, DEFAULT_FLOOR).unwrap().utterance_lsd_db;
    }
    (si / utts.len() as f64, sd / utts.len() as f64)
}

fn phoneme_dependent_recovery() -> Outcome {
    let start = Instant::now();
    let rtfs = vec![random_rtf(129, 41), random_rtf(129, 42)];
    let utts = utterances(&rtfs, 6, 4);
    let model = identify(&utts, 2);
    let err = (0..2)
        .map(|c| rel_err(model.phoneme_rtf(c).expect("both classes estimated"), &rtfs[c]))
        .fold(0.0, f64::max);
    let (si, sd) = mean_lsd(&utts, &model);
    let took = within(Duration::from_secs(10), start)?;
    let msg = format!("class RTF rel err {err:.1e}, LSD dependent {sd:.2e} dB, independent {si:.2} dB, {took:.2?}");
    if err < 1e-8 && sd < 0.1 && si >= sd + 1.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn mismatch_ordering() -> Outcome {
    let start = Instant::now();
    let talkers: Vec<Vec<Vec<Complex64>>> = (0..2)
        .map(|t| (0..2).map(|c| random_rtf(129, 500 + 10 * t + c)).collect())
        .collect();
    let corpora: Vec<Vec<Utterance>> = talkers
        .iter()
        .enumerate()
        .map(|(t, rtfs)| utterances(rtfs, 5, 60 + t as u64))
        .collect();
    let models: Vec<RtfModel> = corpora.iter().map(|u| identify(u, 2)).collect();
    let (mut same, mut cross) = ((0.0, 0.0), (0.0, 0.0));
    for t in 0..2 {
        let s = mean_lsd(&corpora[t], &models[t]);
        let c = mean_lsd(&corpora[t], &models[1 - t]);
        same = (same.0 + s.0 / 2.0, same.1 + s.1 / 2.0);
        cross = (cross.0 + c.0 / 2.0, cross.1 + c.1 / 2.0);
    }
    let took = within(Duration::from_secs(10), start)?;
    let msg = format!(
        "independent {:.2} -> {:.2} dB, dependent {:.2} -> {:.2} dB (same -> mismatch), {took:.2?}",
        same.0, cross.0, same.1, cross.1
    );
    if cross.0 > same.0 && cross.1 > same.1 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn map_reduce_equivalence() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = PipelineConfig {
        num_classes: 4,
        ..Default::default()
    };
    let spec = CorpusSpec {
        num_talkers: 2,
        utterances_per_talker: 10,
        ..Default::default()
    };
    let (manifest, _) = write_corpus(dir.path(), &config.stft().unwrap(), &spec).map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for jobs in [1, 8] {
        config.jobs = jobs;
        let out = dir.path().join(format!("jobs{jobs}"));
        let paths = cli::identify(&manifest, &out, &config).map_err(|e| e.to_string())?;
        runs.push(paths.iter().map(|p| load_model(p).unwrap()).collect::<Vec<_>>());
    }
    let mut worst = 0.0f64;
    let mut coefficients = 0;
    for (a, b) in runs[0].iter().zip(&runs[1]) {
        let mut pairs: Vec<(&[Complex64], &[Complex64])> = vec![(&a.global_rtf, &b.global_rtf)];
        for c in 0..a.num_classes() {
            match (a.phoneme_rtf(c), b.phoneme_rtf(c)) {
                (Some(x), Some(y)) => pairs.push((x, y)),
                (None, None) => {}
                _ => return Err(format!("class {c} estimated in only one run")),
            }
        }
        for (x, y) in pairs {
            for (p, q) in x.iter().zip(y) {
                worst = worst.max((p - q).norm() / p.norm().max(q.norm()).max(1e-300));
                coefficients += 1;
            }
        }
    }
    if worst < 1e-12 {
        Ok(format!("{coefficients} coefficients from 20 utterances, max rel diff {worst:.1e}"))
    } else {
        Err(format!("max rel diff {worst:.1e}"))
    }
}

fn metric_properties() -> Outcome {
    let cfg = cfg256();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // magnitudes well above the floor
    let mut random = || {
        let data = (0..20 * cfg.num_bins())
            .map(|_| Complex64::from_polar(rng.gen_range(1e2..1e3), rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        Spectrogram::from_coefficients(data, 20, cfg).unwrap()
    };
    let a = random();
    let b = random();
    let map = |s: &Spectrogram, f: &dyn Fn(Complex64) -> Complex64| {
        Spectrogram::from_coefficients(s.coefficients().iter().map(|&c| f(c)).collect(), 20, cfg).unwrap()
    };
    let d = |x: &Spectrogram, y: &Spectrogram| lsd(x, y, DEFAULT_FLOOR).unwrap().utterance_lsd_db;
    let symmetric = d(&a, &b) == d(&b, &a);
    let zero = d(&a, &a) == 0.0;
    let phase = (d(&a, &b) - d(&a, &map(&b, &|c| c * Complex64::from_polar(1.0, 0.7)))).abs();
    let twenty = (d(&a, &map(&a, &|c| c * 10.0)) - 20.0).abs();
    let msg = format!(
        "symmetric {symmetric}, zero on equality {zero}, phase dev {phase:.1e} dB, 20 dB case dev {twenty:.1e} dB"
    );
    if symmetric && zero && phase <= 1e-9 && twenty <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn throughput() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = PipelineConfig {
        num_classes: 8,
        jobs: 1,
        ..Default::default()
    };
    // 360 utterances of 5.02 s
    let spec = CorpusSpec {
        num_talkers: 4,
        utterances_per_talker: 90,
        num_classes: 8,
        utterance: UtteranceSpec::default(),
        ..Default::default()
    };
    let (manifest, _) = write_corpus(dir.path(), &config.stft().unwrap(), &spec).map_err(|e| e.to_string())?;
    let frames_per_utt = spec.utterance.num_frames;
    let seconds = (spec.num_talkers * spec.utterances_per_talker) as f64
        * config.stft().unwrap().output_len(frames_per_utt) as f64
        / 5000.0;
    let start = Instant::now();
    cli::identify(&manifest, &dir.path().join("models"), &config).map_err(|e| e.to_string())?;
    let took = within(Duration::from_secs(10), start)?;
    if seconds >= 1800.0 {
        Ok(format!("{:.1} min of audio identified in {took:.2?} on 1 thread", seconds / 60.0))
    } else {
        Err(format!("corpus is only {seconds:.0} s"))
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("STFT correctness", stft_correctness),
        ("estimator exactness", estimator_exactness),
        ("least-squares optimality", least_squares_optimality),
        ("phoneme-dependent recovery", phoneme_dependent_recovery),
        ("mismatch degradation ordering", mismatch_ordering),
        ("map-reduce equivalence", map_reduce_equivalence),
        ("metric properties", metric_properties),
        ("throughput", throughput),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
