//! Frame-wise phoneme class sequences.
//!
//! Labels come either from external alignment files (one
//! `start_sample,end_sample,class_id` segment per line) or from seeded
//! k-means over log-magnitude frame features ("pseudo-phonemes").

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stft::{Spectrogram, StftConfig};

/// Marker for a frame without a class.
pub const UNLABELED: Option<usize> = None;

const FEATURE_FLOOR: f64 = 1e-10;
const KMEANS_MAX_ITER: usize = 100;
const KMEANS_TOL: f64 = 1e-6;

/// Half-open sample range `[start_sample, end_sample)` carrying one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelSegment {
    pub start_sample: usize,
    pub end_sample: usize,
    pub class_id: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameLabels {
    labels: Vec<Option<usize>>,
    num_classes: usize,
}

impl FrameLabels {
    pub fn new(labels: Vec<Option<usize>>, num_classes: usize) -> Result<Self> {
        if let Some((l, c)) = labels
            .iter()
            .enumerate()
            .find_map(|(l, c)| c.filter(|&c| c >= num_classes).map(|c| (l, c)))
        {
            return Err(Error::Validation(format!(
                "frame {l} has class {c}, but only {num_classes} classes exist"
            )));
        }
        Ok(FrameLabels {
            labels,
            num_classes,
        })
    }

    /// Every frame carries `class_id`.
    pub fn uniform(num_frames: usize, class_id: usize, num_classes: usize) -> Result<Self> {
        Self::new(vec![Some(class_id); num_frames], num_classes)
    }

    pub fn unlabeled(num_frames: usize, num_classes: usize) -> Self {
        FrameLabels {
            labels: vec![UNLABELED; num_frames],
            num_classes,
        }
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn get(&self, l: usize) -> Option<usize> {
        self.labels[l]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_unlabeled(&self) -> usize {
        self.labels.iter().filter(|c| c.is_none()).count()
    }
}

/// Reads a label file. Segments are returned in file order.
pub fn load_segments(path: impl AsRef<Path>, num_classes: usize) -> Result<Vec<LabelSegment>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_segments(&text, path, num_classes)
}

/// Parses label-file text; `path` is only used in error messages.
pub fn parse_segments(text: &str, path: &Path, num_classes: usize) -> Result<Vec<LabelSegment>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut segments = Vec::new();
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_err(
                line_no,
                format!("expected 3 comma-separated fields, found {}", fields.len()),
            ));
        }
        let num = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|e| parse_err(line_no, format!("invalid {what} {s:?}: {e}")))
        };
        let start = num(fields[0], "start_sample")?;
        let end = num(fields[1], "end_sample")?;
        let class_id = num(fields[2], "class_id")?;
        if start >= end {
            return Err(parse_err(
                line_no,
                format!("start_sample {start} is not before end_sample {end}"),
            ));
        }
        if class_id >= num_classes {
            return Err(Error::ClassOutOfRange {
                path: path.to_path_buf(),
                line: line_no,
                class_id,
                num_classes,
            });
        }
        segments.push(LabelSegment {
            start_sample: start,
            end_sample: end,
            class_id,
        });
        lines.push(line_no);
    }

    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.sort_by_key(|&i| (segments[i].start_sample, lines[i]));
    // Index of the segment reaching furthest right among those seen so far.
    let mut reach: Option<usize> = None;
    for &i in &order {
        if let Some(r) = reach {
            if segments[i].start_sample < segments[r].end_sample {
                let (a, b) = (lines[r].min(lines[i]), lines[r].max(lines[i]));
                return Err(Error::OverlappingSegments {
                    path: path.to_path_buf(),
                    first: a,
                    second: b,
                });
            }
        }
        if reach.is_none_or(|r| segments[i].end_sample > segments[r].end_sample) {
            reach = Some(i);
        }
    }
    Ok(segments)
}

/// Serializes segments in the label-file format.
pub fn format_segments(segments: &[LabelSegment]) -> String {
    let mut out = String::from("# start_sample,end_sample,class_id\n");
    for s in segments {
        let _ = writeln!(out, "{},{},{}", s.start_sample, s.end_sample, s.class_id);
    }
    out
}

pub fn save_segments(path: impl AsRef<Path>, segments: &[LabelSegment]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_segments(segments)).map_err(|e| Error::io(path, e))
}

/// Majority vote of covered samples per frame.
///
/// Samples of `[l*hop, l*hop + K)` not covered by any segment count towards
/// UNLABELED. Among classes, ties go to the class whose covering segment
/// starts earliest; a class wins a tie against the uncovered count.
pub fn segments_to_frames(
    segments: &[LabelSegment],
    cfg: &StftConfig,
    num_frames: usize,
    num_classes: usize,
) -> FrameLabels {
    let mut sorted: Vec<LabelSegment> = segments
        .iter()
        .filter(|s| s.class_id < num_classes)
        .copied()
        .collect();
    sorted.sort_by_key(|s| (s.start_sample, s.end_sample));

    // (class, covered samples, earliest start)
    let mut votes: Vec<(usize, usize, usize)> = Vec::new();
    let labels = (0..num_frames)
        .map(|l| {
            let lo = l * cfg.hop();
            let hi = lo + cfg.frame_len();
            votes.clear();
            let first = sorted.partition_point(|s| s.end_sample <= lo);
            for s in sorted[first..].iter().take_while(|s| s.start_sample < hi) {
                let covered = s.end_sample.min(hi).saturating_sub(s.start_sample.max(lo));
                if covered == 0 {
                    continue;
                }
                match votes.iter_mut().find(|v| v.0 == s.class_id) {
                    Some(v) => {
                        v.1 += covered;
                        v.2 = v.2.min(s.start_sample);
                    }
                    None => votes.push((s.class_id, covered, s.start_sample)),
                }
            }
            let best = votes
                .iter()
                .copied()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)))?;
            let total: usize = votes.iter().map(|v| v.1).sum();
            let uncovered = cfg.frame_len() - total.min(cfg.frame_len());
            (best.1 >= uncovered).then_some(best.0)
        })
        .collect();
    FrameLabels {
        labels,
        num_classes,
    }
}

/// Converts frame labels back to sample segments.
///
/// Frame `l` owns `[l*hop, (l+1)*hop)`; the last frame owns through the end
/// of the clip. Adjacent samples of the same class are merged, unlabeled
/// frames produce gaps.
pub fn frames_to_segments(
    labels: &FrameLabels,
    cfg: &StftConfig,
    num_samples: usize,
) -> Vec<LabelSegment> {
    let n = labels.len();
    let mut out: Vec<LabelSegment> = Vec::new();
    for (l, class) in labels.labels().iter().enumerate() {
        let Some(class_id) = *class else { continue };
        let start = l * cfg.hop();
        let end = if l + 1 == n {
            num_samples.max(start + cfg.frame_len())
        } else {
            start + cfg.hop()
        };
        match out.last_mut() {
            Some(prev) if prev.class_id == class_id && prev.end_sample == start => {
                prev.end_sample = end;
            }
            _ => out.push(LabelSegment {
                start_sample: start,
                end_sample: end,
                class_id,
            }),
        }
    }
    out
}

/// Seeded k-means (k-means++ initialization) on per-frame log-magnitude
/// features `log10(|Y(k, l)| + 1e-10)`.
pub fn cluster_pseudo_phonemes(spec: &Spectrogram, num_classes: usize, seed: u64) -> Result<FrameLabels> {
    let mut out = cluster_pseudo_phonemes_joint(&[spec], num_classes, seed)?;
    Ok(out.pop().expect("one input spectrogram"))
}

/// Clusters the frames of several spectrograms jointly so class ids agree
/// across utterances, and returns one `FrameLabels` per input.
pub fn cluster_pseudo_phonemes_joint(
    specs: &[&Spectrogram],
    num_classes: usize,
    seed: u64,
) -> Result<Vec<FrameLabels>> {
    if num_classes == 0 {
        return Err(Error::InvalidConfig("number of classes must be at least 1".into()));
    }
    let dim = match specs.first() {
        Some(s) => s.num_bins(),
        None => return Ok(Vec::new()),
    };
    if specs.iter().any(|s| s.num_bins() != dim) {
        return Err(Error::Pairing("spectrograms have different bin counts".into()));
    }
    let total: usize = specs.iter().map(|s| s.num_frames()).sum();
    if total < num_classes {
        return Err(Error::InsufficientFrames {
            frames: total,
            clusters: num_classes,
        });
    }
    let features: Vec<f64> = specs
        .iter()
        .flat_map(|s| s.coefficients().iter())
        .map(|c| (c.norm() + FEATURE_FLOOR).log10())
        .collect();

    let assignment = kmeans(&features, dim, num_classes, seed);

    let mut out = Vec::with_capacity(specs.len());
    let mut offset = 0;
    for s in specs {
        let labels = assignment[offset..offset + s.num_frames()]
            .iter()
            .map(|&c| Some(c))
            .collect();
        offset += s.num_frames();
        out.push(FrameLabels {
            labels,
            num_classes,
        });
    }
    Ok(out)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    centroids
        .chunks_exact(dim)
        .enumerate()
        .map(|(c, centroid)| (c, sq_dist(point, centroid)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn kmeans_plus_plus(points: &[f64], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = points.len() / dim;
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.gen_range(0..n);
    centroids.extend_from_slice(&points[first * dim..(first + 1) * dim]);
    let mut d2: Vec<f64> = points
        .chunks_exact(dim)
        .map(|p| sq_dist(p, &centroids[..dim]))
        .collect();
    for _ in 1..k {
        let sum: f64 = d2.iter().sum();
        let pick = if sum > 0.0 {
            let target = rng.gen::<f64>() * sum;
            let mut acc = 0.0;
            d2.iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap_or(n - 1))
        } else {
            rng.gen_range(0..n)
        };
        let new = &points[pick * dim..(pick + 1) * dim];
        for (d, p) in d2.iter_mut().zip(points.chunks_exact(dim)) {
            *d = d.min(sq_dist(p, new));
        }
        centroids.extend_from_slice(new);
    }
    centroids
}

fn kmeans(points: &[f64], dim: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_plus_plus(points, dim, k, &mut rng);
    let assign = |centroids: &[f64]| -> Vec<usize> {
        points
            .par_chunks_exact(dim)
            .map(|p| nearest(p, centroids, dim).0)
            .collect()
    };
    for _ in 0..KMEANS_MAX_ITER {
        let assignment = assign(&centroids);
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.chunks_exact(dim).zip(&assignment) {
            counts[c] += 1;
            for (s, x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut movement: f64 = 0.0;
        for c in 0..k {
            // An empty cluster keeps its previous centroid.
            if counts[c] == 0 {
                continue;
            }
            let inv = 1.0 / counts[c] as f64;
            let old = &mut centroids[c * dim..(c + 1) * dim];
            let mut shift = 0.0;
            for (o, s) in old.iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                let new = s * inv;
                shift += (new - *o) * (new - *o);
                *o = new;
            }
            movement = movement.max(shift.sqrt());
        }
        if movement < KMEANS_TOL {
            break;
        }
    }
    assign(&centroids)
}
