//! WAV and corpus-manifest I/O.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stft::AudioClip;

/// Sample encodings accepted by [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavEncoding {
    Pcm16,
    Pcm24,
    Pcm32,
    #[default]
    Float32,
}

impl WavEncoding {
    fn spec(self, sample_rate: u32) -> hound::WavSpec {
        let (bits_per_sample, sample_format) = match self {
            WavEncoding::Pcm16 => (16, hound::SampleFormat::Int),
            WavEncoding::Pcm24 => (24, hound::SampleFormat::Int),
            WavEncoding::Pcm32 => (32, hound::SampleFormat::Int),
            WavEncoding::Float32 => (32, hound::SampleFormat::Float),
        };
        hound::WavSpec {
            channels: 1,
            sample_rate,
            bits_per_sample,
            sample_format,
        }
    }
}

impl std::str::FromStr for WavEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pcm16" => Ok(WavEncoding::Pcm16),
            "pcm24" => Ok(WavEncoding::Pcm24),
            "pcm32" => Ok(WavEncoding::Pcm32),
            "float32" => Ok(WavEncoding::Float32),
            other => Err(Error::InvalidConfig(format!(
                "unknown encoding {other:?} (expected pcm16, pcm24, pcm32 or float32)"
            ))),
        }
    }
}

// The file is already open when decoding fails, so read errors mean a
// malformed or truncated payload.
fn wav_error(path: &Path, e: hound::Error) -> Error {
    Error::UnsupportedWav {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn wav_write_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(source) => Error::io(path, source),
        other => wav_error(path, other),
    }
}

fn open_wav(path: &Path) -> Result<hound::WavReader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    hound::WavReader::new(BufReader::new(file)).map_err(|e| wav_error(path, e))
}

/// Header sample rate and channel count without reading the payload.
pub fn wav_header(path: impl AsRef<Path>) -> Result<(u32, u16)> {
    let path = path.as_ref();
    let spec = open_wav(path)?.spec();
    Ok((spec.sample_rate, spec.channels))
}

/// Reads a mono 16/24/32-bit integer or 32-bit float WAV file. Integer
/// samples are scaled by `1 / 2^(bits - 1)`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let mut reader = open_wav(path)?;
    let spec = reader.spec();
    let unsupported = |message: String| Error::UnsupportedWav {
        path: path.to_path_buf(),
        message,
    };
    if spec.channels != 1 {
        return Err(unsupported(format!("{} channels, expected mono", spec.channels)));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| wav_error(path, e))?
        }
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_error(path, e))?,
        (format, bits) => {
            return Err(unsupported(format!("{bits}-bit {format:?} encoding")));
        }
    };
    if samples.is_empty() {
        return Err(unsupported("no samples".into()));
    }
    AudioClip::new(samples, spec.sample_rate).map_err(|e| unsupported(e.to_string()))
}

fn quantize(x: f64, bits: u32) -> i32 {
    let full = (1i64 << (bits - 1)) as f64;
    (x * full).round().clamp(-full, full - 1.0) as i32
}

/// Writes a mono WAV file. Integer encodings round half away from zero and
/// clamp to the representable range.
pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>, encoding: WavEncoding) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = hound::WavWriter::new(BufWriter::new(file), encoding.spec(clip.sample_rate_hz()))
        .map_err(|e| wav_write_error(path, e))?;
    let result = clip.samples().iter().try_for_each(|&x| match encoding {
        WavEncoding::Pcm16 => writer.write_sample(quantize(x, 16) as i16),
        WavEncoding::Pcm24 => writer.write_sample(quantize(x, 24)),
        WavEncoding::Pcm32 => writer.write_sample(quantize(x, 32)),
        WavEncoding::Float32 => writer.write_sample(x as f32),
    });
    result.map_err(|e| wav_write_error(path, e))?;
    writer.finalize().map_err(|e| wav_write_error(path, e))
}

/// One manifest row with paths resolved against the manifest directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub utterance_id: String,
    pub talker_id: String,
    pub outer_path: PathBuf,
    pub inear_path: Option<PathBuf>,
    pub labels_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    pub sample_rate_hz: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    utterance_id: String,
    talker_id: String,
    outer_path: String,
    #[serde(default)]
    inear_path: Option<String>,
    #[serde(default)]
    labels_path: Option<String>,
}

impl Manifest {
    /// Talker ids in order of first appearance.
    pub fn talkers(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.talker_id.as_str()) {
                out.push(&e.talker_id);
            }
        }
        out
    }

    pub fn entries_for<'a>(&'a self, talker_id: &'a str) -> impl Iterator<Item = &'a ManifestEntry> + 'a {
        self.entries.iter().filter(move |e| e.talker_id == talker_id)
    }

    pub fn entry(&self, utterance_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.utterance_id == utterance_id)
    }

    /// Checks id uniqueness, file existence and header sample rates.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for e in &self.entries {
            if e.utterance_id.is_empty() || e.talker_id.is_empty() {
                return Err(Error::Manifest(format!(
                    "entry {:?} has an empty utterance or talker id",
                    e.utterance_id
                )));
            }
            if !seen.insert(e.utterance_id.as_str()) {
                return Err(Error::Manifest(format!("duplicate utterance_id {:?}", e.utterance_id)));
            }
            for wav in std::iter::once(&e.outer_path).chain(e.inear_path.as_ref()) {
                let (rate, _) = wav_header(wav)?;
                if rate != self.sample_rate_hz {
                    return Err(Error::Manifest(format!(
                        "utterance {:?}: {} is {rate} Hz, manifest expects {} Hz",
                        e.utterance_id,
                        wav.display(),
                        self.sample_rate_hz
                    )));
                }
            }
            if let Some(labels) = &e.labels_path {
                if !labels.is_file() {
                    return Err(Error::io(
                        labels,
                        std::io::Error::new(std::io::ErrorKind::NotFound, "label file not found"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Writes the manifest CSV; paths are written relative to the manifest
    /// directory when possible.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new(""));
        let rel = |p: &Path| {
            p.strip_prefix(base)
                .unwrap_or(p)
                .to_string_lossy()
                .into_owned()
        };
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        for e in &self.entries {
            w.serialize(ManifestRow {
                utterance_id: e.utterance_id.clone(),
                talker_id: e.talker_id.clone(),
                outer_path: rel(&e.outer_path),
                inear_path: e.inear_path.as_deref().map(rel),
                labels_path: e.labels_path.as_deref().map(rel),
            })
            .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Parses and validates a manifest CSV with header
/// `utterance_id,talker_id,outer_path,inear_path,labels_path`.
pub fn load_manifest(path: impl AsRef<Path>, sample_rate_hz: u32) -> Result<Manifest> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let resolve = |s: Option<String>| s.filter(|s| !s.is_empty()).map(|s| base.join(s));
    let mut entries = Vec::new();
    for row in reader.deserialize::<ManifestRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        entries.push(ManifestEntry {
            outer_path: base.join(&row.outer_path),
            inear_path: resolve(row.inear_path),
            labels_path: resolve(row.labels_path),
            utterance_id: row.utterance_id,
            talker_id: row.talker_id,
        });
    }
    let manifest = Manifest {
        entries,
        sample_rate_hz,
    };
    manifest.validate()?;
    Ok(manifest)
}
