//! Cluster spectral frames into pseudo-phonemes when no recognizer output is
//! available, and check how well the clusters line up with the true classes.
//!
//!     cargo run --example pseudo_phoneme_labels

use ownvoice::labels::{cluster_pseudo_phonemes_joint, format_segments, frames_to_segments};
use ownvoice::stft::{StftConfig, StftProcessor};
use ownvoice::synthetic::{render_utterance, ClassEnvelopes, SyntheticTalker, UtteranceSpec};

fn main() -> ownvoice::Result<()> {
    let classes = 4;
    let cfg = StftConfig::new(256, 5000)?;
    let stft = StftProcessor::new(cfg);
    let env = ClassEnvelopes::new(classes, cfg.num_bins(), 0);
    let talker = SyntheticTalker::new("t", classes, cfg.num_bins(), 1);
    let spec = UtteranceSpec { lead_frames: 0, ..Default::default() };
    let utts = (0..3)
        .map(|s| render_utterance(&talker, &env, &stft, &spec, s))
        .collect::<ownvoice::Result<Vec<_>>>()?;
    let specs = utts.iter().map(|u| stft.analyze(&u.outer)).collect::<ownvoice::Result<Vec<_>>>()?;

    let refs: Vec<_> = specs.iter().collect();
    let clusters = cluster_pseudo_phonemes_joint(&refs, classes, 42)?;

    // contingency table: true class x cluster
    let mut table = vec![vec![0usize; classes]; classes];
    for (u, c) in utts.iter().zip(&clusters) {
        for (t, p) in u.labels.labels().iter().zip(c.labels()) {
            table[t.unwrap()][p.unwrap()] += 1;
        }
    }
    println!("rows: true class, columns: cluster");
    for (c, row) in table.iter().enumerate() {
        println!("  {c}: {row:?}");
    }
    let segs = frames_to_segments(&clusters[0], &cfg, utts[0].outer.len());
    println!("first utterance, first segments:");
    for line in format_segments(&segs).lines().take(5) {
        println!("  {line}");
    }
    Ok(())
}
