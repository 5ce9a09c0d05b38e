//! Synthetic two-class corpus so the pipeline runs without external data.
//!
//! Every clip is a voiced harmonic tone with vibrato, a syllable-rate
//! envelope and background noise. Fake clips additionally carry a comb of
//! weak high-frequency partials (4 to 7 kHz), standing in for a vocoder
//! artifact.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::Cursor;
use std::path::Path;

use antispoof::eval::Class;
use antispoof::features::{write_wav, AudioClip, DEFAULT_SAMPLE_RATE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::failure::{CliResult, Failure};
use crate::fsutil::{atomic_write, ensure_dir, file_seed, write_labels};

pub const LABELS_FILE: &str = "labels.tsv";

#[derive(Debug, Clone, Copy)]
pub struct CorpusSpec {
    pub clips: usize,
    pub seconds: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            clips: 20,
            seconds: 4.0,
            seed: 0,
        }
    }
}

pub fn clip_id(i: usize) -> String {
    format!("utt_{i:03}")
}

/// Even-numbered clips are bonafide, odd-numbered ones fake.
pub fn clip_class(i: usize) -> Class {
    if i % 2 == 0 {
        Class::Bonafide
    } else {
        Class::Fake
    }
}

pub fn synth_clip(class: Class, seconds: f64, rng: &mut impl Rng) -> AudioClip {
    let sr = DEFAULT_SAMPLE_RATE as f64;
    let n = (seconds * sr).round() as usize;
    let f0 = rng.random_range(110.0..260.0);
    let vib_rate = rng.random_range(4.0..6.0);
    let vib_depth = rng.random_range(0.01..0.03);
    let syllable_rate = rng.random_range(2.5..4.5);
    let phase0 = rng.random_range(0.0..TAU);
    let comb: Vec<(f64, f64)> = (0..7)
        .map(|k| (4000.0 + 500.0 * k as f64, rng.random_range(0.0..TAU)))
        .collect();

    let mut phase = phase0;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / sr;
        let f = f0 * (1.0 + vib_depth * (TAU * vib_rate * t).sin());
        phase += TAU * f / sr;
        let env = 0.55 + 0.45 * (TAU * syllable_rate * t).sin();
        let voiced: f64 = (1..=6).map(|h| (h as f64 * phase).sin() / h as f64).sum();
        let mut v = 0.25 * env * voiced + 0.01 * rng.random_range(-1.0..1.0);
        if class == Class::Fake {
            v += comb.iter().map(|&(fc, p)| 0.02 * (TAU * fc * t + p).sin()).sum::<f64>();
        }
        samples.push(v as f32);
    }
    AudioClip::new(samples, DEFAULT_SAMPLE_RATE).expect("finite samples")
}

/// Writes `utt_NNN.wav` clips and `labels.tsv` into `out`.
pub fn generate(out: &Path, spec: &CorpusSpec) -> CliResult<BTreeMap<String, Class>> {
    if spec.clips == 0 || !(spec.seconds > 0.1) {
        return Err(Failure::input("corpus needs at least one clip of more than 0.1 s"));
    }
    ensure_dir(out)?;
    let mut labels = BTreeMap::new();
    for i in 0..spec.clips {
        let id = clip_id(i);
        let class = clip_class(i);
        let mut rng = ChaCha8Rng::seed_from_u64(file_seed(spec.seed, &id));
        let clip = synth_clip(class, spec.seconds, &mut rng);
        let mut buf = Cursor::new(Vec::new());
        write_wav(&clip, &mut buf)?;
        atomic_write(&out.join(format!("{id}.wav")), buf.get_ref())?;
        labels.insert(id, class);
    }
    write_labels(&out.join(LABELS_FILE), &labels)?;
    Ok(labels)
}
