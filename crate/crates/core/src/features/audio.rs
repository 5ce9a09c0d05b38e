use std::io::{self, Read, Seek};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// Sample rate every extractor assumes unless told otherwise.
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

const PCM16_SCALE: f32 = 32768.0;

/// Decoded mono PCM audio.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::config("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Format(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Fails unless the clip is at `expected` Hz. Nothing is ever resampled.
    pub fn require_sample_rate(&self, expected: u32) -> Result<()> {
        if self.sample_rate != expected {
            return Err(Error::config(format!(
                "clip is {} Hz but {} Hz is required (resampling is not supported)",
                self.sample_rate, expected
            )));
        }
        Ok(())
    }
}

fn map_hound(err: hound::Error) -> Error {
    match err {
        // hound reports short reads as `Other`
        hound::Error::IoError(e)
            if matches!(
                e.kind(),
                io::ErrorKind::UnexpectedEof | io::ErrorKind::Other | io::ErrorKind::InvalidData
            ) =>
        {
            Error::Format(format!("truncated WAVE data ({e})"))
        }
        hound::Error::IoError(e) => Error::Io(e),
        hound::Error::FormatError(msg) => Error::Format(msg.into()),
        hound::Error::Unsupported => Error::Unsupported("WAVE encoding not supported".into()),
        hound::Error::InvalidSampleFormat | hound::Error::TooWide => {
            Error::Unsupported("only 16-bit integer PCM is supported".into())
        }
        hound::Error::UnfinishedSample => Error::Format("partial sample frame".into()),
    }
}

/// Decodes 16-bit PCM WAVE data, averaging stereo down to mono.
pub fn read_wav<R: Read>(reader: R) -> Result<AudioClip> {
    let mut wav = WavReader::new(reader).map_err(map_hound)?;
    let spec = wav.spec();
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::Unsupported(format!(
            "{:?} with {} bits per sample; expected 16-bit PCM",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    let channels = spec.channels as usize;
    if channels != 1 && channels != 2 {
        return Err(Error::Unsupported(format!("{channels} channels")));
    }

    let raw = wav
        .samples::<i16>()
        .map(|s| s.map(|v| v as f32 / PCM16_SCALE))
        .collect::<std::result::Result<Vec<f32>, _>>()
        .map_err(map_hound)?;

    let samples = if channels == 1 {
        raw
    } else {
        if raw.len() % 2 != 0 {
            return Err(Error::Format("odd sample count in stereo stream".into()));
        }
        raw.chunks_exact(2).map(|lr| 0.5 * (lr[0] + lr[1])).collect()
    };
    AudioClip::new(samples, spec.sample_rate)
}

pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let file = std::fs::File::open(path.as_ref())?;
    read_wav(io::BufReader::new(file))
}

/// Encodes a clip as mono 16-bit PCM. Samples are clamped to the PCM16 range.
pub fn write_wav<W: io::Write + Seek>(clip: &AudioClip, writer: W) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut wav = WavWriter::new(writer, spec).map_err(map_hound)?;
    for &s in &clip.samples {
        let v = (s * PCM16_SCALE).round().clamp(-32768.0, 32767.0) as i16;
        wav.write_sample(v).map_err(map_hound)?;
    }
    wav.finalize().map_err(map_hound)
}

pub fn save_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_wav(clip, io::BufWriter::new(file))
}
