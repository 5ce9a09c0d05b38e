//! Feature selection shared by `extract` and `run`.

use std::fmt;

use antispoof::features::{
    melspectrogram, AudioClip, CqtConfig, CqtKernelBank, MelConfig, Spectrogram,
};
use antispoof::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum FeatureKind {
    /// 100 mel bands, 1024-sample window, hop 512.
    #[serde(rename = "mel-1")]
    #[value(name = "mel-1")]
    Mel1,
    /// 120 mel bands, 2048-sample window, hop 1024.
    #[serde(rename = "mel-2")]
    #[value(name = "mel-2")]
    Mel2,
    /// 100-bin constant-Q transform from 5 Hz, 12 bins per octave.
    #[serde(rename = "cqt")]
    #[value(name = "cqt")]
    Cqt,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mel1 => "mel-1",
            Self::Mel2 => "mel-2",
            Self::Cqt => "cqt",
        })
    }
}

/// A feature kind plus an optional full replacement of its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSettings {
    pub kind: FeatureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mel: Option<MelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cqt: Option<CqtConfig>,
}

impl FeatureSettings {
    pub fn new(kind: FeatureKind) -> Self {
        Self {
            kind,
            mel: None,
            cqt: None,
        }
    }

    pub fn resolved(&self) -> ResolvedFeature {
        match self.kind {
            FeatureKind::Mel1 => ResolvedFeature::Mel(self.mel.unwrap_or(MelConfig::mel1())),
            FeatureKind::Mel2 => ResolvedFeature::Mel(self.mel.unwrap_or(MelConfig::mel2())),
            FeatureKind::Cqt => ResolvedFeature::Cqt(self.cqt.unwrap_or_default()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ResolvedFeature {
    Mel(MelConfig),
    Cqt(CqtConfig),
}

/// Computes features, reusing the CQT kernels across clips of one rate.
pub struct Extractor {
    feature: ResolvedFeature,
    bank: Option<(u32, CqtKernelBank)>,
}

impl Extractor {
    pub fn new(settings: &FeatureSettings) -> Self {
        Self {
            feature: settings.resolved(),
            bank: None,
        }
    }

    pub fn config(&self) -> &ResolvedFeature {
        &self.feature
    }

    pub fn extract(&mut self, clip: &AudioClip) -> Result<Spectrogram> {
        match self.feature {
            ResolvedFeature::Mel(cfg) => melspectrogram(clip, &cfg),
            ResolvedFeature::Cqt(cfg) => {
                let sr = clip.sample_rate();
                if self.bank.as_ref().is_none_or(|(r, _)| *r != sr) {
                    self.bank = Some((sr, CqtKernelBank::new(sr, cfg)?));
                }
                self.bank.as_ref().expect("just built").1.transform(clip)
            }
        }
    }
}
