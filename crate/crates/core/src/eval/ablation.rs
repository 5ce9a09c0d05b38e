//! Augmentation ablation grid beside the published adaptation-set EERs.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

/// One model/feature/augmentation combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AblationKey {
    pub model: &'static str,
    pub feature: &'static str,
    pub mixup: bool,
    pub lf: bool,
    pub hf: bool,
    pub rf: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PublishedResult {
    pub key: AblationKey,
    pub eer_percent: f64,
}

const fn row(
    model: &'static str,
    feature: &'static str,
    aug: [bool; 4],
    eer_percent: f64,
) -> PublishedResult {
    PublishedResult {
        key: AblationKey {
            model,
            feature,
            mixup: aug[0],
            lf: aug[1],
            hf: aug[2],
            rf: aug[3],
        },
        eer_percent,
    }
}

const X: bool = false;
const O: bool = true;

/// Adaptation-set EERs (%) per model and augmentation set
/// (mixup, low-, high-, random-frequency masking).
pub const PUBLISHED_ABLATION: [PublishedResult; 17] = [
    row("BC-ResMax", "CQT", [X, X, X, X], 22.53),
    row("BC-ResMax", "CQT", [O, X, X, X], 18.85),
    row("BC-ResMax", "CQT", [O, O, X, X], 15.51),
    row("BC-ResMax", "CQT", [O, X, O, X], 14.07),
    row("BC-ResMax", "CQT", [O, O, O, O], 11.89),
    row("DDWS", "melspec", [X, X, X, X], 23.29),
    row("DDWS", "melspec", [O, X, X, X], 19.62),
    row("DDWS", "melspec", [O, X, O, O], 11.99),
    row("DDWS", "melspec", [O, O, X, O], 14.42),
    row("DDWS", "melspec", [O, O, O, O], 12.62),
    row("ResMax", "CQT", [X, X, X, X], 21.40),
    row("ResMax", "CQT", [O, X, X, X], 16.91),
    row("ResMax", "CQT", [O, O, X, O], 15.73),
    row("ResMax", "CQT", [O, X, O, O], 15.49),
    row("ResMax", "CQT", [O, O, O, O], 14.02),
    row("OFD", "CQT", [X, X, X, X], 22.66),
    row("OFD", "CQT", [O, X, X, X], 18.29),
];

/// Final-evaluation EERs (%) of the five fused systems and of the ensemble.
pub const PUBLISHED_FINAL_EER: [(&str, &str, f64); 5] = [
    ("LCNN", "CQT", 26.05),
    ("ResMax", "CQT", 24.7),
    ("DDWS", "melspec", 26.40),
    ("BC-ResMax", "melspec", 27.34),
    ("OFD", "CQT", 26.02),
];
pub const PUBLISHED_ENSEMBLE_EER: f64 = 23.8;

/// A user-measured result for one combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRun {
    pub model: String,
    pub feature: String,
    #[serde(default)]
    pub mixup: bool,
    #[serde(default)]
    pub lf: bool,
    #[serde(default)]
    pub hf: bool,
    #[serde(default)]
    pub rf: bool,
    pub eer_percent: f64,
}

impl AblationRun {
    fn matches(&self, k: &AblationKey) -> bool {
        self.model.eq_ignore_ascii_case(k.model)
            && self.feature.eq_ignore_ascii_case(k.feature)
            && (self.mixup, self.lf, self.hf, self.rf) == (k.mixup, k.lf, k.hf, k.rf)
    }
}

fn mark(b: bool) -> &'static str {
    if b {
        "O"
    } else {
        "X"
    }
}

/// Renders the published grid. With runs, adds measured and difference
/// columns; runs without a published counterpart are appended at the end.
pub fn compare_ablation(runs: &[AblationRun]) -> String {
    let with_runs = !runs.is_empty();
    let mut header = vec!["Model", "Feature", "Mixup", "LF", "HF", "RF", "Published"];
    if with_runs {
        header.extend(["Measured", "Diff"]);
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut used = vec![false; runs.len()];
    for p in &PUBLISHED_ABLATION {
        let k = &p.key;
        let mut r = vec![
            k.model.to_string(),
            k.feature.to_string(),
            mark(k.mixup).into(),
            mark(k.lf).into(),
            mark(k.hf).into(),
            mark(k.rf).into(),
            format!("{:.2}%", p.eer_percent),
        ];
        if with_runs {
            match runs.iter().position(|run| run.matches(k)) {
                Some(i) => {
                    used[i] = true;
                    let m = runs[i].eer_percent;
                    r.push(format!("{m:.2}%"));
                    r.push(format!("{:+.2}", m - p.eer_percent));
                }
                None => r.extend(["-".to_string(), "-".to_string()]),
            }
        }
        rows.push(r);
    }
    for (run, _) in runs.iter().zip(&used).filter(|(_, &u)| !u) {
        rows.push(vec![
            run.model.clone(),
            run.feature.clone(),
            mark(run.mixup).into(),
            mark(run.lf).into(),
            mark(run.hf).into(),
            mark(run.rf).into(),
            "-".into(),
            format!("{:.2}%", run.eer_percent),
            "-".into(),
        ]);
    }

    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap())
        .collect();
    let mut out = String::new();
    let line = |cells: &[&str], out: &mut String| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        writeln!(out, "| {} |", padded.join(" | ")).unwrap();
    };
    line(&header, &mut out);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(&rule.iter().map(String::as_str).collect::<Vec<_>>(), &mut out);
    for r in &rows {
        line(&r.iter().map(String::as_str).collect::<Vec<_>>(), &mut out);
    }
    out
}
