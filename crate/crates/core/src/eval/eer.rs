//! Equal error rate with linear interpolation between thresholds.

use serde::Serialize;

use super::ScoreSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eer {
    /// In `[0, 1]`.
    pub eer: f64,
    pub threshold: f64,
}

impl Eer {
    /// `"12.34%"`: percentage with four significant digits.
    pub fn percent_string(&self) -> String {
        format_percent(self.eer)
    }
}

pub fn format_percent(rate: f64) -> String {
    let p = 100.0 * rate;
    if p == 0.0 {
        return "0.000%".to_string();
    }
    let digits = p.abs().log10().floor() as i32;
    let decimals = (3 - digits).max(0) as usize;
    format!("{p:.decimals$}%")
}

pub fn compute_eer(scores: &ScoreSet) -> Result<Eer> {
    let (bona, fake) = scores.by_class()?;
    eer_from_classes(&bona, &fake)
}

/// Sweeps every distinct score `t` (deciding bonafide when `score >= t`)
/// plus `+inf`. `FAR(t)` is the fraction of fakes at or above `t`, `FRR(t)`
/// the fraction of bonafide below it. At the first threshold where
/// `FRR >= FAR`, the crossing is interpolated linearly from the previous
/// threshold, which favours the lower threshold on ties.
pub fn eer_from_classes(bonafide: &[f64], fake: &[f64]) -> Result<Eer> {
    if bonafide.is_empty() || fake.is_empty() {
        return Err(Error::MetricUndefined(format!(
            "EER needs both classes; got {} bonafide and {} fake",
            bonafide.len(),
            fake.len()
        )));
    }
    if bonafide.iter().chain(fake).any(|s| !s.is_finite()) {
        return Err(Error::MetricUndefined("scores must be finite".into()));
    }
    let mut bona = bonafide.to_vec();
    let mut fk = fake.to_vec();
    bona.sort_by(f64::total_cmp);
    fk.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = bona.iter().chain(&fk).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let (nb, nf) = (bona.len() as f64, fk.len() as f64);
    // Pointers into the sorted lists: counts strictly below t.
    let (mut ib, mut i_f) = (0usize, 0usize);
    let mut rates = |t: f64| {
        while ib < bona.len() && bona[ib] < t {
            ib += 1;
        }
        while i_f < fk.len() && fk[i_f] < t {
            i_f += 1;
        }
        ((fk.len() - i_f) as f64 / nf, ib as f64 / nb)
    };

    let mut prev_t = thresholds[0];
    let (mut prev_far, mut prev_frr) = rates(prev_t);
    for t in thresholds[1..].iter().copied().chain([f64::INFINITY]) {
        let (far, frr) = rates(t);
        if frr >= far {
            return Ok(interpolate(prev_t, prev_far, prev_frr, t, far, frr));
        }
        (prev_t, prev_far, prev_frr) = (t, far, frr);
    }
    unreachable!("FRR reaches 1 and FAR 0 at +inf")
}

pub(crate) fn interpolate(t0: f64, far0: f64, frr0: f64, t1: f64, far1: f64, frr1: f64) -> Eer {
    let d0 = far0 - frr0;
    let d1 = far1 - frr1;
    let alpha = d0 / (d0 - d1);
    let eer = far0 + alpha * (far1 - far0);
    let threshold = if t1.is_finite() {
        t0 + alpha * (t1 - t0)
    } else {
        t0
    };
    Eer { eer, threshold }
}
