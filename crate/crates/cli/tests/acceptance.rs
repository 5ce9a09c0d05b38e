//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the report is always printed; exits non-zero on any failure.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use antispoof::augment::{apply_ffm, mixup, sample_lambda, FfmConfig, Label, MixupParams};
use antispoof::eval::{eer_from_classes, fuse_scores, Class, EnsembleWeights, ScoreEntry, ScoreSet};
use antispoof::features::{cqt, hz_to_mel, melspectrogram, AudioClip, CqtConfig, MelConfig, Spectrogram};
use antispoof::models::{
    build_model, disjoint_rows, forward, init_params, init_weights, ofd_split, overlapped_rows,
    LcnnPlan, ModelKind, ModelSpec, OfdBlock, OfdBlockSpec, Pass, StageSpec,
};
use antispoof::nn::{conv2d, depthwise_conv, pointwise_conv, ConvParams, Tensor4, DEFAULT_EPS};
use common::{ok, pipeline_fixture, s, snapshot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn random_tensor(shape: [usize; 4], rng: &mut ChaCha8Rng) -> Tensor4 {
    Tensor4::from_fn(shape, |_| rng.random_range(-1.0f32..1.0))
}

fn tone(freq: f64, secs: f64) -> AudioClip {
    let n = (secs * 16_000.0) as usize;
    let samples = (0..n)
        .map(|i| (0.5 * (std::f64::consts::TAU * freq * i as f64 / 16_000.0).sin()) as f32)
        .collect();
    AudioClip::new(samples, 16_000).unwrap()
}

/// Quadruple-loop reference with explicit bounds checks.
fn conv_oracle(x: &Tensor4, w: &[f32], ws: [usize; 4], bias: &[f32], p: &ConvParams) -> Vec<f64> {
    let [n_b, _, fi, ti] = x.shape();
    let [c_out, cg, kf, kt] = ws;
    let g = p.groups;
    let (fo, to) = p.output_dims(fi, ti).unwrap();
    let mut out = vec![0.0; n_b * c_out * fo * to];
    for n in 0..n_b {
        for oc in 0..c_out {
            let group = oc / (c_out / g);
            for of in 0..fo {
                for ot in 0..to {
                    let mut acc = bias[oc] as f64;
                    for icg in 0..cg {
                        let ic = group * cg + icg;
                        for i in 0..kf {
                            for j in 0..kt {
                                let f = (of * p.stride.0 + i * p.dilation.0) as isize - p.padding.0 as isize;
                                let t = (ot * p.stride.1 + j * p.dilation.1) as isize - p.padding.1 as isize;
                                if f < 0 || t < 0 || f >= fi as isize || t >= ti as isize {
                                    continue;
                                }
                                let wv = w[((oc * cg + icg) * kf + i) * kt + j] as f64;
                                acc += wv * x.at(n, ic, f as usize, t as usize) as f64;
                            }
                        }
                    }
                    out[((n * c_out + oc) * fo + of) * to + ot] = acc;
                }
            }
        }
    }
    out
}

fn criterion_conv_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases = 0;
    let mut worst = 0f64;
    let mut variants = [0usize; 4];
    while cases < 300 {
        let variant = cases % 4;
        let n = rng.random_range(1..=4);
        let c_in = rng.random_range(1..=4);
        let (c_out, groups, kf, kt) = match variant {
            0 => (rng.random_range(1..=4), 1, rng.random_range(1..=4), rng.random_range(1..=4)),
            1 => {
                let g = [1, 2, 4].into_iter().filter(|g| c_in % g == 0).last().unwrap();
                (g * rng.random_range(1..=4 / g), g, rng.random_range(1..=3), rng.random_range(1..=3))
            }
            2 => (c_in * rng.random_range(1..=4 / c_in), c_in, rng.random_range(1..=4), rng.random_range(1..=4)),
            _ => (rng.random_range(1..=4), 1, 1, 1),
        };
        let shape = [n, c_in, rng.random_range(1..=9), rng.random_range(1..=9)];
        let ws = [c_out, c_in / groups, kf, kt];
        let w: Vec<f32> = (0..ws.iter().product()).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let bias: Vec<f32> = (0..c_out).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let zero_bias = vec![0.0f32; c_out];
        let with_bias = rng.random_bool(0.5);
        let mut p = ConvParams::new(&w, ws)
            .stride(rng.random_range(1..=3), rng.random_range(1..=3))
            .dilation(rng.random_range(1..=3), rng.random_range(1..=3))
            .padding(rng.random_range(0..=2), rng.random_range(0..=2))
            .groups(groups);
        if with_bias {
            p = p.bias(&bias);
        }
        if p.output_dims(shape[2], shape[3]).is_err() {
            continue;
        }
        let x = random_tensor(shape, &mut rng);
        let got = match variant {
            2 => depthwise_conv(&x, &p),
            3 => pointwise_conv(&x, &p),
            _ => conv2d(&x, &p),
        }
        .map_err(|e| format!("{shape:?} {ws:?}: {e}"))?;
        let want = conv_oracle(&x, &w, ws, if with_bias { &bias } else { &zero_bias }, &p);
        ensure!(got.data().len() == want.len(), "{shape:?} {ws:?}: output length");
        for (&a, &b) in got.data().iter().zip(&want) {
            worst = worst.max((a as f64 - b).abs());
        }
        variants[variant] += 1;
        cases += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(worst <= 1e-5, "max abs error {worst:e}");
    ensure!(secs < 30.0, "took {secs:.1} s");
    Ok(format!(
        "{cases} shapes (standard/grouped/depthwise/pointwise = {variants:?}), max err {worst:.2e}, {secs:.2} s"
    ))
}

/// Identity stream-1: centre-tap unit kernels, gamma = sqrt(1 + eps), and a
/// +1 / -1 beta shift around the inner ReLU.
fn identity_weights(block: &OfdBlock, c: usize, k1: usize) -> antispoof::models::WeightStore {
    let mut decls = Vec::new();
    block.decls(&mut decls);
    let mut w = init_params(&decls, 5).unwrap();
    let gamma = (1.0 + DEFAULT_EPS as f64).sqrt() as f32;
    for d in &decls {
        let name = d.name.as_str();
        let rest = name.strip_prefix("o.").unwrap();
        if !(rest.starts_with('x') || rest.starts_with('y')) {
            continue;
        }
        let len: usize = d.shape.iter().product();
        let data = if name.ends_with("weight") {
            let mut v = vec![0.0; len];
            for o in 0..c {
                v[(o * c + o) * k1 + k1 / 2] = 1.0;
            }
            v
        } else if name.ends_with("gamma") {
            vec![gamma; len]
        } else if name.ends_with("bn1.beta") {
            vec![1.0; len]
        } else if name.ends_with("bn2.beta") {
            vec![-1.0; len]
        } else {
            continue;
        };
        w.set(name, data).unwrap();
    }
    w
}

fn criterion_ofd_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0f32;
    let mut runs = 0;
    for h in [100, 120] {
        for n in [2, 4, 5] {
            for k1 in [1, 3] {
                let spec = OfdBlockSpec::new(n, k1, 3, 4);
                let block = OfdBlock::new("o", 4, &spec).map_err(|e| e.to_string())?;
                let x = random_tensor([2, 4, h, 11], &mut rng);
                let w = identity_weights(&block, 4, k1);
                let mut r = ChaCha8Rng::seed_from_u64(0);
                let y = block
                    .stream1(&x, &w, &Pass::new(false, &mut r))
                    .map_err(|e| e.to_string())?;
                ensure!(y.shape() == x.shape(), "H={h} n={n}: shape {:?}", y.shape());
                let err = y.max_abs_diff(&x);
                ensure!(err <= 1e-6, "H={h} n={n} k1={k1}: max err {err:e}");
                worst = worst.max(err);
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} configurations, max err {worst:.2e}"))
}

fn criterion_ofd_split() -> Outcome {
    let x = Tensor4::from_fn([1, 1, 100, 2], |[_, _, f, t]| (f * 2 + t) as f32);
    let split = ofd_split(&x, 5).map_err(|e| e.to_string())?;
    ensure!(split.s == 10, "s = {}", split.s);
    ensure!(split.padded_height == 100, "padded to {}", split.padded_height);
    // one-based rows 1..=20 and 11..=30
    ensure!(disjoint_rows(1, 10) == (0, 20), "X1 rows {:?}", disjoint_rows(1, 10));
    ensure!(overlapped_rows(1, 10) == (10, 30), "Y1 rows {:?}", overlapped_rows(1, 10));
    ensure!(split.disjoint.len() == 5 && split.overlapped.len() == 4, "part counts");
    for k in 1..=5 {
        let want = x.slice_freq(20 * (k - 1), 20 * k).unwrap();
        ensure!(split.disjoint[k - 1] == want, "X{k} rows differ");
    }
    for k in 1..=4 {
        let want = x.slice_freq(20 * k - 10, 20 * k + 10).unwrap();
        ensure!(split.overlapped[k - 1] == want, "Y{k} rows differ");
    }
    Ok("s = 10, X1 = rows 1-20, Y1 = rows 11-30, all 9 parts exact".into())
}

fn criterion_ffm() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (nf, nt) = (100, 8);
    let data: Vec<f32> = (0..nf * nt).map(|_| rng.random_range(0.5f32..2.0)).collect();
    let spec = Spectrogram::new(data, nf, nt).unwrap();
    let cfg = FfmConfig {
        p_low: 0.3,
        p_high: 0.3,
        p_rand: 0.3,
        ..FfmConfig::default()
    };
    let trials = 10_000;
    let mut counts = [0usize; 3];
    for trial in 0..trials {
        let (out, report) = apply_ffm(&spec, &cfg, &mut rng).map_err(|e| e.to_string())?;
        counts[0] += report.applied_low.is_some() as usize;
        counts[1] += report.applied_high.is_some() as usize;
        counts[2] += !report.applied_rand.is_empty() as usize;
        let masked = report.masked_rows(nf);
        for f in 0..nf {
            for (&a, &b) in out.row(f).iter().zip(spec.row(f)) {
                if masked[f] {
                    ensure!(a.to_bits() == 0, "trial {trial}: row {f} masked to {a}");
                } else {
                    ensure!(a.to_bits() == b.to_bits(), "trial {trial}: row {f} changed");
                }
            }
        }
    }
    let rates = counts.map(|c| c as f64 / trials as f64);
    for (name, r) in ["low", "high", "rand"].iter().zip(rates) {
        ensure!((0.28..=0.32).contains(&r), "{name} gate rate {r}");
    }
    Ok(format!(
        "rates low {:.4} high {:.4} rand {:.4}; masked rows +0.0, others bit-identical",
        rates[0], rates[1], rates[2]
    ))
}

fn criterion_mixup() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = Spectrogram::new((0..60).map(|_| rng.random_range(-5.0f32..5.0)).collect(), 6, 10).unwrap();
    let b = Spectrogram::new((0..60).map(|_| rng.random_range(-5.0f32..5.0)).collect(), 6, 10).unwrap();
    let (one, y1) = mixup(&a, &b, Label::BONAFIDE, Label::FAKE, 1.0).map_err(|e| e.to_string())?;
    let (zero, y0) = mixup(&a, &b, Label::BONAFIDE, Label::FAKE, 0.0).map_err(|e| e.to_string())?;
    let bits = |s: &Spectrogram| s.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    ensure!(bits(&one) == bits(&a), "lambda = 1 does not return x_i");
    ensure!(bits(&zero) == bits(&b), "lambda = 0 does not return x_j");
    ensure!(y1 == Label::BONAFIDE && y0 == Label::FAKE, "endpoint labels {y1:?} {y0:?}");

    let params = MixupParams::new(0.5).map_err(|e| e.to_string())?;
    let draws: Vec<f64> = (0..100_000).map(|_| sample_lambda(&params, &mut rng)).collect();
    ensure!(draws.iter().all(|l| (0.0..=1.0).contains(l)), "lambda outside [0, 1]");
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
    ensure!((mean - 0.5).abs() <= 0.01, "mean {mean}");
    ensure!((var - 0.125).abs() <= 0.005, "variance {var}");
    Ok(format!("endpoints exact; Beta(0.5, 0.5) mean {mean:.4} variance {var:.4}"))
}

fn criterion_features() -> Outcome {
    let clip = tone(440.0, 4.0);
    let c = cqt(&clip, &CqtConfig::default()).map_err(|e| e.to_string())?;
    ensure!(c.shape() == [100, 126], "cqt shape {:?}", c.shape());
    let peak = c.argmax_freq(c.n_frames() / 2) as isize;
    ensure!((peak - 78).abs() <= 1, "440 Hz peaks in CQT bin {peak}");

    let mut detail = format!("CQT 440 Hz -> bin {peak}");
    let clip = tone(1000.0, 4.0);
    for (label, cfg, shape) in [("mel-1", MelConfig::mel1(), [100, 126]), ("mel-2", MelConfig::mel2(), [120, 63])] {
        let m = melspectrogram(&clip, &cfg).map_err(|e| e.to_string())?;
        ensure!(m.shape() == shape, "{label} shape {:?}", m.shape());
        // centres sit at (k + 1) equal mel steps between 0 and 8 kHz
        let step = hz_to_mel(8000.0) / (cfg.n_mels + 1) as f64;
        let nearest = (hz_to_mel(1000.0) / step).round() as isize - 1;
        let got = m.argmax_freq(m.n_frames() / 2) as isize;
        ensure!((got - nearest).abs() <= 1, "{label}: peak {got}, nearest {nearest}");
        detail += &format!("; {label} 1 kHz -> {got} (nearest {nearest}) {shape:?}");
    }
    Ok(detail)
}

fn criterion_architecture() -> Outcome {
    let plan = LcnnPlan::of(&ModelSpec::lcnn().stages);
    let convs: Vec<_> = plan.convs.iter().map(|c| c.0).collect();
    let nins: Vec<_> = plan.nins.iter().map(|c| c.0).collect();
    let kernels: Vec<_> = plan.convs.iter().map(|c| c.1).collect();
    let bn: Vec<_> = plan.convs.iter().map(|c| c.2).collect();
    ensure!(convs == [32, 48, 64, 32, 32, 32], "conv filters {convs:?}");
    ensure!(nins == [32, 48, 64, 64, 32], "nin filters {nins:?}");
    ensure!(kernels == [5, 3, 3, 3, 3, 3], "kernels {kernels:?}");
    ensure!(bn == [false, true, false, true, true, true], "batch norm {bn:?}");

    let strict = |mut spec: ModelSpec| {
        spec.strict_paper = true;
        build_model(&spec)
    };
    ensure!(strict(ModelSpec::lcnn()).is_ok(), "published LCNN rejected in strict mode");
    let mut lcnn = ModelSpec::lcnn();
    if let StageSpec::Conv { channels, .. } = &mut lcnn.stages[0] {
        *channels = 16;
    }
    ensure!(strict(lcnn).is_err(), "strict mode accepts a 16-filter conv1");

    ensure!(strict(ModelSpec::ofd()).is_ok(), "published OFD rejected in strict mode");
    let ofd_at = |spec: &ModelSpec, k: usize| {
        spec.stages
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, StageSpec::Ofd(_)))
            .nth(k)
            .map(|(i, _)| i)
            .unwrap()
    };
    for block in [4, 5] {
        for wide in [(3, 1), (1, 3)] {
            let mut spec = ModelSpec::ofd();
            let i = ofd_at(&spec, block);
            spec.stages[i] = StageSpec::Ofd(OfdBlockSpec::new(2, wide.0, wide.1, 32));
            ensure!(strict(spec.clone()).is_err(), "strict accepts block {} with {wide:?}", block + 1);
            ensure!(build_model(&spec).is_ok(), "lenient mode rejects block {}", block + 1);
        }
    }
    let mut five = ModelSpec::ofd();
    five.stages.remove(ofd_at(&five, 0));
    ensure!(strict(five).is_err(), "strict accepts 5 OFD blocks");

    let clip = tone(440.0, 4.0);
    let feats = [
        ("mel-1", melspectrogram(&clip, &MelConfig::mel1()).unwrap()),
        ("mel-2", melspectrogram(&clip, &MelConfig::mel2()).unwrap()),
        ("cqt", cqt(&clip, &CqtConfig::default()).unwrap()),
    ];
    for kind in ModelKind::ALL {
        let model = build_model(&ModelSpec::preset(kind)).map_err(|e| e.to_string())?;
        let w = init_weights(&model, 1).map_err(|e| e.to_string())?;
        for (name, f) in &feats {
            let [nf, nt] = f.shape();
            let mut data = f.data().to_vec();
            data.extend(f.data().iter().map(|v| v * 0.5));
            let x = Tensor4::new(data, [2, 1, nf, nt]).unwrap();
            let logits = forward(&model, &w, &x, false, &mut ChaCha8Rng::seed_from_u64(0))
                .map_err(|e| format!("{kind} on {name}: {e}"))?;
            ensure!(logits.shape() == [2, 2], "{kind} on {name}: {:?}", logits.shape());
            ensure!(logits.data().iter().all(|v| v.is_finite()), "{kind} on {name}: non-finite");
        }
    }
    Ok("LCNN plan exact; OFD strict checks enforced; 4 models x 3 feature shapes -> [2, 2]".into())
}

/// FAR/FRR counted directly at thresholds between neighbouring scores,
/// then interpolated at the first crossing.
fn eer_oracle(bona: &[f64], fake: &[f64]) -> (f64, f64) {
    let mut distinct: Vec<f64> = bona.iter().chain(fake).copied().collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let m = distinct.len();
    let mut cuts = vec![distinct[0] - 1.0];
    cuts.extend(distinct.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    cuts.push(distinct[m - 1] + 1.0);
    let rate = |c: f64| {
        let far = fake.iter().filter(|&&v| v > c).count() as f64 / fake.len() as f64;
        let frr = bona.iter().filter(|&&v| v < c).count() as f64 / bona.len() as f64;
        (far, frr)
    };
    let rates: Vec<_> = cuts.iter().map(|&c| rate(c)).collect();
    let j = (0..rates.len()).find(|&j| rates[j].1 >= rates[j].0).unwrap();
    let ((far0, frr0), (far1, frr1)) = (rates[j - 1], rates[j]);
    let alpha = (far0 - frr0) / ((far0 - frr0) - (far1 - frr1));
    let threshold = if j == m {
        distinct[j - 1]
    } else {
        distinct[j - 1] + alpha * (distinct[j] - distinct[j - 1])
    };
    (far0 + alpha * (far1 - far0), threshold)
}

fn criterion_eer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..1000 {
        let n = rng.random_range(2..=20);
        let n_bona = rng.random_range(1..n);
        let tied = rng.random_bool(0.5);
        let mut draw = |shift: f64| {
            if tied {
                rng.random_range(0..10) as f64 / 8.0 + shift
            } else {
                rng.random::<f64>() + shift
            }
        };
        let bona: Vec<f64> = (0..n_bona).map(|_| draw(0.3)).collect();
        let fake: Vec<f64> = (n_bona..n).map(|_| draw(0.0)).collect();
        let got = eer_from_classes(&bona, &fake).map_err(|e| e.to_string())?;
        let (eer, thr) = eer_oracle(&bona, &fake);
        ensure!(got.eer == eer && got.threshold == thr, "case {case}: {got:?} vs ({eer}, {thr})");
    }
    let separable = eer_from_classes(&[0.9, 0.8], &[0.1, 0.2]).unwrap().eer;
    let identical = eer_from_classes(&[0.5; 4], &[0.5; 3]).unwrap().eer;
    ensure!(separable == 0.0, "separable EER {separable}");
    ensure!(identical == 0.5, "identical-score EER {identical}");
    Ok("1000 random sets match exactly; separable 0.0, identical 0.5".into())
}

fn criterion_ensemble() -> Outcome {
    let w = EnsembleWeights::published();
    let values: Vec<f64> = w.weights().iter().map(|s| s.weight).collect();
    ensure!(values == [0.20, 0.27, 0.20, 0.13, 0.20], "weights {values:?}");
    ensure!((w.sum() - 1.0).abs() <= 1e-12, "sum {}", w.sum());
    let sets: Vec<ScoreSet> = [0.8, 0.6, 0.4, 0.2, 0.0]
        .iter()
        .map(|&v| ScoreSet::new(vec![ScoreEntry::new("utt", v, Some(Class::Bonafide))]).unwrap())
        .collect();
    let fused = fuse_scores(&sets, &w).map_err(|e| e.to_string())?;
    let v = fused.get("utt").unwrap().score;
    ensure!((v - 0.428).abs() <= 1e-12, "fused {v}");
    Ok(format!("sum {:.2}, fused {v}", w.sum()))
}

fn criterion_pipeline() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut times = Vec::new();
    for dir in [&a, &b] {
        let config = pipeline_fixture(dir.path(), "out");
        let start = Instant::now();
        ok(&["run", "--config", s(&config)]);
        times.push(start.elapsed().as_secs_f64());
    }
    let (sa, sb) = (snapshot(&a.path().join("out")), snapshot(&b.path().join("out")));
    // features + sidecars + augmented, then masks, 4 score files, weights, fused, summary
    ensure!(sa.len() == 20 * 3 + 8, "{} output files", sa.len());
    for ((na, da), (nb, db)) in sa.iter().zip(&sb) {
        ensure!(na == nb && da == db, "{na} differs between runs");
    }
    ensure!(sa.len() == sb.len(), "file counts differ");
    let slowest = times.iter().cloned().fold(0.0, f64::max);
    ensure!(slowest < 60.0, "pipeline took {slowest:.1} s");
    Ok(format!("{} files byte-identical across two runs; {:.1} s / {:.1} s", sa.len(), times[0], times[1]))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("convolution oracle equivalence", criterion_conv_oracle),
        ("OFD identity reconstruction", criterion_ofd_identity),
        ("OFD split indices", criterion_ofd_split),
        ("FFM statistics", criterion_ffm),
        ("mixup endpoints and moments", criterion_mixup),
        ("feature localization", criterion_features),
        ("architecture contracts", criterion_architecture),
        ("EER oracle", criterion_eer),
        ("ensemble arithmetic", criterion_ensemble),
        ("end-to-end determinism and speed", criterion_pipeline),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
