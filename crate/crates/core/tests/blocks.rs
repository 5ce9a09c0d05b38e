use antispoof::models::{
    bc_resmax_block_forward, ddws_block_forward, init_params, ofd_block_forward, ofd_merge,
    ofd_split, BcResMaxBlock, DdwsBlock, DdwsBlockSpec, OfdBlock, OfdBlockSpec, ParamDecl, Pass,
    WeightStore,
};
use antispoof::nn::{Tensor4, DEFAULT_EPS};
use antispoof::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_tensor(shape: [usize; 4], seed: u64) -> Tensor4 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor4::from_fn(shape, |_| rng.random_range(-1.0f32..1.0))
}

fn store_for(decls: &[ParamDecl], seed: u64) -> WeightStore {
    init_params(decls, seed).unwrap()
}

fn zero(store: &mut WeightStore, name: &str) {
    let n = store.entry(name).unwrap().data.len();
    store.set(name, vec![0.0; n]).unwrap();
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0)
}

#[test]
fn ddws_zeroed_projection_is_exact_identity() {
    let spec = DdwsBlockSpec::normal(8, 3, 3);
    let block = DdwsBlock::new("b", 8, &spec).unwrap();
    let mut decls = Vec::new();
    block.decls(&mut decls);
    let mut w = store_for(&decls, 1);
    zero(&mut w, "b.g_pw.weight");
    let x = random_tensor([1, 8, 100, 50], 2);
    for training in [false, true] {
        let y = ddws_block_forward(&x, &spec, "b", &w, training, &mut rng()).unwrap();
        assert_eq!(y, x);
    }
}

#[test]
fn ddws_shapes() {
    let x = random_tensor([1, 8, 100, 50], 3);
    let normal = DdwsBlockSpec::normal(8, 3, 3);
    let block = DdwsBlock::new("n", 8, &normal).unwrap();
    let mut decls = Vec::new();
    block.decls(&mut decls);
    let y = ddws_block_forward(&x, &normal, "n", &store_for(&decls, 4), false, &mut rng()).unwrap();
    assert_eq!(y.shape(), [1, 8, 100, 50]);

    let trans = DdwsBlockSpec::transition(16, 3, 3);
    let block = DdwsBlock::new("t", 8, &trans).unwrap();
    let mut decls = Vec::new();
    block.decls(&mut decls);
    assert!(decls.iter().any(|d| d.name == "t.entry.weight" && d.shape == [16, 8, 1, 1]));
    let y = ddws_block_forward(&x, &trans, "t", &store_for(&decls, 5), false, &mut rng()).unwrap();
    assert_eq!(y.shape(), [1, 16, 100, 50]);
}

#[test]
fn ddws_normal_block_rejects_channel_mismatch() {
    let err = DdwsBlock::new("b", 8, &DdwsBlockSpec::normal(16, 3, 3)).unwrap_err();
    assert!(matches!(err, Error::Dimension(_)), "{err}");
    assert!(DdwsBlock::new("b", 8, &DdwsBlockSpec::normal(8, 2, 3)).is_err());
}

fn bc_store(prefix: &str, c_in: usize, spec: &DdwsBlockSpec, seed: u64) -> WeightStore {
    let block = BcResMaxBlock::new(prefix, c_in, spec).unwrap();
    let mut decls = Vec::new();
    block.decls(&mut decls);
    store_for(&decls, seed)
}

#[test]
fn bc_resmax_zeroed_projection_is_exact_identity() {
    let spec = DdwsBlockSpec::normal(16, 3, 3);
    let mut w = bc_store("b", 16, &spec, 6);
    zero(&mut w, "b.freq_pw.weight");
    let x = random_tensor([1, 16, 100, 50], 7);
    for training in [false, true] {
        let y = bc_resmax_block_forward(&x, &spec, "b", &w, training, &mut rng()).unwrap();
        assert_eq!(y, x);
    }
}

#[test]
fn bc_resmax_shapes_and_errors() {
    let spec = DdwsBlockSpec::normal(16, 3, 3);
    let w = bc_store("b", 16, &spec, 8);
    let x = random_tensor([1, 16, 100, 50], 9);
    let y = bc_resmax_block_forward(&x, &spec, "b", &w, false, &mut rng()).unwrap();
    assert_eq!(y.shape(), [1, 16, 100, 50]);

    let trans = DdwsBlockSpec::transition(24, 3, 3);
    let w = bc_store("t", 16, &trans, 10);
    let y = bc_resmax_block_forward(&x, &trans, "t", &w, false, &mut rng()).unwrap();
    assert_eq!(y.shape(), [1, 24, 100, 50]);

    let err = BcResMaxBlock::new("b", 15, &DdwsBlockSpec::normal(15, 3, 3)).unwrap_err();
    assert!(matches!(err, Error::Dimension(_)), "{err}");
}

#[test]
fn bc_resmax_keeps_frequency_constant_inputs_constant_with_unit_kernels() {
    let spec = DdwsBlockSpec::normal(8, 1, 1);
    let w = bc_store("b", 8, &spec, 11);
    let mut r = ChaCha8Rng::seed_from_u64(12);
    let per_time: Vec<f32> = (0..2 * 8 * 20).map(|_| r.random_range(-1.0..1.0)).collect();
    let x = Tensor4::from_fn([2, 8, 16, 20], |[n, c, _, t]| per_time[(n * 8 + c) * 20 + t]);
    for training in [false, true] {
        let y = bc_resmax_block_forward(&x, &spec, "b", &w, training, &mut rng()).unwrap();
        for n in 0..2 {
            for c in 0..8 {
                for f in 1..16 {
                    for t in 0..20 {
                        assert_eq!(y.at(n, c, f, t), y.at(n, c, 0, t));
                    }
                }
            }
        }
    }
}

fn row_tensor(h: usize) -> Tensor4 {
    Tensor4::from_fn([1, 2, h, 3], |[_, c, f, t]| (c * 1000 + f * 10 + t) as f32 + 1.0)
}

#[test]
fn ofd_split_indices_follow_the_formulas() {
    let x = row_tensor(100);
    let split = ofd_split(&x, 5).unwrap();
    assert_eq!(split.s, 10);
    assert_eq!(split.disjoint.len(), 5);
    assert_eq!(split.overlapped.len(), 4);
    // X(1) = 1-based rows 1..=20, Y(1) = rows 11..=30.
    assert_eq!(split.disjoint[0], x.slice_freq(0, 20).unwrap());
    assert_eq!(split.overlapped[0], x.slice_freq(10, 30).unwrap());
    for k in 1..=5 {
        let (a, b) = antispoof::models::disjoint_rows(k, 10);
        assert_eq!((a + 1, b), (1 + 2 * (k - 1) * 10, 2 * k * 10));
        assert_eq!(split.disjoint[k - 1], x.slice_freq(a, b).unwrap());
    }
    for k in 1..5 {
        let (a, b) = antispoof::models::overlapped_rows(k, 10);
        assert_eq!((a + 1, b), (1 + (2 * k - 1) * 10, (2 * k + 1) * 10));
        assert_eq!(split.overlapped[k - 1], x.slice_freq(a, b).unwrap());
    }
}

#[test]
fn ofd_split_degenerate_and_padded() {
    let x = row_tensor(7);
    let one = ofd_split(&x, 1).unwrap();
    assert_eq!(one.disjoint.len(), 1);
    assert!(one.overlapped.is_empty());
    assert_eq!(one.padded_height, 8);
    assert_eq!(one.disjoint[0].slice_freq(0, 7).unwrap(), x);

    let x = row_tensor(100);
    let one = ofd_split(&x, 1).unwrap();
    assert_eq!(one.disjoint[0], x);

    assert!(matches!(ofd_split(&x, 0), Err(Error::Config(_))));

    // H = 90 is already a multiple of 2n = 10, so no padding and s = 9.
    let x = row_tensor(90);
    let split = ofd_split(&x, 5).unwrap();
    assert_eq!((split.s, split.padded_height), (9, 90));
    assert_eq!(Tensor4::concat_freq(&split.disjoint).unwrap(), x);

    // H = 95, n = 5: padded to 100; the disjoint parts reassemble into the
    // input followed by five zero rows.
    let x = row_tensor(95);
    let split = ofd_split(&x, 5).unwrap();
    assert_eq!((split.s, split.padded_height), (10, 100));
    let whole = Tensor4::concat_freq(&split.disjoint).unwrap();
    assert_eq!(whole.slice_freq(0, 95).unwrap(), x);
    assert!(whole.slice_freq(95, 100).unwrap().data().iter().all(|&v| v == 0.0));
    assert_eq!(split.overlapped[3], whole.slice_freq(70, 90).unwrap());
}

#[test]
fn ofd_merge_of_n4_gives_eight_subimages() {
    let x = row_tensor(96);
    let split = ofd_split(&x, 4).unwrap();
    assert_eq!(split.overlapped.len(), 3);
    let merged = ofd_merge(&split.disjoint, &split.overlapped, split.s).unwrap();
    assert_eq!(merged.freq(), 8 * split.s);
    assert_eq!(merged, x);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ofd_overlaps_coincide_bitwise(h in 1usize..130, n in 1usize..7, seed in any::<u64>()) {
        let x = random_tensor([2, 3, h, 4], seed);
        let split = ofd_split(&x, n).unwrap();
        let s = split.s;
        for p in split.disjoint.iter().chain(&split.overlapped) {
            prop_assert_eq!(p.freq(), 2 * s);
        }
        for k in 0..n - 1 {
            let y = &split.overlapped[k];
            prop_assert_eq!(split.disjoint[k].slice_freq(s, 2 * s).unwrap(), y.slice_freq(0, s).unwrap());
            prop_assert_eq!(split.disjoint[k + 1].slice_freq(0, s).unwrap(), y.slice_freq(s, 2 * s).unwrap());
        }
    }
}

/// Sets every part of an OFD block to an identity `f`. `shift` moves the
/// signal above zero before the inner ReLU and back after the second BN.
fn identity_ofd(prefix: &str, block: &OfdBlock, c: usize, k1: usize, shift: f32) -> WeightStore {
    let mut decls = Vec::new();
    block.decls(&mut decls);
    let mut w = store_for(&decls, 99);
    let gamma = ((1.0 + DEFAULT_EPS as f64).sqrt()) as f32;
    for d in &decls {
        let name = d.name.as_str();
        let Some(rest) = name.strip_prefix(prefix).and_then(|r| r.strip_prefix('.')) else {
            continue;
        };
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
            vec![shift; len]
        } else if name.ends_with("bn2.beta") {
            vec![-shift; len]
        } else {
            continue;
        };
        w.set(name, data).unwrap();
    }
    w
}

#[test]
fn ofd_identity_configuration_reconstructs_input() {
    for h in [100, 120] {
        for n in [2, 4, 5] {
            for k1 in [1, 3] {
                let spec = OfdBlockSpec::new(n, k1, 3, 4);
                let block = OfdBlock::new("o", 4, &spec).unwrap();
                let x = random_tensor([2, 4, h, 9], (h * 10 + n) as u64);
                let w = identity_ofd("o", &block, 4, k1, 1.0);
                let mut r = rng();
                let y = block.stream1(&x, &w, &Pass::new(false, &mut r)).unwrap();
                assert_eq!(y.shape(), x.shape());
                let err = y.max_abs_diff(&x);
                assert!(err <= 1e-6, "h={h} n={n} k1={k1}: {err}");

                let nonneg = x.map(f32::abs);
                let w = identity_ofd("o", &block, 4, k1, 0.0);
                let y = block.stream1(&nonneg, &w, &Pass::new(false, &mut r)).unwrap();
                assert!(y.max_abs_diff(&nonneg) <= 1e-6);
            }
        }
    }
}

#[test]
fn ofd_zeroed_temporal_projection_leaves_stream1() {
    let spec = OfdBlockSpec::new(4, 3, 3, 8);
    let block = OfdBlock::new("o", 6, &spec).unwrap();
    let mut decls = Vec::new();
    block.decls(&mut decls);
    assert!(decls.iter().any(|d| d.name == "o.y3.conv2.weight"));
    assert!(!decls.iter().any(|d| d.name == "o.y4.conv1.weight"));
    let mut w = store_for(&decls, 13);
    zero(&mut w, "o.h_pw.weight");
    let x = random_tensor([2, 6, 50, 30], 14);
    let mut r = rng();
    let s1 = block.stream1(&x, &w, &Pass::new(false, &mut r)).unwrap();
    let y = ofd_block_forward(&x, &spec, "o", &w, false, &mut rng()).unwrap();
    assert_eq!(y.shape(), [2, 8, 50, 30]);
    assert_eq!(y, s1);
}

#[test]
fn ofd_rejects_bad_specs() {
    let mut spec = OfdBlockSpec::new(0, 3, 3, 8);
    assert!(OfdBlock::new("o", 4, &spec).is_err());
    spec.n = 2;
    spec.m = 7;
    assert!(OfdBlock::new("o", 4, &spec).is_err());
    spec.m = 8;
    spec.k1 = 2;
    assert!(OfdBlock::new("o", 4, &spec).is_err());
}
