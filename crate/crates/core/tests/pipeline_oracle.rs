//! Cross-checks the forward pipeline against an independent straight-line
//! reimplementation, plus property tests for the pipeline invariants.
//!
//! The oracle below intentionally repeats the arithmetic with plain loops
//! and no shared helpers, so it cannot inherit a bug from the library path.

#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;

use dbc_core::data::Segment;
use dbc_core::featurizer::{argmax, features, fir_valid_conv, iir_highpass, mlp_logits};
use dbc_core::model::{init_model, Dims, FeatureVector, FilterBank, ModelParams, NormStats, Variant};

/// Straight-line scalar evaluation of the whole feature pipeline in f64.
fn oracle_features(seg: &Segment, params: &ModelParams<f64>) -> Vec<f64> {
    let n = params.dims.n;
    let mut out = vec![0.0; params.dims.f];
    for d in 0..3 {
        let m = params.norm.mean[d];
        let s = params.norm.inv_std[d];
        let gamma = 1.0 / (1.0 + (-params.gamma_logit[d]).exp());

        let mut abar = Vec::with_capacity(n);
        for &raw in &seg.readings[d] {
            abar.push(s * (raw as f64 - m));
        }

        let mut sum = 0.0;
        for &v in &abar {
            sum += v;
        }
        out[d] = sum / n as f64;

        let mut y = vec![0.0; n];
        for i in 0..n {
            let x_prev = if i == 0 { 0.0 } else { abar[i - 1] };
            let y_prev = if i == 0 { 0.0 } else { y[i - 1] };
            y[i] = gamma * y_prev + abar[i] - x_prev;
        }
        let mut abs_sum = 0.0;
        for &v in &y {
            abs_sum += v.abs();
        }
        out[3 + d] = abs_sum / n as f64;

        let conv = |x: &[f64], h: &[f64]| -> Vec<f64> {
            let k = h.len();
            let mut result = Vec::with_capacity(x.len() - k + 1);
            for j in 0..=x.len() - k {
                let mut acc = 0.0;
                for (idx, &tap) in h.iter().enumerate() {
                    acc += tap * x[j + k - 1 - idx];
                }
                result.push(acc);
            }
            result
        };

        match &params.filters {
            FilterBank::Nonlinear { h1, h2 } => {
                let u = conv(&y, &h1[d]);
                let v: Vec<f64> = u.iter().map(|&x| x.tanh()).collect();
                let w = conv(&v, &h2[d]);
                let mut acc = 0.0;
                for &x in &w {
                    acc += x.abs();
                }
                out[6 + d] = acc / n as f64;
            }
            FilterBank::Linear { h } => {
                let w = conv(&y, &h[d]);
                let mut acc = 0.0;
                for &x in &w {
                    acc += x.abs();
                }
                out[6 + d] = acc / n as f64;
            }
            FilterBank::None => {}
        }
    }
    out
}

#[derive(Debug, Clone)]
struct Instance {
    params: ModelParams<f64>,
    segment: Segment,
}

fn instance_strategy() -> impl Strategy<Value = Instance> {
    (1usize..=4, 1usize..=4, 0usize..3, any::<u64>())
        .prop_flat_map(|(k1, k2, variant_idx, seed)| {
            let variant = match variant_idx {
                0 => Variant::Nonlinear,
                1 => Variant::Linear,
                _ => Variant::SixFeature,
            };
            let min_n = (k1 + k2).max(4);
            (
                Just((k1, k2, variant, seed)),
                min_n..=32usize,
                1usize..=4,
                2usize..=4,
            )
        })
        .prop_flat_map(|((k1, k2, variant, seed), n, l, c)| {
            let readings = proptest::collection::vec(-2048i16..=2047, n * 3);
            let norm = (
                proptest::collection::vec(-200.0f64..200.0, 3),
                proptest::collection::vec(0.002f64..0.1, 3),
            );
            (Just((k1, k2, variant, seed, n, l, c)), readings, norm)
        })
        .prop_map(|((k1, k2, variant, seed, n, l, c), readings, (mean, inv_std))| {
            let dims = Dims::new(n, k1, k2, variant.feature_count(), l, c).unwrap();
            let mut params = init_model::<f64>(dims, seed, variant).unwrap();
            params.norm = NormStats {
                mean: [mean[0], mean[1], mean[2]],
                inv_std: [inv_std[0], inv_std[1], inv_std[2]],
            };
            let segment = Segment {
                readings: [
                    readings[0..n].to_vec(),
                    readings[n..2 * n].to_vec(),
                    readings[2 * n..3 * n].to_vec(),
                ],
                label: 0,
                animal_id: "prop".into(),
                dataset_id: "prop".into(),
            };
            Instance { params, segment }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn features_match_independent_oracle(inst in instance_strategy()) {
        let (got, _) = features(&inst.segment, &inst.params).unwrap();
        let expected = oracle_features(&inst.segment, &inst.params);
        prop_assert_eq!(got.len(), expected.len());
        for (g, e) in got.0.iter().zip(&expected) {
            let tol = 1e-10 * e.abs().max(1.0);
            prop_assert!((g - e).abs() <= tol, "got {g}, oracle {e}");
        }
    }

    #[test]
    fn second_feature_set_is_non_negative_and_bounded(inst in instance_strategy()) {
        let (f, cache) = features(&inst.segment, &inst.params).unwrap();
        for d in 0..3 {
            prop_assert!(f.0[3 + d] >= 0.0);
        }
        if let FilterBank::Nonlinear { h2, .. } = &inst.params.filters {
            let dims = inst.params.dims;
            for d in 0..3 {
                prop_assert!(f.0[6 + d] >= 0.0);
                // tanh output is below 1, so each conv output is below the
                // tap L1 norm and the mean over N is bounded accordingly.
                let l1: f64 = h2[d].iter().map(|t| t.abs()).sum();
                let bound = (dims.conv2_len() as f64) * l1 / dims.n as f64;
                prop_assert!(
                    f.0[6 + d] <= bound + 1e-12,
                    "f3 {} above bound {bound}", f.0[6 + d]
                );
            }
            // Shape law for the second convolution output.
            if let dbc_core::featurizer::FilterCache::Nonlinear { w, .. } = &cache.filter {
                prop_assert_eq!(w[0].len(), dims.conv2_len());
            }
        }
    }

    #[test]
    fn iir_is_scale_equivariant(
        xs in proptest::collection::vec(-100.0f64..100.0, 4..40),
        gamma in 0.05f64..0.95,
        alpha in -8.0f64..8.0,
    ) {
        let base = iir_highpass(&xs, gamma).unwrap();
        let scaled_input: Vec<f64> = xs.iter().map(|&v| alpha * v).collect();
        let scaled = iir_highpass(&scaled_input, gamma).unwrap();
        for (s, b) in scaled.iter().zip(&base) {
            let tol = 1e-9 * (alpha * b).abs().max(1e-9);
            prop_assert!((s - alpha * b).abs() <= tol);
        }
    }

    #[test]
    fn conv_is_scale_equivariant(
        xs in proptest::collection::vec(-100.0f64..100.0, 6..40),
        taps in proptest::collection::vec(-2.0f64..2.0, 1..6),
        alpha in -8.0f64..8.0,
    ) {
        prop_assume!(xs.len() >= taps.len());
        let base = fir_valid_conv(&xs, &taps).unwrap();
        let scaled_input: Vec<f64> = xs.iter().map(|&v| alpha * v).collect();
        let scaled = fir_valid_conv(&scaled_input, &taps).unwrap();
        for (s, b) in scaled.iter().zip(&base) {
            let tol = 1e-9 * (alpha * b).abs().max(1e-9);
            prop_assert!((s - alpha * b).abs() <= tol);
        }
    }

    #[test]
    fn argmax_invariant_under_logit_shift(
        logits in proptest::collection::vec(-50.0f64..50.0, 2..8),
        shift in -100.0f64..100.0,
    ) {
        let shifted: Vec<f64> = logits.iter().map(|&v| v + shift).collect();
        prop_assert_eq!(argmax(&logits), argmax(&shifted));
    }

    #[test]
    fn logits_match_manual_mlp(inst in instance_strategy()) {
        let f = FeatureVector(vec![0.5; inst.params.dims.f]);
        let got = mlp_logits(&f, &inst.params);
        let dims = inst.params.dims;
        for (c, &logit) in got.iter().enumerate() {
            let mut expected = inst.params.b2[c];
            for j in 0..dims.l {
                let mut pre = inst.params.b1[j];
                for i in 0..dims.f {
                    pre += inst.params.w1[j * dims.f + i] * 0.5;
                }
                expected += inst.params.w2[c * dims.l + j] * pre.max(0.0);
            }
            prop_assert!((logit - expected).abs() < 1e-9);
        }
    }
}
