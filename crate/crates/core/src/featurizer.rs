//! Whole-segment forward pipeline: normalization, mean features, IIR
//! high-pass, FIR/tanh filtering, mean-absolute aggregation, MLP logits,
//! and argmax.
//!
//! The scalar step functions ([`norm_step`], [`iir_step`]) and the fixed
//! accumulation orders here are shared with the streaming engine so that
//! batch and per-sample inference produce bit-identical results.

use crate::data::{Dataset, Segment};
use crate::error::{Error, Result};
use crate::model::{FeatureVector, FilterBank, ModelParams, NormStats};
use crate::real::Real;

/// Normalize one raw sample: `s * (a - m)`.
#[inline]
pub fn norm_step<T: Real>(raw: i16, mean: T, inv_std: T) -> T {
    inv_std * (T::from_f64_lossy(raw as f64) - mean)
}

/// One step of the high-pass recurrence: `y[n] = gamma*y[n-1] + x[n] - x[n-1]`.
///
/// The difference term is grouped as `(x - x_prev)` so a constant input
/// yields the exact recursion `y[n] = gamma * y[n-1]`.
#[inline]
pub fn iir_step<T: Real>(gamma: T, x: T, x_prev: T, y_prev: T) -> T {
    gamma * y_prev + (x - x_prev)
}

/// Fit per-axis normalization statistics over every sample of every segment.
///
/// Means are plain averages; the stored scale is the reciprocal of the
/// population (divide-by-count) standard deviation.
pub fn fit_norm_stats<T: Real>(dataset: &Dataset) -> Result<NormStats<T>> {
    if dataset.segments.is_empty() {
        return Err(Error::DegenerateData("empty dataset".into()));
    }
    let count = (dataset.segments.len() * dataset.n) as f64;
    let mut mean = [0f64; 3];
    let mut inv_std = [0f64; 3];
    for d in 0..3 {
        let mut sum = 0f64;
        for seg in &dataset.segments {
            for &v in &seg.readings[d] {
                sum += v as f64;
            }
        }
        let m = sum / count;
        let mut sq = 0f64;
        for seg in &dataset.segments {
            for &v in &seg.readings[d] {
                let c = v as f64 - m;
                sq += c * c;
            }
        }
        let var = sq / count;
        if var <= 0.0 {
            return Err(Error::DegenerateData(format!(
                "zero variance on axis {}",
                crate::model::AXES[d]
            )));
        }
        mean[d] = m;
        inv_std[d] = 1.0 / var.sqrt();
    }
    Ok(NormStats {
        mean: mean.map(T::from_f64_lossy),
        inv_std: inv_std.map(T::from_f64_lossy),
    })
}

/// Normalize a segment per axis: `a_bar[n] = s * (a[n] - m)`.
pub fn normalize<T: Real>(segment: &Segment, norm: &NormStats<T>) -> [Vec<T>; 3] {
    std::array::from_fn(|d| {
        segment.readings[d]
            .iter()
            .map(|&v| norm_step(v, norm.mean[d], norm.inv_std[d]))
            .collect()
    })
}

/// Mean of a sequence; the accumulation runs in index order and the sum is
/// divided by the length once at the end.
pub fn mean_feature<T: Real>(x: &[T]) -> T {
    let mut acc = T::zero();
    for &v in x {
        acc += v;
    }
    acc / T::from_usize_lossy(x.len())
}

/// First-order high-pass filter with zero initial state
/// (`x[-1] = y[-1] = 0`).
///
/// Accepts poles in `[0, 1)`: at 0 the recursion collapses to the pure
/// first difference. Trained models keep the pole strictly inside (0, 1)
/// through the logistic parameterization.
pub fn iir_highpass<T: Real>(x: &[T], gamma: T) -> Result<Vec<T>> {
    if gamma < T::zero() || gamma >= T::one() {
        return Err(Error::Domain(format!(
            "IIR pole must lie in [0, 1), got {gamma}"
        )));
    }
    Ok(iir_highpass_unchecked(x, gamma))
}

pub(crate) fn iir_highpass_unchecked<T: Real>(x: &[T], gamma: T) -> Vec<T> {
    let mut y = Vec::with_capacity(x.len());
    let mut x_prev = T::zero();
    let mut y_prev = T::zero();
    for &xn in x {
        let yn = iir_step(gamma, xn, x_prev, y_prev);
        y.push(yn);
        x_prev = xn;
        y_prev = yn;
    }
    y
}

/// Mean of absolute values with an explicit divisor (the segment length `N`
/// in both feature uses, regardless of the sequence length).
pub fn mean_abs<T: Real>(x: &[T], divisor: usize) -> T {
    let mut acc = T::zero();
    for &v in x {
        acc += v.abs();
    }
    acc / T::from_usize_lossy(divisor)
}

/// Valid (no padding) convolution with the kernel time-reversed against the
/// input: `y[n] = sum_k h[k] * x[n + K - 1 - k]`, `n = 0 .. M - K`.
pub fn fir_valid_conv<T: Real>(x: &[T], h: &[T]) -> Result<Vec<T>> {
    if x.len() < h.len() || h.is_empty() {
        return Err(Error::Shape(format!(
            "valid convolution needs input at least as long as the kernel; got {} < {}",
            x.len(),
            h.len()
        )));
    }
    let k = h.len();
    let mut y = Vec::with_capacity(x.len() - k + 1);
    for window in x.windows(k) {
        // Ascending tap order, kernel reversed against the window:
        // acc = h[0]*x[n+K-1] + h[1]*x[n+K-2] + ...
        let mut acc = T::zero();
        for (&hj, &xv) in h.iter().zip(window.iter().rev()) {
            acc += hj * xv;
        }
        y.push(acc);
    }
    Ok(y)
}

/// Per-variant intermediates of the third feature set.
#[derive(Clone, Debug)]
pub enum FilterCache<T> {
    /// First conv outputs `u`, tanh outputs `v`, second conv outputs `w`.
    Nonlinear {
        u: [Vec<T>; 3],
        v: [Vec<T>; 3],
        w: [Vec<T>; 3],
    },
    /// Linear conv outputs.
    Linear { w: [Vec<T>; 3] },
    None,
}

/// Every intermediate of one forward pass, retained for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    /// Normalized readings, 3 x N.
    pub normalized: [Vec<T>; 3],
    /// IIR outputs, 3 x N.
    pub iir: [Vec<T>; 3],
    pub filter: FilterCache<T>,
    pub features: FeatureVector<T>,
    /// Hidden-layer pre-activations, length L.
    pub hidden_pre: Vec<T>,
    /// Output logits, length C.
    pub logits: Vec<T>,
}

/// Run the full forward pipeline on one segment.
///
/// Features are `f1d` (per-axis mean of the normalized readings), `f2d`
/// (mean absolute value of the high-pass output), and, per variant, `f3d`
/// (mean absolute value of the filtered high-pass output). All three divide
/// by the segment length `N`.
pub fn features<T: Real>(
    segment: &Segment,
    params: &ModelParams<T>,
) -> Result<(FeatureVector<T>, ForwardCache<T>)> {
    segment.validate(params.dims.n, params.dims.c)?;
    let n = params.dims.n;

    let normalized = normalize(segment, &params.norm);
    let iir: [Vec<T>; 3] =
        std::array::from_fn(|d| iir_highpass_unchecked(&normalized[d], params.gamma(d)));

    let mut f = Vec::with_capacity(params.dims.f);
    for d in 0..3 {
        f.push(mean_feature(&normalized[d]));
    }
    for d in 0..3 {
        f.push(mean_abs(&iir[d], n));
    }

    let filter = match &params.filters {
        FilterBank::Nonlinear { h1, h2 } => {
            let u: [Vec<T>; 3] =
                std::array::from_fn(|d| fir_valid_conv(&iir[d], &h1[d]).expect("shapes validated"));
            let v: [Vec<T>; 3] =
                std::array::from_fn(|d| u[d].iter().map(|&x| x.tanh()).collect());
            let w: [Vec<T>; 3] =
                std::array::from_fn(|d| fir_valid_conv(&v[d], &h2[d]).expect("shapes validated"));
            for d in 0..3 {
                f.push(mean_abs(&w[d], n));
            }
            FilterCache::Nonlinear { u, v, w }
        }
        FilterBank::Linear { h } => {
            let w: [Vec<T>; 3] =
                std::array::from_fn(|d| fir_valid_conv(&iir[d], &h[d]).expect("shapes validated"));
            for d in 0..3 {
                f.push(mean_abs(&w[d], n));
            }
            FilterCache::Linear { w }
        }
        FilterBank::None => FilterCache::None,
    };

    let features = FeatureVector(f);
    let (hidden_pre, logits) = mlp_forward(&features, params);
    let cache = ForwardCache {
        normalized,
        iir,
        filter,
        features: features.clone(),
        hidden_pre,
        logits,
    };
    Ok((features, cache))
}

/// Hidden pre-activations and logits for a feature vector.
pub(crate) fn mlp_forward<T: Real>(
    f: &FeatureVector<T>,
    params: &ModelParams<T>,
) -> (Vec<T>, Vec<T>) {
    let (l, fdim, c) = (params.dims.l, params.dims.f, params.dims.c);
    debug_assert_eq!(f.len(), fdim);
    let mut hidden_pre = Vec::with_capacity(l);
    for i in 0..l {
        let mut acc = T::zero();
        for j in 0..fdim {
            acc += params.w1[i * fdim + j] * f.0[j];
        }
        hidden_pre.push(acc + params.b1[i]);
    }
    let mut logits = Vec::with_capacity(c);
    for i in 0..c {
        let mut acc = T::zero();
        for j in 0..l {
            let hj = hidden_pre[j].max(T::zero());
            acc += params.w2[i * l + j] * hj;
        }
        logits.push(acc + params.b2[i]);
    }
    (hidden_pre, logits)
}

/// MLP output `W2 * max(0, W1*f + b1) + b2`.
pub fn mlp_logits<T: Real>(f: &FeatureVector<T>, params: &ModelParams<T>) -> Vec<T> {
    mlp_forward(f, params).1
}

/// Index of the largest value; ties break toward the lowest index.
pub fn argmax<T: Real>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Predicted class index for one segment.
pub fn infer<T: Real>(segment: &Segment, params: &ModelParams<T>) -> Result<usize> {
    let (_, cache) = features(segment, params)?;
    Ok(argmax(&cache.logits))
}
