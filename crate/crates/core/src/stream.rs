//! Constant-memory per-sample inference and operation-count accounting.
//!
//! [`StreamState`] holds only the IIR memories, two tap-sized ring buffers,
//! and three running sums per axis, so its footprint depends on the filter
//! lengths alone, never on the segment length. Pushing samples one at a
//! time reproduces the batch featurizer bit for bit because both paths share
//! the same scalar kernels and accumulate in the same order.

use std::path::Path;

use crate::error::{Error, Result};
use crate::featurizer::{argmax, iir_step, mlp_logits, norm_step};
use crate::model::{param_count, Dims, FeatureVector, FilterBank, ModelParams, ParamCount};
use crate::real::Real;

/// Fixed-capacity ring buffer over the most recent values.
#[derive(Clone, Debug)]
struct RingBuf<T> {
    buf: Vec<T>,
    pos: usize,
}

impl<T: Real> RingBuf<T> {
    fn new(cap: usize) -> Self {
        RingBuf {
            buf: vec![T::zero(); cap],
            pos: 0,
        }
    }

    fn push(&mut self, v: T) {
        self.buf[self.pos] = v;
        self.pos = (self.pos + 1) % self.buf.len();
    }

    /// Value pushed `k` calls ago; `back(0)` is the newest.
    fn back(&self, k: usize) -> T {
        let cap = self.buf.len();
        self.buf[(self.pos + cap - 1 - k) % cap]
    }

    fn reset(&mut self) {
        self.buf.iter_mut().for_each(|v| *v = T::zero());
        self.pos = 0;
    }
}

/// Per-sample inference state. Constant memory: `3*(2 + K1 + K2 + 3) + 1`
/// scalars regardless of the segment length.
#[derive(Clone, Debug)]
pub struct StreamState<T> {
    dims: Dims,
    prev_x: [T; 3],
    prev_y: [T; 3],
    ring_iir: [RingBuf<T>; 3],
    ring_mid: [RingBuf<T>; 3],
    acc_mean: [T; 3],
    acc_abs_iir: [T; 3],
    acc_abs_w: [T; 3],
    count: usize,
}

impl<T: Real> StreamState<T> {
    /// Number of state scalars, counting the sample counter as one.
    pub fn scalar_len(&self) -> usize {
        let per_axis = 2 + self.ring_iir[0].buf.len() + self.ring_mid[0].buf.len() + 3;
        3 * per_axis + 1
    }

    /// Samples pushed since the last segment boundary.
    pub fn pending(&self) -> usize {
        self.count
    }

    pub fn reset(&mut self) {
        self.prev_x = [T::zero(); 3];
        self.prev_y = [T::zero(); 3];
        self.acc_mean = [T::zero(); 3];
        self.acc_abs_iir = [T::zero(); 3];
        self.acc_abs_w = [T::zero(); 3];
        self.ring_iir.iter_mut().for_each(RingBuf::reset);
        self.ring_mid.iter_mut().for_each(RingBuf::reset);
        self.count = 0;
    }
}

/// Fresh zeroed state matching the batch pipeline's zero-initial-state
/// convention.
pub fn stream_init<T: Real>(params: &ModelParams<T>) -> StreamState<T> {
    StreamState {
        dims: params.dims,
        prev_x: [T::zero(); 3],
        prev_y: [T::zero(); 3],
        ring_iir: std::array::from_fn(|_| RingBuf::new(params.dims.k1)),
        ring_mid: std::array::from_fn(|_| RingBuf::new(params.dims.k2)),
        acc_mean: [T::zero(); 3],
        acc_abs_iir: [T::zero(); 3],
        acc_abs_w: [T::zero(); 3],
        count: 0,
    }
}

/// Operation tallies for one segment inference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub adds: u64,
    pub abs_evals: u64,
    pub mults: u64,
    pub tanh_evals: u64,
    pub relu_ops: u64,
    pub argmax_ops: u64,
}

impl OpCounts {
    fn plus(&self, other: &OpCounts) -> OpCounts {
        OpCounts {
            adds: self.adds + other.adds,
            abs_evals: self.abs_evals + other.abs_evals,
            mults: self.mults + other.mults,
            tanh_evals: self.tanh_evals + other.tanh_evals,
            relu_ops: self.relu_ops + other.relu_ops,
            argmax_ops: self.argmax_ops + other.argmax_ops,
        }
    }
}

/// Per-stage operation counts: normalization, feature calculation,
/// classification.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCountBreakdown {
    pub normalization: OpCounts,
    pub feature: OpCounts,
    pub classification: OpCounts,
}

impl OpCountBreakdown {
    pub fn total(&self) -> OpCounts {
        self.normalization
            .plus(&self.feature)
            .plus(&self.classification)
    }
}

/// Stored parameters and per-stage operation counts for one segment
/// inference of the full (nonlinear) pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpCountReport {
    pub params: ParamCount,
    pub ops: OpCountBreakdown,
}

/// Evaluate the closed-form per-stage operation counts.
///
/// Additions: `3N | 9N + 3(N-K1+2)K1 + 3(N-K1-K2+2)K2 - 18 | LF + CL`.
/// Absolute values: `0 | 3(2N-K1-K2+2) | 0`.
/// Multiplications: `3N | 3N + 3(N-K1+1)K1 + 3(N-K1-K2+2)K2 + 6 | LF + CL`.
/// tanh: `3(N-K1+1)`; ReLU: `L`; argmax: `1`.
pub fn op_count_report(dims: Dims) -> Result<OpCountReport> {
    dims.validate()?;
    let (n, k1, k2) = (dims.n as i128, dims.k1 as i128, dims.k2 as i128);
    let (l, f, c) = (dims.l as i128, dims.f as i128, dims.c as i128);

    let feature_adds = 9 * n + 3 * (n - k1 + 2) * k1 + 3 * (n - k1 - k2 + 2) * k2 - 18;
    if feature_adds < 0 {
        return Err(Error::Dimension(
            "operation-count formulas need a larger segment".into(),
        ));
    }
    let feature_mults = 3 * n + 3 * (n - k1 + 1) * k1 + 3 * (n - k1 - k2 + 2) * k2 + 6;
    let mlp_flops = (l * f + c * l) as u64;

    Ok(OpCountReport {
        params: param_count(dims)?,
        ops: OpCountBreakdown {
            normalization: OpCounts {
                adds: (3 * n) as u64,
                mults: (3 * n) as u64,
                ..OpCounts::default()
            },
            feature: OpCounts {
                adds: feature_adds as u64,
                abs_evals: (3 * (2 * n - k1 - k2 + 2)) as u64,
                mults: feature_mults as u64,
                tanh_evals: (3 * (n - k1 + 1)) as u64,
                ..OpCounts::default()
            },
            classification: OpCounts {
                adds: mlp_flops,
                mults: mlp_flops,
                relu_ops: l as u64,
                argmax_ops: 1,
                ..OpCounts::default()
            },
        },
    })
}

/// Push one triaxial sample; on the segment's final sample, emit the
/// prediction and feature vector and reset for the next segment.
///
/// Conv outputs appear once their full valid window exists: the first
/// filter fires from push `K1`, the second from push `K1 + K2 - 1`
/// (1-based). The segment emits on push `N`.
pub fn stream_push<T: Real>(
    state: &mut StreamState<T>,
    sample: [i16; 3],
    params: &ModelParams<T>,
) -> Option<(usize, FeatureVector<T>)> {
    push_impl(state, sample, params, None)
}

/// [`stream_push`] with operation counting.
///
/// Counting convention (matching a minimal embedded loop): a sum of M terms
/// costs M-1 additions, a K-tap dot product costs K multiplications and K-1
/// additions, the first IIR step is free because both state terms are zero,
/// and each feature's final division by N costs one multiplication.
pub fn stream_push_counted<T: Real>(
    state: &mut StreamState<T>,
    sample: [i16; 3],
    params: &ModelParams<T>,
    counts: &mut OpCountBreakdown,
) -> Option<(usize, FeatureVector<T>)> {
    push_impl(state, sample, params, Some(counts))
}

fn push_impl<T: Real>(
    state: &mut StreamState<T>,
    sample: [i16; 3],
    params: &ModelParams<T>,
    mut counts: Option<&mut OpCountBreakdown>,
) -> Option<(usize, FeatureVector<T>)> {
    debug_assert_eq!(state.dims, params.dims, "state built for different dims");
    let dims = params.dims;
    let n = state.count;
    let conv1_ready = n + 1 >= dims.k1;
    let conv2_ready = n + 1 >= dims.k1 + dims.k2 - 1;

    for d in 0..3 {
        let x = norm_step(sample[d], params.norm.mean[d], params.norm.inv_std[d]);
        if let Some(c) = counts.as_deref_mut() {
            c.normalization.adds += 1;
            c.normalization.mults += 1;
        }

        state.acc_mean[d] += x;
        let y = iir_step(params.gamma(d), x, state.prev_x[d], state.prev_y[d]);
        state.prev_x[d] = x;
        state.prev_y[d] = y;
        state.acc_abs_iir[d] += y.abs();
        if let Some(c) = counts.as_deref_mut() {
            c.feature.abs_evals += 1;
            if n > 0 {
                c.feature.adds += 4; // mean and abs accumulators, IIR recurrence
                c.feature.mults += 1; // gamma * y_prev
            }
        }

        match &params.filters {
            FilterBank::Nonlinear { h1, h2 } => {
                state.ring_iir[d].push(y);
                if conv1_ready {
                    let mut u = T::zero();
                    for (k, &hk) in h1[d].iter().enumerate() {
                        u += hk * state.ring_iir[d].back(k);
                    }
                    let v = u.tanh();
                    state.ring_mid[d].push(v);
                    if let Some(c) = counts.as_deref_mut() {
                        c.feature.mults += dims.k1 as u64;
                        c.feature.adds += dims.k1 as u64 - 1;
                        c.feature.tanh_evals += 1;
                    }
                    if conv2_ready {
                        let mut w = T::zero();
                        for (k, &hk) in h2[d].iter().enumerate() {
                            w += hk * state.ring_mid[d].back(k);
                        }
                        state.acc_abs_w[d] += w.abs();
                        if let Some(c) = counts.as_deref_mut() {
                            c.feature.mults += dims.k2 as u64;
                            c.feature.adds += dims.k2 as u64 - 1;
                            c.feature.abs_evals += 1;
                            if n + 1 > dims.k1 + dims.k2 - 1 {
                                c.feature.adds += 1; // abs accumulator
                            }
                        }
                    }
                }
            }
            FilterBank::Linear { h } => {
                state.ring_iir[d].push(y);
                if conv1_ready {
                    let mut w = T::zero();
                    for (k, &hk) in h[d].iter().enumerate() {
                        w += hk * state.ring_iir[d].back(k);
                    }
                    state.acc_abs_w[d] += w.abs();
                    if let Some(c) = counts.as_deref_mut() {
                        c.feature.mults += dims.k1 as u64;
                        c.feature.adds += dims.k1 as u64 - 1;
                        c.feature.abs_evals += 1;
                        if n + 1 > dims.k1 {
                            c.feature.adds += 1;
                        }
                    }
                }
            }
            FilterBank::None => {}
        }
    }

    state.count += 1;
    if state.count < dims.n {
        return None;
    }

    // Segment complete: aggregate, classify, reset.
    let n_t = T::from_usize_lossy(dims.n);
    let mut f = Vec::with_capacity(dims.f);
    for d in 0..3 {
        f.push(state.acc_mean[d] / n_t);
    }
    for d in 0..3 {
        f.push(state.acc_abs_iir[d] / n_t);
    }
    if !matches!(params.filters, FilterBank::None) {
        for d in 0..3 {
            f.push(state.acc_abs_w[d] / n_t);
        }
    }
    let features = FeatureVector(f);
    let logits = mlp_logits(&features, params);
    let class = argmax(&logits);
    if let Some(c) = counts {
        c.feature.mults += dims.f as u64; // divisions by N
        let mlp_flops = (dims.l * dims.f + dims.c * dims.l) as u64;
        c.classification.adds += mlp_flops;
        c.classification.mults += mlp_flops;
        c.classification.relu_ops += dims.l as u64;
        c.classification.argmax_ops += 1;
    }
    state.reset();
    Some((class, features))
}

/// Run the instrumented stream over one zero segment and return the
/// measured per-stage operation counts.
pub fn measured_op_counts<T: Real>(params: &ModelParams<T>) -> OpCountBreakdown {
    let mut state = stream_init(params);
    let mut counts = OpCountBreakdown::default();
    let mut emitted = None;
    for _ in 0..params.dims.n {
        emitted = stream_push_counted(&mut state, [0, 0, 0], params, &mut counts);
    }
    debug_assert!(emitted.is_some());
    counts
}

/// Read a stream-input CSV of `t,ax,ay,az` rows (the `t` column is carried
/// for ordering only).
pub fn read_samples_csv(path: &Path) -> Result<Vec<[i16; 3]>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != 4 {
            return Err(Error::Parse(format!(
                "row {line}: expected 4 fields (t,ax,ay,az), got {}",
                record.len()
            )));
        }
        let mut sample = [0i16; 3];
        for (i, v) in sample.iter_mut().enumerate() {
            *v = record[i + 1].parse().map_err(|_| {
                Error::Parse(format!("row {line}: bad sample value {:?}", &record[i + 1]))
            })?;
        }
        out.push(sample);
    }
    Ok(out)
}

/// Stream a sample sequence through a model, collecting one record per
/// completed segment. Trailing samples short of a full segment are dropped.
pub fn stream_over_samples<T: Real>(
    params: &ModelParams<T>,
    samples: &[[i16; 3]],
) -> Vec<(usize, usize, FeatureVector<T>)> {
    let mut state = stream_init(params);
    let mut out = Vec::new();
    let mut segment_index = 0;
    for &sample in samples {
        if let Some((class, features)) = stream_push(&mut state, sample, params) {
            out.push((segment_index, class, features));
            segment_index += 1;
        }
    }
    out
}

/// Write stream predictions as `segment_index,class_index,f1..fF` CSV.
pub fn write_stream_csv<T: Real>(
    results: &[(usize, usize, FeatureVector<T>)],
    feature_count: usize,
    path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["segment_index".to_string(), "class_index".to_string()];
    for i in 1..=feature_count {
        header.push(format!("f{i}"));
    }
    w.write_record(&header)?;
    for (idx, class, features) in results {
        let mut row = vec![idx.to_string(), class.to_string()];
        row.extend(features.0.iter().map(|v| format!("{v}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
