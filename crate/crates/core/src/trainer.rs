//! Training: reverse-mode gradients through the full pipeline, softmax
//! cross-entropy, Adam with L2 weight decay, the mini-batch loop, and a
//! central finite-difference gradient oracle.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{Dataset, Segment};
use crate::error::{Error, Result};
use crate::featurizer::{features, FilterCache, ForwardCache};
use crate::model::{init_model, Dims, FilterBank, ModelParams, Variant};
use crate::real::{mix_seed, sign_subgrad, Real};

/// Fixed chunk length for parallel batch processing. Chunk boundaries and
/// the reduction order do not depend on the thread count, so training is
/// bit-reproducible.
const PAR_CHUNK: usize = 64;

/// Training hyperparameters.
#[derive(Clone, Copy, Debug)]
pub struct Hyper<T> {
    pub learning_rate: T,
    pub weight_decay: T,
    pub batch_size: usize,
    pub iterations: usize,
    pub adam_beta1: T,
    pub adam_beta2: T,
    pub adam_eps: T,
    pub seed: u64,
}

impl<T: Real> Hyper<T> {
    /// Defaults tuned for the five-class setting
    /// (lr 2e-4, decay 2e-3, batch 1024, 60k iterations).
    pub fn five_class() -> Self {
        Hyper {
            learning_rate: T::from_f64_lossy(2e-4),
            weight_decay: T::from_f64_lossy(2e-3),
            batch_size: 1024,
            iterations: 60_000,
            ..Self::base()
        }
    }

    /// Defaults tuned for the six-class setting
    /// (lr 5e-4, decay 4e-3, batch 1024, 40k iterations).
    pub fn six_class() -> Self {
        Hyper {
            learning_rate: T::from_f64_lossy(5e-4),
            weight_decay: T::from_f64_lossy(4e-3),
            batch_size: 1024,
            iterations: 40_000,
            ..Self::base()
        }
    }

    fn base() -> Self {
        Hyper {
            learning_rate: T::from_f64_lossy(1e-3),
            weight_decay: T::zero(),
            batch_size: 32,
            iterations: 1000,
            adam_beta1: T::from_f64_lossy(0.9),
            adam_beta2: T::from_f64_lossy(0.999),
            adam_eps: T::from_f64_lossy(1e-8),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > T::zero()
            && self.learning_rate.is_finite()
            && self.weight_decay >= T::zero()
            && self.weight_decay.is_finite()
            && self.batch_size >= 1
            && self.iterations >= 1
            && self.adam_beta1 > T::zero()
            && self.adam_beta1 < T::one()
            && self.adam_beta2 > T::zero()
            && self.adam_beta2 < T::one()
            && self.adam_eps > T::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::Config("invalid hyperparameters".into()))
        }
    }
}

/// Gradients of the mean batch loss with respect to every trainable
/// parameter. Mirrors the trainable fields of [`ModelParams`].
#[derive(Clone, Debug)]
pub struct Gradients<T> {
    pub gamma_logit: [T; 3],
    pub filters: FilterBank<T>,
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: Vec<T>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(params: &ModelParams<T>) -> Self {
        Gradients {
            gamma_logit: [T::zero(); 3],
            filters: FilterBank::zeros_like(&params.filters),
            w1: vec![T::zero(); params.w1.len()],
            b1: vec![T::zero(); params.b1.len()],
            w2: vec![T::zero(); params.w2.len()],
            b2: vec![T::zero(); params.b2.len()],
        }
    }

    fn add_assign(&mut self, other: &Gradients<T>) {
        let flat = other.flatten();
        let mut idx = 0;
        self.for_each_mut(|v| {
            *v += flat[idx];
            idx += 1;
        });
    }

    /// Visit every gradient scalar in the canonical order:
    /// `gamma_logit`, filter taps, `w1`, `b1`, `w2`, `b2`.
    pub fn for_each(&self, mut f: impl FnMut(T)) {
        for &v in &self.gamma_logit {
            f(v);
        }
        match &self.filters {
            FilterBank::Nonlinear { h1, h2 } => {
                for taps in h1.iter().chain(h2.iter()) {
                    for &v in taps {
                        f(v);
                    }
                }
            }
            FilterBank::Linear { h } => {
                for taps in h {
                    for &v in taps {
                        f(v);
                    }
                }
            }
            FilterBank::None => {}
        }
        for &v in self
            .w1
            .iter()
            .chain(self.b1.iter())
            .chain(self.w2.iter())
            .chain(self.b2.iter())
        {
            f(v);
        }
    }

    fn for_each_mut(&mut self, mut f: impl FnMut(&mut T)) {
        for v in &mut self.gamma_logit {
            f(v);
        }
        match &mut self.filters {
            FilterBank::Nonlinear { h1, h2 } => {
                for taps in h1.iter_mut().chain(h2.iter_mut()) {
                    for v in taps {
                        f(v);
                    }
                }
            }
            FilterBank::Linear { h } => {
                for taps in h {
                    for v in taps {
                        f(v);
                    }
                }
            }
            FilterBank::None => {}
        }
        for v in self
            .w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
        {
            f(v);
        }
    }

    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::new();
        self.for_each(|v| out.push(v));
        out
    }

    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        self.for_each(|v| ok &= v.is_finite());
        ok
    }
}

/// Visit every trainable scalar of a model in the canonical order, with a
/// flag marking parameters subject to weight decay (everything except
/// `gamma_logit`; normalization stats are frozen and never visited).
fn for_each_trainable_mut<T: Real>(params: &mut ModelParams<T>, mut f: impl FnMut(&mut T, bool)) {
    for v in &mut params.gamma_logit {
        f(v, false);
    }
    match &mut params.filters {
        FilterBank::Nonlinear { h1, h2 } => {
            for taps in h1.iter_mut().chain(h2.iter_mut()) {
                for v in taps {
                    f(v, true);
                }
            }
        }
        FilterBank::Linear { h } => {
            for taps in h {
                for v in taps {
                    f(v, true);
                }
            }
        }
        FilterBank::None => {}
    }
    for v in &mut params.w1 {
        f(v, true);
    }
    for v in &mut params.b1 {
        f(v, true);
    }
    for v in &mut params.w2 {
        f(v, true);
    }
    for v in &mut params.b2 {
        f(v, true);
    }
}

/// Number of trainable scalars in a model.
pub fn trainable_len<T: Real>(params: &ModelParams<T>) -> usize {
    let mut p = params.clone();
    let mut count = 0;
    for_each_trainable_mut(&mut p, |_, _| count += 1);
    count
}

/// Trainable scalars in the canonical order.
pub fn trainable_to_vec<T: Real>(params: &ModelParams<T>) -> Vec<T> {
    let mut p = params.clone();
    let mut out = Vec::new();
    for_each_trainable_mut(&mut p, |v, _| out.push(*v));
    out
}

/// Overwrite the trainable scalars from a flat vector in canonical order.
pub fn trainable_from_vec<T: Real>(params: &mut ModelParams<T>, values: &[T]) {
    let mut idx = 0;
    for_each_trainable_mut(params, |v, _| {
        *v = values[idx];
        idx += 1;
    });
    assert_eq!(idx, values.len(), "flat parameter vector length mismatch");
}

/// Cross-entropy of one sample and the logit gradient `softmax - onehot`,
/// computed with max subtraction.
fn loss_and_dlogits<T: Real>(logits: &[T], label: usize) -> Result<(T, Vec<T>)> {
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite logits".into()));
    }
    let max = logits.iter().cloned().fold(T::neg_infinity(), T::max);
    let mut sum_exp = T::zero();
    let mut probs = Vec::with_capacity(logits.len());
    for &z in logits {
        let e = (z - max).exp();
        probs.push(e);
        sum_exp += e;
    }
    for p in &mut probs {
        *p /= sum_exp;
    }
    let loss = sum_exp.ln() - (logits[label] - max);
    probs[label] -= T::one();
    Ok((loss, probs))
}

/// Mean cross-entropy of a batch plus the per-sample forward caches.
pub fn forward_loss<T: Real>(
    batch: &[&Segment],
    params: &ModelParams<T>,
) -> Result<(T, Vec<ForwardCache<T>>)> {
    if batch.is_empty() {
        return Err(Error::Config("empty batch".into()));
    }
    let mut caches = Vec::with_capacity(batch.len());
    let mut total = T::zero();
    for seg in batch {
        let (_, cache) = features(seg, params)?;
        let (loss, _) = loss_and_dlogits(&cache.logits, seg.label)?;
        total += loss;
        caches.push(cache);
    }
    Ok((total / T::from_usize_lossy(batch.len()), caches))
}

/// Accumulate one sample's gradients given its cache and the scaled logit
/// gradient (already divided by the batch size).
fn backward_sample<T: Real>(
    params: &ModelParams<T>,
    cache: &ForwardCache<T>,
    dlogits: &[T],
    grads: &mut Gradients<T>,
) {
    let (l, fdim, n) = (params.dims.l, params.dims.f, params.dims.n);
    let inv_n = T::one() / T::from_usize_lossy(n);

    // Output layer.
    let mut dh_post = vec![T::zero(); l];
    for (c, &dl) in dlogits.iter().enumerate() {
        grads.b2[c] += dl;
        for j in 0..l {
            let h_post = cache.hidden_pre[j].max(T::zero());
            grads.w2[c * l + j] += dl * h_post;
            dh_post[j] += dl * params.w2[c * l + j];
        }
    }

    // Hidden layer through the ReLU (subgradient 0 at the kink).
    let mut dfeat = vec![T::zero(); fdim];
    for j in 0..l {
        if cache.hidden_pre[j] > T::zero() {
            let dh = dh_post[j];
            grads.b1[j] += dh;
            for i in 0..fdim {
                grads.w1[j * fdim + i] += dh * cache.features.0[i];
                dfeat[i] += dh * params.w1[j * fdim + i];
            }
        }
    }

    for d in 0..3 {
        let iir = &cache.iir[d];
        // f2 path: d|y|/dy with subgradient 0 at zero.
        let df2 = dfeat[3 + d];
        let mut dy = vec![T::zero(); n];
        for i in 0..n {
            dy[i] = df2 * inv_n * sign_subgrad(iir[i]);
        }

        // f3 path through the filter bank.
        match (&params.filters, &cache.filter) {
            (FilterBank::Nonlinear { h1, h2 }, FilterCache::Nonlinear { v, w, .. }) => {
                let df3 = dfeat[6 + d];
                let (k1, k2) = (params.dims.k1, params.dims.k2);
                let (v, w) = (&v[d], &w[d]);
                let mut dv = vec![T::zero(); v.len()];
                let (gh1, gh2) = match &mut grads.filters {
                    FilterBank::Nonlinear { h1, h2 } => (&mut h1[d], &mut h2[d]),
                    _ => unreachable!(),
                };
                for (j, &wj) in w.iter().enumerate() {
                    let dw = df3 * inv_n * sign_subgrad(wj);
                    if dw == T::zero() {
                        continue;
                    }
                    // Window j..j+K reversed pairs tap k with input j+K-1-k.
                    let vw = v[j..j + k2].iter().rev();
                    let dvw = dv[j..j + k2].iter_mut().rev();
                    for (((gk, &hk), &vv), dvi) in
                        gh2.iter_mut().zip(&h2[d]).zip(vw).zip(dvw)
                    {
                        *gk += dw * vv;
                        *dvi += dw * hk;
                    }
                }
                for j in 0..v.len() {
                    let du = dv[j] * (T::one() - v[j] * v[j]);
                    if du == T::zero() {
                        continue;
                    }
                    let xw = iir[j..j + k1].iter().rev();
                    let dyw = dy[j..j + k1].iter_mut().rev();
                    for (((gk, &hk), &xv), dyi) in
                        gh1.iter_mut().zip(&h1[d]).zip(xw).zip(dyw)
                    {
                        *gk += du * xv;
                        *dyi += du * hk;
                    }
                }
            }
            (FilterBank::Linear { h }, FilterCache::Linear { w }) => {
                let df3 = dfeat[6 + d];
                let k1 = params.dims.k1;
                let w = &w[d];
                let gh = match &mut grads.filters {
                    FilterBank::Linear { h } => &mut h[d],
                    _ => unreachable!(),
                };
                for (j, &wj) in w.iter().enumerate() {
                    let dw = df3 * inv_n * sign_subgrad(wj);
                    if dw == T::zero() {
                        continue;
                    }
                    let xw = iir[j..j + k1].iter().rev();
                    let dyw = dy[j..j + k1].iter_mut().rev();
                    for (((gk, &hk), &xv), dyi) in
                        gh.iter_mut().zip(&h[d]).zip(xw).zip(dyw)
                    {
                        *gk += dw * xv;
                        *dyi += dw * hk;
                    }
                }
            }
            (FilterBank::None, FilterCache::None) => {}
            _ => unreachable!("filter bank and cache variants always match"),
        }

        // Reverse the recurrence y[i] = gamma*y[i-1] + (x[i] - x[i-1]):
        // dgamma accumulates y[i-1] * dy[i] while dy flows backward in time.
        let gamma = params.gamma(d);
        let mut dgamma = T::zero();
        for i in (1..n).rev() {
            let dyi = dy[i];
            dgamma += dyi * iir[i - 1];
            dy[i - 1] += gamma * dyi;
        }
        // gamma = logistic(gamma_logit): chain through gamma * (1 - gamma).
        grads.gamma_logit[d] += dgamma * gamma * (T::one() - gamma);
    }
}

/// Exact reverse-mode gradients of the mean batch loss.
pub fn backward<T: Real>(
    batch: &[&Segment],
    params: &ModelParams<T>,
    caches: &[ForwardCache<T>],
) -> Result<Gradients<T>> {
    if batch.len() != caches.len() {
        return Err(Error::Shape(format!(
            "batch has {} segments but {} caches",
            batch.len(),
            caches.len()
        )));
    }
    let inv_b = T::one() / T::from_usize_lossy(batch.len());
    let mut grads = Gradients::zeros_like(params);
    for (seg, cache) in batch.iter().zip(caches) {
        let (_, mut dlogits) = loss_and_dlogits(&cache.logits, seg.label)?;
        for v in &mut dlogits {
            *v *= inv_b;
        }
        backward_sample(params, cache, &dlogits, &mut grads);
    }
    Ok(grads)
}

/// Fused forward and backward pass over a batch, parallelized in fixed-size
/// chunks reduced in order.
pub fn forward_backward<T: Real>(
    batch: &[&Segment],
    params: &ModelParams<T>,
) -> Result<(T, Gradients<T>)> {
    let samples: Vec<(&Segment, usize)> = batch.iter().map(|&s| (s, 1)).collect();
    forward_backward_weighted(&samples, batch.len(), params)
}

/// Weighted fused pass: each distinct segment carries a multiplicity, so a
/// with-replacement batch can be processed once per distinct segment with
/// identical mean loss and gradients.
fn forward_backward_weighted<T: Real>(
    samples: &[(&Segment, usize)],
    batch_size: usize,
    params: &ModelParams<T>,
) -> Result<(T, Gradients<T>)> {
    if samples.is_empty() || batch_size == 0 {
        return Err(Error::Config("empty batch".into()));
    }
    let inv_b = T::one() / T::from_usize_lossy(batch_size);
    let chunks: Result<Vec<(T, Gradients<T>)>> = samples
        .par_chunks(PAR_CHUNK)
        .map(|chunk| {
            let mut grads = Gradients::zeros_like(params);
            let mut loss = T::zero();
            for &(seg, mult) in chunk {
                let weight = T::from_usize_lossy(mult);
                let (_, cache) = features(seg, params)?;
                let (l, mut dlogits) = loss_and_dlogits(&cache.logits, seg.label)?;
                for v in &mut dlogits {
                    *v *= weight * inv_b;
                }
                loss += weight * l;
                backward_sample(params, &cache, &dlogits, &mut grads);
            }
            Ok((loss, grads))
        })
        .collect();
    let mut total = T::zero();
    let mut grads = Gradients::zeros_like(params);
    for (loss, g) in chunks? {
        total += loss;
        grads.add_assign(&g);
    }
    Ok((total * inv_b, grads))
}

/// Central finite-difference gradients of the mean batch loss, one trainable
/// scalar at a time. Run this in `f64` when verifying [`backward`].
pub fn finite_diff_grad<T: Real>(
    batch: &[&Segment],
    params: &ModelParams<T>,
    eps: T,
) -> Result<Gradients<T>> {
    if eps <= T::zero() {
        return Err(Error::Domain(
            "finite-difference step must be positive".into(),
        ));
    }
    let base = trainable_to_vec(params);
    let mut flat = vec![T::zero(); base.len()];
    let mut work = params.clone();
    for i in 0..base.len() {
        let mut eval = |value: T| -> Result<T> {
            let mut perturbed = base.clone();
            perturbed[i] = value;
            trainable_from_vec(&mut work, &perturbed);
            Ok(forward_loss(batch, &work)?.0)
        };
        let plus = eval(base[i] + eps)?;
        let minus = eval(base[i] - eps)?;
        flat[i] = (plus - minus) / (eps + eps);
    }

    let mut grads = Gradients::zeros_like(params);
    let mut idx = 0;
    grads.for_each_mut(|v| {
        *v = flat[idx];
        idx += 1;
    });
    Ok(grads)
}

/// First/second moment accumulators and step counter for Adam.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            step: 0,
        }
    }
}

/// One Adam update with bias correction.
///
/// L2 weight decay is coupled into the gradient (`g += wd * theta`) for the
/// FIR taps and MLP parameters only; `gamma_logit` is never decayed and the
/// normalization stats are frozen.
pub fn adam_step<T: Real>(
    params: &mut ModelParams<T>,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
    hyper: &Hyper<T>,
) {
    let g = grads.flatten();
    assert_eq!(g.len(), state.m.len(), "optimizer state shape mismatch");
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (hyper.adam_beta1, hyper.adam_beta2);
    let bc1 = T::one() - b1.powi(t);
    let bc2 = T::one() - b2.powi(t);
    let mut idx = 0;
    for_each_trainable_mut(params, |theta, decayable| {
        let mut gi = g[idx];
        if decayable {
            gi += hyper.weight_decay * *theta;
        }
        state.m[idx] = b1 * state.m[idx] + (T::one() - b1) * gi;
        state.v[idx] = b2 * state.v[idx] + (T::one() - b2) * gi * gi;
        let m_hat = state.m[idx] / bc1;
        let v_hat = state.v[idx] / bc2;
        *theta -= hyper.learning_rate * m_hat / (v_hat.sqrt() + hyper.adam_eps);
        idx += 1;
    });
}

/// Fit normalization stats on the training set and run the mini-batch loop.
///
/// Batches are sampled uniformly with replacement, deterministically per
/// seed. Returns the final parameters and the per-iteration batch loss.
pub fn train<T: Real>(
    train_set: &Dataset,
    hyper: &Hyper<T>,
    dims: Dims,
    variant: Variant,
) -> Result<(ModelParams<T>, Vec<T>)> {
    hyper.validate()?;
    train_set.validate()?;
    if train_set.segments.is_empty() {
        return Err(Error::DegenerateData("empty training set".into()));
    }
    if train_set.n != dims.n {
        return Err(Error::Dimension(format!(
            "dataset segment length {} does not match N={}",
            train_set.n, dims.n
        )));
    }
    if train_set.class_count() != dims.c {
        return Err(Error::Dimension(format!(
            "dataset has {} classes, dims say C={}",
            train_set.class_count(),
            dims.c
        )));
    }

    let norm = crate::featurizer::fit_norm_stats(train_set)?;
    let mut params = init_model::<T>(dims, hyper.seed, variant)?;
    params.norm = norm;

    let mut state = AdamState::new(trainable_len(&params));
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(hyper.seed, 0xbead));
    let mut history = Vec::with_capacity(hyper.iterations);
    let count = train_set.segments.len();
    for _ in 0..hyper.iterations {
        // Uniform with replacement, deduplicated into multiplicities so the
        // pass runs once per distinct segment.
        let mut picks: BTreeMap<usize, usize> = BTreeMap::new();
        for _ in 0..hyper.batch_size {
            *picks.entry(rng.random_range(0..count)).or_insert(0) += 1;
        }
        let samples: Vec<(&Segment, usize)> = picks
            .iter()
            .map(|(&idx, &mult)| (&train_set.segments[idx], mult))
            .collect();
        let (loss, grads) = forward_backward_weighted(&samples, hyper.batch_size, &params)?;
        adam_step(&mut params, &grads, &mut state, hyper);
        history.push(loss);
    }
    Ok((params, history))
}

/// Write a loss history as `iteration,loss` CSV.
pub fn write_loss_csv<T: Real>(history: &[T], path: &std::path::Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "loss"])?;
    for (i, loss) in history.iter().enumerate() {
        w.write_record([i.to_string(), format!("{loss}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Result of comparing analytic and finite-difference gradients on one
/// random configuration.
#[derive(Clone, Debug)]
pub struct GradCheckRun {
    pub dims: Dims,
    pub variant: Variant,
    pub batch_size: usize,
    pub max_rel_err: f64,
}

/// Aggregate gradient-verification report over several random
/// configurations, computed in `f64`.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub runs: Vec<GradCheckRun>,
    pub max_rel_err: f64,
}

/// Relative error used for gradient checks:
/// `|analytic - numeric| / max(1, |numeric|)`.
pub fn grad_rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / numeric.abs().max(1.0)
}

/// Compare [`backward`] against [`finite_diff_grad`] on `runs` random small
/// configurations, alternating the nonlinear and linear variants.
pub fn gradcheck_report(seed: u64, runs: usize, eps: f64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x96ad));
    let mut report = GradCheckReport {
        runs: Vec::with_capacity(runs),
        max_rel_err: 0.0,
    };
    for run in 0..runs {
        let k1 = rng.random_range(1..=4usize);
        let k2 = rng.random_range(1..=4usize);
        let n = rng.random_range((k1 + k2 + 2).max(8)..=32usize);
        let l = rng.random_range(1..=4usize);
        let c = rng.random_range(2..=4usize);
        let variant = if run % 2 == 0 {
            Variant::Nonlinear
        } else {
            Variant::Linear
        };
        let dims = Dims::new(n, k1, k2, 9, l, c)?;
        let mut params = init_model::<f64>(dims, rng.random(), variant)?;
        // Random biases move the ReLU and softmax away from degenerate spots.
        for b in params.b1.iter_mut().chain(params.b2.iter_mut()) {
            *b = rng.random_range(-0.3..0.3);
        }
        params.norm = crate::model::NormStats {
            mean: std::array::from_fn(|_| rng.random_range(-100.0..100.0)),
            inv_std: std::array::from_fn(|_| rng.random_range(0.005..0.05)),
        };

        let batch_size = rng.random_range(1..=8usize);
        let segments: Vec<Segment> = (0..batch_size)
            .map(|_| Segment {
                readings: std::array::from_fn(|_| {
                    (0..n).map(|_| rng.random_range(-2048..=2047i16)).collect()
                }),
                label: rng.random_range(0..c),
                animal_id: "gc".into(),
                dataset_id: "gc".into(),
            })
            .collect();
        let batch: Vec<&Segment> = segments.iter().collect();

        let (_, caches) = forward_loss(&batch, &params)?;
        let analytic = backward(&batch, &params, &caches)?;
        let numeric = finite_diff_grad(&batch, &params, eps)?;
        let (fa, fd) = (analytic.flatten(), numeric.flatten());
        let max_rel_err = fa
            .iter()
            .zip(&fd)
            .map(|(&a, &n)| grad_rel_err(a, n))
            .fold(0.0f64, f64::max);
        report.max_rel_err = report.max_rel_err.max(max_rel_err);
        report.runs.push(GradCheckRun {
            dims,
            variant,
            batch_size,
            max_rel_err,
        });
    }
    Ok(report)
}
