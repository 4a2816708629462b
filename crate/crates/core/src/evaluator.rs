//! Confusion matrices, multiclass and per-class MCC, leave-one-animal-out
//! cross-validation, and the cross-dataset evaluation harness.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Dataset, Segment};
use crate::error::{Error, Result};
use crate::featurizer::infer;
use crate::model::{Dims, ModelParams, Variant};
use crate::real::Real;
use crate::trainer::{train, Hyper};

/// C x C integer counts; rows are true classes, columns are predictions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, true_class: usize, predicted: usize) -> u64 {
        self.counts[true_class][predicted]
    }

    pub fn add(&mut self, true_class: usize, predicted: usize) {
        self.counts[true_class][predicted] += 1;
    }

    /// Merge another matrix of the same size into this one.
    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.classes(), other.classes());
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (v, &o) in row.iter_mut().zip(orow) {
                *v += o;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.classes())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Collapse to the 2x2 matrix of class `k` versus the rest.
    pub fn one_vs_rest(&self, k: usize) -> ConfusionMatrix {
        let mut out = ConfusionMatrix::new(2);
        for (t, row) in self.counts.iter().enumerate() {
            for (p, &count) in row.iter().enumerate() {
                let ti = usize::from(t != k);
                let pi = usize::from(p != k);
                out.counts[ti][pi] += count;
            }
        }
        out
    }

    pub fn transposed(&self) -> ConfusionMatrix {
        let c = self.classes();
        let mut out = ConfusionMatrix::new(c);
        for t in 0..c {
            for p in 0..c {
                out.counts[p][t] = self.counts[t][p];
            }
        }
        out
    }
}

/// Tally predictions against labels into a confusion matrix.
pub fn confusion(preds: &[usize], labels: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} labels",
            preds.len(),
            labels.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(classes);
    for (&p, &t) in preds.iter().zip(labels) {
        if p >= classes || t >= classes {
            return Err(Error::Domain(format!(
                "class index out of range: pred {p}, label {t}, C={classes}"
            )));
        }
        cm.add(t, p);
    }
    Ok(cm)
}

/// Multiclass Matthews correlation coefficient of a confusion matrix:
/// `(c*s - sum_k p_k t_k) / sqrt((s^2 - sum p_k^2)(s^2 - sum t_k^2))`
/// with `c` the trace, `s` the total, `t_k` row sums, and `p_k` column sums.
///
/// Returns 0 when either denominator factor vanishes (all predictions or all
/// labels in a single class); errors on an empty matrix.
pub fn mcc_multiclass(cm: &ConfusionMatrix) -> Result<f64> {
    let s = cm.total() as f64;
    if s == 0.0 {
        return Err(Error::Domain("empty confusion matrix".into()));
    }
    let c = cm.trace() as f64;
    let t: Vec<f64> = cm.row_sums().iter().map(|&v| v as f64).collect();
    let p: Vec<f64> = cm.col_sums().iter().map(|&v| v as f64).collect();
    let cross: f64 = t.iter().zip(&p).map(|(&tk, &pk)| tk * pk).sum();
    let t2: f64 = t.iter().map(|&v| v * v).sum();
    let p2: f64 = p.iter().map(|&v| v * v).sum();
    let denom_t = s * s - t2;
    let denom_p = s * s - p2;
    if denom_t <= 0.0 || denom_p <= 0.0 {
        return Ok(0.0);
    }
    Ok((c * s - cross) / (denom_p * denom_t).sqrt())
}

/// One-vs-rest MCC for class `k`: the binary MCC of the collapsed 2x2
/// matrix, with 0 on a vanishing denominator.
pub fn mcc_per_class(cm: &ConfusionMatrix, k: usize) -> Result<f64> {
    if k >= cm.classes() {
        return Err(Error::Domain(format!(
            "class {k} out of range for {} classes",
            cm.classes()
        )));
    }
    mcc_multiclass(&cm.one_vs_rest(k))
}

/// One cross-validation fold: the held-out animal and its results.
#[derive(Clone, Debug, Serialize)]
pub struct FoldRecord {
    pub held_out_animal: String,
    pub segment_count: usize,
    pub confusion: ConfusionMatrix,
    pub mcc: f64,
}

/// Evaluation results: pooled confusion matrix, overall and per-class MCC,
/// and per-fold records when cross-validating.
#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub class_names: Vec<String>,
    pub confusion: ConfusionMatrix,
    pub overall_mcc: f64,
    pub per_class_mcc: Vec<f64>,
    pub folds: Vec<FoldRecord>,
}

impl EvalReport {
    fn from_pooled(
        class_names: Vec<String>,
        confusion: ConfusionMatrix,
        folds: Vec<FoldRecord>,
    ) -> Result<Self> {
        let overall_mcc = mcc_multiclass(&confusion)?;
        let per_class_mcc = (0..confusion.classes())
            .map(|k| mcc_per_class(&confusion, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(EvalReport {
            class_names,
            confusion,
            overall_mcc,
            per_class_mcc,
            folds,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Parse(format!("report serialization failed: {e}")))
    }
}

/// Predict every segment of a dataset with a trained model, in order.
pub fn predict_all<T: Real>(ds: &Dataset, params: &ModelParams<T>) -> Result<Vec<usize>> {
    ds.segments
        .par_iter()
        .map(|seg| infer(seg, params))
        .collect()
}

/// Evaluate a trained model on a dataset (single pooled confusion matrix,
/// no folds).
pub fn evaluate<T: Real>(ds: &Dataset, params: &ModelParams<T>) -> Result<EvalReport> {
    if ds.class_count() != params.dims.c {
        return Err(Error::Config(format!(
            "dataset has {} classes, model expects {}",
            ds.class_count(),
            params.dims.c
        )));
    }
    let preds = predict_all(ds, params)?;
    let labels: Vec<usize> = ds.segments.iter().map(|s| s.label).collect();
    let cm = confusion(&preds, &labels, ds.class_count())?;
    EvalReport::from_pooled(ds.class_names.clone(), cm, Vec::new())
}

/// Leave-one-animal-out cross-validation.
///
/// One fold per animal: train on every other animal's segments, predict the
/// held-out animal's. All held-out predictions are pooled into a single
/// confusion matrix and the MCC is computed on the pooled matrix.
pub fn loao_cv<T: Real>(
    ds: &Dataset,
    hyper: &Hyper<T>,
    dims: Dims,
    variant: Variant,
) -> Result<EvalReport> {
    ds.validate()?;
    let animals = ds.animal_ids();
    if animals.len() < 2 {
        return Err(Error::Config(format!(
            "leave-one-animal-out needs at least 2 animals, found {}",
            animals.len()
        )));
    }

    let mut by_animal: BTreeMap<&str, Vec<&Segment>> = BTreeMap::new();
    for seg in &ds.segments {
        by_animal.entry(&seg.animal_id).or_default().push(seg);
    }

    let mut pooled = ConfusionMatrix::new(ds.class_count());
    let mut folds = Vec::with_capacity(animals.len());
    for animal in &animals {
        let train_segments: Vec<Segment> = ds
            .segments
            .iter()
            .filter(|s| &s.animal_id != animal)
            .cloned()
            .collect();
        let train_set = Dataset::new(train_segments, ds.class_names.clone(), ds.n)?;
        let (params, _) = train(&train_set, hyper, dims, variant)?;

        let held_out = &by_animal[animal.as_str()];
        let preds: Vec<usize> = held_out
            .par_iter()
            .map(|seg| infer(seg, &params))
            .collect::<Result<_>>()?;
        let labels: Vec<usize> = held_out.iter().map(|s| s.label).collect();
        let cm = confusion(&preds, &labels, ds.class_count())?;
        pooled.merge(&cm);
        let mcc = mcc_multiclass(&cm)?;
        folds.push(FoldRecord {
            held_out_animal: animal.clone(),
            segment_count: held_out.len(),
            confusion: cm,
            mcc,
        });
    }
    EvalReport::from_pooled(ds.class_names.clone(), pooled, folds)
}

/// Train once on `train_ds` (normalization stats from it alone) and
/// evaluate every segment of `test_ds`.
pub fn cross_dataset_eval<T: Real>(
    train_ds: &Dataset,
    test_ds: &Dataset,
    hyper: &Hyper<T>,
    dims: Dims,
    variant: Variant,
) -> Result<EvalReport> {
    if train_ds.class_count() != test_ds.class_count() {
        return Err(Error::Config(format!(
            "class count mismatch: {} vs {}",
            train_ds.class_count(),
            test_ds.class_count()
        )));
    }
    if train_ds.n != test_ds.n {
        return Err(Error::Config(format!(
            "segment length mismatch: {} vs {}",
            train_ds.n, test_ds.n
        )));
    }
    let (params, _) = train(train_ds, hyper, dims, variant)?;
    evaluate(test_ds, &params)
}
