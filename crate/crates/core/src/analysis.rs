//! Interpretation tooling: per-class/axis amplitude spectral density at each
//! pipeline stage, FIR frequency responses, and feature export.

use std::path::Path;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::featurizer::{features, normalize};
use crate::model::{ModelParams, SAMPLE_RATE_HZ};
use crate::real::Real;

/// Pipeline stage whose signal is analyzed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Normalized readings.
    Normalized,
    /// High-pass outputs.
    IirFiltered,
    /// Outputs of the third-feature filter bank (before the absolute value).
    NonlinearFiltered,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Normalized => "normalized",
            Stage::IirFiltered => "iir_filtered",
            Stage::NonlinearFiltered => "nonlinear_filtered",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized" => Ok(Stage::Normalized),
            "iir_filtered" => Ok(Stage::IirFiltered),
            "nonlinear_filtered" => Ok(Stage::NonlinearFiltered),
            other => Err(Error::Parse(format!("unknown stage {other:?}"))),
        }
    }
}

/// Average amplitude spectral density of one class/axis at one stage.
#[derive(Clone, Debug)]
pub struct AsdCurve {
    pub stage: Stage,
    pub class_index: usize,
    pub class_name: String,
    pub axis: usize,
    /// Bin frequencies `k * fs / M`, `k = 0 .. M/2`.
    pub frequencies: Vec<f64>,
    pub amplitude: Vec<f64>,
}

/// One-sided periodogram PSD: `|X[k]|^2 / (fs * M)`, interior bins doubled,
/// so that `sum(PSD) * fs / M` equals the signal's mean square (Parseval).
fn periodogram(signal: &[f64], sample_rate: f64, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let m = signal.len();
    let fft = planner.plan_fft_forward(m);
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft.process(&mut buf);
    let bins = m / 2 + 1;
    let scale = 1.0 / (sample_rate * m as f64);
    (0..bins)
        .map(|k| {
            let power = buf[k].norm_sqr() * scale;
            let interior = k != 0 && !(m.is_multiple_of(2) && k == m / 2);
            if interior {
                2.0 * power
            } else {
                power
            }
        })
        .collect()
}

/// Per-class, per-axis ASD curves at a pipeline stage: the per-segment
/// periodogram PSDs are averaged across the class, then square-rooted.
/// Classes with no segments are skipped.
pub fn asd<T: Real>(
    dataset: &Dataset,
    params: &ModelParams<T>,
    stage: Stage,
) -> Result<Vec<AsdCurve>> {
    dataset.validate()?;
    let mut planner = FftPlanner::new();
    let mut curves = Vec::new();
    for class_index in 0..dataset.class_count() {
        let segments: Vec<_> = dataset
            .segments
            .iter()
            .filter(|s| s.label == class_index)
            .collect();
        if segments.is_empty() {
            continue;
        }
        for axis in 0..3 {
            let mut avg: Option<Vec<f64>> = None;
            for seg in &segments {
                let signal: Vec<f64> = match stage {
                    Stage::Normalized => normalize(seg, &params.norm)[axis]
                        .iter()
                        .map(|v| v.to_f64_lossy())
                        .collect(),
                    Stage::IirFiltered => {
                        let (_, cache) = features(seg, params)?;
                        cache.iir[axis].iter().map(|v| v.to_f64_lossy()).collect()
                    }
                    Stage::NonlinearFiltered => {
                        let (_, cache) = features(seg, params)?;
                        match &cache.filter {
                            crate::featurizer::FilterCache::Nonlinear { w, .. } => {
                                w[axis].iter().map(|v| v.to_f64_lossy()).collect()
                            }
                            crate::featurizer::FilterCache::Linear { w } => {
                                w[axis].iter().map(|v| v.to_f64_lossy()).collect()
                            }
                            crate::featurizer::FilterCache::None => {
                                return Err(Error::Config(
                                    "six-feature models have no filtered stage".into(),
                                ))
                            }
                        }
                    }
                };
                let psd = periodogram(&signal, SAMPLE_RATE_HZ, &mut planner);
                match &mut avg {
                    None => avg = Some(psd),
                    Some(acc) => {
                        for (a, p) in acc.iter_mut().zip(&psd) {
                            *a += p;
                        }
                    }
                }
            }
            let mut avg = avg.expect("non-empty class");
            let count = segments.len() as f64;
            for v in &mut avg {
                *v /= count;
            }
            let m = match stage {
                Stage::NonlinearFiltered => params.dims.conv2_len(),
                _ => params.dims.n,
            };
            let frequencies = (0..avg.len())
                .map(|k| k as f64 * SAMPLE_RATE_HZ / m as f64)
                .collect();
            curves.push(AsdCurve {
                stage,
                class_index,
                class_name: dataset.class_names[class_index].clone(),
                axis,
                frequencies,
                amplitude: avg.iter().map(|v| v.sqrt()).collect(),
            });
        }
    }
    Ok(curves)
}

/// FIR magnitude response `|sum_k h[k] e^{-j w k}|` on a uniform grid over
/// `[0, fs/2]` Hz.
pub fn fir_frequency_response<T: Real>(taps: &[T], n_points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n_points < 2 {
        return Err(Error::Config("frequency grid needs at least 2 points".into()));
    }
    let mut freqs = Vec::with_capacity(n_points);
    let mut mags = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let omega = std::f64::consts::PI * i as f64 / (n_points - 1) as f64;
        let mut acc = Complex::new(0.0, 0.0);
        for (k, &h) in taps.iter().enumerate() {
            let phase = -omega * k as f64;
            acc += Complex::from_polar(h.to_f64_lossy(), phase);
        }
        freqs.push(omega * SAMPLE_RATE_HZ / std::f64::consts::TAU);
        mags.push(acc.norm());
    }
    Ok((freqs, mags))
}

/// One exported row: segment provenance plus its feature values.
#[derive(Clone, Debug)]
pub struct FeatureRow {
    pub dataset_id: String,
    pub animal_id: String,
    pub label: usize,
    pub features: Vec<f64>,
}

/// Features for every segment of a dataset, one row per segment in order.
/// With `omit_f3`, only the first six features are exported (mean and
/// mean-absolute sets).
pub fn export_features<T: Real>(
    dataset: &Dataset,
    params: &ModelParams<T>,
    omit_f3: bool,
) -> Result<Vec<FeatureRow>> {
    let keep = if omit_f3 { 6 } else { params.dims.f };
    dataset
        .segments
        .iter()
        .map(|seg| {
            let (f, _) = features(seg, params)?;
            Ok(FeatureRow {
                dataset_id: seg.dataset_id.clone(),
                animal_id: seg.animal_id.clone(),
                label: seg.label,
                features: f.0.iter().take(keep).map(|v| v.to_f64_lossy()).collect(),
            })
        })
        .collect()
}

/// Write ASD curves as `stage,class,axis,freq_hz,asd` CSV.
pub fn write_asd_csv(curves: &[AsdCurve], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["stage", "class", "axis", "freq_hz", "asd"])?;
    for curve in curves {
        let axis = crate::model::AXES[curve.axis].to_string();
        for (freq, amp) in curve.frequencies.iter().zip(&curve.amplitude) {
            w.write_record([
                curve.stage.name().to_string(),
                curve.class_name.clone(),
                axis.clone(),
                format!("{freq}"),
                format!("{amp}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write exported features as
/// `dataset_id,animal_id,label,f1..fF` CSV.
pub fn write_features_csv(rows: &[FeatureRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let count = rows.first().map_or(0, |r| r.features.len());
    let mut header = vec![
        "dataset_id".to_string(),
        "animal_id".to_string(),
        "label".to_string(),
    ];
    for i in 1..=count {
        header.push(format!("f{i}"));
    }
    w.write_record(&header)?;
    for row in rows {
        let mut record = vec![
            row.dataset_id.clone(),
            row.animal_id.clone(),
            row.label.to_string(),
        ];
        record.extend(row.features.iter().map(|v| format!("{v}")));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Write FIR frequency responses as `filter,axis,freq_hz,magnitude` CSV.
pub fn write_freqz_csv(
    responses: &[(String, usize, Vec<f64>, Vec<f64>)],
    path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["filter", "axis", "freq_hz", "magnitude"])?;
    for (name, axis, freqs, mags) in responses {
        let axis = crate::model::AXES[*axis].to_string();
        for (freq, mag) in freqs.iter().zip(mags) {
            w.write_record([name.clone(), axis.clone(), format!("{freq}"), format!("{mag}")])?;
        }
    }
    w.flush()?;
    Ok(())
}
