//! Parameter containers, initialization, and the binary model file format.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::real::{logistic, logit, Real};

/// Axis labels used throughout; index order is x, y, z.
pub const AXES: [char; 3] = ['x', 'y', 'z'];

/// Sampling rate of the accelerometer, in Hz.
pub const SAMPLE_RATE_HZ: f64 = 50.0;

/// Model and segment dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    /// Samples per segment.
    pub n: usize,
    /// First FIR filter length (taps).
    pub k1: usize,
    /// Second FIR filter length (taps).
    pub k2: usize,
    /// Feature count: 9 for the filtered variants, 6 when the
    /// nonlinear-filter features are ablated.
    pub f: usize,
    /// Hidden layer width.
    pub l: usize,
    /// Class count.
    pub c: usize,
}

impl Dims {
    pub fn new(n: usize, k1: usize, k2: usize, f: usize, l: usize, c: usize) -> Result<Self> {
        let dims = Dims { n, k1, k2, f, l, c };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k1 < 1 || self.k2 < 1 {
            return Err(Error::Dimension(format!(
                "FIR lengths must be at least 1, got K1={} K2={}",
                self.k1, self.k2
            )));
        }
        if self.n < self.k1 + self.k2 - 1 {
            return Err(Error::Dimension(format!(
                "segment length N={} must be at least K1+K2-1={}",
                self.n,
                self.k1 + self.k2 - 1
            )));
        }
        if self.f != 9 && self.f != 6 {
            return Err(Error::Dimension(format!(
                "feature count must be 9 (or 6 in the ablated mode), got {}",
                self.f
            )));
        }
        if self.l < 1 {
            return Err(Error::Dimension("hidden width L must be at least 1".into()));
        }
        if self.c < 2 {
            return Err(Error::Dimension(format!(
                "class count C must be at least 2, got {}",
                self.c
            )));
        }
        Ok(())
    }

    /// Length of the first valid-convolution output, `N - K1 + 1`.
    pub fn conv1_len(&self) -> usize {
        self.n - self.k1 + 1
    }

    /// Length of the second valid-convolution output, `N - K1 - K2 + 2`.
    pub fn conv2_len(&self) -> usize {
        self.n - self.k1 - self.k2 + 2
    }
}

/// Which filter structure produces the third feature set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Two tandem FIR filters joined by a tanh activation (the full model).
    Nonlinear,
    /// A single linear FIR filter per axis.
    Linear,
    /// No third feature set; only the six mean / mean-absolute features.
    SixFeature,
}

impl Variant {
    /// Number of features this variant produces.
    pub fn feature_count(self) -> usize {
        match self {
            Variant::Nonlinear | Variant::Linear => 9,
            Variant::SixFeature => 6,
        }
    }

    fn code(self) -> u8 {
        match self {
            Variant::Nonlinear => 0,
            Variant::Linear => 1,
            Variant::SixFeature => 2,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Variant::Nonlinear),
            1 => Ok(Variant::Linear),
            2 => Ok(Variant::SixFeature),
            other => Err(Error::Format(format!("unknown variant code {other}"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::Nonlinear => write!(f, "nonlinear"),
            Variant::Linear => write!(f, "linear"),
            Variant::SixFeature => write!(f, "six-feature"),
        }
    }
}

/// Frozen per-axis normalization statistics: means and inverse
/// standard deviations of the raw counts.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats<T> {
    pub mean: [T; 3],
    pub inv_std: [T; 3],
}

impl<T: Real> NormStats<T> {
    /// Identity normalization (zero mean, unit inverse std).
    pub fn identity() -> Self {
        NormStats {
            mean: [T::zero(); 3],
            inv_std: [T::one(); 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for d in 0..3 {
            if !self.inv_std[d].is_finite() || self.inv_std[d] <= T::zero() {
                return Err(Error::DegenerateData(format!(
                    "inverse std for axis {} must be positive and finite",
                    AXES[d]
                )));
            }
            if !self.mean[d].is_finite() {
                return Err(Error::DegenerateData(format!(
                    "mean for axis {} is not finite",
                    AXES[d]
                )));
            }
        }
        Ok(())
    }
}

/// FIR taps for the third feature set, by variant.
#[derive(Clone, Debug, PartialEq)]
pub enum FilterBank<T> {
    /// Tandem filters: `h1` feeds the tanh activation, `h2` follows it.
    Nonlinear { h1: [Vec<T>; 3], h2: [Vec<T>; 3] },
    /// Single linear filter per axis.
    Linear { h: [Vec<T>; 3] },
    /// No filters (six-feature ablation).
    None,
}

impl<T: Real> FilterBank<T> {
    pub fn variant(&self) -> Variant {
        match self {
            FilterBank::Nonlinear { .. } => Variant::Nonlinear,
            FilterBank::Linear { .. } => Variant::Linear,
            FilterBank::None => Variant::SixFeature,
        }
    }

    /// Zero-filled bank with the same shape as `other`.
    pub fn zeros_like(other: &FilterBank<T>) -> Self {
        match other {
            FilterBank::Nonlinear { h1, h2 } => FilterBank::Nonlinear {
                h1: std::array::from_fn(|d| vec![T::zero(); h1[d].len()]),
                h2: std::array::from_fn(|d| vec![T::zero(); h2[d].len()]),
            },
            FilterBank::Linear { h } => FilterBank::Linear {
                h: std::array::from_fn(|d| vec![T::zero(); h[d].len()]),
            },
            FilterBank::None => FilterBank::None,
        }
    }

    fn for_each_scalar(&self, mut f: impl FnMut(T)) {
        match self {
            FilterBank::Nonlinear { h1, h2 } => {
                for taps in h1.iter().chain(h2.iter()) {
                    for &t in taps {
                        f(t);
                    }
                }
            }
            FilterBank::Linear { h } => {
                for taps in h {
                    for &t in taps {
                        f(t);
                    }
                }
            }
            FilterBank::None => {}
        }
    }

    fn scalar_count(&self) -> usize {
        let mut count = 0;
        self.for_each_scalar(|_| count += 1);
        count
    }
}

/// The nine features in the fixed order
/// `[f1x, f1y, f1z, f2x, f2y, f2z, f3x, f3y, f3z]`
/// (six-feature models omit the trailing three).
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector<T>(pub Vec<T>);

impl<T: Real> FeatureVector<T> {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }
}

/// All stored model parameters plus dimensions.
///
/// Trainable: `gamma_logit`, the FIR taps, and the MLP weights/biases.
/// Frozen: the normalization statistics, fitted once from training data.
/// The IIR pole is kept as an unconstrained logit; `gamma()` maps it through
/// the logistic function so the pole always lies in (0, 1).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub dims: Dims,
    pub norm: NormStats<T>,
    /// Unconstrained parameterization of the per-axis IIR pole.
    pub gamma_logit: [T; 3],
    pub filters: FilterBank<T>,
    /// Hidden layer weights, row-major `L x F`.
    pub w1: Vec<T>,
    /// Hidden layer biases, length `L`.
    pub b1: Vec<T>,
    /// Output layer weights, row-major `C x L`.
    pub w2: Vec<T>,
    /// Output layer biases, length `C`.
    pub b2: Vec<T>,
}

impl<T: Real> ModelParams<T> {
    pub fn variant(&self) -> Variant {
        self.filters.variant()
    }

    /// IIR pole for one axis, always in (0, 1).
    pub fn gamma(&self, axis: usize) -> T {
        logistic(self.gamma_logit[axis])
    }

    /// Number of scalars the serialized payload holds
    /// (stored parameters, trainable and frozen).
    pub fn stored_param_count(&self) -> usize {
        6 + 3
            + self.filters.scalar_count()
            + self.w1.len()
            + self.b1.len()
            + self.w2.len()
            + self.b2.len()
    }

    /// Exact size of [`save_model`] output in bytes.
    pub fn serialized_len(&self) -> usize {
        HEADER_LEN + 4 * self.stored_param_count()
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        self.norm.validate()?;
        if self.dims.f != self.variant().feature_count() {
            return Err(Error::Dimension(format!(
                "variant {} requires F={}, dims say F={}",
                self.variant(),
                self.variant().feature_count(),
                self.dims.f
            )));
        }
        let shapes_ok = match &self.filters {
            FilterBank::Nonlinear { h1, h2 } => {
                h1.iter().all(|h| h.len() == self.dims.k1)
                    && h2.iter().all(|h| h.len() == self.dims.k2)
            }
            FilterBank::Linear { h } => h.iter().all(|h| h.len() == self.dims.k1),
            FilterBank::None => true,
        };
        if !shapes_ok
            || self.w1.len() != self.dims.l * self.dims.f
            || self.b1.len() != self.dims.l
            || self.w2.len() != self.dims.c * self.dims.l
            || self.b2.len() != self.dims.c
        {
            return Err(Error::Dimension(
                "parameter array shapes do not match dims".into(),
            ));
        }
        let mut all_finite = true;
        self.for_each_stored(|v| all_finite &= v.is_finite());
        if !all_finite {
            return Err(Error::Numeric("model contains non-finite values".into()));
        }
        Ok(())
    }

    fn for_each_stored(&self, mut f: impl FnMut(T)) {
        for &v in &self.norm.mean {
            f(v);
        }
        for &v in &self.norm.inv_std {
            f(v);
        }
        for &v in &self.gamma_logit {
            f(v);
        }
        self.filters.for_each_scalar(&mut f);
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

    /// Convert to another scalar type (used when exporting `f64`-trained
    /// models to the 32-bit file format).
    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        let conv = |v: T| U::from_f64_lossy(v.to_f64_lossy());
        let conv_vec = |v: &Vec<T>| v.iter().map(|&x| conv(x)).collect::<Vec<U>>();
        ModelParams {
            dims: self.dims,
            norm: NormStats {
                mean: self.norm.mean.map(conv),
                inv_std: self.norm.inv_std.map(conv),
            },
            gamma_logit: self.gamma_logit.map(conv),
            filters: match &self.filters {
                FilterBank::Nonlinear { h1, h2 } => FilterBank::Nonlinear {
                    h1: std::array::from_fn(|d| conv_vec(&h1[d])),
                    h2: std::array::from_fn(|d| conv_vec(&h2[d])),
                },
                FilterBank::Linear { h } => FilterBank::Linear {
                    h: std::array::from_fn(|d| conv_vec(&h[d])),
                },
                FilterBank::None => FilterBank::None,
            },
            w1: conv_vec(&self.w1),
            b1: conv_vec(&self.b1),
            w2: conv_vec(&self.w2),
            b2: conv_vec(&self.b2),
        }
    }
}

/// Initial IIR pole value.
const GAMMA_INIT: f64 = 0.9;

/// Initialize a model deterministically from a seed.
///
/// The IIR poles start at 0.9; FIR taps are uniform in `[-1/sqrt(K), 1/sqrt(K)]`;
/// MLP weights are uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`; biases are
/// zero. Normalization starts as the identity until stats are fitted.
pub fn init_model<T: Real>(dims: Dims, seed: u64, variant: Variant) -> Result<ModelParams<T>> {
    dims.validate()?;
    if dims.f != variant.feature_count() {
        return Err(Error::Dimension(format!(
            "variant {variant} requires F={}, dims say F={}",
            variant.feature_count(),
            dims.f
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Draws happen in f64 so the same seed yields the same model (up to
    // rounding) in both precisions.
    let mut uniform = |bound: f64| T::from_f64_lossy(rng.random_range(-bound..=bound));

    let mut taps = |k: usize| -> Vec<T> {
        let bound = 1.0 / (k as f64).sqrt();
        (0..k).map(|_| uniform(bound)).collect()
    };
    let filters = match variant {
        Variant::Nonlinear => {
            let h1 = std::array::from_fn(|_| taps(dims.k1));
            let h2 = std::array::from_fn(|_| taps(dims.k2));
            FilterBank::Nonlinear { h1, h2 }
        }
        Variant::Linear => FilterBank::Linear {
            h: std::array::from_fn(|_| taps(dims.k1)),
        },
        Variant::SixFeature => FilterBank::None,
    };

    let w1_bound = 1.0 / (dims.f as f64).sqrt();
    let w1 = (0..dims.l * dims.f).map(|_| uniform(w1_bound)).collect();
    let w2_bound = 1.0 / (dims.l as f64).sqrt();
    let w2 = (0..dims.c * dims.l).map(|_| uniform(w2_bound)).collect();

    Ok(ModelParams {
        dims,
        norm: NormStats::identity(),
        gamma_logit: [logit(T::from_f64_lossy(GAMMA_INIT)); 3],
        filters,
        w1,
        b1: vec![T::zero(); dims.l],
        w2,
        b2: vec![T::zero(); dims.c],
    })
}

/// Per-stage stored-parameter counts: normalization, feature calculation,
/// classification, and their total.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamCount {
    pub normalization: usize,
    pub feature: usize,
    pub classification: usize,
    pub total: usize,
}

/// Stored-parameter count per pipeline stage:
/// `(6, 3(K1+K2+1), L(F+C)+C+L)` and the total.
pub fn param_count(dims: Dims) -> Result<ParamCount> {
    dims.validate()?;
    let normalization = 6;
    let feature = 3 * (dims.k1 + dims.k2 + 1);
    let classification = dims.l * (dims.f + dims.c) + dims.c + dims.l;
    Ok(ParamCount {
        normalization,
        feature,
        classification,
        total: normalization + feature + classification,
    })
}

const MAGIC: &[u8; 4] = b"DBC1";
const VERSION: u16 = 1;
/// magic (4) + version (2) + variant (1) + six u32 dims (24).
const HEADER_LEN: usize = 31;

/// Serialize a model to its binary format.
///
/// Layout: magic `DBC1`, version `u16`, variant `u8`, the six dims as `u32`,
/// then normalization means and inverse stds, `gamma_logit`, the FIR taps
/// (`h1` then `h2`, or the single linear bank), `W1`, `b1`, `W2`, `b2` as
/// IEEE-754 32-bit little-endian values, row-major.
pub fn save_model<T: Real>(params: &ModelParams<T>) -> Result<Vec<u8>> {
    params.validate()?;
    let mut out = Vec::with_capacity(params.serialized_len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(params.variant().code());
    for v in [
        params.dims.n,
        params.dims.k1,
        params.dims.k2,
        params.dims.f,
        params.dims.l,
        params.dims.c,
    ] {
        let v = u32::try_from(v)
            .map_err(|_| Error::Dimension(format!("dimension {v} exceeds u32 range")))?;
        out.extend_from_slice(&v.to_le_bytes());
    }
    params.for_each_stored(|v| {
        out.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
    });
    Ok(out)
}

/// Deserialize a model written by [`save_model`].
pub fn load_model<T: Real>(bytes: &[u8]) -> Result<ModelParams<T>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "truncated header: {} bytes, need {HEADER_LEN}",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let variant = Variant::from_code(bytes[6])?;
    let mut dim_vals = [0usize; 6];
    for (i, v) in dim_vals.iter_mut().enumerate() {
        let off = 7 + 4 * i;
        *v = u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize;
    }
    let dims = Dims {
        n: dim_vals[0],
        k1: dim_vals[1],
        k2: dim_vals[2],
        f: dim_vals[3],
        l: dim_vals[4],
        c: dim_vals[5],
    };
    dims.validate()?;
    if dims.f != variant.feature_count() {
        return Err(Error::Format(format!(
            "variant {variant} is inconsistent with F={}",
            dims.f
        )));
    }

    let payload = &bytes[HEADER_LEN..];
    if !payload.len().is_multiple_of(4) {
        return Err(Error::Format("payload length is not a multiple of 4".into()));
    }
    let mut values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()));
    let mut finite = true;
    let mut next = |finite: &mut bool| -> Result<T> {
        let v = values
            .next()
            .ok_or_else(|| Error::Format("truncated payload".into()))?;
        *finite &= v.is_finite();
        Ok(T::from_f64_lossy(v as f64))
    };

    let mut triple = |finite: &mut bool| -> Result<[T; 3]> {
        Ok([next(finite)?, next(finite)?, next(finite)?])
    };
    let mean = triple(&mut finite)?;
    let inv_std = triple(&mut finite)?;
    let gamma_logit = triple(&mut finite)?;

    let mut vec_of = |len: usize, finite: &mut bool| -> Result<Vec<T>> {
        (0..len).map(|_| next(finite)).collect()
    };
    let mut bank = |k: usize, finite: &mut bool| -> Result<[Vec<T>; 3]> {
        Ok([
            vec_of(k, finite)?,
            vec_of(k, finite)?,
            vec_of(k, finite)?,
        ])
    };
    let filters = match variant {
        Variant::Nonlinear => {
            let h1 = bank(dims.k1, &mut finite)?;
            let h2 = bank(dims.k2, &mut finite)?;
            FilterBank::Nonlinear { h1, h2 }
        }
        Variant::Linear => FilterBank::Linear {
            h: bank(dims.k1, &mut finite)?,
        },
        Variant::SixFeature => FilterBank::None,
    };
    let w1 = vec_of(dims.l * dims.f, &mut finite)?;
    let b1 = vec_of(dims.l, &mut finite)?;
    let w2 = vec_of(dims.c * dims.l, &mut finite)?;
    let b2 = vec_of(dims.c, &mut finite)?;
    if values.next().is_some() {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    if !finite {
        return Err(Error::Corruption("payload contains non-finite values".into()));
    }

    let params = ModelParams {
        dims,
        norm: NormStats { mean, inv_std },
        gamma_logit,
        filters,
        w1,
        b1,
        w2,
        b2,
    };
    params.validate()?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ref_dims() -> Dims {
        Dims::new(256, 8, 8, 9, 7, 6).unwrap()
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_model::<f32>(ref_dims(), 3, Variant::Nonlinear).unwrap();
        let b = init_model::<f32>(ref_dims(), 3, Variant::Nonlinear).unwrap();
        assert_eq!(a, b);
        let c = init_model::<f32>(ref_dims(), 4, Variant::Nonlinear).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_tap_range() {
        let dims = Dims::new(64, 8, 8, 9, 4, 3).unwrap();
        let m = init_model::<f64>(dims, 0, Variant::Nonlinear).unwrap();
        let bound = 1.0 / 8f64.sqrt();
        if let FilterBank::Nonlinear { h1, .. } = &m.filters {
            for taps in h1 {
                for &t in taps {
                    assert!(t.abs() <= bound);
                }
            }
        } else {
            panic!("expected nonlinear bank");
        }
    }

    #[test]
    fn init_gamma_is_point_nine() {
        for seed in [0u64, 1, 99] {
            let m = init_model::<f64>(ref_dims(), seed, Variant::Nonlinear).unwrap();
            for d in 0..3 {
                assert!((m.gamma(d) - 0.9).abs() < 1e-15);
            }
            let m32 = init_model::<f32>(ref_dims(), seed, Variant::Nonlinear).unwrap();
            for d in 0..3 {
                assert!((m32.gamma(d) - 0.9).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn param_count_reference_config() {
        let pc = param_count(ref_dims()).unwrap();
        assert_eq!(
            (pc.normalization, pc.feature, pc.classification),
            (6, 51, 118)
        );
        assert_eq!(pc.total, 175);
    }

    #[test]
    fn param_count_minimal_config() {
        let pc = param_count(Dims::new(4, 1, 1, 9, 1, 2).unwrap()).unwrap();
        assert_eq!(
            (pc.normalization, pc.feature, pc.classification),
            (6, 9, 14)
        );
        assert_eq!(pc.total, 29);
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let m = init_model::<f32>(ref_dims(), 11, Variant::Nonlinear).unwrap();
        let bytes = save_model(&m).unwrap();
        let back: ModelParams<f32> = load_model(&bytes).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn roundtrip_linear_and_six_feature() {
        let m = init_model::<f32>(ref_dims(), 5, Variant::Linear).unwrap();
        let bytes = save_model(&m).unwrap();
        assert_eq!(load_model::<f32>(&bytes).unwrap(), m);

        let dims6 = Dims::new(256, 8, 8, 6, 7, 6).unwrap();
        let m = init_model::<f32>(dims6, 5, Variant::SixFeature).unwrap();
        let bytes = save_model(&m).unwrap();
        assert_eq!(load_model::<f32>(&bytes).unwrap(), m);
    }

    #[test]
    fn reference_file_size() {
        let m = init_model::<f32>(ref_dims(), 0, Variant::Nonlinear).unwrap();
        let bytes = save_model(&m).unwrap();
        assert_eq!(bytes.len(), 731);
        assert_eq!(bytes.len(), m.serialized_len());
        assert_eq!(
            (bytes.len() - HEADER_LEN) / 4,
            param_count(ref_dims()).unwrap().total
        );
    }

    #[test]
    fn truncated_bytes_fail() {
        let m = init_model::<f32>(ref_dims(), 0, Variant::Nonlinear).unwrap();
        let bytes = save_model(&m).unwrap();
        assert!(matches!(
            load_model::<f32>(&bytes[..bytes.len() - 5]),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            load_model::<f32>(&bytes[..10]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn bad_magic_fails() {
        let m = init_model::<f32>(ref_dims(), 0, Variant::Nonlinear).unwrap();
        let mut bytes = save_model(&m).unwrap();
        bytes[0] = b'X';
        assert!(matches!(load_model::<f32>(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn non_finite_payload_is_corruption() {
        let m = init_model::<f32>(ref_dims(), 0, Variant::Nonlinear).unwrap();
        let mut bytes = save_model(&m).unwrap();
        let nan = f32::NAN.to_le_bytes();
        bytes[HEADER_LEN..HEADER_LEN + 4].copy_from_slice(&nan);
        assert!(matches!(
            load_model::<f32>(&bytes),
            Err(Error::Corruption(_))
        ));
    }

    #[test]
    fn gamma_survives_roundtrip() {
        let m = init_model::<f32>(ref_dims(), 2, Variant::Nonlinear).unwrap();
        let back: ModelParams<f32> = load_model(&save_model(&m).unwrap()).unwrap();
        for d in 0..3 {
            assert_eq!(m.gamma(d), back.gamma(d));
        }
    }

    #[test]
    fn invalid_dims_rejected() {
        assert!(Dims::new(4, 3, 3, 9, 2, 3).is_err()); // N < K1+K2-1
        assert!(Dims::new(16, 0, 1, 9, 2, 3).is_err());
        assert!(Dims::new(16, 2, 2, 7, 2, 3).is_err());
        assert!(Dims::new(16, 2, 2, 9, 2, 1).is_err());
    }

    #[test]
    fn variant_feature_count_mismatch_rejected() {
        let dims = Dims::new(16, 2, 2, 9, 2, 3).unwrap();
        assert!(init_model::<f32>(dims, 0, Variant::SixFeature).is_err());
    }
}
