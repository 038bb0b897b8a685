//! Maximum-margin classification.
//!
//! Binary soft-margin SVMs are trained on the dual problem by sequential
//! minimal optimization; six expressions are separated one-vs-one by the 15
//! pairwise models and majority voting.

mod expression;
mod multiclass;
mod persist;
mod smo;

use std::fmt;

use thiserror::Error;

pub use expression::{Expression, UnknownExpression};
pub use multiclass::{
    evaluate, predict_expression, train_multiclass, EvalReport, MultiClassSvmModel, PairModel, Prediction,
};
pub use persist::MODEL_HEADER;
pub use smo::{dual_objective, train_binary, BinarySvmModel, BinaryTraining, ALPHA_EPS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvmError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionError { expected: usize, actual: usize },
    #[error("training data needs at least two distinct labels")]
    DegenerateLabels,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid svm setting: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SvmError {
    fn from(e: std::io::Error) -> Self {
        SvmError::Io(e.to_string())
    }
}

/// A feature vector with its label: `i8` (±1) for binary problems,
/// [`Expression`] for the multiclass one.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample<L> {
    pub x: Vec<f64>,
    pub y: L,
}

impl<L> LabeledSample<L> {
    pub fn new(x: Vec<f64>, y: L) -> Self {
        LabeledSample { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    Polynomial { degree: u32, coef0: f64 },
    Rbf { gamma: f64 },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Rbf { gamma: 1.0 / 7.0 }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<(), SvmError> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Polynomial { degree, coef0 } if degree >= 1 && coef0.is_finite() => Ok(()),
            KernelSpec::Polynomial { .. } => Err(SvmError::InvalidConfig("polynomial degree must be >= 1".into())),
            KernelSpec::Rbf { gamma } if gamma > 0.0 && gamma.is_finite() => Ok(()),
            KernelSpec::Rbf { .. } => Err(SvmError::InvalidConfig("rbf gamma must be > 0".into())),
        }
    }

    /// Kernel value without the dimension check.
    pub(crate) fn apply(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(a, b),
            KernelSpec::Polynomial { degree, coef0 } => (dot(a, b) + coef0).powi(degree as i32),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Polynomial { degree, coef0 } => write!(f, "poly {degree} {coef0:.16e}"),
            KernelSpec::Rbf { gamma } => write!(f, "rbf {gamma:.16e}"),
        }
    }
}

impl std::str::FromStr for KernelSpec {
    type Err = SvmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SvmError::InvalidConfig(format!("cannot parse kernel {s:?}"));
        let parts: Vec<&str> = s.split_whitespace().collect();
        let k = match parts.as_slice() {
            ["linear"] => KernelSpec::Linear,
            ["poly" | "polynomial", d, c] => KernelSpec::Polynomial {
                degree: d.parse().map_err(|_| bad())?,
                coef0: c.parse().map_err(|_| bad())?,
            },
            ["rbf", g] => KernelSpec::Rbf { gamma: g.parse().map_err(|_| bad())? },
            _ => return Err(bad()),
        };
        k.validate()?;
        Ok(k)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn kernel_eval(k: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64, SvmError> {
    if a.len() != b.len() {
        return Err(SvmError::DimensionError { expected: a.len(), actual: b.len() });
    }
    Ok(k.apply(a, b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Box constraint.
    pub c: f64,
    pub kkt_tol: f64,
    /// Iteration budget in units of the training-set size.
    pub max_passes: usize,
    /// Orders candidates when violations tie.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { c: 10.0, kkt_tol: 1e-3, max_passes: 200, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(SvmError::InvalidConfig("C must be > 0".into()));
        }
        if !(self.kkt_tol > 0.0) {
            return Err(SvmError::InvalidConfig("kkt_tol must be > 0".into()));
        }
        if self.max_passes == 0 {
            return Err(SvmError::InvalidConfig("max_passes must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-component standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

pub const MIN_SCALE: f64 = 1e-9;

pub fn standardize_fit(xs: &[Vec<f64>]) -> Result<Scaler, SvmError> {
    if xs.len() < 2 {
        return Err(SvmError::EmptyDataset);
    }
    let dim = xs[0].len();
    if let Some(bad) = xs.iter().find(|x| x.len() != dim) {
        return Err(SvmError::DimensionError { expected: dim, actual: bad.len() });
    }
    let n = xs.len() as f64;
    let mean: Vec<f64> = (0..dim).map(|k| xs.iter().map(|x| x[k]).sum::<f64>() / n).collect();
    let scale = (0..dim)
        .map(|k| {
            let var = xs.iter().map(|x| (x[k] - mean[k]).powi(2)).sum::<f64>() / n;
            var.sqrt().max(MIN_SCALE)
        })
        .collect();
    Ok(Scaler { mean, scale })
}

pub fn standardize_apply(s: &Scaler, x: &[f64]) -> Result<Vec<f64>, SvmError> {
    if x.len() != s.mean.len() {
        return Err(SvmError::DimensionError { expected: s.mean.len(), actual: x.len() });
    }
    Ok(x.iter().zip(s.mean.iter().zip(&s.scale)).map(|(v, (m, sd))| (v - m) / sd).collect())
}

impl Scaler {
    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(self.mean.iter().zip(&self.scale)).map(|(v, (m, sd))| v * sd + m).collect()
    }
}
