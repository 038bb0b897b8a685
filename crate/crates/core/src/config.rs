//! Every tunable of the pipeline in one flat `key = value` file.
//!
//! ```text
//! # comment
//! skin.hue_max = 50
//! features.weight = gaussian
//! svm.kernel = rbf 0.25
//! ```
//!
//! Unknown keys are rejected. [`PipelineConfig::to_text`] writes every key,
//! and parsing that text yields the identical configuration.

use thiserror::Error;

use crate::facedetect::DetectConfig;
use crate::featextract::{AnthropometricModel, BandWeight, ExtractParams, FeatureId};
use crate::svm::{KernelSpec, TrainConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("bad value {value:?} for {key}")]
    BadValue { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub detect: DetectConfig,
    pub anthro: AnthropometricModel,
    pub features: ExtractParams,
    pub kernel: KernelSpec,
    pub train: TrainConfig,
    /// Seed for corpus generation.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            detect: DetectConfig::default(),
            anthro: AnthropometricModel::default(),
            features: ExtractParams::default(),
            kernel: KernelSpec::default(),
            train: TrainConfig::default(),
            seed: 7,
        }
    }
}

const SCALAR_KEYS: &[&str] = &[
    "skin.hue_min",
    "skin.hue_max",
    "skin.sat_min",
    "skin.sat_max",
    "detect.min_region_area",
    "detect.r_min_frac",
    "detect.r_max_frac",
    "detect.confidence_floor",
    "detect.max_faces",
    "detect.median_window",
    "detect.vote_fraction",
    "detect.max_aspect",
    "features.n_regions",
    "features.weight",
    "features.profile_median",
    "features.profile_sigma",
    "features.log_sigma",
    "features.crop_size",
    "features.support_fraction",
    "svm.kernel",
    "svm.c",
    "svm.kkt_tol",
    "svm.max_passes",
    "svm.seed",
    "seed",
];

const BOX_FIELDS: [&str; 5] = ["x1", "y1", "x2", "y2", "prior"];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue { key: key.into(), value: value.into() })
}

impl PipelineConfig {
    /// All keys in file order.
    pub fn keys() -> Vec<String> {
        let mut keys: Vec<String> = SCALAR_KEYS.iter().map(|k| k.to_string()).collect();
        for f in FeatureId::ALL {
            for field in BOX_FIELDS {
                keys.push(format!("anthro.{}.{field}", f.name()));
            }
        }
        keys
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let d = &self.detect;
        let t = &d.thresholds;
        let fp = &self.features;
        Some(match key {
            "skin.hue_min" => t.hue_min.to_string(),
            "skin.hue_max" => t.hue_max.to_string(),
            "skin.sat_min" => t.sat_min.to_string(),
            "skin.sat_max" => t.sat_max.to_string(),
            "detect.min_region_area" => d.min_region_area.to_string(),
            "detect.r_min_frac" => d.r_min_frac.to_string(),
            "detect.r_max_frac" => d.r_max_frac.to_string(),
            "detect.confidence_floor" => d.confidence_floor.to_string(),
            "detect.max_faces" => d.max_faces.to_string(),
            "detect.median_window" => d.median_window.to_string(),
            "detect.vote_fraction" => d.vote_fraction.to_string(),
            "detect.max_aspect" => d.max_aspect.to_string(),
            "features.n_regions" => fp.n_regions.to_string(),
            "features.weight" => match fp.weight {
                BandWeight::Uniform => "uniform".into(),
                BandWeight::Gaussian => "gaussian".into(),
            },
            "features.profile_median" => fp.profile_median.to_string(),
            "features.profile_sigma" => fp.profile_sigma.to_string(),
            "features.log_sigma" => fp.log_sigma.to_string(),
            "features.crop_size" => fp.crop_size.to_string(),
            "features.support_fraction" => fp.support_fraction.to_string(),
            "svm.kernel" => match self.kernel {
                KernelSpec::Linear => "linear".into(),
                KernelSpec::Polynomial { degree, coef0 } => format!("poly {degree} {coef0}"),
                KernelSpec::Rbf { gamma } => format!("rbf {gamma}"),
            },
            "svm.c" => self.train.c.to_string(),
            "svm.kkt_tol" => self.train.kkt_tol.to_string(),
            "svm.max_passes" => self.train.max_passes.to_string(),
            "svm.seed" => self.train.seed.to_string(),
            "seed" => self.seed.to_string(),
            _ => {
                let (f, field) = Self::box_key(key)?;
                let b = self.anthro.feature(f);
                let v = match field {
                    "x1" => b.x1f,
                    "y1" => b.y1f,
                    "x2" => b.x2f,
                    "y2" => b.y2f,
                    _ => b.prior_yf,
                };
                v.to_string()
            }
        })
    }

    fn box_key(key: &str) -> Option<(FeatureId, &str)> {
        let rest = key.strip_prefix("anthro.")?;
        let (name, field) = rest.split_once('.')?;
        let f = FeatureId::ALL.into_iter().find(|f| f.name() == name)?;
        BOX_FIELDS.contains(&field).then_some((f, field))
    }

    /// Sets one key without validating the whole configuration.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        let d = &mut self.detect;
        let fp = &mut self.features;
        match key {
            "skin.hue_min" => d.thresholds.hue_min = parse(key, v)?,
            "skin.hue_max" => d.thresholds.hue_max = parse(key, v)?,
            "skin.sat_min" => d.thresholds.sat_min = parse(key, v)?,
            "skin.sat_max" => d.thresholds.sat_max = parse(key, v)?,
            "detect.min_region_area" => d.min_region_area = parse(key, v)?,
            "detect.r_min_frac" => d.r_min_frac = parse(key, v)?,
            "detect.r_max_frac" => d.r_max_frac = parse(key, v)?,
            "detect.confidence_floor" => d.confidence_floor = parse(key, v)?,
            "detect.max_faces" => d.max_faces = parse(key, v)?,
            "detect.median_window" => d.median_window = parse(key, v)?,
            "detect.vote_fraction" => d.vote_fraction = parse(key, v)?,
            "detect.max_aspect" => d.max_aspect = parse(key, v)?,
            "features.n_regions" => fp.n_regions = parse(key, v)?,
            "features.weight" => {
                fp.weight = match v.to_ascii_lowercase().as_str() {
                    "uniform" => BandWeight::Uniform,
                    "gaussian" => BandWeight::Gaussian,
                    _ => return Err(ConfigError::BadValue { key: key.into(), value: v.into() }),
                }
            }
            "features.profile_median" => fp.profile_median = parse(key, v)?,
            "features.profile_sigma" => fp.profile_sigma = parse(key, v)?,
            "features.log_sigma" => fp.log_sigma = parse(key, v)?,
            "features.crop_size" => fp.crop_size = parse(key, v)?,
            "features.support_fraction" => fp.support_fraction = parse(key, v)?,
            "svm.kernel" => self.kernel = parse(key, v)?,
            "svm.c" => self.train.c = parse(key, v)?,
            "svm.kkt_tol" => self.train.kkt_tol = parse(key, v)?,
            "svm.max_passes" => self.train.max_passes = parse(key, v)?,
            "svm.seed" => self.train.seed = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            _ => {
                let (f, field) = Self::box_key(key).ok_or(ConfigError::UnknownKey { line: 0, key: key.into() })?;
                let x: f64 = parse(key, v)?;
                let b = self.anthro.feature_mut(f);
                match field {
                    "x1" => b.x1f = x,
                    "y1" => b.y1f = x,
                    "x2" => b.x2f = x,
                    "y2" => b.y2f = x,
                    _ => b.prior_yf = x,
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: String| ConfigError::Invalid(e);
        self.detect.validate().map_err(|e| invalid(e.to_string()))?;
        self.anthro.validate().map_err(|e| invalid(e.to_string()))?;
        self.features.validate().map_err(|e| invalid(e.to_string()))?;
        self.kernel.validate().map_err(|e| invalid(e.to_string()))?;
        self.train.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`, then validates.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(key.trim(), value).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line: i + 1, key },
                other => other,
            })?;
        }
        self.validate()
    }

    pub fn from_text(text: &str) -> Result<PipelineConfig, ConfigError> {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<PipelineConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn to_text(&self) -> String {
        Self::keys().iter().map(|k| format!("{k} = {}\n", self.get(k).expect("known key"))).collect()
    }
}
