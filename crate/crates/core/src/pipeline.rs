//! Detection, localization and feature extraction chained together.

use thiserror::Error;

use crate::config::PipelineConfig;
use crate::facedetect::{detect_faces, DetectError, FaceDetection};
use crate::featextract::{extract_all, FaceCrop, FeatureError, FeatureMasks};
use crate::featvec::{compute_feature_vector, FeatVecError, FeatureVector};
use crate::imgcore::{to_grayscale, Circle, RasterImage, Rect};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("no face detected")]
    NoFace,
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    FeatureVector(#[from] FeatVecError),
}

/// Features of one face, with the intermediate results that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFeatures {
    pub crop: FaceCrop,
    /// Masks in crop coordinates.
    pub masks: FeatureMasks,
    pub vector: FeatureVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub detection: FaceDetection,
    pub features: FaceFeatures,
}

/// Extracts features from a known face box. `circle`, when given, masks
/// out everything beyond the head outline.
pub fn features_in_box(img: &RasterImage, bbox: Rect, circle: Option<&Circle>, cfg: &PipelineConfig) -> Result<FaceFeatures, PipelineError> {
    let gray = to_grayscale(img).map_err(FeatureError::from)?;
    let crop = FaceCrop::new(&gray, bbox, circle, cfg.features.crop_size)?;
    let masks = extract_all(&crop.image, &cfg.anthro, &cfg.features)?;
    let vector = compute_feature_vector(&masks, crop.image.bounds())?;
    Ok(FaceFeatures { crop, masks, vector })
}

/// Detects the most confident face and extracts its features.
pub fn analyze(img: &RasterImage, cfg: &PipelineConfig) -> Result<Analysis, PipelineError> {
    let detection = detect_faces(img, &cfg.detect)?.into_iter().next().ok_or(PipelineError::NoFace)?;
    let features = features_in_box(img, detection.bbox, Some(&detection.circle), cfg)?;
    Ok(Analysis { detection, features })
}
