//! Facial expression recognition from geometric features.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`facedetect`]: skin filtering in hue/saturation space, skin region
//!    segmentation and a per-region circle Hough search.
//! 2. [`featextract`]: anthropometric search boxes, integral projections of
//!    Sobel edge maps and per-feature segmentation of eyebrows, lips and nose.
//! 3. [`featvec`]: the seven-component geometric feature vector.
//! 4. [`svm`]: binary maximum-margin classifiers trained with SMO, combined
//!    one-vs-one over six expressions.
//!
//! [`synthface`] renders parametric faces with exact ground truth; it is the
//! training corpus and the verification oracle for every stage.

pub mod config;
pub mod facedetect;
pub mod featextract;
pub mod featvec;
pub mod imgcore;
pub mod pipeline;
pub mod svm;
pub mod synthface;

pub use svm::Expression;
