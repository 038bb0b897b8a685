//! Command implementations behind the `moodpipe` binary.
//!
//! Every command returns `Result<_, CliError>`; the error decides the exit
//! code (see [`CliError::exit_code`]).

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use moodpipe::config::PipelineConfig;
use moodpipe::facedetect::{detect_faces, FaceDetection};
use moodpipe::featvec::{FeatureVector, FEATURE_NAMES};
use moodpipe::imgcore::{draw_circle, draw_rect, load_pnm, save_pnm, RasterImage, Rect};
use moodpipe::pipeline::{analyze, features_in_box, FaceFeatures, PipelineError};
use moodpipe::svm::{
    evaluate, predict_expression, train_multiclass, EvalReport, LabeledSample, MultiClassSvmModel, Prediction, SvmError,
};
use moodpipe::synthface::generate_corpus;
use moodpipe::Expression;

pub const ANNOTATION_COLOR: [u8; 3] = [0, 255, 0];

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unreadable or unwritable files, malformed inputs, bad configuration.
    Io(String),
    NoFace,
    Feature(String),
    /// Too little usable training data.
    Degraded(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 2,
            CliError::NoFace => 3,
            CliError::Feature(_) => 4,
            CliError::Degraded(_) => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "{m}"),
            CliError::NoFace => write!(f, "no face detected"),
            CliError::Feature(m) => write!(f, "feature extraction failed: {m}"),
            CliError::Degraded(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::NoFace => CliError::NoFace,
            PipelineError::Detect(d) => CliError::Io(d.to_string()),
            PipelineError::Feature(f) => CliError::Feature(f.to_string()),
            PipelineError::FeatureVector(f) => CliError::Feature(f.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn load_config(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
    match path {
        Some(p) => PipelineConfig::load(p).map_err(|e| CliError::Io(e.to_string())),
        None => Ok(PipelineConfig::default()),
    }
}

pub fn load_image(path: &Path) -> Result<RasterImage, CliError> {
    load_pnm(path).map_err(|e| io_err(path, e))
}

pub fn cmd_synth(n: usize, jitter: f64, seed: u64, out: &Path) -> Result<String, CliError> {
    if !(0.0..=0.5).contains(&jitter) {
        return Err(CliError::Io(format!("jitter {jitter} outside [0, 0.5]")));
    }
    let m = generate_corpus(n, jitter, seed, out).map_err(|e| io_err(out, e))?;
    Ok(format!("wrote {} images and {}\n", m.rows.len(), out.join("manifest.csv").display()))
}

pub fn format_detection(d: &FaceDetection) -> String {
    let (c, b) = (&d.circle, &d.bbox);
    format!("{:.2} {:.2} {:.2} {} {} {} {} {:.4}", c.cx, c.cy, c.r, b.x1, b.y1, b.x2, b.y2, d.confidence)
}

pub fn annotate(img: &RasterImage, dets: &[FaceDetection]) -> RasterImage {
    let mut out = match img.channels() {
        3 => img.clone(),
        _ => {
            let mut rgb = RasterImage::filled_rgb(img.width(), img.height(), [0, 0, 0]);
            for y in 0..img.height() {
                for x in 0..img.width() {
                    let v = img.data()[y * img.width() + x];
                    rgb.set_rgb(x, y, [v, v, v]);
                }
            }
            rgb
        }
    };
    for d in dets {
        draw_circle(&mut out, &d.circle, ANNOTATION_COLOR);
        draw_rect(&mut out, &d.bbox, ANNOTATION_COLOR);
    }
    out
}

/// One line per detection: `cx cy r x1 y1 x2 y2 confidence`.
pub fn cmd_detect(image: &Path, cfg: &PipelineConfig, annotate_to: Option<&Path>) -> Result<String, CliError> {
    let img = load_image(image)?;
    let dets = detect_faces(&img, &cfg.detect).map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(out) = annotate_to {
        save_pnm(out, &annotate(&img, &dets)).map_err(|e| io_err(out, e))?;
    }
    Ok(dets.iter().map(|d| format_detection(d) + "\n").collect())
}

pub fn format_vector(v: &FeatureVector) -> String {
    v.to_array().iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(",")
}

/// Features of the face in `image`, from detection or a forced box.
pub fn extract_features(image: &Path, cfg: &PipelineConfig, bbox: Option<Rect>) -> Result<FaceFeatures, CliError> {
    let img = load_image(image)?;
    match bbox {
        Some(b) => Ok(features_in_box(&img, b, None, cfg)?),
        None => Ok(analyze(&img, cfg)?.features),
    }
}

pub fn cmd_extract(image: &Path, cfg: &PipelineConfig, bbox: Option<Rect>, dump_masks: Option<&Path>) -> Result<String, CliError> {
    let f = extract_features(image, cfg, bbox)?;
    if let Some(dir) = dump_masks {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let m = &f.masks;
        for (name, mask) in [("left_eyebrow", &m.left_eyebrow), ("right_eyebrow", &m.right_eyebrow), ("lip", &m.lip)] {
            let gray = mask.map(|b| if b { 255u8 } else { 0 });
            let path = dir.join(format!("{name}.pgm"));
            save_pnm(&path, &gray.to_raster()).map_err(|e| io_err(&path, e))?;
        }
        let path = dir.join("crop.pgm");
        save_pnm(&path, &f.crop.image.to_raster()).map_err(|e| io_err(&path, e))?;
    }
    Ok(format!("{}\n", format_vector(&f.vector)))
}

pub fn parse_bbox(s: &str) -> Result<Rect, String> {
    let v: Vec<usize> = s.split(',').map(|p| p.trim().parse::<usize>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v.as_slice() {
        &[x1, y1, x2, y2] if x1 <= x2 && y1 <= y2 => Ok(Rect::new(x1, y1, x2, y2)),
        _ => Err("expected x1,y1,x2,y2 with x1<=x2 and y1<=y2".into()),
    }
}

/// `path,label` rows; paths are resolved against the manifest directory.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub rows: Vec<(PathBuf, Expression)>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<DatasetManifest, CliError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == "path,label" => {}
            _ => return Err(io_err(path, "missing `path,label` header")),
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let (p, l) = line.rsplit_once(',').ok_or_else(|| io_err(path, format!("line {}: expected path,label", i + 1)))?;
            let label: Expression = l.parse().map_err(|e| io_err(path, format!("line {}: {e}", i + 1)))?;
            let p = PathBuf::from(p.trim());
            rows.push((if p.is_absolute() { p } else { base.join(p) }, label));
        }
        Ok(DatasetManifest { rows })
    }
}

/// A feature row: source path, label and the seven features.
pub type FeatureRow = (PathBuf, Expression, FeatureVector);

pub fn features_csv(rows: &[FeatureRow]) -> String {
    let mut s = format!("path,label,{}\n", FEATURE_NAMES.join(","));
    for (p, e, v) in rows {
        let vals: Vec<String> = v.to_array().iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "{},{},{}", p.display(), e, vals.join(","));
    }
    s
}

pub fn load_features_csv(path: &Path) -> Result<Vec<FeatureRow>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.starts_with("path,label,") => {}
        _ => return Err(io_err(path, "missing feature CSV header")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let parts: Vec<&str> = line.rsplitn(9, ',').collect();
        if parts.len() != 9 {
            return Err(io_err(path, format!("line {}: expected path, label and 7 features", i + 1)));
        }
        let mut vals = [0.0; 7];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = parts[6 - k].trim().parse().map_err(|_| io_err(path, format!("line {}: bad number", i + 1)))?;
        }
        let label: Expression = parts[7].parse().map_err(|e| io_err(path, format!("line {}: {e}", i + 1)))?;
        rows.push((PathBuf::from(parts[8]), label, FeatureVector::from_array(vals)));
    }
    Ok(rows)
}

/// Extracts features for every manifest row in parallel; rows keep manifest
/// order. Failures come back as `Err` entries with a reason.
pub fn extract_manifest(m: &DatasetManifest, cfg: &PipelineConfig) -> Vec<Result<FeatureRow, (PathBuf, String)>> {
    m.rows
        .par_iter()
        .map(|(p, e)| {
            let img = load_image(p).map_err(|err| (p.clone(), err.to_string()))?;
            analyze(&img, cfg).map(|a| (p.clone(), *e, a.features.vector)).map_err(|err| (p.clone(), err.to_string()))
        })
        .collect()
}

/// Usable rows plus one warning per skipped row.
pub fn collect_rows(results: Vec<Result<FeatureRow, (PathBuf, String)>>) -> (Vec<FeatureRow>, Vec<String>) {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err((p, why)) => warnings.push(format!("skipping {}: {why}", p.display())),
        }
    }
    (rows, warnings)
}

pub fn cmd_features(manifest: &Path, cfg: &PipelineConfig, out: &Path) -> Result<(String, Vec<String>), CliError> {
    let m = DatasetManifest::load(manifest)?;
    let (rows, warnings) = collect_rows(extract_manifest(&m, cfg));
    fs::write(out, features_csv(&rows)).map_err(|e| io_err(out, e))?;
    Ok((format!("wrote {} feature rows to {}\n", rows.len(), out.display()), warnings))
}

fn samples(rows: &[FeatureRow]) -> Vec<LabeledSample<Expression>> {
    rows.iter().map(|(_, e, v)| LabeledSample::new(v.to_array().to_vec(), *e)).collect()
}

pub struct TrainOutcome {
    pub model: MultiClassSvmModel,
    pub report: String,
    pub warnings: Vec<String>,
}

/// Trains from a manifest (extracting features) or from a feature CSV.
pub fn cmd_train(manifest: Option<&Path>, features: Option<&Path>, cfg: &PipelineConfig, model_out: &Path) -> Result<TrainOutcome, CliError> {
    let (rows, warnings, total) = match (manifest, features) {
        (_, Some(f)) => {
            let rows = load_features_csv(f)?;
            let n = rows.len();
            (rows, Vec::new(), n)
        }
        (Some(m), None) => {
            let m = DatasetManifest::load(m)?;
            let n = m.rows.len();
            let (rows, warnings) = collect_rows(extract_manifest(&m, cfg));
            (rows, warnings, n)
        }
        (None, None) => return Err(CliError::Io("train needs --manifest or --features".into())),
    };
    if total == 0 {
        return Err(CliError::Degraded("training set is empty".into()));
    }
    let skipped = total - rows.len();
    if 2 * skipped > total {
        return Err(CliError::Degraded(format!("{skipped} of {total} rows failed feature extraction")));
    }
    let data = samples(&rows);
    let model = train_multiclass(&data, &cfg.kernel, &cfg.train).map_err(|e| match e {
        SvmError::DegenerateLabels => CliError::Degraded("DegenerateLabels: training data needs at least two classes".into()),
        other => CliError::Io(other.to_string()),
    })?;
    let file = fs::File::create(model_out).map_err(|e| io_err(model_out, e))?;
    model.save(std::io::BufWriter::new(file)).map_err(|e| io_err(model_out, e))?;

    let mut report = String::new();
    let _ = writeln!(report, "trained on {} samples ({skipped} skipped), kernel {}", rows.len(), model.kernel);
    for p in &model.pairs {
        match &p.model {
            Some(b) => writeln!(report, "pair {:<8} {:<8} sv {:>3} converged {}", p.positive, p.negative, b.coef.len(), b.converged),
            None => writeln!(report, "pair {:<8} {:<8} absent", p.positive, p.negative),
        }
        .expect("string write");
    }
    let acc = evaluate(&model, &data).map_err(|e| CliError::Io(e.to_string()))?;
    let _ = writeln!(report, "training accuracy {:.2}% (class average {:.2}%)", 100.0 * acc.overall(), 100.0 * acc.average());
    Ok(TrainOutcome { model, report, warnings })
}

pub fn load_model(path: &Path) -> Result<MultiClassSvmModel, CliError> {
    let f = fs::File::open(path).map_err(|e| io_err(path, e))?;
    MultiClassSvmModel::load(BufReader::new(f)).map_err(|e| io_err(path, e))
}

pub fn format_prediction(p: &Prediction) -> String {
    let mut s = format!("{}\n", p.label);
    let votes: Vec<String> = Expression::ALL.iter().map(|e| format!("{e}={}", p.votes[e.index()])).collect();
    let _ = writeln!(s, "votes {}", votes.join(" "));
    for (a, b, f) in &p.pair_scores {
        let winner = if *f >= 0.0 { a } else { b };
        let _ = writeln!(s, "pair {a} {b} {f:+.6} -> {winner}");
    }
    s
}

pub fn cmd_predict(image: &Path, model: &Path, cfg: &PipelineConfig) -> Result<String, CliError> {
    let model = load_model(model)?;
    let f = extract_features(image, cfg, None)?;
    let p = predict_expression(&model, &f.vector.to_array()).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(format_prediction(&p))
}

pub struct EvalOutcome {
    pub report: EvalReport,
    pub text: String,
    pub warnings: Vec<String>,
}

pub fn cmd_eval(
    manifest: &Path,
    model: &Path,
    cfg: &PipelineConfig,
    csv: bool,
    train_manifest: Option<&Path>,
) -> Result<EvalOutcome, CliError> {
    let model = load_model(model)?;
    let m = DatasetManifest::load(manifest)?;
    let mut warnings = Vec::new();
    if let Some(tm) = train_manifest {
        let train: HashSet<PathBuf> = DatasetManifest::load(tm)?.rows.into_iter().map(|(p, _)| canonical(&p)).collect();
        let overlap = m.rows.iter().filter(|(p, _)| train.contains(&canonical(p))).count();
        if overlap > 0 {
            warnings.push(format!("{overlap} test images also appear in the training manifest"));
        }
    }
    let (rows, skipped) = collect_rows(extract_manifest(&m, cfg));
    warnings.extend(skipped);
    let report = evaluate(&model, &samples(&rows)).map_err(|e| CliError::Io(e.to_string()))?;
    let text = if csv { report.to_csv() } else { report.to_table() };
    Ok(EvalOutcome { report, text, warnings })
}

fn canonical(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Parses the CSV form of an evaluation report back into
/// `(class, accuracy percent)` rows and the confusion matrix.
pub fn parse_eval_csv(text: &str) -> Result<(Vec<(String, Option<f64>)>, Vec<Vec<u32>>), String> {
    let mut acc = Vec::new();
    let mut confusion = Vec::new();
    let mut in_confusion = false;
    for line in text.lines().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        if parts[0] == "confusion" {
            in_confusion = true;
            continue;
        }
        if in_confusion {
            confusion.push(parts[1..].iter().map(|v| v.parse::<u32>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?);
        } else {
            let a = if parts.get(1).map_or(true, |v| v.is_empty()) { None } else { Some(parts[1].parse::<f64>().map_err(|e| e.to_string())?) };
            acc.push((parts[0].to_string(), a));
        }
    }
    Ok((acc, confusion))
}
