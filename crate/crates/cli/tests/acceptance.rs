//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use moodpipe::config::PipelineConfig;
use moodpipe::facedetect::detect_faces;
use moodpipe::featvec::FeatureVector;
use moodpipe::imgcore::{
    hough_circles, integral_projections, otsu_threshold, sobel_edges, Circle, EdgeMap, GrayImage, HoughParams, RasterImage,
    Rect, SobelOrientation,
};
use moodpipe::pipeline::{analyze, features_in_box};
use moodpipe::svm::{
    dual_objective, kernel_eval, predict_expression, train_binary, KernelSpec, LabeledSample, MultiClassSvmModel, TrainConfig,
    ALPHA_EPS,
};
use moodpipe::synthface::{corpus, corpus_item, render_face, SynthFaceTruth};
use moodpipe::Expression;
use moodpipe_cli::{load_features_csv, parse_eval_csv};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: Option<bool>,
    detail: String,
}

impl Verdict {
    fn check(pass: bool, detail: String) -> Verdict {
        Verdict { pass: Some(pass), detail }
    }
}

fn main() {
    let work = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let _ = fs::remove_dir_all(&work);
    fs::create_dir_all(&work).expect("scratch directory");

    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict>)> = vec![
        ("reference-dataset accuracy", Box::new(reference_accuracy)),
        ("face detection", Box::new(detection)),
        ("hough circle recovery", Box::new(hough_recovery)),
        ("projection conservation", Box::new(projection_conservation)),
        ("feature extraction", Box::new(feature_extraction)),
        ("feature vector invariance", Box::new(invariance)),
        ("smo optimizer", Box::new(smo_correctness)),
        ("end-to-end classification", Box::new({
            let w = work.clone();
            move || end_to_end(&w)
        })),
        ("persistence and determinism", Box::new({
            let w = work.clone();
            move || persistence(&w)
        })),
    ];

    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|_| Verdict::check(false, "panicked".into()));
        let tag = match v.pass {
            Some(true) => "PASS",
            Some(false) => {
                failed += 1;
                "FAIL"
            }
            None => "N/A ",
        };
        println!("[{tag}] {} {name}: {} ({:.1} s)", i + 1, v.detail, t.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn reference_accuracy() -> Verdict {
    Verdict { pass: None, detail: "the labeled photo dataset is not available; criteria 2-9 stand in".into() }
}

fn detection() -> Verdict {
    let cfg = PipelineConfig::default().detect;
    let mut hits = 0;
    let mut worst_time = 0.0f64;
    let mut min_iou = f64::INFINITY;
    for i in 0..50 {
        let (_, p) = corpus_item(i, 0.15, 7);
        let (img, t) = render_face(&p).unwrap();
        let start = Instant::now();
        let dets = detect_faces(&img, &cfg).unwrap();
        worst_time = worst_time.max(start.elapsed().as_secs_f64());
        let iou = dets.first().map_or(0.0, |d| d.bbox.iou(&t.face_bbox));
        min_iou = min_iou.min(iou);
        if iou >= 0.5 {
            hits += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut negatives = vec![
        RasterImage::filled_rgb(256, 256, [255, 255, 255]),
        RasterImage::filled_rgb(256, 256, [0, 0, 0]),
        RasterImage::filled_rgb(256, 256, [128, 128, 128]),
        RasterImage::filled_rgb(256, 256, [40, 90, 200]),
        RasterImage::filled_rgb(256, 256, [60, 160, 70]),
    ];
    // random non-skin textures: blue/green dominated noise
    for _ in 0..3 {
        let mut img = RasterImage::filled_rgb(256, 256, [0, 0, 0]);
        for y in 0..256 {
            for x in 0..256 {
                let r = rng.gen_range(0..80u8);
                img.set_rgb(x, y, [r, rng.gen_range(r..=255), rng.gen_range(r..=255)]);
            }
        }
        negatives.push(img);
    }
    let false_pos: usize = negatives.iter().map(|img| detect_faces(img, &cfg).unwrap().len()).sum();
    let pass = hits * 100 >= 95 * 50 && false_pos == 0 && worst_time <= 1.0;
    Verdict::check(
        pass,
        format!(
            "{hits}/50 detected (min IoU {min_iou:.3}), {false_pos} detections on {} non-face images, slowest {worst_time:.3} s/image",
            negatives.len()
        ),
    )
}

fn hough_recovery() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ok = 0;
    let (mut worst_c, mut worst_r) = (0.0f64, 0.0f64);
    for i in 0..50 {
        let r = 10 + (i * 50) / 49;
        let size = 2 * r + 40;
        let cx = rng.gen_range(r as f64 + 5.0..(size - r) as f64 - 5.0);
        let cy = rng.gen_range(r as f64 + 5.0..(size - r) as f64 - 5.0);
        let rf = r as f64;
        let img = GrayImage::from_fn(size, size, |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy <= rf * rf {
                200
            } else {
                40
            }
        });
        let edge = sobel_edges(&img, SobelOrientation::Magnitude);
        let nz: Vec<u32> = edge.data().iter().copied().filter(|&v| v > 0).collect();
        let thr = otsu_threshold(&nz).unwrap_or(0);
        let params = HoughParams::new(8, 64.min(size / 2), thr, 0.3);
        let found = hough_circles(&edge, &params).unwrap();
        let Some(c) = found.first() else { continue };
        let ce = (c.cx - cx).hypot(c.cy - cy);
        let re = (c.r - rf).abs();
        worst_c = worst_c.max(ce);
        worst_r = worst_r.max(re);
        if ce <= 2.0 && re <= 1.0 {
            ok += 1;
        }
    }
    Verdict::check(ok == 50, format!("{ok}/50 recovered, worst center error {worst_c:.2} px, worst radius error {worst_r:.2} px"))
}

fn projection_conservation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut ok = 0;
    for _ in 0..100 {
        let (w, h) = (rng.gen_range(1..80), rng.gen_range(1..80));
        let edge = EdgeMap::from_fn(w, h, |_, _| if rng.gen_bool(0.3) { 0 } else { rng.gen_range(0..2000) });
        let (x1, x2) = {
            let (a, b) = (rng.gen_range(0..w), rng.gen_range(0..w));
            (a.min(b), a.max(b))
        };
        let (y1, y2) = {
            let (a, b) = (rng.gen_range(0..h), rng.gen_range(0..h));
            (a.min(b), a.max(b))
        };
        let rect = Rect::new(x1, y1, x2, y2);
        let p = integral_projections(&edge, rect).unwrap();
        let mut mass = 0u64;
        for y in y1..=y2 {
            for x in x1..=x2 {
                mass += u64::from(edge.get(x, y));
            }
        }
        if p.v.iter().sum::<u64>() == mass && p.h.iter().sum::<u64>() == mass {
            ok += 1;
        }
    }
    Verdict::check(ok == 100, format!("{ok}/100 random images conserve rect mass exactly"))
}

fn feature_extraction() -> Verdict {
    let cfg = PipelineConfig::default();
    let faces = corpus(30, 0.15, 7).unwrap();
    let (mut ok, mut invocations) = (0, 0);
    let mut worst_centroid = 0.0f64;
    let mut worst_sum = 0.0f64;
    let mut far = 0;
    for (img, t) in &faces {
        let Ok(a) = analyze(img, &cfg) else { continue };
        ok += 1;
        let f = &a.features;
        for (_, band) in &f.masks.bands {
            invocations += 1;
            let s: f64 = band.scores.iter().map(|r| r.e).sum();
            worst_sum = worst_sum.max((s - 1.0).abs());
        }
        let to_img = |m: &moodpipe::imgcore::BinaryMask| m.centroid().map(|c| f.crop.to_image(c));
        let mut errs = Vec::new();
        for (mask, truth) in [
            (&f.masks.left_eyebrow, &t.left_eyebrow),
            (&f.masks.right_eyebrow, &t.right_eyebrow),
            (&f.masks.lip, &t.mouth),
        ] {
            let e = to_img(mask).map_or(f64::INFINITY, |(x, y)| (x - truth.centroid.0).hypot(y - truth.centroid.1));
            errs.push(e);
        }
        errs.push((f.crop.to_image((0.0, f.masks.nose_y)).1 - t.nose_row).abs());
        for e in errs {
            worst_centroid = worst_centroid.max(e);
            if e > 4.0 {
                far += 1;
            }
        }
    }
    let n = faces.len();
    let pass = ok * 100 >= 95 * n && far == 0 && worst_sum <= 1e-9 && invocations > 0;
    Verdict::check(
        pass,
        format!(
            "{ok}/{n} extracted, worst centroid error {worst_centroid:.2} px ({far} over 4 px), worst |sum E - 1| {worst_sum:.1e} over {invocations} band searches"
        ),
    )
}

fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

fn truth_vector(img: &RasterImage, bbox: Rect, head: &Circle) -> Option<FeatureVector> {
    features_in_box(img, bbox, Some(head), &PipelineConfig::default()).ok().map(|f| f.vector)
}

/// Components closer to zero than this are compared absolutely.
const INVARIANCE_FLOOR: f64 = 1e-3;

fn invariance() -> Verdict {
    let (mut worst_scale, mut worst_mirror) = (0.0f64, 0.0f64);
    let mut translation_exact = true;
    let mut failures = 0;
    for i in 0..12 {
        let (_, mut p) = corpus_item(i, 0.15, 21);
        let (img, t): (RasterImage, SynthFaceTruth) = render_face(&p).unwrap();
        let Some(base) = truth_vector(&img, t.face_bbox, &t.head) else {
            failures += 1;
            continue;
        };

        let b = t.face_bbox;
        let up_box = Rect::new(2 * b.x1, 2 * b.y1, 2 * b.x2 + 1, 2 * b.y2 + 1);
        let up_head = Circle { cx: 2.0 * t.head.cx + 0.5, cy: 2.0 * t.head.cy + 0.5, r: 2.0 * t.head.r, score: 0.0 };
        match truth_vector(&img.upscale(2), up_box, &up_head) {
            Some(up) => {
                for (a, c) in base.to_array().iter().zip(up.to_array()) {
                    worst_scale = worst_scale.max(rel_err(*a, c, INVARIANCE_FLOOR));
                }
            }
            None => failures += 1,
        }

        let w = img.width();
        let m_box = Rect::new(w - 1 - b.x2, b.y1, w - 1 - b.x1, b.y2);
        let m_head = Circle { cx: (w - 1) as f64 - t.head.cx, ..t.head };
        match truth_vector(&img.flip_horizontal(), m_box, &m_head) {
            Some(m) => {
                for (a, c) in base.to_array().iter().zip(m.to_array()) {
                    worst_mirror = worst_mirror.max(rel_err(*a, c, INVARIANCE_FLOOR));
                }
            }
            None => failures += 1,
        }

        let (dx, dy) = (23 + 3 * i, 9 + 2 * i);
        p.width += dx + 10;
        p.height += dy + 10;
        p.head_cx += dx as f64;
        p.head_cy += dy as f64;
        let (img2, t2) = render_face(&p).unwrap();
        match truth_vector(&img2, t2.face_bbox, &t2.head) {
            Some(moved) => {
                translation_exact &= base.to_array().map(f64::to_bits) == moved.to_array().map(f64::to_bits);
            }
            None => failures += 1,
        }
    }
    // informational: with detection choosing the box at each size, the boxes
    // differ by half a pixel and the curvature terms move with the sampling grid
    let cfg = PipelineConfig::default();
    let mut worst_detected = 0.0f64;
    for i in 0..6 {
        let (_, p) = corpus_item(i, 0.15, 21);
        let (img, _) = render_face(&p).unwrap();
        match (analyze(&img, &cfg), analyze(&img.upscale(2), &cfg)) {
            (Ok(a), Ok(b)) => {
                for (x, y) in a.features.vector.to_array().iter().zip(b.features.vector.to_array()) {
                    worst_detected = worst_detected.max(rel_err(*x, y, INVARIANCE_FLOOR));
                }
            }
            _ => failures += 1,
        }
    }
    let pass = failures == 0 && worst_scale <= 0.05 && worst_mirror <= 0.02 && translation_exact;
    Verdict::check(
        pass,
        format!(
            "12 faces: worst 2x scale change {:.2}% (scaled box; {:.1}% with independently detected boxes, not gated), worst mirror change {:.2}%, translation bit-exact {translation_exact}, {failures} extraction failures",
            100.0 * worst_scale,
            100.0 * worst_detected,
            100.0 * worst_mirror
        ),
    )
}

struct Tiny {
    samples: Vec<LabeledSample<i8>>,
    kernel: KernelSpec,
}

const TINY_C: f64 = 1.0;

impl Tiny {
    fn random(rng: &mut ChaCha8Rng) -> Tiny {
        let mut labels = [1i8, 1, -1, -1];
        for i in (1..4).rev() {
            labels.swap(i, rng.gen_range(0..=i));
        }
        let samples = labels.iter().map(|&y| LabeledSample::new(vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)], y)).collect();
        let kernel = if rng.gen_bool(0.5) { KernelSpec::Linear } else { KernelSpec::Rbf { gamma: rng.gen_range(0.2..2.0) } };
        Tiny { samples, kernel }
    }

    fn y(&self, i: usize) -> f64 {
        f64::from(self.samples[i].y)
    }

    fn q(&self) -> [[f64; 4]; 4] {
        let mut q = [[0.0; 4]; 4];
        for (i, row) in q.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let (a, b) = (&self.samples[i], &self.samples[j]);
                *v = f64::from(a.y) * f64::from(b.y) * kernel_eval(&self.kernel, &a.x, &b.x).unwrap();
            }
        }
        q
    }

    fn complete(&self, a0: f64, a1: f64, a2: f64) -> Option<[f64; 4]> {
        let a3 = -self.y(3) * (self.y(0) * a0 + self.y(1) * a1 + self.y(2) * a2);
        (-1e-12..=TINY_C + 1e-12).contains(&a3).then(|| [a0, a1, a2, a3.clamp(0.0, TINY_C)])
    }
}

fn tiny_objective(q: &[[f64; 4]; 4], a: &[f64; 4]) -> f64 {
    let mut quad = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            quad += a[i] * a[j] * q[i][j];
        }
    }
    a.iter().sum::<f64>() - 0.5 * quad
}

/// Grid over two multipliers; the third is maximized exactly along its
/// feasible segment, the fourth follows from the equality constraint.
fn grid_oracle(p: &Tiny, step: f64) -> f64 {
    let q = p.q();
    let n = (TINY_C / step).round() as usize;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=n {
        for j in 0..=n {
            let (a0, a1) = (i as f64 * step, j as f64 * step);
            let base = -p.y(3) * (p.y(0) * a0 + p.y(1) * a1);
            let slope = -p.y(3) * p.y(2);
            let (mut lo, mut hi) = (0.0f64, TINY_C);
            if slope > 0.0 {
                lo = lo.max(-base);
                hi = hi.min(TINY_C - base);
            } else {
                lo = lo.max(base - TINY_C);
                hi = hi.min(base);
            }
            if lo > hi + 1e-12 {
                continue;
            }
            let eval = |a2: f64| p.complete(a0, a1, a2.clamp(lo, hi)).map_or(f64::NEG_INFINITY, |a| tiny_objective(&q, &a));
            let (f0, f1, f2) = (eval(lo), eval((lo + hi) / 2.0), eval(hi));
            let mut cand = f0.max(f1).max(f2);
            let h = (hi - lo) / 2.0;
            let curv = f0 - 2.0 * f1 + f2;
            if h > 0.0 && curv < 0.0 {
                cand = cand.max(eval((lo + hi) / 2.0 + h * (f0 - f2) / (2.0 * curv)));
            }
            best = best.max(cand);
        }
    }
    best
}

/// Coarse 3-D grid refined around the incumbent down to 1e-9 spacing.
fn refined_oracle(p: &Tiny) -> f64 {
    let q = p.q();
    let mut step = TINY_C / 40.0;
    let mut center = [TINY_C / 2.0; 3];
    let mut radius = 20isize;
    let mut best = (f64::NEG_INFINITY, center);
    while step > 1e-9 {
        for i in -radius..=radius {
            for j in -radius..=radius {
                for k in -radius..=radius {
                    let a = [
                        (center[0] + i as f64 * step).clamp(0.0, TINY_C),
                        (center[1] + j as f64 * step).clamp(0.0, TINY_C),
                        (center[2] + k as f64 * step).clamp(0.0, TINY_C),
                    ];
                    if let Some(full) = p.complete(a[0], a[1], a[2]) {
                        let v = tiny_objective(&q, &full);
                        if v > best.0 {
                            best = (v, a);
                        }
                    }
                }
            }
        }
        center = best.1;
        step /= 4.0;
        radius = 8;
    }
    best.0
}

/// Largest pointwise KKT violation of a trained binary model.
fn kkt_residual(samples: &[LabeledSample<i8>], alphas: &[f64], c: f64, decision: impl Fn(&[f64]) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for (a, s) in alphas.iter().zip(samples) {
        let yf = f64::from(s.y) * decision(&s.x);
        let r = if *a <= ALPHA_EPS {
            (1.0 - yf).max(0.0)
        } else if *a >= c - ALPHA_EPS {
            (yf - 1.0).max(0.0)
        } else {
            (yf - 1.0).abs()
        };
        worst = worst.max(r);
    }
    worst
}

fn smo_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let default_cfg = TrainConfig { c: TINY_C, ..TrainConfig::default() };
    let tight_cfg = TrainConfig { kkt_tol: 1e-6, ..default_cfg.clone() };
    let (mut gap_grid, mut gap_refined, mut gap_refined_default) = (0.0f64, 0.0f64, 0.0f64);
    let mut kkt_ok = true;
    let mut monotone = true;
    let mut models = 0;
    let mut check = |samples: &[LabeledSample<i8>], kernel: &KernelSpec, cfg: &TrainConfig| {
        let tr = train_binary(samples, kernel, cfg).unwrap();
        monotone &= tr.objective_trace.windows(2).all(|w| w[1] >= w[0]);
        if tr.model.converged {
            models += 1;
            let r = kkt_residual(samples, &tr.alphas, cfg.c, |x| tr.model.decision(x).unwrap());
            kkt_ok &= r <= cfg.kkt_tol;
        }
        dual_objective(samples, &tr.alphas, kernel)
    };
    for _ in 0..100 {
        let p = Tiny::random(&mut rng);
        let refined = refined_oracle(&p);
        let at_default = check(&p.samples, &p.kernel, &default_cfg);
        gap_grid = gap_grid.max((at_default - grid_oracle(&p, 1e-3)).abs());
        gap_refined_default = gap_refined_default.max((at_default - refined).abs());
        gap_refined = gap_refined.max((check(&p.samples, &p.kernel, &tight_cfg) - refined).abs());
    }
    // larger random problems for KKT and monotonicity
    for k in 0..60 {
        let n = rng.gen_range(6..30);
        let samples: Vec<LabeledSample<i8>> = (0..n)
            .map(|i| LabeledSample::new(vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)], if i % 2 == 0 { 1 } else { -1 }))
            .collect();
        let kernel = [KernelSpec::Linear, KernelSpec::Rbf { gamma: 0.7 }, KernelSpec::Polynomial { degree: 2, coef0: 1.0 }][k % 3];
        let cfg = TrainConfig { c: [0.5, 1.0, 10.0][k % 3], max_passes: 2000, ..TrainConfig::default() };
        check(&samples, &kernel, &cfg);
    }

    let two = [LabeledSample::new(vec![-1.0, 0.0], -1i8), LabeledSample::new(vec![1.0, 0.0], 1)];
    let tr = train_binary(&two, &KernelSpec::Linear, &TrainConfig::default()).unwrap();
    let m = &tr.model;
    let probes = [[5.0, 0.0], [-2.5, 1.0], [0.3, -4.0]];
    let two_point_ok = m.converged
        && m.bias.abs() <= 1e-6
        && probes.iter().all(|x| (m.decision(x).unwrap() - x[0]).abs() <= 1e-6);

    let pass = gap_grid <= 1e-3 && gap_refined <= 1e-6 && kkt_ok && monotone && two_point_ok;
    Verdict::check(
        pass,
        format!(
            "grid gap {gap_grid:.1e}, refined gap {gap_refined:.1e} at kkt_tol 1e-6 ({gap_refined_default:.1e} at default tol), KKT within tol on {models} converged models {kkt_ok}, monotone {monotone}, two-point bias {:.1e}",
            m.bias
        ),
    )
}

fn moodpipe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moodpipe")).args(args).output().expect("run moodpipe")
}

fn ok_stdout(args: &[&str]) -> Result<String, String> {
    let out = moodpipe(args);
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!("`moodpipe {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn end_to_end(work: &Path) -> Verdict {
    let start = Instant::now();
    let train_dir = work.join("train");
    let test_dir = work.join("test");
    let model = work.join("model.txt");
    let run = || -> Result<String, String> {
        ok_stdout(&["synth", "--n", "30", "--jitter", "0.15", "--seed", "7", "--out", s(&train_dir)])?;
        ok_stdout(&["synth", "--n", "15", "--jitter", "0.15", "--seed", "1007", "--out", s(&test_dir)])?;
        ok_stdout(&["train", "--manifest", s(&train_dir.join("manifest.csv")), "--model", s(&model)])?;
        ok_stdout(&[
            "eval",
            "--manifest",
            s(&test_dir.join("manifest.csv")),
            "--model",
            s(&model),
            "--train-manifest",
            s(&train_dir.join("manifest.csv")),
        ])
    };
    let table = match run() {
        Ok(t) => t,
        Err(e) => return Verdict::check(false, e),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let rows: Vec<(String, f64)> = table
        .lines()
        .skip(1)
        .take(7)
        .filter_map(|l| {
            let mut it = l.split_whitespace();
            Some((it.next()?.to_string(), it.next()?.trim_end_matches('%').parse().ok()?))
        })
        .collect();
    let expected: Vec<&str> = Expression::REPORT_ORDER.iter().map(|e| e.name()).chain(["Average"]).collect();
    let order_ok = rows.iter().map(|r| r.0.as_str()).eq(expected.iter().copied());
    let average = rows.last().map_or(0.0, |r| r.1);
    let pass = order_ok && average >= 90.0 && elapsed <= 300.0;
    let per_class: Vec<String> = rows.iter().map(|(n, a)| format!("{n} {a:.1}")).collect();
    Verdict::check(pass, format!("{}; row order ok {order_ok}; train+eval {elapsed:.1} s", per_class.join(", ")))
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .map(|rd| {
            rd.filter_map(Result::ok)
                .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap_or_default()))
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

fn persistence(work: &Path) -> Verdict {
    let train_manifest = work.join("train").join("manifest.csv");
    let test_manifest = work.join("test").join("manifest.csv");
    let model_path = work.join("model.txt");
    let run = || -> Result<String, String> {
        // in-process model versus the reloaded file, on every test vector
        let feats = work.join("test_features.csv");
        ok_stdout(&["features", "--manifest", s(&test_manifest), "--out", s(&feats)])?;
        let rows = load_features_csv(&feats).map_err(|e| e.to_string())?;
        let train_feats = work.join("train_features.csv");
        ok_stdout(&["features", "--manifest", s(&train_manifest), "--out", s(&train_feats)])?;
        let cfg = PipelineConfig::default();
        let train_rows = load_features_csv(&train_feats).map_err(|e| e.to_string())?;
        let samples: Vec<LabeledSample<Expression>> =
            train_rows.iter().map(|(_, e, v)| LabeledSample::new(v.to_array().to_vec(), *e)).collect();
        let fresh = moodpipe::svm::train_multiclass(&samples, &cfg.kernel, &cfg.train).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        fresh.save(&mut buf).map_err(|e| e.to_string())?;
        let loaded = MultiClassSvmModel::load(&buf[..]).map_err(|e| e.to_string())?;
        let mut mismatches = 0;
        for (_, _, v) in &rows {
            let a = predict_expression(&fresh, &v.to_array()).map_err(|e| e.to_string())?;
            let b = predict_expression(&loaded, &v.to_array()).map_err(|e| e.to_string())?;
            let bits = |p: &moodpipe::svm::Prediction| p.pair_scores.iter().map(|s| s.2.to_bits()).collect::<Vec<_>>();
            if a.label != b.label || a.votes != b.votes || bits(&a) != bits(&b) {
                mismatches += 1;
            }
        }
        if mismatches > 0 {
            return Err(format!("{mismatches}/{} predictions differ after reload", rows.len()));
        }

        // every seeded command twice
        let mut differing = Vec::new();
        let synth_a = work.join("det_a");
        let synth_b = work.join("det_b");
        ok_stdout(&["synth", "--n", "4", "--seed", "99", "--out", s(&synth_a)])?;
        ok_stdout(&["synth", "--n", "4", "--seed", "99", "--out", s(&synth_b)])?;
        if tree_bytes(&synth_a) != tree_bytes(&synth_b) || tree_bytes(&synth_a).is_empty() {
            differing.push("synth");
        }
        let (m1, m2) = (work.join("m1.txt"), work.join("m2.txt"));
        ok_stdout(&["train", "--features", s(&train_feats), "--model", s(&m1)])?;
        ok_stdout(&["train", "--features", s(&train_feats), "--model", s(&m2)])?;
        if fs::read(&m1).ok() != fs::read(&m2).ok() || fs::read(&m1).ok() != fs::read(&model_path).ok() {
            differing.push("train");
        }
        let image = work.join("test").join("face_00003.ppm");
        let twice = |args: &[&str]| -> Result<bool, String> { Ok(ok_stdout(args)? == ok_stdout(args)?) };
        if !twice(&["detect", s(&image)])? {
            differing.push("detect");
        }
        if !twice(&["extract", s(&image)])? {
            differing.push("extract");
        }
        if !twice(&["predict", s(&image), "--model", s(&m1)])? {
            differing.push("predict");
        }
        if !twice(&["eval", "--manifest", s(&test_manifest), "--model", s(&m1), "--csv"])? {
            differing.push("eval");
        }
        let csv = ok_stdout(&["eval", "--manifest", s(&test_manifest), "--model", s(&m1), "--csv"])?;
        parse_eval_csv(&csv)?;
        if !differing.is_empty() {
            return Err(format!("non-deterministic: {}", differing.join(", ")));
        }
        Ok(format!(
            "{} test predictions bit-identical after reload; synth, train, detect, extract, predict, eval repeat byte-for-byte",
            rows.len()
        ))
    };
    match run() {
        Ok(d) => Verdict::check(true, d),
        Err(e) => Verdict::check(false, e),
    }
}
