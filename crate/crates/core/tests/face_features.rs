use moodpipe::config::PipelineConfig;
use moodpipe::facedetect::detect_faces;
use moodpipe::featvec::FeatureVector;
use moodpipe::imgcore::{Circle, RasterImage, Rect};
use moodpipe::pipeline::{analyze, features_in_box};
use moodpipe::synthface::{corpus_item, expression_preset, render_face, FaceParams, SynthFaceTruth};
use moodpipe::Expression;
use proptest::prelude::*;

fn truth_features(img: &RasterImage, t: &SynthFaceTruth) -> FeatureVector {
    features_in_box(img, t.face_bbox, Some(&t.head), &PipelineConfig::default()).unwrap().vector
}

fn render(p: &FaceParams) -> (RasterImage, SynthFaceTruth) {
    render_face(p).unwrap()
}

fn rel_close(a: f64, b: f64, tol: f64, floor: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(floor)
}

#[test]
fn surprise_raises_brows_and_opens_mouth() {
    let (img, t) = render(&FaceParams::default());
    let neutral = truth_features(&img, &t);
    let (img, t) = render(&expression_preset(Expression::Surprise, 0.0, 3));
    let surprise = truth_features(&img, &t);
    assert!(surprise.he > neutral.he, "{surprise:?} vs {neutral:?}");
    assert!(surprise.hm > neutral.hm, "{surprise:?} vs {neutral:?}");
}

#[test]
fn corner_lift_raises_upper_curvature() {
    let flat = FaceParams::default();
    let mut lifted = flat.clone();
    lifted.corner_lift = 0.3;
    let (img, t) = render(&flat);
    let f0 = truth_features(&img, &t);
    let (img, t) = render(&lifted);
    let f1 = truth_features(&img, &t);
    assert!(f1.rul > f0.rul, "{} vs {}", f1.rul, f0.rul);
}

#[test]
fn preset_orderings_survive_measurement() {
    let feats: Vec<(Expression, FeatureVector)> = Expression::ALL
        .iter()
        .map(|&e| {
            let (img, t) = render(&expression_preset(e, 0.0, 0));
            (e, truth_features(&img, &t))
        })
        .collect();
    let argmax = |f: fn(&FeatureVector) -> f64| feats.iter().max_by(|a, b| f(&a.1).total_cmp(&f(&b.1))).unwrap().0;
    assert_eq!(argmax(|v| v.hm), Expression::Surprise);
    assert_eq!(argmax(|v| v.he), Expression::Surprise);
    assert_eq!(argmax(|v| v.rul), Expression::Joy);
}

#[test]
fn integer_upscale_keeps_features() {
    for e in [Expression::Joy, Expression::Surprise, Expression::Anger] {
        let (img, t) = render(&expression_preset(e, 0.1, 11));
        let base = truth_features(&img, &t);
        let big = img.upscale(2);
        let b = t.face_bbox;
        let bbox = Rect::new(2 * b.x1, 2 * b.y1, 2 * b.x2 + 1, 2 * b.y2 + 1);
        let head = Circle { cx: 2.0 * t.head.cx + 0.5, cy: 2.0 * t.head.cy + 0.5, r: 2.0 * t.head.r, score: 0.0 };
        let up = features_in_box(&big, bbox, Some(&head), &PipelineConfig::default()).unwrap().vector;
        for (a, b) in base.to_array().iter().zip(up.to_array()) {
            assert!(rel_close(*a, b, 0.05, 1e-3), "{e}: {base:?} vs {up:?}");
        }
    }
}

#[test]
fn detected_upscale_keeps_features() {
    let (img, _) = render(&expression_preset(Expression::Sadness, 0.0, 0));
    let cfg = PipelineConfig::default();
    let a = analyze(&img, &cfg).unwrap().features.vector;
    let b = analyze(&img.upscale(2), &cfg).unwrap().features.vector;
    for (x, y) in a.to_array().iter().zip(b.to_array()) {
        assert!(rel_close(*x, y, 0.05, 1e-2), "{a:?} vs {b:?}");
    }
}

#[test]
fn translation_is_bit_exact() {
    let mut p = expression_preset(Expression::Fear, 0.15, 5);
    let (img, t) = render(&p);
    let base = truth_features(&img, &t);
    p.width += 40;
    p.height += 24;
    p.head_cx += 31.0;
    p.head_cy += 17.0;
    let (img2, t2) = render(&p);
    assert_eq!(t2.face_bbox.x1, t.face_bbox.x1 + 31);
    let moved = truth_features(&img2, &t2);
    assert_eq!(base.to_array().map(f64::to_bits), moved.to_array().map(f64::to_bits));
}

#[test]
fn mirrored_face_is_symmetric() {
    for seed in 0..4 {
        let (_, p) = corpus_item(seed as usize, 0.15, 99);
        let (img, t) = render(&p);
        let base = truth_features(&img, &t);
        let w = img.width();
        let b = t.face_bbox;
        let bbox = Rect::new(w - 1 - b.x2, b.y1, w - 1 - b.x1, b.y2);
        let head = Circle { cx: (w - 1) as f64 - t.head.cx, ..t.head };
        let m = features_in_box(&img.flip_horizontal(), bbox, Some(&head), &PipelineConfig::default()).unwrap().vector;
        for (a, c) in base.to_array().iter().zip(m.to_array()) {
            assert!(rel_close(*a, c, 0.02, 1e-3), "{base:?} vs {m:?}");
        }
    }
}

#[test]
fn corpus_features_are_finite_and_signed_correctly() {
    let cfg = PipelineConfig::default();
    for i in 0..12 {
        let (_, p) = corpus_item(i, 0.15, 7);
        let (img, _) = render(&p);
        let f = analyze(&img, &cfg).unwrap().features.vector;
        assert!(f.is_finite());
        assert!(f.he >= 0.0 && f.we >= 0.0 && f.hm >= 0.0 && f.wm >= 0.0 && f.nl >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rendered_faces_are_detected(index in 0usize..600, seed in 0u64..1000, jitter in 0.0f64..=0.2) {
        let (_, p) = corpus_item(index, jitter, seed);
        let (img, t) = render(&p);
        let dets = detect_faces(&img, &PipelineConfig::default().detect).unwrap();
        prop_assert!(!dets.is_empty());
        prop_assert!(dets[0].bbox.iou(&t.face_bbox) >= 0.5);
    }
}
