//! SMO against an exhaustive search of the dual on tiny problems.

use moodpipe::svm::{dual_objective, kernel_eval, train_binary, KernelSpec, LabeledSample, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C: f64 = 1.0;

struct Problem {
    samples: Vec<LabeledSample<i8>>,
    kernel: KernelSpec,
}

impl Problem {
    fn random(rng: &mut ChaCha8Rng) -> Problem {
        let mut labels = [1i8, 1, -1, -1];
        for i in (1..4).rev() {
            labels.swap(i, rng.gen_range(0..=i));
        }
        let samples = labels.iter().map(|&y| LabeledSample::new(vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)], y)).collect();
        let kernel = if rng.gen_bool(0.5) { KernelSpec::Linear } else { KernelSpec::Rbf { gamma: rng.gen_range(0.2..2.0) } };
        Problem { samples, kernel }
    }

    fn q(&self) -> [[f64; 4]; 4] {
        let mut q = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let (a, b) = (&self.samples[i], &self.samples[j]);
                q[i][j] = f64::from(a.y) * f64::from(b.y) * kernel_eval(&self.kernel, &a.x, &b.x).unwrap();
            }
        }
        q
    }

    fn y(&self, i: usize) -> f64 {
        f64::from(self.samples[i].y)
    }
}

fn objective(q: &[[f64; 4]; 4], a: &[f64; 4]) -> f64 {
    let mut quad = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            quad += a[i] * a[j] * q[i][j];
        }
    }
    a.iter().sum::<f64>() - 0.5 * quad
}

/// `alpha_3` from the equality constraint, if it lands inside the box.
fn complete(p: &Problem, a0: f64, a1: f64, a2: f64) -> Option<[f64; 4]> {
    let a3 = -p.y(3) * (p.y(0) * a0 + p.y(1) * a1 + p.y(2) * a2);
    (-1e-12..=C + 1e-12).contains(&a3).then(|| [a0, a1, a2, a3.clamp(0.0, C)])
}

/// Grid over `(alpha_0, alpha_1)` with the given step; along the remaining
/// free direction the objective is a concave parabola, maximized exactly.
fn grid_oracle(p: &Problem, step: f64) -> f64 {
    let q = p.q();
    let n = (C / step).round() as usize;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=n {
        for j in 0..=n {
            let (a0, a1) = (i as f64 * step, j as f64 * step);
            // feasible alpha_2 interval: alpha_3 = base + slope * alpha_2
            let base = -p.y(3) * (p.y(0) * a0 + p.y(1) * a1);
            let slope = -p.y(3) * p.y(2);
            let (mut lo, mut hi) = (0.0f64, C);
            if slope > 0.0 {
                lo = lo.max(-base);
                hi = hi.min(C - base);
            } else {
                lo = lo.max(base - C);
                hi = hi.min(base);
            }
            if lo > hi + 1e-12 {
                continue;
            }
            let eval = |a2: f64| complete(p, a0, a1, a2.clamp(lo, hi)).map_or(f64::NEG_INFINITY, |a| objective(&q, &a));
            // parabola through three samples
            let (f0, f1, f2) = (eval(lo), eval((lo + hi) / 2.0), eval(hi));
            let mut cand = f0.max(f1).max(f2);
            let h = (hi - lo) / 2.0;
            let curv = f0 - 2.0 * f1 + f2;
            if h > 0.0 && curv < 0.0 {
                let t = (lo + hi) / 2.0 + h * (f0 - f2) / (2.0 * curv);
                cand = cand.max(eval(t));
            }
            best = best.max(cand);
        }
    }
    best
}

/// Coarse 3-D grid followed by repeated local refinement around the best point.
fn refined_oracle(p: &Problem) -> f64 {
    let q = p.q();
    let mut step = C / 40.0;
    let mut center = [C / 2.0; 3];
    let mut radius = 20isize;
    let mut best = (f64::NEG_INFINITY, center);
    while step > 1e-9 {
        for i in -radius..=radius {
            for j in -radius..=radius {
                for k in -radius..=radius {
                    let a = [
                        (center[0] + i as f64 * step).clamp(0.0, C),
                        (center[1] + j as f64 * step).clamp(0.0, C),
                        (center[2] + k as f64 * step).clamp(0.0, C),
                    ];
                    if let Some(full) = complete(p, a[0], a[1], a[2]) {
                        let v = objective(&q, &full);
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

#[test]
fn smo_matches_brute_force_on_random_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let default_cfg = TrainConfig { c: C, ..TrainConfig::default() };
    // stopping at a 1e-3 violation gap leaves up to ~2e-6 of objective unclaimed
    let tight_cfg = TrainConfig { kkt_tol: 1e-6, ..default_cfg.clone() };
    let (mut worst_grid, mut worst_refined) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = Problem::random(&mut rng);
        let smo = |cfg: &TrainConfig| {
            let tr = train_binary(&p.samples, &p.kernel, cfg).unwrap();
            assert!(tr.model.converged);
            dual_objective(&p.samples, &tr.alphas, &p.kernel)
        };
        worst_grid = worst_grid.max((smo(&default_cfg) - grid_oracle(&p, 1e-3)).abs());
        worst_refined = worst_refined.max((smo(&tight_cfg) - refined_oracle(&p)).abs());
    }
    assert!(worst_grid <= 1e-3, "grid gap {worst_grid}");
    assert!(worst_refined <= 1e-6, "refined gap {worst_refined}");
}

#[test]
fn linear_margin_equals_inverse_weight_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = TrainConfig { c: 1e3, kkt_tol: 1e-10, max_passes: 10_000, ..TrainConfig::default() };
    for _ in 0..20 {
        // two clouds separated along a random direction
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let (dx, dy) = (theta.cos(), theta.sin());
        let samples: Vec<LabeledSample<i8>> = (0..16)
            .map(|i| {
                let y = if i % 2 == 0 { 1i8 } else { -1 };
                let along = f64::from(y) * rng.gen_range(1.0..3.0);
                let across = rng.gen_range(-2.0..2.0);
                LabeledSample::new(vec![along * dx - across * dy, along * dy + across * dx], y)
            })
            .collect();
        let tr = train_binary(&samples, &KernelSpec::Linear, &cfg).unwrap();
        let m = &tr.model;
        assert!(m.converged);
        let mut w = [0.0; 2];
        for (c, sv) in m.coef.iter().zip(&m.support_vectors) {
            w[0] += c * sv[0];
            w[1] += c * sv[1];
        }
        let norm = w[0].hypot(w[1]);
        for (a, s) in tr.alphas.iter().zip(&samples) {
            if *a > 1e-9 && *a < cfg.c - 1e-9 {
                let dist = (w[0] * s.x[0] + w[1] * s.x[1] + m.bias).abs() / norm;
                assert!((dist - 1.0 / norm).abs() <= 1e-6, "{dist} vs {}", 1.0 / norm);
            }
        }
        for s in &samples {
            assert_eq!(m.predict(&s.x).unwrap(), s.y);
        }
    }
}

#[test]
fn margin_support_vectors_sit_on_the_margin() {
    let samples = vec![
        LabeledSample::new(vec![0.0, 0.0], -1i8),
        LabeledSample::new(vec![0.5, 1.0], -1),
        LabeledSample::new(vec![2.0, 0.0], 1),
        LabeledSample::new(vec![3.0, 1.5], 1),
    ];
    let cfg = TrainConfig::default();
    let tr = train_binary(&samples, &KernelSpec::Linear, &cfg).unwrap();
    for (a, s) in tr.alphas.iter().zip(&samples) {
        if *a > 1e-9 && *a < cfg.c - 1e-9 {
            let yf = f64::from(s.y) * tr.model.decision(&s.x).unwrap();
            assert!((yf - 1.0).abs() <= cfg.kkt_tol);
        }
    }
}
