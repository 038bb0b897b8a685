use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{KernelSpec, LabeledSample, SvmError, TrainConfig};

/// Multipliers at or below this are treated as zero.
pub const ALPHA_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvmModel {
    pub kernel: KernelSpec,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
}

impl BinarySvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    /// Signed decision value `f(x) = Σ αᵢyᵢK(xᵢ, x) + b`.
    pub fn decision(&self, x: &[f64]) -> Result<f64, SvmError> {
        if x.len() != self.dim() {
            return Err(SvmError::DimensionError { expected: self.dim(), actual: x.len() });
        }
        Ok(self.support_vectors.iter().zip(&self.coef).map(|(sv, c)| c * self.kernel.apply(sv, x)).sum::<f64>() + self.bias)
    }

    pub fn predict(&self, x: &[f64]) -> Result<i8, SvmError> {
        Ok(if self.decision(x)? >= 0.0 { 1 } else { -1 })
    }
}

/// Result of one SMO run, with the diagnostics tests rely on.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryTraining {
    pub model: BinarySvmModel,
    /// Final multiplier of every training sample.
    pub alphas: Vec<f64>,
    /// Dual objective after each pair update, starting from zero.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

/// `Σα − ½ΣΣ αᵢαⱼyᵢyⱼK(xᵢ,xⱼ)` evaluated directly.
pub fn dual_objective(samples: &[LabeledSample<i8>], alphas: &[f64], kernel: &KernelSpec) -> f64 {
    let mut quad = 0.0;
    for (i, a) in samples.iter().enumerate() {
        for (j, b) in samples.iter().enumerate() {
            quad += alphas[i] * alphas[j] * f64::from(a.y) * f64::from(b.y) * kernel.apply(&a.x, &b.x);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Soft-margin SVM by SMO with maximal-violating-pair selection.
///
/// Training stops once the largest KKT violation gap falls to `kkt_tol`, or
/// after `max_passes * n` pair updates, in which case the model is flagged
/// unconverged.
pub fn train_binary(samples: &[LabeledSample<i8>], kernel: &KernelSpec, cfg: &TrainConfig) -> Result<BinaryTraining, SvmError> {
    kernel.validate()?;
    cfg.validate()?;
    if samples.is_empty() {
        return Err(SvmError::EmptyDataset);
    }
    let dim = samples[0].x.len();
    for s in samples {
        if s.x.len() != dim {
            return Err(SvmError::DimensionError { expected: dim, actual: s.x.len() });
        }
        if s.y != 1 && s.y != -1 {
            return Err(SvmError::InvalidConfig(format!("binary labels must be +1 or -1, got {}", s.y)));
        }
        if s.x.iter().any(|v| !v.is_finite()) {
            return Err(SvmError::InvalidConfig("non-finite feature value".into()));
        }
    }
    if !(samples.iter().any(|s| s.y == 1) && samples.iter().any(|s| s.y == -1)) {
        return Err(SvmError::DegenerateLabels);
    }

    let n = samples.len();
    let c = cfg.c;
    let y: Vec<f64> = samples.iter().map(|s| f64::from(s.y)).collect();
    let gram: Vec<Vec<f64>> = samples.iter().map(|a| samples.iter().map(|b| kernel.apply(&a.x, &b.x)).collect()).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));

    let mut alpha = vec![0.0; n];
    // gradient of the minimization form ½αᵀQα − Σα
    let mut grad = vec![-1.0; n];
    let mut objective = 0.0;
    let mut trace = vec![objective];
    let budget = cfg.max_passes.saturating_mul(n);
    let mut iterations = 0;
    let mut converged = false;

    let up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let low = |a: f64, yt: f64| (yt < 0.0 && a < c) || (yt > 0.0 && a > 0.0);

    loop {
        let mut best_up: Option<(usize, f64)> = None;
        let mut best_low: Option<(usize, f64)> = None;
        for &t in &order {
            let v = -y[t] * grad[t];
            if up(alpha[t], y[t]) && best_up.map_or(true, |(_, m)| v > m) {
                best_up = Some((t, v));
            }
            if low(alpha[t], y[t]) && best_low.map_or(true, |(_, m)| v < m) {
                best_low = Some((t, v));
            }
        }
        let (Some((i, m)), Some((j, big_m))) = (best_up, best_low) else {
            converged = true;
            break;
        };
        if m - big_m <= cfg.kkt_tol {
            converged = true;
            break;
        }
        if iterations >= budget {
            break;
        }
        iterations += 1;

        // move t along α_i += y_i t, α_j −= y_j t, which keeps Σαy fixed
        let slope = m - big_m;
        let eta = gram[i][i] + gram[j][j] - 2.0 * gram[i][j];
        let bound_i = if y[i] > 0.0 { c - alpha[i] } else { alpha[i] };
        let bound_j = if y[j] > 0.0 { alpha[j] } else { c - alpha[j] };
        let bound = bound_i.min(bound_j);
        let t = if eta > 1e-12 { (slope / eta).min(bound) } else { bound };

        let new_i = if t == bound_i { if y[i] > 0.0 { c } else { 0.0 } } else { alpha[i] + y[i] * t };
        let new_j = if t == bound_j { if y[j] > 0.0 { 0.0 } else { c } } else { alpha[j] - y[j] * t };
        alpha[i] = new_i.clamp(0.0, c);
        alpha[j] = new_j.clamp(0.0, c);
        for k in 0..n {
            grad[k] += y[k] * t * (gram[k][i] - gram[k][j]);
        }
        objective += t * slope - 0.5 * eta * t * t;
        trace.push(objective);
    }

    let free: Vec<usize> = (0..n).filter(|&t| alpha[t] > ALPHA_EPS && alpha[t] < c - ALPHA_EPS).collect();
    let bias = if free.is_empty() {
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if up(alpha[t], y[t]) {
                hi = hi.max(v);
            }
            if low(alpha[t], y[t]) {
                lo = lo.min(v);
            }
        }
        match (hi.is_finite(), lo.is_finite()) {
            (true, true) => (hi + lo) / 2.0,
            (true, false) => hi,
            (false, true) => lo,
            (false, false) => 0.0,
        }
    } else {
        free.iter().map(|&t| -y[t] * grad[t]).sum::<f64>() / free.len() as f64
    };

    let sv: Vec<usize> = (0..n).filter(|&t| alpha[t] > ALPHA_EPS).collect();
    let model = BinarySvmModel {
        kernel: *kernel,
        support_vectors: sv.iter().map(|&t| samples[t].x.clone()).collect(),
        coef: sv.iter().map(|&t| alpha[t] * y[t]).collect(),
        bias,
        converged,
    };
    Ok(BinaryTraining { model, alphas: alpha, objective_trace: trace, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(x: &[f64], y: i8) -> LabeledSample<i8> {
        LabeledSample::new(x.to_vec(), y)
    }

    #[test]
    fn two_point_problem_is_analytic() {
        let data = [s(&[-1.0, 0.0], -1), s(&[1.0, 0.0], 1)];
        let cfg = TrainConfig { c: 10.0, ..TrainConfig::default() };
        let tr = train_binary(&data, &KernelSpec::Linear, &cfg).unwrap();
        let m = &tr.model;
        assert!(m.converged);
        assert!(m.bias.abs() <= 1e-6);
        for a in &tr.alphas {
            assert!((a - 0.5).abs() < 1e-9);
        }
        assert!((m.decision(&[5.0, 0.0]).unwrap() - 5.0).abs() < 1e-6);
        assert!(m.decision(&[0.0, 0.0]).unwrap().abs() < 1e-9);
        assert!((m.decision(&[1.0, 3.0]).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn xor_with_rbf() {
        let data = [s(&[0.0, 0.0], -1), s(&[1.0, 1.0], -1), s(&[0.0, 1.0], 1), s(&[1.0, 0.0], 1)];
        let cfg = TrainConfig { c: 10.0, ..TrainConfig::default() };
        let tr = train_binary(&data, &KernelSpec::Rbf { gamma: 1.0 }, &cfg).unwrap();
        for d in &data {
            assert_eq!(tr.model.predict(&d.x).unwrap(), d.y);
        }
    }

    #[test]
    fn single_class_is_degenerate() {
        let data = [s(&[0.0], 1), s(&[1.0], 1)];
        assert_eq!(train_binary(&data, &KernelSpec::Linear, &TrainConfig::default()), Err(SvmError::DegenerateLabels));
    }

    #[test]
    fn tiny_budget_flags_unconverged() {
        let data: Vec<_> = (0..20).map(|i| s(&[i as f64 * 0.1, (i % 3) as f64], if i % 2 == 0 { 1 } else { -1 })).collect();
        let cfg = TrainConfig { max_passes: 1, kkt_tol: 1e-12, ..TrainConfig::default() };
        let tr = train_binary(&data, &KernelSpec::Rbf { gamma: 0.5 }, &cfg).unwrap();
        assert!(!tr.model.converged);
        assert_eq!(tr.iterations, 20);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let data: Vec<_> = (0..30).map(|i| s(&[(i as f64).sin(), (i as f64 * 0.7).cos()], if i % 3 == 0 { 1 } else { -1 })).collect();
        let cfg = TrainConfig { seed: 42, ..TrainConfig::default() };
        let a = train_binary(&data, &KernelSpec::default(), &cfg).unwrap();
        let b = train_binary(&data, &KernelSpec::default(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    fn problem() -> impl Strategy<Value = Vec<LabeledSample<i8>>> {
        proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 6..25).prop_map(|pts| {
            pts.iter().enumerate().map(|(i, &(a, b))| s(&[a, b], if i % 2 == 0 { 1 } else { -1 })).collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn dual_feasibility_and_kkt(data in problem(), ci in 0usize..3, ki in 0usize..3) {
            let c = [0.5, 1.0, 10.0][ci];
            let kernel = [KernelSpec::Linear, KernelSpec::Rbf { gamma: 0.7 }, KernelSpec::Polynomial { degree: 2, coef0: 1.0 }][ki];
            let cfg = TrainConfig { c, max_passes: 2000, ..TrainConfig::default() };
            let tr = train_binary(&data, &kernel, &cfg).unwrap();
            let sum: f64 = tr.alphas.iter().zip(&data).map(|(a, d)| a * f64::from(d.y)).sum();
            prop_assert!(sum.abs() <= 1e-9);
            prop_assert!(tr.alphas.iter().all(|&a| (0.0..=c).contains(&a)));
            for w in tr.objective_trace.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12);
            }
            let direct = dual_objective(&data, &tr.alphas, &kernel);
            prop_assert!((direct - tr.objective_trace.last().unwrap()).abs() <= 1e-6 * direct.abs().max(1.0));
            if tr.model.converged {
                let tol = cfg.kkt_tol + 1e-9;
                for (a, d) in tr.alphas.iter().zip(&data) {
                    let yf = f64::from(d.y) * tr.model.decision(&d.x).unwrap();
                    if *a <= ALPHA_EPS {
                        prop_assert!(yf >= 1.0 - tol, "alpha 0, yf {}", yf);
                    } else if *a >= c - ALPHA_EPS {
                        prop_assert!(yf <= 1.0 + tol, "alpha C, yf {}", yf);
                    } else {
                        prop_assert!((yf - 1.0).abs() <= tol, "free, yf {}", yf);
                    }
                }
            }
        }
    }
}
