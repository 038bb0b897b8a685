use std::fmt::Write as _;

use super::{
    standardize_apply, standardize_fit, train_binary, BinarySvmModel, Expression, KernelSpec, LabeledSample, Scaler,
    SvmError, TrainConfig,
};

/// One unordered class pair; `positive` is the earlier class in canonical
/// order and takes the `+1` side.
#[derive(Debug, Clone, PartialEq)]
pub struct PairModel {
    pub positive: Expression,
    pub negative: Expression,
    /// `None` when either class had no training samples.
    pub model: Option<BinarySvmModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiClassSvmModel {
    pub kernel: KernelSpec,
    pub scaler: Scaler,
    pub pairs: Vec<PairModel>,
}

/// Class pairs in canonical order: (Anger, Fear), (Anger, Disgust), ...
pub fn class_pairs() -> Vec<(Expression, Expression)> {
    let mut out = Vec::with_capacity(15);
    for (i, &a) in Expression::ALL.iter().enumerate() {
        for &b in &Expression::ALL[i + 1..] {
            out.push((a, b));
        }
    }
    out
}

pub fn train_multiclass(
    samples: &[LabeledSample<Expression>],
    kernel: &KernelSpec,
    cfg: &TrainConfig,
) -> Result<MultiClassSvmModel, SvmError> {
    kernel.validate()?;
    cfg.validate()?;
    let mut present = [false; 6];
    for s in samples {
        present[s.y.index()] = true;
    }
    if samples.len() < 2 || present.iter().filter(|&&p| p).count() < 2 {
        return Err(SvmError::DegenerateLabels);
    }
    let xs: Vec<Vec<f64>> = samples.iter().map(|s| s.x.clone()).collect();
    let scaler = standardize_fit(&xs)?;
    let z: Vec<Vec<f64>> = xs.iter().map(|x| standardize_apply(&scaler, x)).collect::<Result<_, _>>()?;

    let mut pairs = Vec::with_capacity(15);
    for (positive, negative) in class_pairs() {
        let model = if present[positive.index()] && present[negative.index()] {
            let subset: Vec<LabeledSample<i8>> = samples
                .iter()
                .zip(&z)
                .filter(|(s, _)| s.y == positive || s.y == negative)
                .map(|(s, zx)| LabeledSample::new(zx.clone(), if s.y == positive { 1 } else { -1 }))
                .collect();
            Some(train_binary(&subset, kernel, cfg)?.model)
        } else {
            None
        };
        pairs.push(PairModel { positive, negative, model });
    }
    Ok(MultiClassSvmModel { kernel: *kernel, scaler, pairs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: Expression,
    /// Votes per class, canonical order.
    pub votes: [u32; 6],
    /// Decision value of every trained pair: `(positive, negative, f)`.
    pub pair_scores: Vec<(Expression, Expression, f64)>,
}

impl MultiClassSvmModel {
    pub fn dim(&self) -> usize {
        self.scaler.mean.len()
    }

    pub fn trained_pairs(&self) -> usize {
        self.pairs.iter().filter(|p| p.model.is_some()).count()
    }
}

/// Majority vote over the pairwise models. Ties go to the class whose
/// winning pairs have the largest summed `|f|`, then to canonical order.
pub fn predict_expression(m: &MultiClassSvmModel, x: &[f64]) -> Result<Prediction, SvmError> {
    let z = standardize_apply(&m.scaler, x)?;
    let mut votes = [0u32; 6];
    let mut margin = [0.0f64; 6];
    let mut pair_scores = Vec::with_capacity(m.pairs.len());
    for p in &m.pairs {
        let Some(model) = &p.model else { continue };
        let f = model.decision(&z)?;
        let winner = if f >= 0.0 { p.positive } else { p.negative };
        votes[winner.index()] += 1;
        margin[winner.index()] += f.abs();
        pair_scores.push((p.positive, p.negative, f));
    }
    let label = Expression::ALL
        .into_iter()
        .max_by(|a, b| {
            votes[a.index()]
                .cmp(&votes[b.index()])
                .then(margin[a.index()].total_cmp(&margin[b.index()]))
                .then(b.index().cmp(&a.index()))
        })
        .expect("six classes");
    Ok(Prediction { label, votes, pair_scores })
}

/// Per-class accuracy and confusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `confusion[truth][predicted]`, canonical order.
    pub confusion: [[u32; 6]; 6],
}

pub fn evaluate(m: &MultiClassSvmModel, test: &[LabeledSample<Expression>]) -> Result<EvalReport, SvmError> {
    if test.is_empty() {
        return Err(SvmError::EmptyDataset);
    }
    let mut confusion = [[0u32; 6]; 6];
    for s in test {
        let p = predict_expression(m, &s.x)?;
        confusion[s.y.index()][p.label.index()] += 1;
    }
    Ok(EvalReport { confusion })
}

impl EvalReport {
    pub fn total(&self, e: Expression) -> u32 {
        self.confusion[e.index()].iter().sum()
    }

    /// Fraction correct for one class, `None` if it has no test samples.
    pub fn accuracy(&self, e: Expression) -> Option<f64> {
        let total = self.total(e);
        (total > 0).then(|| f64::from(self.confusion[e.index()][e.index()]) / f64::from(total))
    }

    /// Unweighted mean over the classes present.
    pub fn average(&self) -> f64 {
        let accs: Vec<f64> = Expression::ALL.iter().filter_map(|&e| self.accuracy(e)).collect();
        accs.iter().sum::<f64>() / accs.len().max(1) as f64
    }

    pub fn overall(&self) -> f64 {
        let correct: u32 = (0..6).map(|i| self.confusion[i][i]).sum();
        let total: u32 = self.confusion.iter().flatten().sum();
        f64::from(correct) / f64::from(total.max(1))
    }

    /// Accuracy table followed by the confusion matrix.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:>8}", "Expression", "Accuracy");
        for e in Expression::REPORT_ORDER {
            match self.accuracy(e) {
                Some(a) => writeln!(out, "{:<10} {:>7.1}%", e.name(), 100.0 * a),
                None => writeln!(out, "{:<10} {:>8}", e.name(), "n/a"),
            }
            .expect("string write");
        }
        let _ = writeln!(out, "{:<10} {:>7.1}%", "Average", 100.0 * self.average());
        let _ = writeln!(out);
        let _ = write!(out, "{:<10}", "truth\\pred");
        for e in Expression::REPORT_ORDER {
            let _ = write!(out, " {:>8}", e.name());
        }
        let _ = writeln!(out);
        for t in Expression::REPORT_ORDER {
            let _ = write!(out, "{:<10}", t.name());
            for p in Expression::REPORT_ORDER {
                let _ = write!(out, " {:>8}", self.confusion[t.index()][p.index()]);
            }
            let _ = writeln!(out);
        }
        out
    }

    /// Machine-readable form: `class,accuracy,n` rows then `confusion,truth,pred...` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,accuracy,n\n");
        for e in Expression::REPORT_ORDER {
            let acc = self.accuracy(e).map_or(String::new(), |a| format!("{:.6}", 100.0 * a));
            let _ = writeln!(out, "{},{},{}", e.name(), acc, self.total(e));
        }
        let _ = writeln!(out, "Average,{:.6},{}", 100.0 * self.average(), self.confusion.iter().flatten().sum::<u32>());
        let names: Vec<&str> = Expression::REPORT_ORDER.iter().map(|e| e.name()).collect();
        let _ = writeln!(out, "confusion,{}", names.join(","));
        for t in Expression::REPORT_ORDER {
            let row: Vec<String> = Expression::REPORT_ORDER.iter().map(|p| self.confusion[t.index()][p.index()].to_string()).collect();
            let _ = writeln!(out, "{},{}", t.name(), row.join(","));
        }
        out
    }
}
