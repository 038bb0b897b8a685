//! Plain-text model files.
//!
//! ```text
//! moodpipe-svm v1
//! kernel rbf 1.4285714285714285e-1
//! scaler 7 <7 means> <7 scales>
//! pair Anger Fear
//! bias <b>
//! converged true
//! sv <n>
//! <alpha*y> <x1> ... <x7>
//! pair Anger Disgust absent
//! ```
//!
//! Numbers are written with 17 significant digits, so a load reproduces
//! every value bit for bit.

use std::io::{BufRead, Write};

use super::{BinarySvmModel, Expression, KernelSpec, MultiClassSvmModel, PairModel, Scaler, SvmError};

pub const MODEL_HEADER: &str = "moodpipe-svm v1";

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn join(vs: &[f64]) -> String {
    vs.iter().map(|&v| num(v)).collect::<Vec<_>>().join(" ")
}

impl MultiClassSvmModel {
    pub fn to_text(&self) -> String {
        let mut out = format!("{MODEL_HEADER}\nkernel {}\n", self.kernel);
        out += &format!("scaler {} {} {}\n", self.dim(), join(&self.scaler.mean), join(&self.scaler.scale));
        for p in &self.pairs {
            match &p.model {
                None => out += &format!("pair {} {} absent\n", p.positive, p.negative),
                Some(m) => {
                    out += &format!("pair {} {}\nbias {}\nconverged {}\nsv {}\n", p.positive, p.negative, num(m.bias), m.converged, m.coef.len());
                    for (c, sv) in m.coef.iter().zip(&m.support_vectors) {
                        out += &format!("{} {}\n", num(*c), join(sv));
                    }
                }
            }
        }
        out
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<(), SvmError> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(w.flush()?)
    }

    pub fn load<R: BufRead>(r: R) -> Result<MultiClassSvmModel, SvmError> {
        let text: Vec<String> = r.lines().collect::<Result<_, _>>()?;
        let mut lines = text.iter().map(|l| l.trim()).filter(|l| !l.is_empty()).enumerate();
        let mut next = |what: &str| lines.next().ok_or_else(|| SvmError::Format(format!("missing {what}")));
        let err = |line: usize, m: &str| SvmError::Format(format!("line {}: {m}", line + 1));
        let floats = |line: usize, parts: &[&str]| -> Result<Vec<f64>, SvmError> {
            parts.iter().map(|p| p.parse::<f64>().map_err(|_| err(line, &format!("bad number {p:?}")))).collect()
        };

        let (i, header) = next("header")?;
        if header != MODEL_HEADER {
            return Err(err(i, "not a moodpipe-svm v1 model"));
        }
        let (i, kline) = next("kernel line")?;
        let kernel: KernelSpec = kline.strip_prefix("kernel ").ok_or_else(|| err(i, "expected kernel"))?.parse()?;

        let (i, sline) = next("scaler line")?;
        let parts: Vec<&str> = sline.split_whitespace().collect();
        if parts.first() != Some(&"scaler") || parts.len() < 2 {
            return Err(err(i, "expected scaler"));
        }
        let dim: usize = parts[1].parse().map_err(|_| err(i, "bad dimension"))?;
        let vals = floats(i, &parts[2..])?;
        if vals.len() != 2 * dim || vals[dim..].iter().any(|&s| !(s > 0.0)) {
            return Err(err(i, "scaler needs dim means and dim positive scales"));
        }
        let scaler = Scaler { mean: vals[..dim].to_vec(), scale: vals[dim..].to_vec() };

        let mut pairs = Vec::new();
        for (positive, negative) in super::multiclass::class_pairs() {
            let (i, pline) = next("pair block")?;
            let parts: Vec<&str> = pline.split_whitespace().collect();
            let named = |k: usize| parts.get(k).and_then(|s| s.parse::<Expression>().ok());
            if parts.first() != Some(&"pair") || named(1) != Some(positive) || named(2) != Some(negative) {
                return Err(err(i, &format!("expected pair {positive} {negative}")));
            }
            if parts.get(3) == Some(&"absent") {
                pairs.push(PairModel { positive, negative, model: None });
                continue;
            }
            let mut field = |key: &str| -> Result<(usize, String), SvmError> {
                let (i, l) = next(key)?;
                let v = l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')).ok_or_else(|| err(i, &format!("expected {key}")))?;
                Ok((i, v.trim().to_string()))
            };
            let (i, b) = field("bias")?;
            let bias = b.parse::<f64>().map_err(|_| err(i, "bad bias"))?;
            let (i, c) = field("converged")?;
            let converged = c.parse::<bool>().map_err(|_| err(i, "bad converged flag"))?;
            let (i, n) = field("sv")?;
            let n: usize = n.parse().map_err(|_| err(i, "bad sv count"))?;
            if n == 0 {
                return Err(err(i, "a trained pair needs at least one support vector"));
            }
            let mut coef = Vec::with_capacity(n);
            let mut support_vectors = Vec::with_capacity(n);
            for _ in 0..n {
                let (i, l) = next("support vector")?;
                let v = floats(i, &l.split_whitespace().collect::<Vec<_>>())?;
                if v.len() != dim + 1 {
                    return Err(err(i, "support vector has the wrong dimension"));
                }
                coef.push(v[0]);
                support_vectors.push(v[1..].to_vec());
            }
            pairs.push(PairModel { positive, negative, model: Some(BinarySvmModel { kernel, support_vectors, coef, bias, converged }) });
        }
        if let Some((i, _)) = lines.next() {
            return Err(err(i, "trailing content"));
        }
        Ok(MultiClassSvmModel { kernel, scaler, pairs })
    }
}
