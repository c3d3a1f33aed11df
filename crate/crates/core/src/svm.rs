//! SVM training expressed as a QUBO.
//!
//! Each dual coefficient is encoded with `K` base-`B` binary digits,
//! `α_n = Σ_k B^k a_{Kn+k}`, and the equality constraint `Σ α_n y_n = 0` is
//! absorbed into the objective with a quadratic penalty weighted by `ξ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{BitString, QuboProblem, SolutionDistribution};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    #[default]
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => Err(
                Error::InvalidParameter(format!("rbf gamma must be positive, got {gamma}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                got: v.len(),
            });
        }
        Ok(self.eval_unchecked(u, v))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, u: &[f64], v: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => u.iter().zip(v).map(|(a, b)| a * b).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

/// Which box bound `C` enters the bias weights `α_n (C − α_n)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxBound {
    /// `Σ_{k=0}^{K−1} B^k`, the largest value the encoding can represent.
    #[default]
    EncodingMax,
    /// `Σ_{k=1}^{K} B^k`.
    ShiftedSum,
}

/// Binary encoding of the dual coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    /// Binary digits per coefficient.
    pub k: usize,
    /// Encoding base.
    pub base: f64,
    /// Penalty multiplier for `Σ α_n y_n = 0`.
    pub xi: f64,
    #[serde(default)]
    pub box_bound: BoxBound,
}

impl Default for Encoding {
    fn default() -> Self {
        Self {
            k: 2,
            base: 2.0,
            xi: 0.5,
            box_bound: BoxBound::EncodingMax,
        }
    }
}

impl Encoding {
    pub fn new(k: usize, base: f64, xi: f64) -> Result<Self> {
        let e = Self {
            k,
            base,
            xi,
            box_bound: BoxBound::EncodingMax,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("encoding needs K >= 1".into()));
        }
        if !(self.base >= 1.0 && self.base.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "encoding base must be >= 1, got {}",
                self.base
            )));
        }
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "xi must be nonnegative, got {}",
                self.xi
            )));
        }
        if !self.encoding_max().is_finite() {
            return Err(Error::InvalidParameter("encoding maximum overflows".into()));
        }
        Ok(())
    }

    fn powers(&self) -> Vec<f64> {
        (0..self.k).map(|k| self.base.powi(k as i32)).collect()
    }

    /// `Σ_{k=0}^{K−1} B^k`.
    pub fn encoding_max(&self) -> f64 {
        self.powers().iter().sum()
    }

    /// The `C` used for bias weights, per [`Encoding::box_bound`].
    pub fn box_c(&self) -> f64 {
        match self.box_bound {
            BoxBound::EncodingMax => self.encoding_max(),
            BoxBound::ShiftedSum => (1..=self.k).map(|k| self.base.powi(k as i32)).sum(),
        }
    }
}

/// Labelled samples with labels in `{+1, −1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    x: Vec<Vec<f64>>,
    y: Vec<i8>,
}

impl TrainingSet {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<i8>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::Empty("training set"));
        }
        let d = x[0].len();
        for (index, row) in x.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Ragged {
                    index,
                    expected: d,
                    got: row.len(),
                });
            }
        }
        if let Some(&bad) = y.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::InvalidLabel(bad as f64));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[i8] {
        &self.y
    }

    pub fn has_both_classes(&self) -> bool {
        self.y.contains(&1) && self.y.contains(&-1)
    }

    /// Flips every label.
    pub fn negated(&self) -> Self {
        Self {
            x: self.x.clone(),
            y: self.y.iter().map(|l| -l).collect(),
        }
    }

    /// Every feature multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            x: self.x.iter().map(|r| r.iter().map(|v| v * s).collect()).collect(),
            y: self.y.clone(),
        }
    }

    fn gram(&self, kernel: &Kernel) -> Vec<f64> {
        match *kernel {
            Kernel::Linear => self.pairwise(|u, v| u.iter().zip(v).map(|(a, b)| a * b).sum()),
            Kernel::Rbf { gamma } => self.pairwise(|u, v| {
                let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }),
        }
    }

    fn pairwise(&self, f: impl Fn(&[f64], &[f64]) -> f64) -> Vec<f64> {
        let n = self.len();
        let mut g = vec![0.0; n * n];
        for a in 0..n {
            for b in a..n {
                let v = f(&self.x[a], &self.x[b]);
                g[a * n + b] = v;
                g[b * n + a] = v;
            }
        }
        g
    }
}

/// Builds the `K·N × K·N` QUBO whose minimizer encodes the SVM dual solution:
/// `Q_{Kn+k, Km+j} = ½ B^{k+j} y_n y_m (k(x_n, x_m) + ξ) − δ_nm δ_kj B^k`.
pub fn build_qubo(ts: &TrainingSet, kernel: &Kernel, enc: &Encoding) -> Result<QuboProblem> {
    build_qubo_capped(ts, kernel, enc, None)
}

/// As [`build_qubo`], refusing instances larger than `capacity` variables.
pub fn build_qubo_capped(
    ts: &TrainingSet,
    kernel: &Kernel,
    enc: &Encoding,
    capacity: Option<usize>,
) -> Result<QuboProblem> {
    kernel.validate()?;
    enc.validate()?;
    if ts.len() < 2 {
        return Err(Error::InvalidParameter(
            "training set needs at least 2 samples".into(),
        ));
    }
    if !ts.has_both_classes() {
        return Err(Error::SingleClass);
    }
    let (n, kk) = (ts.len(), enc.k);
    let dim = n * kk;
    if let Some(cap) = capacity {
        if dim > cap {
            return Err(Error::Capacity {
                what: "QUBO SVM",
                required: dim,
                capacity: cap,
            });
        }
    }
    let mut coupling = ts.gram(kernel);
    for (a, row) in coupling.chunks_exact_mut(n).enumerate() {
        for (b, c) in row.iter_mut().enumerate() {
            *c = 0.5 * f64::from(ts.y[a] * ts.y[b]) * (*c + enc.xi);
        }
    }
    let pw = enc.powers();
    // scale[k][Km+j] = B^k B^j, so every row is one elementwise product.
    let scale: Vec<f64> = (0..kk)
        .flat_map(|k| (0..dim).map(move |m| (k, m % kk)))
        .map(|(k, j)| pw[k] * pw[j])
        .collect();
    let mut expanded = vec![0.0; dim];
    let mut q = vec![0.0; dim * dim];
    for (a, rows) in q.chunks_exact_mut(kk * dim).enumerate() {
        for (slot, &c) in expanded.chunks_exact_mut(kk).zip(&coupling[a * n..(a + 1) * n]) {
            slot.fill(c);
        }
        for (row, s) in rows.chunks_exact_mut(dim).zip(scale.chunks_exact(dim)) {
            for ((v, &c), &p) in row.iter_mut().zip(&expanded).zip(s) {
                *v = c * p;
            }
        }
    }
    for a in 0..n {
        for k in 0..kk {
            let i = kk * a + k;
            q[i * dim + i] -= pw[k];
        }
    }
    QuboProblem::from_symmetric(dim, q)
}

/// `α_n = Σ_{k=0}^{K−1} B^k · bits[K·n + k]`.
pub fn decode_alphas(bits: &BitString, enc: &Encoding, n: usize) -> Result<Vec<f64>> {
    if bits.len() != enc.k * n {
        return Err(Error::DimensionMismatch {
            expected: enc.k * n,
            got: bits.len(),
        });
    }
    let pw = enc.powers();
    Ok(bits
        .bits()
        .chunks(enc.k)
        .map(|digits| digits.iter().zip(&pw).map(|(&b, p)| b as f64 * p).sum())
        .collect())
}

/// Bias from the `α_n(C − α_n)`-weighted average of `y_n − Σ_m α_m y_m k(x_n, x_m)`.
///
/// When the weights sum to (almost) zero, which always happens for `K = 1, B = 1`,
/// the unweighted mean over support vectors is used instead, and `0` when there
/// are none.
pub fn compute_bias(ts: &TrainingSet, kernel: &Kernel, alphas: &[f64], c: f64) -> Result<f64> {
    if alphas.len() != ts.len() {
        return Err(Error::DimensionMismatch {
            expected: ts.len(),
            got: alphas.len(),
        });
    }
    let residual = |n: usize| -> f64 {
        let s: f64 = (0..ts.len())
            .filter(|&m| alphas[m] != 0.0)
            .map(|m| alphas[m] * f64::from(ts.y[m]) * kernel.eval_unchecked(&ts.x[n], &ts.x[m]))
            .sum();
        f64::from(ts.y[n]) - s
    };
    let weights: Vec<f64> = alphas.iter().map(|a| a * (c - a)).collect();
    let denom: f64 = weights.iter().sum();
    if denom.abs() >= 1e-12 {
        let num: f64 = (0..ts.len())
            .filter(|&n| weights[n] != 0.0)
            .map(|n| weights[n] * residual(n))
            .sum();
        return Ok(num / denom);
    }
    let support: Vec<usize> = (0..ts.len()).filter(|&n| alphas[n] > 0.0).collect();
    if support.is_empty() {
        return Ok(0.0);
    }
    Ok(support.iter().map(|&n| residual(n)).sum::<f64>() / support.len() as f64)
}

/// Maps a real score to a class; zero goes to `+1`.
#[inline]
pub fn sign_label(f: f64) -> i8 {
    if f >= 0.0 {
        1
    } else {
        -1
    }
}

/// How inputs are rescaled before the QUBO is built. The binary encoding
/// only reaches integer multipliers, so without rescaling far-apart classes
/// decode to the all-zero model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum InputScale {
    Fixed(f64),
    /// Median squared distance between opposite-class samples becomes 2.
    #[default]
    Auto,
}

impl InputScale {
    pub fn resolve(&self, ts: &TrainingSet) -> Result<f64> {
        match *self {
            InputScale::Fixed(s) if s > 0.0 && s.is_finite() => Ok(s),
            InputScale::Fixed(s) => Err(Error::InvalidParameter(format!("input scale {s} must be positive"))),
            InputScale::Auto => Ok(auto_input_scale(ts)),
        }
    }
}

/// `sqrt(2 / m)` with `m` the median squared distance over opposite-class
/// pairs; `1` when that median is zero or there is a single class.
pub fn auto_input_scale(ts: &TrainingSet) -> f64 {
    let mut d2 = Vec::new();
    for a in 0..ts.len() {
        for b in 0..ts.len() {
            if ts.y[a] == 1 && ts.y[b] == -1 {
                d2.push(ts.x[a].iter().zip(&ts.x[b]).map(|(u, v)| (u - v) * (u - v)).sum::<f64>());
            }
        }
    }
    if d2.is_empty() {
        return 1.0;
    }
    d2.sort_by(f64::total_cmp);
    let mid = d2.len() / 2;
    let m = if d2.len() % 2 == 0 { 0.5 * (d2[mid - 1] + d2[mid]) } else { d2[mid] };
    if m > 1e-300 {
        (2.0 / m).sqrt()
    } else {
        1.0
    }
}

fn unit_scale() -> f64 {
    1.0
}

/// A deployable classifier decoded from one solver bitstring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboSvmModel {
    /// Training samples after input scaling.
    pub training: TrainingSet,
    pub kernel: Kernel,
    pub encoding: Encoding,
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub source_bitstring: BitString,
    /// Factor applied to query points before evaluating the kernel.
    #[serde(default = "unit_scale")]
    pub input_scale: f64,
}

impl QuboSvmModel {
    pub fn from_bitstring(
        ts: &TrainingSet,
        kernel: &Kernel,
        enc: &Encoding,
        bits: &BitString,
    ) -> Result<Self> {
        let alphas = decode_alphas(bits, enc, ts.len())?;
        let bias = compute_bias(ts, kernel, &alphas, enc.box_c())?;
        Ok(Self {
            training: ts.clone(),
            kernel: *kernel,
            encoding: *enc,
            alphas,
            bias,
            source_bitstring: bits.clone(),
            input_scale: 1.0,
        })
    }

    pub fn decision_function(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.training.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.training.dim(),
                got: x.len(),
            });
        }
        if self.input_scale == 1.0 {
            Ok(self.decision_unchecked(x))
        } else {
            let xs: Vec<f64> = x.iter().map(|v| v * self.input_scale).collect();
            Ok(self.decision_unchecked(&xs))
        }
    }

    fn decision_unchecked(&self, x: &[f64]) -> f64 {
        let ts = &self.training;
        let s: f64 = self
            .alphas
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(n, &a)| a * f64::from(ts.y[n]) * self.kernel.eval_unchecked(&ts.x[n], x))
            .sum();
        s + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        self.decision_function(x).map(sign_label)
    }

    pub fn support_count(&self) -> usize {
        self.alphas.iter().filter(|&&a| a > 0.0).count()
    }

    /// `|Σ α_n y_n|`, the residual of the equality constraint.
    pub fn constraint_violation(&self) -> f64 {
        self.alphas
            .iter()
            .zip(self.training.y())
            .map(|(a, &y)| a * f64::from(y))
            .sum::<f64>()
            .abs()
    }
}

/// One model per distinct bitstring, in distribution order (model 0 is modal).
pub fn models_from_distribution(
    dist: &SolutionDistribution,
    ts: &TrainingSet,
    kernel: &Kernel,
    enc: &Encoding,
) -> Result<Vec<QuboSvmModel>> {
    dist.entries()
        .iter()
        .map(|e| QuboSvmModel::from_bitstring(ts, kernel, enc, &e.bits))
        .collect()
}
