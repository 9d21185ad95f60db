//! Pressure estimates `ψ(λ) = φ(λ) + log q`.
//!
//! Finite-`n` estimates never claim that the limit exists; each one carries
//! the gap `|ψ̂_n − ψ̂_{⌊n/2⌋}|` so callers can judge stabilization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FrequencyTable, Potential, WeightSequence};
use crate::partition::{log_partition_word, LogScaledMatrix, TransferSweep};
use crate::returnwords::decompose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureEstimate {
    pub psi: f64,
    pub n: usize,
    /// `|ψ̂_n − ψ̂_{⌊n/2⌋}|`; absent for `n = 1`.
    pub gap: Option<f64>,
}

/// `ψ̂_n(λ) = (1/n) log Z_n(λ) + log q`.
pub fn estimate_pressure(w: &WeightSequence, p: &Potential, lambda: f64, n: usize) -> Result<PressureEstimate> {
    if n == 0 {
        return Err(Error::range("n", n, "n >= 1"));
    }
    estimate_pressure_word(p, lambda, &w.values(0, n)?)
}

/// Same as [`estimate_pressure`] over explicit weights `w_0..w_{n-1}`.
pub fn estimate_pressure_word(p: &Potential, lambda: f64, word: &[f64]) -> Result<PressureEstimate> {
    let n = word.len();
    if n == 0 {
        return Err(Error::range("n", n, "n >= 1"));
    }
    let log_q = (p.q() as f64).ln();
    let half = n / 2;
    let mut sweep = TransferSweep::new(p, lambda)?;
    let mut psi_half = None;
    for (k, &w) in word.iter().enumerate() {
        if k == half && half > 0 {
            psi_half = Some(sweep.log_partition() / half as f64 + log_q);
        }
        sweep.step(w);
    }
    let psi = sweep.log_partition() / n as f64 + log_q;
    Ok(PressureEstimate {
        psi,
        n,
        gap: psi_half.map(|h| (psi - h).abs()),
    })
}

/// `log(e^x + e^{-x})` without overflow.
pub fn log_two_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// `ψ(λ) = Σ p_j log(e^{λ v_j} + e^{-λ v_j})`, exact for potentials
/// `x_0 g(x_1, ...)` with `g` valued in `{-1, 1}` on `{-1, 1}^ℕ`.
pub fn closed_form_pressure(ft: &FrequencyTable, lambda: f64) -> f64 {
    ft.iter().map(|(v, p)| p * log_two_cosh(lambda * v)).sum()
}

/// `ψ'(λ) = Σ p_j v_j tanh(λ v_j)`.
pub fn closed_form_psi_prime(ft: &FrequencyTable, lambda: f64) -> f64 {
    ft.iter().map(|(v, p)| p * v * (lambda * v).tanh()).sum()
}

/// `ψ''(λ) = Σ p_j v_j² sech²(λ v_j)`.
pub fn closed_form_psi_second(ft: &FrequencyTable, lambda: f64) -> f64 {
    ft.iter()
        .map(|(v, p)| {
            let c = (lambda * v).cosh();
            p * v * v / (c * c)
        })
        .sum()
}

/// Evenly spaced λ values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self {
            min: -8.0,
            max: 8.0,
            steps: 257,
        }
    }
}

impl LambdaGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::invalid("lambda grid", "bounds must be finite"));
        }
        match self.steps {
            0 => Err(Error::range("lambda steps", 0, ">= 1")),
            1 if self.min == self.max => Ok(vec![self.min]),
            1 => Err(Error::range("lambda steps", 1, ">= 2 when min < max")),
            s if self.min < self.max => {
                let h = (self.max - self.min) / (s - 1) as f64;
                Ok((0..s).map(|i| if i == s - 1 { self.max } else { self.min + i as f64 * h }).collect())
            }
            _ => Err(Error::range(
                "lambda grid",
                format!("[{}, {}]", self.min, self.max),
                "min < max",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PressureMethod {
    FiniteN,
    ClosedForm,
    ReturnWord { prefix_len: usize },
}

impl std::fmt::Display for PressureMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PressureMethod::FiniteN => write!(f, "finite_n"),
            PressureMethod::ClosedForm => write!(f, "closed_form"),
            PressureMethod::ReturnWord { prefix_len } => write!(f, "return_word({prefix_len})"),
        }
    }
}

/// Sampled pressure `(λ_i, ψ̂(λ_i))` on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureCurve {
    pub lambdas: Vec<f64>,
    pub psi: Vec<f64>,
    pub n: usize,
    pub method: PressureMethod,
    pub diag: Vec<Option<f64>>,
    /// `log q` of the underlying space.
    pub log_q: f64,
}

impl PressureCurve {
    pub fn new(
        lambdas: Vec<f64>,
        psi: Vec<f64>,
        n: usize,
        method: PressureMethod,
        diag: Vec<Option<f64>>,
        log_q: f64,
    ) -> Result<Self> {
        if lambdas.len() != psi.len() || lambdas.len() != diag.len() {
            return Err(Error::invalid("pressure curve", "array lengths differ"));
        }
        if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("pressure curve", "grid must be strictly increasing"));
        }
        if psi.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("pressure curve", "non-finite pressure value"));
        }
        Ok(Self {
            lambdas,
            psi,
            n,
            method,
            diag,
            log_q,
        })
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Largest convergence gap over the grid.
    pub fn max_gap(&self) -> Option<f64> {
        self.diag.iter().flatten().copied().reduce(f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,psi,diag_gap,n,method\n");
        for i in 0..self.len() {
            let gap = self.diag[i].map(|g| g.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.lambdas[i], self.psi[i], gap, self.n, self.method
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curve serializes")
    }
}

fn map_grid<F>(lambdas: &[f64], f: F) -> Result<Vec<PressureEstimate>>
where
    F: Fn(f64) -> Result<PressureEstimate> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        lambdas.par_iter().map(|&l| f(l)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        lambdas.iter().map(|&l| f(l)).collect()
    }
}

/// Finite-`n` pressure on a grid; weights are materialized once and grid
/// points are evaluated independently.
pub fn pressure_curve(w: &WeightSequence, p: &Potential, lambdas: &[f64], n: usize) -> Result<PressureCurve> {
    if n == 0 {
        return Err(Error::range("n", n, "n >= 1"));
    }
    let word = w.values(0, n)?;
    let est = map_grid(lambdas, |l| estimate_pressure_word(p, l, &word))?;
    PressureCurve::new(
        lambdas.to_vec(),
        est.iter().map(|e| e.psi).collect(),
        n,
        PressureMethod::FiniteN,
        est.iter().map(|e| e.gap).collect(),
        (p.q() as f64).ln(),
    )
}

pub fn closed_form_curve(ft: &FrequencyTable, lambdas: &[f64]) -> Result<PressureCurve> {
    PressureCurve::new(
        lambdas.to_vec(),
        lambdas.iter().map(|&l| closed_form_pressure(ft, l)).collect(),
        0,
        PressureMethod::ClosedForm,
        vec![Some(0.0); lambdas.len()],
        std::f64::consts::LN_2,
    )
}

/// `(1/N) log ‖A_1 ⋯ A_N‖` with `‖·‖` the entry sum.
pub fn lyapunov_exponent<I>(matrices: I) -> Result<f64>
where
    I: IntoIterator<Item = LogScaledMatrix>,
{
    let mut iter = matrices.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::range("N", 0, "N >= 1"))?;
    let mut acc = first;
    let mut count = 1;
    check_line(&acc, 0)?;
    for m in iter {
        acc = acc.mul(&m);
        check_line(&acc, count)?;
        count += 1;
    }
    Ok(acc.log_norm() / count as f64)
}

fn check_line(m: &LogScaledMatrix, step: usize) -> Result<()> {
    match m.zero_line() {
        Some(reason) => Err(Error::Degenerate { step, reason }),
        None => Ok(()),
    }
}

/// Block-composed Lyapunov estimate: products over consecutive blocks of
/// `block` matrices, combined in order.
pub fn lyapunov_exponent_blocks(matrices: &[LogScaledMatrix], block: usize) -> Result<f64> {
    if matrices.is_empty() {
        return Err(Error::range("N", 0, "N >= 1"));
    }
    let block = block.max(1);
    let chunks: Vec<&[LogScaledMatrix]> = matrices.chunks(block).collect();
    let product = |c: &[LogScaledMatrix]| -> Result<LogScaledMatrix> {
        let mut acc = c[0].clone();
        for m in &c[1..] {
            acc = acc.mul(m);
        }
        Ok(acc)
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<Result<LogScaledMatrix>> = {
        use rayon::prelude::*;
        chunks.par_iter().map(|c| product(c)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<LogScaledMatrix>> = chunks.iter().map(|c| product(c)).collect();
    let mut iter = parts.into_iter();
    let mut acc = iter.next().unwrap()?;
    for (i, part) in iter.enumerate() {
        acc = acc.mul(&part?);
        check_line(&acc, (i + 1) * block)?;
    }
    Ok(acc.log_norm() / matrices.len() as f64)
}

/// Hilbert projective distance `log max(x_i/y_i) · max(y_i/x_i)`.
pub fn hilbert_metric(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::invalid("vectors", "lengths must match and be nonzero"));
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid("vectors", "entries must be strictly positive"));
    }
    let (mut up, mut down) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (a, b) in x.iter().zip(y) {
        let d = a.ln() - b.ln();
        up = up.max(d);
        down = down.max(-d);
    }
    Ok((up + down).max(0.0))
}

/// Contraction data for a strictly positive matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionBound {
    /// Largest `δ <= 1` with every entry in `[δ, 1/δ]`.
    pub delta: f64,
    /// `4 log(1/δ)`.
    pub diameter_bound: f64,
    /// `tanh(log(1/δ))`.
    pub ratio: f64,
    /// Exact projective diameter `max log(b_ik b_jl / (b_jk b_il))`.
    pub diameter: f64,
    /// Birkhoff coefficient `tanh(diameter / 4)`.
    pub birkhoff_ratio: f64,
}

/// Row-major `dim × dim` matrix `b`.
pub fn projective_diameter_bound(b: &[f64], dim: usize) -> Result<ContractionBound> {
    if dim == 0 || b.len() != dim * dim {
        return Err(Error::invalid("matrix", format!("{} entries for dimension {dim}", b.len())));
    }
    if b.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid("matrix", "entries must be strictly positive"));
    }
    let min = b.iter().copied().fold(f64::INFINITY, f64::min);
    let max = b.iter().copied().fold(0.0, f64::max);
    let delta = min.min(1.0 / max).min(1.0);
    let log_inv = -delta.ln();
    let logs: Vec<f64> = b.iter().map(|v| v.ln()).collect();
    let mut diameter: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    let v = logs[i * dim + k] + logs[j * dim + l] - logs[j * dim + k] - logs[i * dim + l];
                    diameter = diameter.max(v);
                }
            }
        }
    }
    Ok(ContractionBound {
        delta,
        diameter_bound: 4.0 * log_inv,
        ratio: log_inv.tanh(),
        diameter,
        birkhoff_ratio: (diameter / 4.0).tanh(),
    })
}

/// `B x` for a row-major square matrix.
pub fn mat_vec(b: &[f64], x: &[f64]) -> Vec<f64> {
    let d = x.len();
    (0..d).map(|i| (0..d).map(|j| b[i * d + j] * x[j]).sum()).collect()
}

/// Contribution of one return word to the return-word pressure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnWordComponent {
    pub word: Vec<f64>,
    pub freq: f64,
    pub log_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnWordPressure {
    /// `A_u = Σ p_v log Z_v / Σ p_v |v|`, an approximation of `φ(λ)`.
    pub a_u: f64,
    /// `A_u + log q`.
    pub psi: f64,
    pub prefix_len: usize,
    pub horizon: usize,
    pub components: Vec<ReturnWordComponent>,
    /// The prefix returned with a single period shorter than itself; the
    /// value is then the direct finite-horizon estimate.
    pub periodic: bool,
}

/// Return-word approximation of the pressure: decompose `w_0..w_{N-1}` over
/// its length-`prefix_len` prefix and average `log Z_v` over return words.
pub fn return_word_pressure(
    w: &WeightSequence,
    p: &Potential,
    lambda: f64,
    prefix_len: usize,
    horizon: usize,
) -> Result<ReturnWordPressure> {
    if prefix_len == 0 || prefix_len > horizon {
        return Err(Error::range("prefix length", prefix_len, format!("1..={horizon}")));
    }
    let values = w.values(0, horizon)?;
    // exact-equality symbols; +0.0 folds the two zeros together
    let symbols: Vec<u64> = values.iter().map(|v| (v + 0.0).to_bits()).collect();
    let dec = decompose(&symbols, &symbols[..prefix_len], horizon)?;
    let log_q = (p.q() as f64).ln();
    let to_word = |s: &[u64]| s.iter().map(|&b| f64::from_bits(b)).collect::<Vec<f64>>();

    if dec.returns.len() == 1 && dec.returns[0].len() < prefix_len {
        let direct = estimate_pressure_word(p, lambda, &values)?;
        let word = to_word(&dec.returns[0]);
        let log_z = log_partition_word(p, lambda, &word)?;
        return Ok(ReturnWordPressure {
            a_u: direct.psi - log_q,
            psi: direct.psi,
            prefix_len,
            horizon,
            components: vec![ReturnWordComponent {
                word,
                freq: 1.0,
                log_z,
            }],
            periodic: true,
        });
    }

    let components = dec
        .returns
        .iter()
        .zip(&dec.freqs)
        .map(|(v, &freq)| {
            let word = to_word(v);
            let log_z = log_partition_word(p, lambda, &word)?;
            Ok(ReturnWordComponent { word, freq, log_z })
        })
        .collect::<Result<Vec<_>>>()?;
    let num: f64 = components.iter().map(|c| c.freq * c.log_z).sum();
    let a_u = num / dec.mean_length();
    Ok(ReturnWordPressure {
        a_u,
        psi: a_u + log_q,
        prefix_len,
        horizon,
        components,
        periodic: false,
    })
}
