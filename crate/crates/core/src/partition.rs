//! Partition functions `Z_{m,n}(λ) = 𝔼 exp(λ Σ_{k=m}^{n-1} w_k f(T^k x))`
//! under the uniform Bernoulli measure.
//!
//! Two independent routes are provided: brute-force enumeration of
//! cylinders ([`exact_partition`]) and products of transfer matrices
//! ([`transfer_log_partition`]). For a potential of span `r` the transfer
//! matrix is indexed by `S^{r-1}`, its entry at `(x_0..x_{r-2}, x_1..x_{r-1})`
//! is `exp(λ w f(x_0..x_{r-1}))`, and
//!
//! ```text
//! Z_{m,n}(λ) = q^{-(n-m+r-1)} ‖A_{w_m}(λ) ⋯ A_{w_{n-1}}(λ)‖
//! ```
//!
//! with `‖·‖` the sum of all entries. Products are carried in log-scaled
//! form: the stored matrix has max entry 1 and the scale is accumulated as
//! a logarithm, so long products never overflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{checked_pow, Potential, WeightSequence};

/// Largest number of cylinders the enumeration oracle will visit.
pub const ORACLE_LIMIT: u128 = 1 << 24;

/// Largest transfer-matrix dimension `q^{r-1}`.
pub const MAX_TRANSFER_DIM: usize = 4096;

/// A nonnegative square matrix represented as `e^{log_scale} · mat`, with
/// `max(mat) = 1` unless the matrix is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LogScaledMatrix {
    dim: usize,
    mat: Vec<f64>,
    log_scale: f64,
}

impl LogScaledMatrix {
    /// Row-major entries; must be finite and nonnegative.
    pub fn from_entries(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::invalid(
                "matrix",
                format!("{} entries for dimension {dim}", entries.len()),
            ));
        }
        if entries.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::invalid("matrix", "entries must be finite and nonnegative"));
        }
        let mut m = Self {
            dim,
            mat: entries,
            log_scale: 0.0,
        };
        m.renormalize();
        Ok(m)
    }

    /// Build from entry logarithms (`-inf` for structural zeros).
    pub fn from_log_entries(dim: usize, logs: &[f64]) -> Self {
        let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mat = logs.iter().map(|&l| (l - shift).exp()).collect();
        Self {
            dim,
            mat,
            log_scale: shift,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut mat = vec![0.0; dim * dim];
        for i in 0..dim {
            mat[i * dim + i] = 1.0;
        }
        Self {
            dim,
            mat,
            log_scale: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Normalized entries (max entry 1).
    pub fn normalized(&self) -> &[f64] {
        &self.mat
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Entries of the represented matrix; may overflow for long products.
    pub fn to_dense(&self) -> Vec<f64> {
        let s = self.log_scale.exp();
        self.mat.iter().map(|x| x * s).collect()
    }

    /// `log ‖A‖` with `‖A‖` the entry sum.
    pub fn log_norm(&self) -> f64 {
        self.log_scale + self.mat.iter().sum::<f64>().ln()
    }

    fn renormalize(&mut self) {
        let max = self.mat.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            self.mat.iter_mut().for_each(|x| *x /= max);
            self.log_scale += max.ln();
        } else {
            self.log_scale = f64::NEG_INFINITY;
        }
    }

    /// `self · other`, renormalized.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.mat[i * d + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.mat[k * d..(k + 1) * d];
                for (o, b) in out[i * d..(i + 1) * d].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        let mut m = Self {
            dim: d,
            mat: out,
            log_scale: self.log_scale + other.log_scale,
        };
        m.renormalize();
        m
    }

    /// Index of a row or column that is identically zero, if any.
    pub fn zero_line(&self) -> Option<String> {
        let d = self.dim;
        if let Some(i) = (0..d).find(|&i| (0..d).all(|j| self.mat[i * d + j] == 0.0)) {
            return Some(format!("row {i} vanishes"));
        }
        (0..d)
            .find(|&j| (0..d).all(|i| self.mat[i * d + j] == 0.0))
            .map(|j| format!("column {j} vanishes"))
    }
}

/// How a partition value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMethod {
    Exact,
    Transfer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub log_z: f64,
    /// Number of weighted terms `n - m`.
    pub n: usize,
    pub method: PartitionMethod,
}

fn transfer_dim(p: &Potential) -> Result<usize> {
    checked_pow(p.q(), p.span() - 1)
        .filter(|&d| d <= MAX_TRANSFER_DIM)
        .ok_or_else(|| {
            Error::range(
                "q^(r-1)",
                format!("{}^{}", p.q(), p.span() - 1),
                format!("<= {MAX_TRANSFER_DIM}"),
            )
        })
}

/// Transfer matrix `A_w(λ)` on `S^{r-1}`. For `r = 1` the matrix is the
/// 1×1 entry `Σ_s exp(λ w f(s))`, which keeps the norm formula valid.
pub fn build_transfer(p: &Potential, w: f64, lambda: f64) -> Result<LogScaledMatrix> {
    let d = transfer_dim(p)?;
    let q = p.q();
    let mut logs = vec![f64::NEG_INFINITY; d * d];
    if p.span() == 1 {
        let exps: Vec<f64> = p.table().iter().map(|f| lambda * w * f).collect();
        logs[0] = log_sum_exp(&exps);
    } else {
        for (x, f) in p.table().iter().enumerate() {
            let (u, v) = (x / q, x % d);
            logs[u * d + v] = lambda * w * f;
        }
    }
    Ok(LogScaledMatrix::from_log_entries(d, &logs))
}

/// `log Σ e^{x_i}` without overflow.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Row-vector sweep `1ᵀ A_{w_0} A_{w_1} ⋯`, renormalized after each step.
///
/// Uses the de Bruijn sparsity of the transfer matrices: `q` nonzeros per
/// row, so a step costs `O(q^r)`.
#[derive(Debug, Clone)]
pub struct TransferSweep<'a> {
    potential: &'a Potential,
    lambda: f64,
    state: Vec<f64>,
    scratch: Vec<f64>,
    log_scale: f64,
    // product of recent renormalization factors, folded into log_scale
    // before it leaves [1e-150, 1e150]
    pending: f64,
    steps: usize,
    // (source, target) state index for each word of length r
    edges: Vec<(usize, usize)>,
    // per-weight exponentials, keyed by the weight's bit pattern
    factors: Vec<(u64, Vec<f64>, f64)>,
}

const FACTOR_CACHE: usize = 16;

impl<'a> TransferSweep<'a> {
    pub fn new(potential: &'a Potential, lambda: f64) -> Result<Self> {
        let dim = transfer_dim(potential)?;
        let q = potential.q();
        let edges = (0..potential.table().len()).map(|x| (x / q, x % dim)).collect();
        Ok(Self {
            potential,
            lambda,
            state: vec![1.0; dim],
            scratch: vec![0.0; dim],
            log_scale: 0.0,
            pending: 1.0,
            steps: 0,
            edges,
            factors: Vec::new(),
        })
    }

    fn factor_slot(&mut self, w: f64) -> usize {
        let key = (w + 0.0).to_bits();
        if let Some(i) = self.factors.iter().position(|(k, _, _)| *k == key) {
            return i;
        }
        let exps: Vec<f64> = self.potential.table().iter().map(|f| self.lambda * w * f).collect();
        let shift = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let factors = exps.iter().map(|e| (e - shift).exp()).collect();
        if self.factors.len() == FACTOR_CACHE {
            self.factors.pop();
        }
        self.factors.push((key, factors, shift));
        self.factors.len() - 1
    }

    pub fn step(&mut self, w: f64) {
        let slot = self.factor_slot(w);
        let (_, factors, shift) = &self.factors[slot];
        self.scratch.iter_mut().for_each(|s| *s = 0.0);
        for (&(from, to), &a) in self.edges.iter().zip(factors) {
            self.scratch[to] += self.state[from] * a;
        }
        let max = self.scratch.iter().copied().fold(0.0, f64::max);
        for (s, &t) in self.state.iter_mut().zip(&self.scratch) {
            *s = t / max;
        }
        self.log_scale += shift;
        self.pending *= max;
        if !(1e-150..=1e150).contains(&self.pending) {
            self.log_scale += self.pending.ln();
            self.pending = 1.0;
        }
        self.steps += 1;
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `log Z` over the weights consumed so far.
    pub fn log_partition(&self) -> f64 {
        if self.lambda == 0.0 {
            // Z(0) = E 1
            return 0.0;
        }
        let q = self.potential.q() as f64;
        let norm = self.log_scale + (self.pending * self.state.iter().sum::<f64>()).ln();
        norm - (self.steps + self.potential.span() - 1) as f64 * q.ln()
    }
}

/// `log Z_b(λ)` for an explicit weight word `b = b_0..b_{m-1}`.
pub fn log_partition_word(p: &Potential, lambda: f64, word: &[f64]) -> Result<f64> {
    let mut sweep = TransferSweep::new(p, lambda)?;
    for &w in word {
        sweep.step(w);
    }
    Ok(sweep.log_partition())
}

/// `log Z_{m,n}(λ)` by the transfer-matrix route; `Z_{n,n} = 1`.
pub fn transfer_log_partition(
    w: &WeightSequence,
    p: &Potential,
    lambda: f64,
    m: usize,
    n: usize,
) -> Result<PartitionResult> {
    if m > n {
        return Err(Error::range("m", m, format!("0..={n}")));
    }
    let word = w.values(m, n)?;
    Ok(PartitionResult {
        log_z: log_partition_word(p, lambda, &word)?,
        n: n - m,
        method: PartitionMethod::Transfer,
    })
}

/// Dense product `A_{b_0} ⋯ A_{b_{m-1}}` (identity for the empty word).
pub fn transfer_product(p: &Potential, lambda: f64, word: &[f64]) -> Result<LogScaledMatrix> {
    let d = transfer_dim(p)?;
    let mut acc = LogScaledMatrix::identity(d);
    for &w in word {
        acc = acc.mul(&build_transfer(p, w, lambda)?);
    }
    Ok(acc)
}

/// `log Z` from block products combined in order. Blocks are independent
/// and computed in parallel when the `parallel` feature is on.
pub fn log_partition_blocks(p: &Potential, lambda: f64, word: &[f64], block: usize) -> Result<f64> {
    let block = block.max(1);
    if lambda == 0.0 {
        transfer_dim(p)?;
        return Ok(0.0);
    }
    let chunks: Vec<&[f64]> = word.chunks(block).collect();
    #[cfg(feature = "parallel")]
    let products: Vec<Result<LogScaledMatrix>> = {
        use rayon::prelude::*;
        chunks.par_iter().map(|c| transfer_product(p, lambda, c)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let products: Vec<Result<LogScaledMatrix>> =
        chunks.iter().map(|c| transfer_product(p, lambda, c)).collect();
    let mut acc = LogScaledMatrix::identity(transfer_dim(p)?);
    for prod in products {
        acc = acc.mul(&prod?);
    }
    let q = p.q() as f64;
    Ok(acc.log_norm() - (word.len() + p.span() - 1) as f64 * q.ln())
}

/// `log Z_n(λ)` by enumerating every cylinder of length `n + r - 1`.
pub fn exact_partition(w: &WeightSequence, p: &Potential, lambda: f64, n: usize) -> Result<PartitionResult> {
    let word = w.values(0, n)?;
    Ok(PartitionResult {
        log_z: exact_log_partition_word(p, lambda, &word)?,
        n,
        method: PartitionMethod::Exact,
    })
}

/// Enumeration oracle for an explicit weight word.
pub fn exact_log_partition_word(p: &Potential, lambda: f64, word: &[f64]) -> Result<f64> {
    let q = p.q();
    let r = p.span();
    let len = word.len() + r - 1;
    let cylinders = (q as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
    if cylinders > ORACLE_LIMIT {
        return Err(Error::OracleScale {
            cylinders,
            limit: ORACLE_LIMIT,
        });
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let window = q.pow(r as u32 - 1) * q; // q^r
    let mut symbols = vec![0usize; len];
    // streaming log-sum-exp
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for _ in 0..cylinders {
        let mut s = 0.0;
        let mut idx = 0;
        for (k, &sym) in symbols.iter().enumerate() {
            idx = (idx * q + sym) % window;
            if k + 1 >= r {
                s += word[k + 1 - r] * p.table()[idx];
            }
        }
        let e = lambda * s;
        if e > max {
            sum = sum * (max - e).exp() + 1.0;
            max = e;
        } else {
            sum += (e - max).exp();
        }
        // odometer increment, last symbol fastest
        for slot in symbols.iter_mut().rev() {
            *slot += 1;
            if *slot < q {
                break;
            }
            *slot = 0;
        }
    }
    Ok(max + sum.ln() - len as f64 * (q as f64).ln())
}

/// `|log Z_{l,n} - log Z_{l,m} - log Z_{m,n}|`, the defect in
/// quasi-multiplicativity of the partition function.
pub fn fundamental_inequality_diagnostic(
    w: &WeightSequence,
    p: &Potential,
    lambda: f64,
    l: usize,
    m: usize,
    n: usize,
) -> Result<f64> {
    if !(l <= m && m <= n) {
        return Err(Error::range("(l, m, n)", format!("({l}, {m}, {n})"), "l <= m <= n"));
    }
    let word = w.values(l, n)?;
    let mid = m - l;
    let whole = log_partition_word(p, lambda, &word)?;
    let left = log_partition_word(p, lambda, &word[..mid])?;
    let right = log_partition_word(p, lambda, &word[mid..])?;
    Ok((whole - left - right).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SymbolicSpace;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn xy_transfer_matrix() {
        let l: f64 = 0.7;
        let a = build_transfer(&Potential::xy(), 1.0, l).unwrap();
        let dense = a.to_dense();
        let expect = [l.exp(), (-l).exp(), (-l).exp(), l.exp()];
        for (x, e) in dense.iter().zip(expect) {
            assert!(close(*x, e, 1e-15));
        }
    }

    #[test]
    fn trivial_exponents_give_ones() {
        let p = Potential::affine(1.0, 0.3, -2.0);
        for (w, l) in [(1.0, 0.0), (0.0, 3.0)] {
            let a = build_transfer(&p, w, l).unwrap();
            assert_eq!(a.to_dense(), vec![1.0; 4]);
        }
    }

    #[test]
    fn lambda_zero_is_zero() {
        let p = Potential::affine(1.0, 0.5, 0.5);
        let w = WeightSequence::moebius();
        assert_eq!(transfer_log_partition(&w, &p, 0.0, 3, 40).unwrap().log_z, 0.0);
        assert_eq!(exact_partition(&w, &p, 0.0, 8).unwrap().log_z, 0.0);
        assert_eq!(transfer_log_partition(&w, &p, 1.5, 5, 5).unwrap().log_z, 0.0);
    }

    #[test]
    fn single_step_is_log_cosh() {
        let w = WeightSequence::constant(1.0).unwrap();
        for l in [-2.0f64, 0.3, 1.0, 4.0] {
            let t = transfer_log_partition(&w, &Potential::xy(), l, 0, 1).unwrap().log_z;
            assert!(close(t, l.cosh().ln(), 1e-14));
            let e = exact_partition(&w, &Potential::xy(), l, 1).unwrap().log_z;
            assert!(close(e, l.cosh().ln(), 1e-14));
        }
    }

    #[test]
    fn moebius_twelve_terms() {
        let w = WeightSequence::moebius();
        let p = Potential::xy();
        let t = transfer_log_partition(&w, &p, 0.7, 0, 12).unwrap().log_z;
        let e = exact_partition(&w, &p, 0.7, 12).unwrap().log_z;
        assert!(close(t, e, 1e-12), "{t} vs {e}");
    }

    #[test]
    fn span_one_factorizes() {
        let space = SymbolicSpace::digits(3).unwrap();
        let p = Potential::new(space, 1, vec![0.0, 1.0, -0.5]).unwrap();
        let w = WeightSequence::from_values("w", vec![0.5, -1.0, 2.0, 0.0]).unwrap();
        let l = 0.9;
        let direct: f64 = [0.5, -1.0, 2.0, 0.0]
            .iter()
            .map(|wk: &f64| {
                let s: f64 = p.table().iter().map(|f| (l * wk * f).exp()).sum();
                (s / 3.0).ln()
            })
            .sum();
        let t = transfer_log_partition(&w, &p, l, 0, 4).unwrap().log_z;
        let e = exact_partition(&w, &p, l, 4).unwrap().log_z;
        assert!(close(t, direct, 1e-14));
        assert!(close(e, direct, 1e-14));
    }

    #[test]
    fn dense_product_agrees_with_sweep() {
        let p = Potential::affine(0.8, -0.3, 0.2);
        let word: Vec<f64> = (0..300).map(|k| ((k * 7) % 5) as f64 - 2.0).collect();
        let sweep = log_partition_word(&p, 1.3, &word).unwrap();
        let blocks = log_partition_blocks(&p, 1.3, &word, 37).unwrap();
        let dense = transfer_product(&p, 1.3, &word).unwrap().log_norm() - 301.0 * 2f64.ln();
        assert!(close(sweep, blocks, 1e-12));
        assert!(close(sweep, dense, 1e-12));
    }

    #[test]
    fn long_products_do_not_overflow() {
        let w = WeightSequence::constant(1.0).unwrap();
        let r = transfer_log_partition(&w, &Potential::xy(), 50.0, 0, 100_000).unwrap();
        assert!(r.log_z.is_finite());
        let expect = 100_000.0 * 50f64.cosh().ln();
        assert!(close(r.log_z, expect, 1e-12));
    }

    #[test]
    fn oracle_scale_guard() {
        let w = WeightSequence::constant(1.0).unwrap();
        let err = exact_partition(&w, &Potential::xy(), 1.0, 30).unwrap_err();
        assert!(matches!(err, Error::OracleScale { .. }));
    }

    #[test]
    fn diagnostic_examples() {
        let w = WeightSequence::constant(1.0).unwrap();
        let p = Potential::xy();
        assert_eq!(fundamental_inequality_diagnostic(&w, &p, 0.0, 0, 5, 10).unwrap(), 0.0);
        let d = fundamental_inequality_diagnostic(&w, &p, 1.0, 0, 5, 10).unwrap();
        assert!(d <= 2.0);
        assert!(fundamental_inequality_diagnostic(&w, &p, 1.0, 4, 2, 10).is_err());
    }

    #[test]
    fn zero_line_detection() {
        let m = LogScaledMatrix::from_entries(2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(m.zero_line().is_some());
        let m = LogScaledMatrix::from_entries(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(m.zero_line().is_none());
    }
}
