//! The inhomogeneous Markov measure `μ_λ` for `f(x, y) = xy` on `{−1, 1}`.
//!
//! Transitions are `P_n = [[a_n, b_n], [b_n, a_n]]` with
//! `a_n = e^{λw_n} / (e^{λw_n} + e^{−λw_n})`, started from `(1/2, 1/2)`.
//! With `Z_n` in expectation form the cylinder masses satisfy
//! `μ([x_0..x_n]) · 2^{n+1} · Z_n(λ) = exp(λ Σ_{k<n} w_k x_k x_{k+1})`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FrequencyTable, WeightSequence};
use crate::pressure::log_two_cosh;

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[derive(Debug, Clone)]
pub struct InhomMarkov {
    lambda: f64,
    weights: WeightSequence,
    horizon: usize,
    stay: Vec<f64>,
    flip: Vec<f64>,
    log2_stay: Vec<f64>,
    log2_flip: Vec<f64>,
}

impl InhomMarkov {
    /// Builds `P_0 .. P_{horizon−1}`.
    pub fn new(lambda: f64, weights: WeightSequence, horizon: usize) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::range("lambda", lambda, "finite"));
        }
        let w = weights.values(0, horizon)?;
        let ln2 = std::f64::consts::LN_2;
        let stay = w.iter().map(|&v| 1.0 / (1.0 + (-2.0 * lambda * v).exp())).collect();
        let flip = w.iter().map(|&v| 1.0 / (1.0 + (2.0 * lambda * v).exp())).collect();
        let log2_stay = w.iter().map(|&v| -softplus(-2.0 * lambda * v) / ln2).collect();
        let log2_flip = w.iter().map(|&v| -softplus(2.0 * lambda * v) / ln2).collect();
        Ok(Self {
            lambda,
            weights,
            horizon,
            stay,
            flip,
            log2_stay,
            log2_flip,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `p^{(n)}_{x,x}`.
    pub fn a(&self, n: usize) -> f64 {
        self.stay[n]
    }

    /// `p^{(n)}_{x,−x}`.
    pub fn b(&self, n: usize) -> f64 {
        self.flip[n]
    }

    /// `P_n` as a row-major 2×2 matrix over `(−1, 1)`.
    pub fn matrix(&self, n: usize) -> [[f64; 2]; 2] {
        let (a, b) = (self.a(n), self.b(n));
        [[a, b], [b, a]]
    }

    fn check_word(&self, word: &[i8]) -> Result<()> {
        if word.is_empty() {
            return Err(Error::invalid("word", "empty cylinder"));
        }
        if word.len() > self.horizon + 1 {
            return Err(Error::range("word length", word.len(), format!("<= horizon + 1 = {}", self.horizon + 1)));
        }
        if let Some(s) = word.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::invalid("word", format!("symbol {s} is not in {{-1, 1}}")));
        }
        Ok(())
    }

    /// `log_2 μ([x_0..x_n])`.
    pub fn log2_cylinder_measure(&self, word: &[i8]) -> Result<f64> {
        self.check_word(word)?;
        Ok(word.windows(2).enumerate().fold(-1.0, |acc, (k, pair)| {
            acc + if pair[0] == pair[1] { self.log2_stay[k] } else { self.log2_flip[k] }
        }))
    }

    /// `μ([x_0..x_n]) = (1/2) p^{(0)}_{x_0,x_1} ⋯ p^{(n−1)}_{x_{n−1},x_n}`.
    pub fn cylinder_measure(&self, word: &[i8]) -> Result<f64> {
        self.check_word(word)?;
        Ok(word.windows(2).enumerate().fold(0.5, |acc, (k, pair)| {
            acc * if pair[0] == pair[1] { self.stay[k] } else { self.flip[k] }
        }))
    }

    /// One path `x_0..x_{len−1}`; path `i` under `seed` is reproducible on
    /// its own.
    pub fn sample_path(&self, len: usize, seed: u64, path: u64) -> Result<Vec<i8>> {
        self.check_len(len)?;
        let mut rng = path_rng(seed, path);
        let mut out = Vec::with_capacity(len);
        let mut x: i8 = if uniform(&mut rng) < 0.5 { -1 } else { 1 };
        out.push(x);
        for k in 0..len - 1 {
            if uniform(&mut rng) >= self.stay[k] {
                x = -x;
            }
            out.push(x);
        }
        Ok(out)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len < 2 {
            return Err(Error::range("N", len, ">= 2"));
        }
        if len > self.horizon + 1 {
            return Err(Error::range("N", len, format!("<= horizon + 1 = {}", self.horizon + 1)));
        }
        Ok(())
    }
}

fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Empirical laws of `K` sampled paths of length `N`.
#[derive(Debug, Clone, Serialize)]
pub struct GibbsSample {
    pub lambda: f64,
    pub len: usize,
    pub paths: usize,
    pub seed: u64,
    pub weights: Vec<f64>,
    /// `Σ_paths x_n x_{n+1}` for `n < N−1`.
    pub product_sums: Vec<i64>,
    /// `(1/(N−1)) Σ_n w_n x_n x_{n+1}`, one per path.
    pub running_averages: Vec<f64>,
}

impl GibbsSample {
    pub fn mean_product(&self, n: usize) -> f64 {
        self.product_sums[n] as f64 / self.paths as f64
    }

    /// Mean of `x_n x_{n+1}` over all steps and paths.
    pub fn overall_mean_product(&self) -> f64 {
        let total: i64 = self.product_sums.iter().sum();
        total as f64 / (self.paths as f64 * self.product_sums.len() as f64)
    }

    /// `E x_n x_{n+1} = tanh(λ w_n)`.
    pub fn analytic_product(&self, n: usize) -> f64 {
        (self.lambda * self.weights[n]).tanh()
    }

    pub fn analytic_overall_mean(&self) -> f64 {
        let m = self.product_sums.len() as f64;
        (0..self.product_sums.len()).map(|n| self.analytic_product(n)).sum::<f64>() / m
    }

    /// Standard error of [`Self::overall_mean_product`]. The products
    /// `x_n x_{n+1}` are independent across `n` under `μ_λ`.
    pub fn overall_std_error(&self) -> f64 {
        let m = self.product_sums.len() as f64;
        let var: f64 = (0..self.product_sums.len())
            .map(|n| 1.0 - self.analytic_product(n).powi(2))
            .sum();
        (var / self.paths as f64).sqrt() / m
    }

    pub fn mean_running_average(&self) -> f64 {
        self.running_averages.iter().sum::<f64>() / self.paths as f64
    }

    /// `(1/(N−1)) Σ_n w_n tanh(λ w_n)`.
    pub fn analytic_running_average(&self) -> f64 {
        let m = self.product_sums.len();
        (0..m).map(|n| self.weights[n] * self.analytic_product(n)).sum::<f64>() / m as f64
    }

    /// `n, w_n, mean_xx, analytic_xx, running_average` where the last column
    /// is the path-averaged cumulative mean of `w_k x_k x_{k+1}` up to `n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,w_n,mean_xx,analytic_xx,running_average\n");
        let mut acc = 0.0;
        for n in 0..self.product_sums.len() {
            acc += self.weights[n] * self.mean_product(n);
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                n,
                self.weights[n],
                self.mean_product(n),
                self.analytic_product(n),
                acc / (n + 1) as f64
            ));
        }
        out
    }

    pub fn summary(&self) -> GibbsSummary {
        GibbsSummary {
            lambda: self.lambda,
            len: self.len,
            paths: self.paths,
            seed: self.seed,
            mean_xx: self.overall_mean_product(),
            analytic_mean_xx: self.analytic_overall_mean(),
            std_error: self.overall_std_error(),
            running_average: self.mean_running_average(),
            analytic_running_average: self.analytic_running_average(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GibbsSummary {
    pub lambda: f64,
    pub len: usize,
    pub paths: usize,
    pub seed: u64,
    pub mean_xx: f64,
    pub analytic_mean_xx: f64,
    pub std_error: f64,
    pub running_average: f64,
    pub analytic_running_average: f64,
}

impl GibbsSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

fn path_stats(m: &InhomMarkov, len: usize, seed: u64, path: u64, weights: &[f64], sums: &mut [i64]) -> f64 {
    let mut rng = path_rng(seed, path);
    let mut x: i64 = if uniform(&mut rng) < 0.5 { -1 } else { 1 };
    let mut avg = 0.0;
    for k in 0..len - 1 {
        let next = if uniform(&mut rng) >= m.stay[k] { -x } else { x };
        let prod = x * next;
        sums[k] += prod;
        avg += weights[k] * prod as f64;
        x = next;
    }
    avg / (len - 1) as f64
}

/// `K` independent chains of length `N` through `P_0..P_{N−2}`. Path `i`
/// draws from its own generator stream, so results do not depend on the
/// thread count.
pub fn sample_paths(m: &InhomMarkov, len: usize, paths: usize, seed: u64) -> Result<GibbsSample> {
    m.check_len(len)?;
    if paths == 0 {
        return Err(Error::range("K", paths, ">= 1"));
    }
    let weights = m.weights.values(0, len - 1)?;
    let chunk = 1024usize;
    let starts: Vec<usize> = (0..paths).step_by(chunk).collect();
    let run = |start: usize| {
        let mut sums = vec![0i64; len - 1];
        let avgs: Vec<f64> = (start..(start + chunk).min(paths))
            .map(|p| path_stats(m, len, seed, p as u64, &weights, &mut sums))
            .collect();
        (sums, avgs)
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<(Vec<i64>, Vec<f64>)> = {
        use rayon::prelude::*;
        starts.par_iter().map(|&s| run(s)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(Vec<i64>, Vec<f64>)> = starts.iter().map(|&s| run(s)).collect();
    let mut product_sums = vec![0i64; len - 1];
    let mut running_averages = Vec::with_capacity(paths);
    for (sums, avgs) in parts {
        for (t, s) in product_sums.iter_mut().zip(sums) {
            *t += s;
        }
        running_averages.extend(avgs);
    }
    Ok(GibbsSample {
        lambda: m.lambda,
        len,
        paths,
        seed,
        weights,
        product_sums,
        running_averages,
    })
}

/// `log μ([x_0..x_{n−1}]) / (−n log 2)` for each requested depth `n`.
pub fn local_dimension_estimate(m: &InhomMarkov, path: &[i8], depths: &[usize]) -> Result<Vec<f64>> {
    depths
        .iter()
        .map(|&n| {
            if n == 0 || n > path.len() {
                return Err(Error::range("depth", n, format!("1..={}", path.len())));
            }
            Ok(m.log2_cylinder_measure(&path[..n])? / -(n as f64))
        })
        .collect()
}

/// `dim μ_λ = (1/log 2) Σ p_j (log(2 cosh λv_j) − λ v_j tanh(λ v_j))`.
pub fn markov_dimension(ft: &FrequencyTable, lambda: f64) -> f64 {
    ft.iter()
        .map(|(v, p)| p * (log_two_cosh(lambda * v) - lambda * v * (lambda * v).tanh()))
        .sum::<f64>()
        / std::f64::consts::LN_2
}
