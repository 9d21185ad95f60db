//! Convex analysis on pressure curves and the multifractal spectrum.
//!
//! For `α = ψ'(λ)` the level set `E(α)` has dimension
//! `(ψ(λ) − λα) / log q = −ψ*(α) / log q`. Where the subderivative
//! `∂ψ(λ)` is a nontrivial interval only the two conjugate bounds are
//! reported, as `dim_lower` / `dim_upper`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FrequencyTable, SQUAREFREE_DENSITY};
use crate::pressure::{closed_form_pressure, closed_form_psi_prime, PressureCurve};

/// Requests closer than this to an endpoint of the α-range are rejected.
pub const ENDPOINT_MARGIN: f64 = 1e-9;

/// Subderivative width below which a curve counts as differentiable.
pub const DEFAULT_DERIV_TOL: f64 = 1e-6;

const LAMBDA_CAP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub alpha: f64,
    pub lambda_alpha: f64,
    pub dim_lower: f64,
    pub dim_upper: f64,
    /// `∂ψ(λ_α)` collapsed to a point within tolerance.
    pub differentiable: bool,
}

impl SpectrumPoint {
    pub fn dim(&self) -> f64 {
        0.5 * (self.dim_lower + self.dim_upper)
    }
}

pub fn spectrum_csv(points: &[SpectrumPoint]) -> String {
    let mut out = String::from("alpha,lambda_alpha,dim_lower,dim_upper\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.alpha, p.lambda_alpha, p.dim_lower, p.dim_upper
        ));
    }
    out
}

fn slope(xs: &[f64], ys: &[f64], i: usize, j: usize) -> f64 {
    (ys[j] - ys[i]) / (xs[j] - xs[i])
}

fn second_difference(xs: &[f64], ys: &[f64], i: usize) -> f64 {
    slope(xs, ys, i, i + 1) - slope(xs, ys, i - 1, i)
}

/// `[d−, d+]` at grid node `i`. A node counts as a kink when its slope jump
/// exceeds both the tolerance and the jumps at the neighbouring nodes,
/// which for smooth data are of the same size `h ψ''`. Smooth nodes get
/// the central three-point derivative; kinks get one-sided second-order
/// stencils, all clamped into the bracket that convexity guarantees.
fn node_subderivative(xs: &[f64], ys: &[f64], i: usize) -> (f64, f64) {
    let s_left = slope(xs, ys, i - 1, i);
    let s_right = slope(xs, ys, i, i + 1);
    let lo = s_left.min(s_right);
    let hi = s_left.max(s_right);
    let jump = second_difference(xs, ys, i);
    let mut neighbours = Vec::with_capacity(2);
    if i >= 2 {
        neighbours.push(second_difference(xs, ys, i - 1));
    }
    if i + 2 < xs.len() {
        neighbours.push(second_difference(xs, ys, i + 1));
    }
    if neighbours.is_empty() {
        return (lo, hi);
    }
    let typical = neighbours.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if jump - typical <= DEFAULT_DERIV_TOL.max(typical) {
        let c = three_point_derivative(xs, ys, [i - 1, i, i + 1], i).clamp(lo, hi);
        return (c, c);
    }
    let mut left = s_left;
    let mut right = s_right;
    if i >= 2 {
        left = three_point_derivative(xs, ys, [i - 2, i - 1, i], i);
    }
    if i + 2 < xs.len() {
        right = three_point_derivative(xs, ys, [i, i + 1, i + 2], i);
    }
    left = left.clamp(lo, hi);
    right = right.clamp(lo, hi);
    if left > right {
        let mid = 0.5 * (left + right);
        (mid, mid)
    } else {
        (left, right)
    }
}

/// Derivative at `xs[at]` of the parabola through three nodes.
fn three_point_derivative(xs: &[f64], ys: &[f64], idx: [usize; 3], at: usize) -> f64 {
    let [a, b, c] = idx;
    let x = xs[at];
    let (x0, x1, x2) = (xs[a], xs[b], xs[c]);
    ys[a] * ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2))
        + ys[b] * ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2))
        + ys[c] * ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1))
}

fn parabola(xs: &[f64], ys: &[f64], idx: [usize; 3], x: f64) -> f64 {
    let [a, b, c] = idx;
    let (x0, x1, x2) = (xs[a], xs[b], xs[c]);
    ys[a] * (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2))
        + ys[b] * (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2))
        + ys[c] * (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1))
}

/// `[d−, d+]` at `x` for sampled convex data. Between nodes the piecewise
/// linear interpolant has a single slope.
pub fn subderivative_xy(xs: &[f64], ys: &[f64], x: f64) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 3 || !(x > xs[0] && x < xs[n - 1]) {
        return Err(Error::range(
            "lambda",
            x,
            format!("strictly inside ({}, {})", xs.first().unwrap_or(&f64::NAN), xs.last().unwrap_or(&f64::NAN)),
        ));
    }
    let i = xs.partition_point(|&v| v < x);
    if xs[i] == x {
        Ok(node_subderivative(xs, ys, i))
    } else {
        let s = slope(xs, ys, i - 1, i);
        Ok((s, s))
    }
}

pub fn numeric_subderivative(curve: &PressureCurve, lambda: f64) -> Result<(f64, f64)> {
    subderivative_xy(&curve.lambdas, &curve.psi, lambda)
}

/// Slopes of the first and last cells, the attainable α-range of the data.
pub fn slope_range(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len();
    (slope(xs, ys, 0, 1), slope(xs, ys, n - 2, n - 1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateValue {
    /// `sup_x (αx − y(x))`.
    pub value: f64,
    pub argmax: f64,
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Conjugate of sampled convex data: the exact maximum over nodes, refined
/// by golden-section search on the local parabola around the best node.
pub fn conjugate_xy(xs: &[f64], ys: &[f64], alpha: f64) -> Result<ConjugateValue> {
    let n = xs.len();
    if n < 3 {
        return Err(Error::invalid("curve", "need at least 3 points"));
    }
    let (lo, hi) = slope_range(xs, ys);
    if !(alpha >= lo && alpha <= hi) {
        return Err(Error::range("alpha", alpha, format!("[{lo}, {hi}] (attainable slopes)")));
    }
    let (best, value) = (0..n)
        .map(|i| (i, alpha * xs[i] - ys[i]))
        .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
    let centre = best.clamp(1, n - 2);
    let idx = [centre - 1, centre, centre + 1];
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(n - 1)];
    let (x, refined) = golden_max(|x| alpha * x - parabola(xs, ys, idx, x), a, b);
    if refined > value {
        Ok(ConjugateValue { value: refined, argmax: x })
    } else {
        Ok(ConjugateValue { value, argmax: xs[best] })
    }
}

/// `ψ*(α) = sup_λ (αλ − ψ(λ))` for a sampled curve.
pub fn conjugate(curve: &PressureCurve, alpha: f64) -> Result<f64> {
    conjugate_xy(&curve.lambdas, &curve.psi, alpha).map(|c| c.value)
}

/// `ψ**(λ)`, computed on the dual grid `α_i ∈ ∂ψ(λ_i)` of interior nodes.
pub fn double_conjugate(curve: &PressureCurve, lambda: f64) -> Result<f64> {
    let xs = &curve.lambdas;
    let ys = &curve.psi;
    let mut dual: Vec<(f64, f64)> = Vec::with_capacity(xs.len());
    for i in 1..xs.len() - 1 {
        let (l, r) = node_subderivative(xs, ys, i);
        let a = 0.5 * (l + r);
        if dual.last().is_some_and(|&(prev, _)| a <= prev) {
            continue;
        }
        dual.push((a, conjugate_xy(xs, ys, a)?.value));
    }
    let (alphas, stars): (Vec<f64>, Vec<f64>) = dual.into_iter().unzip();
    conjugate_xy(&alphas, &stars, lambda).map(|c| c.value)
}

/// Largest amount by which an interior point exceeds the chord of its
/// neighbours; `<= 0` for convex data.
pub fn convexity_defect(xs: &[f64], ys: &[f64]) -> f64 {
    (1..xs.len().saturating_sub(1))
        .map(|i| {
            let t = (xs[i] - xs[i - 1]) / (xs[i + 1] - xs[i - 1]);
            ys[i] - ((1.0 - t) * ys[i - 1] + t * ys[i + 1])
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn check_alpha(ft: &FrequencyTable, alpha: f64) -> Result<f64> {
    let a = ft.abs_mean();
    if !(alpha.abs() < a - ENDPOINT_MARGIN) {
        return Err(Error::range("alpha", alpha, format!("open interval (-{a}, {a})")));
    }
    Ok(a)
}

/// Unique `λ` with `ψ'(λ) = α` for the closed-form pressure of `ft`.
pub fn solve_lambda_alpha(ft: &FrequencyTable, alpha: f64) -> Result<f64> {
    check_alpha(ft, alpha)?;
    let f = |l: f64| closed_form_psi_prime(ft, l) - alpha;
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > LAMBDA_CAP {
            if f(LAMBDA_CAP) < 0.0 {
                return Err(Error::range("alpha", alpha, format!("|λ_α| <= {LAMBDA_CAP} (too close to the endpoint)")));
            }
            hi = LAMBDA_CAP;
        }
    }
    while f(lo) > 0.0 {
        hi = lo;
        lo *= 2.0;
        if lo < -LAMBDA_CAP {
            if f(-LAMBDA_CAP) > 0.0 {
                return Err(Error::range("alpha", alpha, format!("|λ_α| <= {LAMBDA_CAP} (too close to the endpoint)")));
            }
            lo = -LAMBDA_CAP;
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v == 0.0 || mid == lo || mid == hi {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Spectrum from the closed-form pressure of a frequency table (`q = 2`).
pub fn spectrum_closed_form(ft: &FrequencyTable, alpha: f64) -> Result<SpectrumPoint> {
    let lambda = solve_lambda_alpha(ft, alpha)?;
    let dim = (closed_form_pressure(ft, lambda) - lambda * alpha) / std::f64::consts::LN_2;
    Ok(SpectrumPoint {
        alpha,
        lambda_alpha: lambda,
        dim_lower: dim,
        dim_upper: dim,
        differentiable: true,
    })
}

/// Spectrum from a sampled pressure curve.
pub fn spectrum_curve(curve: &PressureCurve, alpha: f64, deriv_tol: f64) -> Result<SpectrumPoint> {
    let xs = &curve.lambdas;
    let ys = &curve.psi;
    let conj = conjugate_xy(xs, ys, alpha)?;
    let lambda = conj.argmax;
    let dim = -conj.value / curve.log_q;
    let nearest = (0..xs.len())
        .min_by(|&a, &b| (xs[a] - lambda).abs().total_cmp(&(xs[b] - lambda).abs()))
        .unwrap();
    let mut point = SpectrumPoint {
        alpha,
        lambda_alpha: lambda,
        dim_lower: dim,
        dim_upper: dim,
        differentiable: true,
    };
    if nearest == 0 || nearest == xs.len() - 1 {
        return Ok(point);
    }
    let (dm, dp) = node_subderivative(xs, ys, nearest);
    if dp - dm > deriv_tol {
        let at = |a: f64| conjugate_xy(xs, ys, a).map(|c| -c.value / curve.log_q);
        let (from_max, from_min) = (at(dp)?, at(dm)?);
        // λ > 0: lower bound from max ∂ψ; λ < 0 swaps the roles
        let (lower, upper) = if xs[nearest] >= 0.0 {
            (from_max, from_min)
        } else {
            (from_min, from_max)
        };
        point.dim_lower = lower.min(upper);
        point.dim_upper = lower.max(upper);
        point.differentiable = false;
    }
    Ok(point)
}

/// `H(x) = −x log x − (1−x) log(1−x)`, with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    let term = |t: f64| if t <= 0.0 { 0.0 } else { -t * t.ln() };
    term(x) + term(1.0 - x)
}

/// `dim F(α) = 1 − 6/π² + (6/(π² log 2)) H(1/2 + π²α/12)` for Möbius weights.
pub fn mobius_spectrum(alpha: f64) -> Result<f64> {
    let d = SQUAREFREE_DENSITY;
    if !(alpha.abs() < d - ENDPOINT_MARGIN) {
        return Err(Error::range("alpha", alpha, format!("open interval (-6/π², 6/π²) = (-{d}, {d})")));
    }
    let pi2 = std::f64::consts::PI.powi(2);
    Ok(1.0 - d + d / std::f64::consts::LN_2 * binary_entropy(0.5 + pi2 * alpha / 12.0))
}

/// `dim F(α) = f_0 + ((1−f_0)/log 2) H(1/2 + α/(2(1−f_0)))` for weights in
/// `{−1, 0, 1}` with zero-frequency `f_0`.
pub fn ternary_spectrum(zero_freq: f64, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&zero_freq) {
        return Err(Error::range("f_0", zero_freq, "[0, 1)"));
    }
    let a = 1.0 - zero_freq;
    if !(alpha.abs() < a - ENDPOINT_MARGIN) {
        return Err(Error::range("alpha", alpha, format!("open interval (-{a}, {a})")));
    }
    Ok(zero_freq + a / std::f64::consts::LN_2 * binary_entropy(0.5 + alpha / (2.0 * a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pressure::closed_form_curve;

    fn grid(min: f64, max: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn subderivative_smooth() {
        let ft = FrequencyTable::moebius();
        let curve = closed_form_curve(&ft, &grid(-2.0, 2.0, 4001)).unwrap();
        let (l, r) = numeric_subderivative(&curve, curve.lambdas[3000]).unwrap();
        assert!((curve.lambdas[3000] - 1.0).abs() < 1e-12);
        assert!(r - l < 1e-6, "width {}", r - l);
        assert!((0.5 * (l + r) - closed_form_psi_prime(&ft, 1.0)).abs() < 1e-6);
        let (l0, r0) = numeric_subderivative(&curve, curve.lambdas[2000]).unwrap();
        assert!((0.5 * (l0 + r0)).abs() < 1e-10);
    }

    #[test]
    fn subderivative_kink() {
        let xs = grid(-1.0, 1.0, 21);
        let ys: Vec<f64> = xs.iter().map(|&x| x.max(0.0)).collect();
        let (l, r) = subderivative_xy(&xs, &ys, xs[10]).unwrap();
        assert_eq!((l, r), (0.0, 1.0));
        // one node off the kink the clamp keeps the estimate honest
        let (l, r) = subderivative_xy(&xs, &ys, xs[11]).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && (r - 1.0).abs() < 1e-12);
        assert!(subderivative_xy(&xs, &ys, -1.0).is_err());
    }

    #[test]
    fn conjugate_log_cosh_at_zero() {
        let one = FrequencyTable::exact(vec![1.0], vec![1.0]).unwrap();
        let curve = closed_form_curve(&one, &grid(-8.0, 8.0, 257)).unwrap();
        let c = conjugate(&curve, 0.0).unwrap();
        assert!((c + 2f64.ln()).abs() < 1e-15);
        assert!(conjugate(&curve, 1.5).is_err());
    }

    #[test]
    fn solve_examples() {
        assert_eq!(solve_lambda_alpha(&FrequencyTable::moebius(), 0.0).unwrap(), 0.0);
        let one = FrequencyTable::exact(vec![1.0], vec![1.0]).unwrap();
        for a in [-0.9f64, -0.2, 0.5, 0.99] {
            assert!((solve_lambda_alpha(&one, a).unwrap() - a.atanh()).abs() < 1e-11);
        }
        let d = SQUAREFREE_DENSITY;
        for a in [-0.5, 0.1, 0.3, 0.6] {
            let ap = a / d;
            let expect = 0.5 * ((1.0 + ap) / (1.0 - ap)).ln();
            let got = solve_lambda_alpha(&FrequencyTable::moebius(), a).unwrap();
            assert!((got - expect).abs() < 1e-10, "{a}: {got} vs {expect}");
        }
        assert!(solve_lambda_alpha(&one, 1.0).is_err());
        assert!(solve_lambda_alpha(&one, 1.0 - 1e-10).is_err());
        let near = solve_lambda_alpha(&one, 1.0 - 1e-8).unwrap();
        assert!((near - (1.0f64 - 1e-8).atanh()).abs() < 1e-6);
    }

    #[test]
    fn spectrum_single_value_is_entropy() {
        let one = FrequencyTable::exact(vec![1.0], vec![1.0]).unwrap();
        for a in [-0.8, -0.3, 0.0, 0.45, 0.9] {
            let s = spectrum_closed_form(&one, a).unwrap();
            let h = binary_entropy((1.0 + a) / 2.0) / std::f64::consts::LN_2;
            assert!((s.dim() - h).abs() < 1e-10);
        }
        let s = spectrum_closed_form(&one, 0.0).unwrap();
        assert!((s.dim() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mobius_closed_form_values() {
        assert!((mobius_spectrum(0.0).unwrap() - 1.0).abs() < 1e-15);
        let d = SQUAREFREE_DENSITY;
        let edge = mobius_spectrum(d - 1e-6).unwrap();
        assert!((edge - (1.0 - d)).abs() < 1e-4);
        assert!(mobius_spectrum(d).is_err());
        assert!(mobius_spectrum(-d - 0.1).is_err());
        let general = ternary_spectrum(1.0 - d, 3.0 / std::f64::consts::PI.powi(2)).unwrap();
        let direct = mobius_spectrum(3.0 / std::f64::consts::PI.powi(2)).unwrap();
        assert!((general - direct).abs() < 1e-14);
        let generic = spectrum_closed_form(&FrequencyTable::moebius(), 3.0 / std::f64::consts::PI.powi(2)).unwrap();
        assert!((generic.dim() - direct).abs() < 1e-10);
    }

    #[test]
    fn double_conjugate_recovers_curve() {
        let curve = closed_form_curve(&FrequencyTable::moebius(), &grid(-8.0, 8.0, 1601)).unwrap();
        for i in (200..1400).step_by(50) {
            let back = double_conjugate(&curve, curve.lambdas[i]).unwrap();
            assert!((back - curve.psi[i]).abs() < 1e-6, "λ={} err {}", curve.lambdas[i], back - curve.psi[i]);
        }
    }

    #[test]
    fn curve_spectrum_flags_kink() {
        // ψ(λ) = log 2 + |λ|/2 has ∂ψ(0) = [-1/2, 1/2]
        let xs = grid(-2.0, 2.0, 41);
        let ys: Vec<f64> = xs.iter().map(|x| 2f64.ln() + 0.5 * x.abs()).collect();
        let n = xs.len();
        let curve = PressureCurve::new(
            xs,
            ys,
            0,
            crate::pressure::PressureMethod::ClosedForm,
            vec![None; n],
            2f64.ln(),
        )
        .unwrap();
        let p = spectrum_curve(&curve, 0.0, DEFAULT_DERIV_TOL).unwrap();
        assert!(!p.differentiable);
        assert!(p.dim_lower <= p.dim_upper);
        assert!((p.dim_upper - 1.0).abs() < 1e-12);
    }
}
