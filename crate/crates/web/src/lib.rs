//! Browser bindings. Each exported function returns a JSON string that the
//! page parses; errors come back as thrown JS errors.

use birkhoff::gibbs::markov_dimension;
use birkhoff::{
    closed_form_curve, local_dimension_estimate, pressure_curve, sample_paths, spectrum_closed_form, FrequencyTable,
    InhomMarkov, Potential, Substitution, WeightSequence,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest horizon accepted from the page; keeps a click under a few seconds.
pub const MAX_N: usize = 2_000_000;

pub fn weights_named(name: &str) -> Result<WeightSequence, String> {
    match name {
        "moebius" => Ok(WeightSequence::moebius()),
        "squarefree" => Ok(WeightSequence::squarefree()),
        "thue-morse" => WeightSequence::substitutive(Substitution::thue_morse(), vec![-1.0, 1.0]).map_err(err),
        other => Err(format!("unknown weights {other:?}")),
    }
}

fn err(e: birkhoff::Error) -> String {
    e.to_string()
}

fn frequencies(w: &WeightSequence) -> Result<FrequencyTable, String> {
    w.exact_frequencies()
        .ok_or_else(|| "these weights have no exact frequency table".to_string())
}

fn grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps < 2 {
        return vec![lo];
    }
    (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect()
}

#[derive(Serialize)]
pub struct PressureView {
    pub lambda: Vec<f64>,
    pub finite_n: Vec<f64>,
    pub closed_form: Vec<f64>,
}

/// ψ_n(λ) for the xy potential next to the frequency closed form.
pub fn pressure_view(weights: &str, n: usize, lambda_max: f64, steps: usize) -> Result<PressureView, String> {
    if n == 0 || n > MAX_N {
        return Err(format!("n must lie in 1..={MAX_N}"));
    }
    let w = weights_named(weights)?;
    let lambdas = grid(-lambda_max, lambda_max, steps);
    let finite = pressure_curve(&w, &Potential::xy(), &lambdas, n).map_err(err)?;
    let closed = closed_form_curve(&frequencies(&w)?, &lambdas).map_err(err)?;
    Ok(PressureView {
        lambda: lambdas,
        finite_n: finite.psi,
        closed_form: closed.psi,
    })
}

#[derive(Serialize)]
pub struct SpectrumView {
    pub alpha: Vec<f64>,
    pub dim: Vec<f64>,
    pub lambda: Vec<f64>,
}

/// Closed-form spectrum over the open range of attainable averages.
pub fn spectrum_view(weights: &str, steps: usize) -> Result<SpectrumView, String> {
    let ft = frequencies(&weights_named(weights)?)?;
    let a = 0.999 * ft.abs_mean();
    let mut view = SpectrumView {
        alpha: Vec::new(),
        dim: Vec::new(),
        lambda: Vec::new(),
    };
    for alpha in grid(-a, a, steps) {
        let p = spectrum_closed_form(&ft, alpha).map_err(err)?;
        view.alpha.push(alpha);
        view.dim.push(p.dim());
        view.lambda.push(p.lambda_alpha);
    }
    Ok(view)
}

#[derive(Serialize)]
pub struct GibbsView {
    pub mean_xx: Vec<f64>,
    pub analytic_xx: Vec<f64>,
    pub running_average: f64,
    pub analytic_running_average: f64,
    pub depths: Vec<usize>,
    pub local_dimension: Vec<f64>,
    pub dimension_closed_form: f64,
}

/// Sampled correlations `E[x_n x_{n+1}]` and the local dimension of one path.
pub fn gibbs_view(weights: &str, lambda: f64, len: usize, paths: usize, seed: u64) -> Result<GibbsView, String> {
    if len > MAX_N || len.saturating_mul(paths) > 50 * MAX_N {
        return Err("path length times path count is too large for the browser".into());
    }
    let w = weights_named(weights)?;
    let ft = frequencies(&w)?;
    let m = InhomMarkov::new(lambda, w, len).map_err(err)?;
    let sample = sample_paths(&m, len, paths, seed).map_err(err)?;
    let path = m.sample_path(len, seed, 0).map_err(err)?;
    let depths: Vec<usize> = std::iter::successors(Some(10usize), |d| Some(d * 10))
        .take_while(|&d| d <= len)
        .collect();
    let local = local_dimension_estimate(&m, &path, &depths).map_err(err)?;
    Ok(GibbsView {
        mean_xx: (0..sample.product_sums.len()).map(|n| sample.mean_product(n)).collect(),
        analytic_xx: (0..sample.product_sums.len()).map(|n| sample.analytic_product(n)).collect(),
        running_average: sample.mean_running_average(),
        analytic_running_average: sample.analytic_running_average(),
        depths,
        local_dimension: local,
        dimension_closed_form: markov_dimension(&ft, lambda),
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map(|v| serde_json::to_string(&v).expect("view serializes"))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn pressure(weights: &str, n: usize, lambda_max: f64, steps: usize) -> Result<String, JsError> {
    to_js(pressure_view(weights, n, lambda_max, steps))
}

#[wasm_bindgen]
pub fn spectrum(weights: &str, steps: usize) -> Result<String, JsError> {
    to_js(spectrum_view(weights, steps))
}

#[wasm_bindgen]
pub fn gibbs(weights: &str, lambda: f64, len: usize, paths: usize, seed: u64) -> Result<String, JsError> {
    to_js(gibbs_view(weights, lambda, len, paths, seed))
}
