//! Oracle checks run by `birkhoff verify`: independent routes to the same
//! quantity, compared at fixed tolerances.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::InhomMarkov;
use crate::legendre::{convexity_defect, double_conjugate, solve_lambda_alpha};
use crate::model::{FrequencyTable, Potential, SymbolicSpace, WeightSequence};
use crate::partition::{exact_log_partition_word, exact_partition, log_partition_word};
use crate::pressure::{closed_form_curve, closed_form_pressure, closed_form_psi_prime};
use crate::returnwords::return_words;
use crate::weights::Substitution;

pub const CHECK_NAMES: [&str; 5] = ["partition", "fenchel-young", "duality", "gibbs", "thue-morse"];

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn new(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: measured <= tolerance,
            measured,
            tolerance,
        }
    }
}

/// A known value `log Z` for an explicit weight word, stored next to a
/// potential in its JSON file under `"reference"`.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct ReferenceCase {
    pub lambda: f64,
    pub weights: Vec<f64>,
    pub log_z: f64,
}

#[derive(Deserialize)]
struct ReferenceFile {
    #[serde(default)]
    reference: Vec<ReferenceCase>,
}

pub fn parse_references(json: &str) -> Result<Vec<ReferenceCase>> {
    Ok(serde_json::from_str::<ReferenceFile>(json)?.reference)
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Random binary potentials with `r ∈ {2, 3}`, `n <= 10`, `λ ∈ [−3, 3]`:
/// largest relative gap between enumeration and transfer matrices.
pub fn partition_oracle_error(cases: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let r = 2 + (rng.next_u64() % 2) as usize;
        let n = 1 + (rng.next_u64() % 10) as usize;
        let lambda = -3.0 + 6.0 * uniform(&mut rng);
        let table = (0..1usize << r).map(|_| 2.0 * uniform(&mut rng) - 1.0).collect();
        let p = Potential::new(SymbolicSpace::signs(), r, table)?;
        let word: Vec<f64> = (0..n).map(|_| 2.0 * uniform(&mut rng) - 1.0).collect();
        let exact = exact_log_partition_word(&p, lambda, &word)?;
        let transfer = log_partition_word(&p, lambda, &word)?;
        worst = worst.max(rel_err(transfer, exact));
    }
    Ok(worst)
}

/// Both engines against stored reference values.
pub fn reference_error(p: &Potential, refs: &[ReferenceCase]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for case in refs {
        let exact = exact_log_partition_word(p, case.lambda, &case.weights)?;
        let transfer = log_partition_word(p, case.lambda, &case.weights)?;
        worst = worst
            .max(rel_err(exact, case.log_z))
            .max(rel_err(transfer, case.log_z));
    }
    Ok(worst)
}

/// `max(λα − ψ(λ) − ψ*(α))` over a grid of pairs (must be `<= 0`) together
/// with the equality gap at `α = ψ'(λ)`.
pub fn fenchel_young_error(ft: &FrequencyTable) -> Result<f64> {
    let a = ft.abs_mean();
    let alphas: Vec<f64> = (1..40).map(|i| a * (-0.95 + 1.9 * i as f64 / 40.0)).collect();
    let stars: Vec<f64> = alphas
        .iter()
        .map(|&al| solve_lambda_alpha(ft, al).map(|l| l * al - closed_form_pressure(ft, l)))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for i in 0..=64 {
        let l = -4.0 + 8.0 * i as f64 / 64.0;
        let psi = closed_form_pressure(ft, l);
        for (&al, &st) in alphas.iter().zip(&stars) {
            worst = worst.max(l * al - psi - st);
        }
        let al = closed_form_psi_prime(ft, l);
        if al.abs() < a * 0.999 {
            let l2 = solve_lambda_alpha(ft, al)?;
            let st = l2 * al - closed_form_pressure(ft, l2);
            worst = worst.max((psi + st - l * al).abs());
        }
    }
    Ok(worst)
}

fn grid(min: f64, max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect()
}

/// `|ψ** − ψ|` on interior nodes of a sampled closed-form curve, plus any
/// midpoint-convexity defect.
pub fn duality_error(ft: &FrequencyTable) -> Result<f64> {
    let curve = closed_form_curve(ft, &grid(-8.0, 8.0, 1601))?;
    let mut worst = convexity_defect(&curve.lambdas, &curve.psi).max(0.0);
    for i in (400..=1200).step_by(25) {
        let back = double_conjugate(&curve, curve.lambdas[i])?;
        worst = worst.max((back - curve.psi[i]).abs());
    }
    Ok(worst)
}

/// Relative error of `μ · 2^{n+1} · Z_n = exp(λ Σ w_k x_k x_{k+1})` over
/// every cylinder of length `n + 1 <= max_n + 1`.
pub fn gibbs_identity_error(weights: &WeightSequence, lambda: f64, max_n: usize) -> Result<f64> {
    let xy = Potential::xy();
    let m = InhomMarkov::new(lambda, weights.clone(), max_n)?;
    let w = weights.values(0, max_n)?;
    let mut worst: f64 = 0.0;
    let mut word = vec![0i8; max_n + 1];
    for n in 1..=max_n {
        let log_z = exact_partition(weights, &xy, lambda, n)?.log_z;
        for bits in 0..1u32 << (n + 1) {
            for (i, s) in word[..=n].iter_mut().enumerate() {
                *s = if bits >> i & 1 == 1 { 1 } else { -1 };
            }
            let s: f64 = (0..n).map(|k| w[k] * (word[k] * word[k + 1]) as f64).sum();
            let lhs = m.cylinder_measure(&word[..=n])? * 2f64.powi(n as i32 + 1) * log_z.exp();
            let rhs = (lambda * s).exp();
            worst = worst.max(((lhs - rhs) / rhs).abs());
        }
    }
    Ok(worst)
}

fn sorted_strings(words: Vec<Vec<usize>>) -> Vec<String> {
    let mut out: Vec<String> = words
        .into_iter()
        .map(|w| w.iter().map(|d| d.to_string()).collect())
        .collect();
    out.sort();
    out
}

/// Observed Thue–Morse return-word sets over the prefixes `0` and `01`.
pub fn thue_morse_return_sets(horizon: usize) -> Result<(Vec<String>, Vec<String>)> {
    let x = Substitution::thue_morse().fixed_point_prefix(horizon)?;
    Ok((
        sorted_strings(return_words(&x, &x[..1], horizon)?),
        sorted_strings(return_words(&x, &x[..2], horizon)?),
    ))
}

/// Runs every check, or only those whose name starts with `only`.
/// `reference` adds a check of both partition engines against stored values.
pub fn run_checks(only: Option<&str>, reference: Option<(&Potential, &[ReferenceCase])>) -> Result<Vec<CheckResult>> {
    if let Some(name) = only {
        if !CHECK_NAMES.contains(&name) {
            return Err(Error::invalid("check", format!("unknown check {name:?}; expected one of {CHECK_NAMES:?}")));
        }
    }
    let want = |name: &str| only.is_none_or(|o| o == name);
    let mut out = Vec::new();
    if want("partition") {
        out.push(CheckResult::new("partition: exact vs transfer (200 random cases)", partition_oracle_error(200, 7)?, 1e-12));
        if let Some((p, refs)) = reference {
            out.push(CheckResult::new(
                format!("partition: potential file vs {} reference values", refs.len()),
                reference_error(p, refs)?,
                1e-12,
            ));
        }
    }
    let tables = [
        ("moebius", FrequencyTable::moebius()),
        ("constant", FrequencyTable::exact(vec![1.0], vec![1.0])?),
    ];
    if want("fenchel-young") {
        for (label, ft) in &tables {
            out.push(CheckResult::new(format!("fenchel-young: {label}"), fenchel_young_error(ft)?, 1e-9));
        }
    }
    if want("duality") {
        for (label, ft) in &tables {
            out.push(CheckResult::new(format!("duality: psi** = psi, {label}"), duality_error(ft)?, 1e-6));
        }
    }
    if want("gibbs") {
        for (label, w) in [("moebius", WeightSequence::moebius()), ("constant", WeightSequence::constant(1.0)?)] {
            let err = [-1.5, 0.5, 2.0]
                .iter()
                .map(|&l| gibbs_identity_error(&w, l, 12))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            out.push(CheckResult::new(format!("gibbs identity: {label}"), err, 1e-12));
        }
    }
    if want("thue-morse") {
        let (r0, r01) = thue_morse_return_sets(1 << 12)?;
        let miss = |got: &[String], want: &[&str]| if got == want { 0.0 } else { 1.0 };
        out.push(CheckResult::new("thue-morse: R_0 = {0, 01, 011}", miss(&r0, &["0", "01", "011"]), 0.0));
        out.push(CheckResult::new(
            "thue-morse: R_01 = {01, 010, 011, 0110}",
            miss(&r01, &["01", "010", "011", "0110"]),
            0.0,
        ));
    }
    Ok(out)
}
