//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::f64::consts::{LN_2, PI};
use std::time::{Duration, Instant};

use birkhoff::legendre::{
    conjugate, convexity_defect, double_conjugate, mobius_spectrum, solve_lambda_alpha, spectrum_closed_form,
};
use birkhoff::model::SQUAREFREE_DENSITY;
use birkhoff::partition::{exact_log_partition_word, exact_partition, log_partition_word};
use birkhoff::pressure::{
    closed_form_curve, closed_form_pressure, closed_form_psi_prime, estimate_pressure, hilbert_metric, mat_vec,
    pressure_curve, return_word_pressure,
};
use birkhoff::returnwords::{decompose, return_words};
use birkhoff::{
    sample_paths, FrequencyTable, InhomMarkov, Potential, Substitution, SymbolicSpace, WeightSequence,
};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn grid(min: f64, max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect()
}

fn thue_morse_pm() -> WeightSequence {
    WeightSequence::substitutive(Substitution::thue_morse(), vec![-1.0, 1.0]).unwrap()
}

fn mobius_center_and_edges() -> Outcome {
    let centre = (mobius_spectrum(0.0).unwrap() - 1.0).abs();
    let a = SQUAREFREE_DENSITY - 1e-6;
    let limit = 1.0 - SQUAREFREE_DENSITY;
    let edge = (mobius_spectrum(a).unwrap() - limit)
        .abs()
        .max((mobius_spectrum(-a).unwrap() - limit).abs());
    outcome(
        centre <= 1e-12 && edge <= 1e-4,
        format!("|dim(0) - 1| = {centre:.1e}, |dim(±(6/π² - 1e-6)) - (1 - 6/π²)| = {edge:.2e}"),
    )
}

fn two_path_spectrum() -> Outcome {
    let ft = FrequencyTable::exact(
        vec![-1.0, 0.0, 1.0],
        vec![3.0 / (PI * PI), 1.0 - 6.0 / (PI * PI), 3.0 / (PI * PI)],
    )
    .unwrap();
    let a = SQUAREFREE_DENSITY;
    let mut worst: f64 = 0.0;
    for i in 0..101 {
        let alpha = a * (-1.0 + 2.0 * (i + 1) as f64 / 102.0);
        let generic = spectrum_closed_form(&ft, alpha).unwrap().dim();
        worst = worst.max((generic - mobius_spectrum(alpha).unwrap()).abs());
    }
    outcome(worst <= 1e-10, format!("max |Δdim| = {worst:.2e} over 101 α"))
}

fn finite_n_pressure() -> Outcome {
    let lambdas = grid(-4.0, 4.0, 33);
    let curve = pressure_curve(&WeightSequence::moebius(), &Potential::xy(), &lambdas, 1_000_000).unwrap();
    let ft = FrequencyTable::moebius();
    let worst = lambdas
        .iter()
        .zip(&curve.psi)
        .map(|(&l, &p)| (p - closed_form_pressure(&ft, l)).abs())
        .fold(0.0, f64::max);
    outcome(worst <= 5e-3, format!("max |ψ̂ - ψ| = {worst:.2e}"))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let r = 2 + (rng.next_u64() % 2) as usize;
        let n = 1 + (rng.next_u64() % 10) as usize;
        let lambda = -3.0 + 6.0 * uniform(&mut rng);
        let table = (0..1 << r).map(|_| 4.0 * uniform(&mut rng) - 2.0).collect();
        let p = Potential::new(SymbolicSpace::signs(), r, table).unwrap();
        let w: Vec<f64> = (0..n).map(|_| 4.0 * uniform(&mut rng) - 2.0).collect();
        let e = exact_log_partition_word(&p, lambda, &w).unwrap();
        let t = log_partition_word(&p, lambda, &w).unwrap();
        worst = worst.max((e - t).abs() / e.abs().max(1.0));
    }
    outcome(worst <= 1e-12, format!("max relative gap = {worst:.2e} over 200 cases"))
}

fn convex_suite() -> Outcome {
    let tables = [
        ("moebius", FrequencyTable::moebius()),
        ("constant", FrequencyTable::exact(vec![1.0], vec![1.0]).unwrap()),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (label, ft) in &tables {
        let curve = closed_form_curve(ft, &grid(-8.0, 8.0, 1601)).unwrap();
        let convex = convexity_defect(&curve.lambdas, &curve.psi);

        // Fenchel–Young against the closed form: ψ(λ) + ψ*(α) >= λα, with
        // equality at α = ψ'(λ)
        let a = ft.abs_mean();
        let alphas = grid(-0.95 * a, 0.95 * a, 39);
        let star = |al: f64| {
            let l = solve_lambda_alpha(ft, al).unwrap();
            l * al - closed_form_pressure(ft, l)
        };
        let stars: Vec<f64> = alphas.iter().map(|&al| star(al)).collect();
        let mut fy: f64 = 0.0;
        for l in grid(-4.0, 4.0, 65) {
            let psi = closed_form_pressure(ft, l);
            for (&al, &st) in alphas.iter().zip(&stars) {
                fy = fy.max(l * al - psi - st);
            }
            let al = closed_form_psi_prime(ft, l);
            fy = fy.max((psi + star(al) - l * al).abs());
        }
        // the sampled-curve conjugate against the sampled nodes
        for &al in &alphas {
            let sampled = conjugate(&curve, al).unwrap();
            for (&l, &psi) in curve.lambdas.iter().zip(&curve.psi).step_by(10) {
                fy = fy.max(l * al - psi - sampled);
            }
        }

        let mut dual: f64 = 0.0;
        for i in (400..=1200).step_by(20) {
            dual = dual.max((double_conjugate(&curve, curve.lambdas[i]).unwrap() - curve.psi[i]).abs());
        }

        let dims: Vec<f64> = alphas
            .iter()
            .map(|&al| -spectrum_closed_form(ft, al).unwrap().dim())
            .collect();
        let concave = convexity_defect(&alphas, &dims);

        let pass = convex <= 1e-12 && fy <= 1e-9 && dual <= 1e-6 && concave <= 1e-12;
        ok &= pass;
        lines.push(format!(
            "{label}: convexity {convex:.1e}, fenchel-young {fy:.1e}, ψ**-ψ {dual:.1e}, concavity {concave:.1e}"
        ));
    }
    outcome(ok, lines.join("; "))
}

fn gibbs_identity() -> Outcome {
    let xy = Potential::xy();
    let mut worst: f64 = 0.0;
    for weights in [WeightSequence::moebius(), WeightSequence::constant(1.0).unwrap()] {
        let w = weights.values(0, 12).unwrap();
        for lambda in [-1.5, 0.5, 2.0] {
            let m = InhomMarkov::new(lambda, weights.clone(), 12).unwrap();
            for n in 1..=12usize {
                let z = exact_partition(&weights, &xy, lambda, n).unwrap().log_z.exp();
                for bits in 0u32..1 << (n + 1) {
                    let x: Vec<i8> = (0..=n).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect();
                    let s: f64 = (0..n).map(|k| w[k] * f64::from(x[k] * x[k + 1])).sum();
                    let lhs = m.cylinder_measure(&x).unwrap() * 2f64.powi(n as i32 + 1) * z;
                    let rhs = (lambda * s).exp();
                    worst = worst.max(((lhs - rhs) / rhs).abs());
                }
            }
        }
    }
    outcome(worst <= 1e-12, format!("max relative error = {worst:.2e}"))
}

fn monte_carlo_lln() -> Outcome {
    let len = 16;
    let m = InhomMarkov::new(1.0, WeightSequence::constant(1.0).unwrap(), len).unwrap();
    let s = sample_paths(&m, len, 100_000, 20240601).unwrap();
    let mean = s.overall_mean_product();
    let gap = (mean - 1f64.tanh()).abs();
    outcome(
        gap <= 0.01,
        format!("mean x_n x_(n+1) = {mean:.5}, tanh 1 = {:.5}, gap {gap:.1e} (s.e. {:.1e})", 1f64.tanh(), s.overall_std_error()),
    )
}

fn thue_morse_returns() -> Outcome {
    let horizon = 1 << 16;
    let x = Substitution::thue_morse().fixed_point_prefix(horizon).unwrap();
    let x = &x[..horizon];
    let as_set = |u: &[usize]| {
        let mut v: Vec<String> = return_words(x, u, horizon)
            .unwrap()
            .into_iter()
            .map(|w| w.iter().map(|d| d.to_string()).collect())
            .collect();
        v.sort();
        v
    };
    let r0 = as_set(&[0]) == ["0", "01", "011"];
    let r01 = as_set(&[0, 1]) == ["01", "010", "011", "0110"];
    let rebuilt = [1usize, 2, 4, 16].iter().all(|&k| {
        let d = decompose(x, &x[..k], horizon).unwrap();
        d.reconstruct() == x[..d.coverage]
    });
    outcome(r0 && r01 && rebuilt, format!("R_0 {r0}, R_01 {r01}, reconstruction {rebuilt}"))
}

fn return_word_consistency() -> Outcome {
    let w = thue_morse_pm();
    let xy = Potential::xy();
    let mut worst: f64 = 0.0;
    for lambda in [-2.0, -1.0, 1.0, 2.0] {
        let rw = return_word_pressure(&w, &xy, lambda, 16, 1 << 18).unwrap();
        let direct = estimate_pressure(&w, &xy, lambda, 1_000_000).unwrap().psi;
        worst = worst.max((rw.a_u - (direct - LN_2)).abs());
    }
    outcome(worst <= 5e-3, format!("max |A_u - (ψ̂ - log 2)| = {worst:.2e}"))
}

fn hilbert_contraction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    for delta in [0.5f64, 0.1] {
        let bound = (-delta.ln()).tanh();
        for _ in 0..1000 {
            // log-uniform entries in [δ, 1/δ]
            let b: Vec<f64> = (0..16)
                .map(|_| (delta.ln() * (1.0 - 2.0 * uniform(&mut rng))).exp())
                .collect();
            let x: Vec<f64> = (0..4).map(|_| 0.01 + uniform(&mut rng)).collect();
            let y: Vec<f64> = (0..4).map(|_| 0.01 + uniform(&mut rng)).collect();
            let before = hilbert_metric(&x, &y).unwrap();
            let after = hilbert_metric(&mat_vec(&b, &x), &mat_vec(&b, &y)).unwrap();
            // rounding slack in the logs
            if after > bound * before + 1e-12 {
                violations += 1;
            }
            if before > 0.0 {
                worst_ratio = worst_ratio.max(after / before / bound);
            }
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations in 2000 matrices, max d(Bx,By)/(τ d(x,y)) = {worst_ratio:.3}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    // libtest flags (e.g. --nocapture, filters) are accepted and ignored
    let criteria: [Criterion; 10] = [
        ("1 mobius spectrum centre and endpoints", mobius_center_and_edges, Duration::from_secs(1)),
        ("2 two-path spectrum agreement", two_path_spectrum, Duration::from_secs(1)),
        ("3 finite-N vs closed-form pressure", finite_n_pressure, Duration::from_secs(30)),
        ("4 exact vs transfer partition", oracle_equivalence, Duration::from_secs(10)),
        ("5 convex-analysis suite", convex_suite, Duration::from_secs(5)),
        ("6 gibbs identity", gibbs_identity, Duration::from_secs(10)),
        ("7 monte-carlo law of large numbers", monte_carlo_lln, Duration::from_secs(20)),
        ("8 thue-morse return words", thue_morse_returns, Duration::from_secs(2)),
        ("9 return-word pressure consistency", return_word_consistency, Duration::from_secs(60)),
        ("10 hilbert-metric contraction", hilbert_contraction, Duration::from_secs(5)),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let status = if out.passed { "PASS" } else { "FAIL" };
        if !out.passed {
            failed += 1;
        }
        let slow = if elapsed > budget {
            format!(" (over the {}s budget)", budget.as_secs())
        } else {
            String::new()
        };
        println!("{status} criterion {name}: {} [{:.2}s{slow}]", out.detail, elapsed.as_secs_f64());
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
