use serde::Serialize;

use birkhoff::gibbs::markov_dimension;
use birkhoff::legendre::{slope_range, spectrum_closed_form, spectrum_csv, spectrum_curve, DEFAULT_DERIV_TOL};
use birkhoff::model::empirical_frequencies;
use birkhoff::pressure::{closed_form_curve, return_word_pressure, LambdaGrid, PressureMethod};
use birkhoff::returnwords::decompose;
use birkhoff::verify::{parse_references, run_checks};
use birkhoff::{
    local_dimension_estimate, pressure_curve, sample_paths, FrequencyTable, InhomMarkov, Potential, PressureCurve,
    SymbolicSpace, WeightSequence,
};

use crate::spec::{load_substitution, parse_freqs, parse_potential, parse_weights};
use crate::{CliError, Ctx, Format, GibbsArgs, GridArgs, PressureArgs, ReturnWordsArgs, SpectrumArgs, VerifyArgs, WeightsArgs};

const DEFAULT_N: usize = 100_000;

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn weights_or_default(ctx: &Ctx, flag: Option<String>, default: &str) -> Result<WeightSequence, CliError> {
    parse_weights(flag.as_deref().or(ctx.cfg.weights.as_deref()).unwrap_or(default))
}

fn potential_or_xy(ctx: &Ctx, flag: Option<String>) -> Result<Potential, CliError> {
    parse_potential(flag.as_deref().or(ctx.cfg.potential.as_deref()).unwrap_or("xy"))
}

fn lambda_grid(ctx: &Ctx, g: &GridArgs) -> Result<Vec<f64>, CliError> {
    if let Some(l) = g.lambda.or(ctx.cfg.lambda) {
        return Ok(vec![l]);
    }
    let d = LambdaGrid::default();
    let grid = LambdaGrid {
        min: g.lambda_min.or(ctx.cfg.lambda_min).unwrap_or(d.min),
        max: g.lambda_max.or(ctx.cfg.lambda_max).unwrap_or(d.max),
        steps: g.lambda_steps.or(ctx.cfg.lambda_steps).unwrap_or(d.steps),
    };
    Ok(grid.points()?)
}

/// Frequencies for the closed form: exact when the kind provides them,
/// otherwise counted over `1..=n`.
fn frequencies(w: &WeightSequence, n: usize) -> Result<FrequencyTable, CliError> {
    match w.exact_frequencies() {
        Some(ft) => Ok(ft),
        None => Ok(empirical_frequencies(w, n)?),
    }
}

fn require_xy(p: &Potential) -> Result<(), CliError> {
    if *p != Potential::xy() {
        return Err(CliError::usage("the closed form holds for the xy potential only; use --numeric"));
    }
    Ok(())
}

pub fn weights(ctx: &Ctx, a: WeightsArgs) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let w = match a.weights.or_else(|| cfg.weights.clone()) {
        Some(spec) => parse_weights(&spec)?,
        None => {
            let kind = a.kind.or_else(|| cfg.kind.clone()).unwrap_or_else(|| "moebius".into());
            let file = a.file.or_else(|| cfg.file.clone());
            let need_file = || file.clone().ok_or_else(|| CliError::usage(format!("--kind {kind} needs --file")));
            match kind.as_str() {
                "constant" => {
                    let v = a
                        .value
                        .or(cfg.value)
                        .ok_or_else(|| CliError::usage("--kind constant needs --value"))?;
                    WeightSequence::constant(v)?
                }
                "subst" => {
                    let sub = load_substitution(&need_file()?)?;
                    let map = a
                        .map
                        .or_else(|| cfg.map.clone())
                        .ok_or_else(|| CliError::usage("--kind subst needs --map"))?;
                    let values = crate::spec::letter_values(&sub, &map)?;
                    WeightSequence::substitutive(sub, values)?
                }
                "iid" | "rotation" => {
                    let freqs = a
                        .freqs
                        .or_else(|| cfg.freqs.clone())
                        .ok_or_else(|| CliError::usage(format!("--kind {kind} needs --freqs")))?;
                    let table = parse_freqs(&freqs)?;
                    if kind == "iid" {
                        WeightSequence::iid(a.seed.or(cfg.seed).unwrap_or(0), table)
                    } else {
                        WeightSequence::rotation(table)
                    }
                }
                "file" => parse_weights(&format!("file:{}", need_file()?))?,
                other => parse_weights(other)?,
            }
        }
    };
    let n = a.n.or(cfg.n).unwrap_or(20);
    let start = a.start.or(cfg.start).unwrap_or(0);
    let values = w.values(start, start + n)?;
    let text = match ctx.format {
        Format::Csv => {
            let mut s = String::from("n,w_n\n");
            for (i, v) in values.iter().enumerate() {
                s.push_str(&format!("{},{}\n", start + i, v));
            }
            s
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Out {
                start: usize,
                values: Vec<f64>,
            }
            json(&Out { start, values })
        }
    };
    ctx.emit(&text)
}

pub fn pressure(ctx: &Ctx, a: PressureArgs) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let w = weights_or_default(ctx, a.weights, "moebius")?;
    let p = potential_or_xy(ctx, a.potential)?;
    let lambdas = lambda_grid(ctx, &a.grid)?;
    let n = a.n.or(cfg.n).unwrap_or(DEFAULT_N);
    let curve = if a.closed_form || cfg.closed_form.unwrap_or(false) {
        require_xy(&p)?;
        closed_form_curve(&frequencies(&w, n)?, &lambdas)?
    } else if let Some(k) = a.return_word.or(cfg.return_word) {
        let est = lambdas
            .iter()
            .map(|&l| return_word_pressure(&w, &p, l, k, n).map(|r| r.psi))
            .collect::<birkhoff::Result<Vec<_>>>()?;
        PressureCurve::new(
            lambdas.clone(),
            est,
            n,
            PressureMethod::ReturnWord { prefix_len: k },
            vec![None; lambdas.len()],
            (p.q() as f64).ln(),
        )?
    } else {
        pressure_curve(&w, &p, &lambdas, n)?
    };
    ctx.emit(&match ctx.format {
        Format::Csv => curve.to_csv(),
        Format::Json => curve.to_json() + "\n",
    })
}

fn alpha_grid(min: f64, max: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    match steps {
        0 => Err(range_err("alpha steps", 0, ">= 1")),
        1 => Ok(vec![0.5 * (min + max)]),
        s if min < max => Ok((0..s).map(|i| min + (max - min) * i as f64 / (s - 1) as f64).collect()),
        _ => Err(CliError {
            code: CliError::RANGE,
            message: format!("alpha grid [{min}, {max}] is outside the admissible range min < max"),
        }),
    }
}

fn range_err(param: &str, value: usize, range: &str) -> CliError {
    CliError {
        code: CliError::RANGE,
        message: format!("{param} = {value} is outside the admissible range {range}"),
    }
}

pub fn spectrum(ctx: &Ctx, a: SpectrumArgs) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let w = weights_or_default(ctx, a.weights, "moebius")?;
    let p = potential_or_xy(ctx, a.potential)?;
    let n = a.n.or(cfg.n).unwrap_or(DEFAULT_N);
    let steps = a.alpha_steps.or(cfg.alpha_steps).unwrap_or(101);
    let numeric = a.numeric || (!a.closed_form && cfg.numeric.unwrap_or(false));
    let points = if numeric {
        let lambdas = lambda_grid(ctx, &a.grid)?;
        let curve = pressure_curve(&w, &p, &lambdas, n)?;
        if curve.len() < 3 {
            return Err(range_err("lambda steps", curve.len(), ">= 3 for --numeric"));
        }
        let (lo, hi) = slope_range(&curve.lambdas, &curve.psi);
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo) * 0.999);
        let min = a.alpha_min.or(cfg.alpha_min).unwrap_or(c - r);
        let max = a.alpha_max.or(cfg.alpha_max).unwrap_or(c + r);
        alpha_grid(min, max, steps)?
            .into_iter()
            .map(|al| spectrum_curve(&curve, al, DEFAULT_DERIV_TOL))
            .collect::<birkhoff::Result<Vec<_>>>()?
    } else {
        require_xy(&p)?;
        let ft = frequencies(&w, n)?;
        let r = 0.999 * ft.abs_mean();
        let min = a.alpha_min.or(cfg.alpha_min).unwrap_or(-r);
        let max = a.alpha_max.or(cfg.alpha_max).unwrap_or(r);
        alpha_grid(min, max, steps)?
            .into_iter()
            .map(|al| spectrum_closed_form(&ft, al))
            .collect::<birkhoff::Result<Vec<_>>>()?
    };
    ctx.emit(&match ctx.format {
        Format::Csv => spectrum_csv(&points),
        Format::Json => json(&points),
    })
}

pub fn gibbs(ctx: &Ctx, a: GibbsArgs) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let w = weights_or_default(ctx, a.weights, "constant:1")?;
    let lambda = a.lambda.or(cfg.lambda).unwrap_or(1.0);
    let len = a.len.or(cfg.len).unwrap_or(1000);
    let paths = a.paths.or(cfg.paths).unwrap_or(1000);
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let depths = a.depths.or_else(|| cfg.depths.clone()).unwrap_or_default();
    let m = InhomMarkov::new(lambda, w.clone(), len)?;
    let sample = sample_paths(&m, len, paths, seed)?;
    match ctx.format {
        Format::Csv => ctx.emit(&sample.to_csv()),
        Format::Json => {
            #[derive(Serialize)]
            struct Depth {
                depth: usize,
                estimate: f64,
            }
            #[derive(Serialize)]
            struct Out {
                #[serde(flatten)]
                summary: birkhoff::gibbs::GibbsSummary,
                local_dimension: Vec<Depth>,
                dimension_closed_form: Option<f64>,
            }
            let path = m.sample_path(len, seed, 0)?;
            let local = local_dimension_estimate(&m, &path, &depths)?;
            let out = Out {
                summary: sample.summary(),
                local_dimension: depths
                    .iter()
                    .zip(local)
                    .map(|(&depth, estimate)| Depth { depth, estimate })
                    .collect(),
                dimension_closed_form: w.exact_frequencies().map(|ft| markov_dimension(&ft, lambda)),
            };
            ctx.emit(&json(&out))
        }
    }
}

#[derive(Serialize)]
struct ReturnEntry {
    word: String,
    length: usize,
    count: usize,
    freq: f64,
}

#[derive(Serialize)]
struct RwPressure {
    lambda: f64,
    a_u: f64,
    psi: f64,
}

#[derive(Serialize)]
struct RwOut {
    prefix: String,
    horizon: usize,
    coverage: usize,
    blocks: usize,
    stable: bool,
    returns: Vec<ReturnEntry>,
    head: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pressure: Option<RwPressure>,
}

fn describe<T: PartialEq + Clone>(
    d: &birkhoff::returnwords::ReturnWordDecomposition<T>,
    horizon: usize,
    fmt: impl Fn(&[T]) -> String,
) -> RwOut {
    RwOut {
        prefix: fmt(&d.prefix),
        horizon,
        coverage: d.coverage,
        blocks: d.sequence.len(),
        stable: d.stable,
        returns: d
            .returns
            .iter()
            .zip(&d.counts)
            .zip(&d.freqs)
            .map(|((v, &count), &freq)| ReturnEntry {
                word: fmt(v),
                length: v.len(),
                count,
                freq,
            })
            .collect(),
        head: d.blocks().take(32).map(&fmt).collect(),
        pressure: None,
    }
}

pub fn returnwords(ctx: &Ctx, a: ReturnWordsArgs) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let n = a.n.or(cfg.n).unwrap_or(1 << 16);
    let weights = a.weights.or_else(|| if a.subst.is_none() { cfg.weights.clone() } else { None });
    let out = if let Some(spec) = weights {
        let w = parse_weights(&spec)?;
        let k = a.prefix_len.or(cfg.prefix_len).unwrap_or(1);
        let values = w.values(0, n)?;
        let symbols: Vec<u64> = values.iter().map(|v| (v + 0.0).to_bits()).collect();
        if k == 0 || k > n {
            return Err(range_err("prefix length", k, &format!("1..={n}")));
        }
        let d = decompose(&symbols, &symbols[..k], n)?;
        let fmt = |s: &[u64]| {
            s.iter()
                .map(|&b| f64::from_bits(b).to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out = describe(&d, n, fmt);
        if let Some(lambda) = a.lambda.or(cfg.lambda) {
            let p = potential_or_xy(ctx, a.potential)?;
            let rw = return_word_pressure(&w, &p, lambda, k, n)?;
            out.pressure = Some(RwPressure {
                lambda,
                a_u: rw.a_u,
                psi: rw.psi,
            });
        }
        out
    } else {
        let source = a.subst.or_else(|| cfg.subst.clone()).unwrap_or_else(|| "thue-morse".into());
        let sub = load_substitution(&source)?;
        let x = sub.fixed_point_prefix(n)?;
        let x = &x[..n];
        let prefix = match a.prefix.or_else(|| cfg.prefix.clone()) {
            Some(p) => SymbolicSpace::new(sub.alphabet().to_vec())?.parse_word(&p)?,
            None => {
                let k = a.prefix_len.or(cfg.prefix_len).unwrap_or(1);
                if k == 0 || k > n {
                    return Err(range_err("prefix length", k, &format!("1..={n}")));
                }
                x[..k].to_vec()
            }
        };
        let d = decompose(x, &prefix, n)?;
        describe(&d, n, |w| sub.format_word(w))
    };
    ctx.emit(&match ctx.format {
        Format::Json => json(&out),
        Format::Csv => {
            let mut s = String::from("word,length,count,freq\n");
            for r in &out.returns {
                let word = if r.word.contains(',') { format!("\"{}\"", r.word) } else { r.word.clone() };
                s.push_str(&format!("{},{},{},{}\n", word, r.length, r.count, r.freq));
            }
            s
        }
    })
}

pub fn verify(ctx: &Ctx, a: VerifyArgs) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let only = a.only.or_else(|| cfg.only.clone());
    let reference = match a.potential.or_else(|| cfg.potential.clone()) {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::usage(format!("cannot read {path}: {e}")))?;
            let refs = parse_references(&text)?;
            if refs.is_empty() {
                return Err(CliError::usage(format!("{path} has no \"reference\" entries to check")));
            }
            Some((Potential::from_json_str(&text)?, refs))
        }
        None => None,
    };
    let results = run_checks(only.as_deref(), reference.as_ref().map(|(p, r)| (p, r.as_slice())))?;
    ctx.emit(&match ctx.format {
        Format::Json => json(&results),
        Format::Csv => {
            let mut s = String::from("check,status,measured,tolerance\n");
            for r in &results {
                let status = if r.passed { "pass" } else { "FAIL" };
                s.push_str(&format!("\"{}\",{},{:e},{:e}\n", r.name, status, r.measured, r.tolerance));
            }
            s
        }
    })?;
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError {
            code: CliError::VERIFY,
            message: format!("{failed} of {} checks failed", results.len()),
        });
    }
    Ok(())
}
