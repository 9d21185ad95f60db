//! Core domain types: the symbolic space, finite-span potentials, weight
//! sequences and frequency tables.
//!
//! Sums run over `n = 0..N-1` everywhere. Arithmetic weights (Möbius,
//! squarefree indicator) set `w_0 = 0` so that index `n` carries the value
//! of the arithmetic function at `n`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::{self, Substitution};

/// Density of squarefree integers, `6/π²`.
pub const SQUAREFREE_DENSITY: f64 = 6.0 / (PI * PI);

/// Default cap on the number of distinct values a "finite-valued" sequence
/// may show before frequency estimation gives up.
pub const DEFAULT_MAX_DISTINCT: usize = 64;

/// Finite alphabet `S` with `q >= 2` labelled symbols. Symbols are handled
/// as indices `0..q` everywhere else.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolicSpace {
    labels: Vec<String>,
}

impl SymbolicSpace {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::range("q", labels.len(), "q >= 2"));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(Error::invalid("alphabet", "empty symbol label"));
            }
            if labels[..i].contains(l) {
                return Err(Error::invalid("alphabet", format!("duplicate label {l:?}")));
            }
        }
        Ok(Self { labels })
    }

    /// `{-1, 1}` with index 0 for `-1` and index 1 for `+1`.
    pub fn signs() -> Self {
        Self {
            labels: vec!["-1".into(), "1".into()],
        }
    }

    /// `{0, 1, ..., q-1}` labelled by decimal digits (q <= 10).
    pub fn digits(q: usize) -> Result<Self> {
        if q > 10 {
            return Err(Error::range("q", q, "2..=10 for digit labels"));
        }
        Self::new((0..q).map(|d| d.to_string()).collect())
    }

    pub fn q(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Split a word into symbols. Words containing ',' or whitespace are
    /// split on those; otherwise labels are matched greedily, longest first.
    pub fn parse_word(&self, word: &str) -> Result<Vec<usize>> {
        parse_word(&self.labels, word)
    }

    pub fn format_word(&self, word: &[usize]) -> String {
        word.iter().map(|&s| self.labels[s].as_str()).collect()
    }
}

pub(crate) fn parse_word(labels: &[String], word: &str) -> Result<Vec<usize>> {
    let lookup = |tok: &str| {
        labels
            .iter()
            .position(|l| l == tok)
            .ok_or_else(|| Error::invalid("word", format!("unknown symbol {tok:?} in {word:?}")))
    };
    if word.contains(|c: char| c == ',' || c.is_whitespace()) {
        return word
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(lookup)
            .collect();
    }
    let mut by_len: Vec<usize> = (0..labels.len()).collect();
    by_len.sort_by_key(|&i| std::cmp::Reverse(labels[i].len()));
    let mut out = Vec::new();
    let mut rest = word;
    while !rest.is_empty() {
        let hit = by_len.iter().find(|&&i| rest.starts_with(labels[i].as_str()));
        match hit {
            Some(&i) => {
                out.push(i);
                rest = &rest[labels[i].len()..];
            }
            None => {
                return Err(Error::invalid(
                    "word",
                    format!("cannot split {word:?} into symbols {labels:?}"),
                ))
            }
        }
    }
    Ok(out)
}

/// A real function of the first `r` coordinates, stored as a dense table
/// over `S^r`. Word `x_0..x_{r-1}` sits at index `sum x_i q^(r-1-i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    space: SymbolicSpace,
    span: usize,
    table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PotentialFile {
    q: usize,
    r: usize,
    labels: Vec<String>,
    table: BTreeMap<String, f64>,
}

impl Potential {
    pub fn new(space: SymbolicSpace, span: usize, table: Vec<f64>) -> Result<Self> {
        if span == 0 {
            return Err(Error::range("r", span, "r >= 1"));
        }
        let size = checked_pow(space.q(), span)
            .ok_or_else(|| Error::range("q^r", format!("{}^{span}", space.q()), "fits in memory"))?;
        if table.len() != size {
            return Err(Error::invalid(
                "potential",
                format!("table has {} entries, expected q^r = {size}", table.len()),
            ));
        }
        if let Some(i) = table.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("potential", format!("non-finite value at word {i}")));
        }
        Ok(Self { space, span, table })
    }

    pub fn from_fn(space: SymbolicSpace, span: usize, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let q = space.q();
        let size = checked_pow(q, span).unwrap_or(usize::MAX);
        if span == 0 || size > 1 << 26 {
            return Err(Error::range("r", span, "1 <= r with q^r <= 2^26"));
        }
        let mut word = vec![0usize; span];
        let table = (0..size)
            .map(|idx| {
                decode_word(idx, q, &mut word);
                f(&word)
            })
            .collect();
        Self::new(space, span, table)
    }

    /// `f(x, y) = x y` on `{-1, 1}`.
    pub fn xy() -> Self {
        Self::affine(1.0, 0.0, 0.0)
    }

    /// `f(x, y) = a x y + b x + c y` on `{-1, 1}`.
    pub fn affine(a: f64, b: f64, c: f64) -> Self {
        let sign = |s: usize| if s == 0 { -1.0 } else { 1.0 };
        Self::from_fn(SymbolicSpace::signs(), 2, |w| {
            let (x, y) = (sign(w[0]), sign(w[1]));
            a * x * y + b * x + c * y
        })
        .expect("2-symbol span-2 table is valid")
    }

    pub fn space(&self) -> &SymbolicSpace {
        &self.space
    }

    pub fn q(&self) -> usize {
        self.space.q()
    }

    /// Coordinate span `r`.
    pub fn span(&self) -> usize {
        self.span
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn value(&self, word: &[usize]) -> f64 {
        debug_assert_eq!(word.len(), self.span);
        self.table[encode_word(word, self.q())]
    }

    pub fn max_abs(&self) -> f64 {
        self.table.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: PotentialFile = serde_json::from_str(s)?;
        let space = SymbolicSpace::new(file.labels)?;
        if space.q() != file.q {
            return Err(Error::invalid(
                "potential",
                format!("q = {} but {} labels given", file.q, space.q()),
            ));
        }
        let size = checked_pow(file.q, file.r)
            .filter(|&s| s <= 1 << 26)
            .ok_or_else(|| Error::range("r", file.r, "q^r <= 2^26"))?;
        let mut table = vec![f64::NAN; size];
        for (word, value) in &file.table {
            let symbols = space.parse_word(word)?;
            if symbols.len() != file.r {
                return Err(Error::invalid(
                    "potential",
                    format!("word {word:?} has length {}, expected r = {}", symbols.len(), file.r),
                ));
            }
            table[encode_word(&symbols, file.q)] = *value;
        }
        if let Some(i) = table.iter().position(|v| v.is_nan()) {
            let mut w = vec![0; file.r];
            decode_word(i, file.q, &mut w);
            return Err(Error::invalid(
                "potential",
                format!("table is missing word {:?}", space.format_word(&w)),
            ));
        }
        Self::new(space, file.r, table)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s)
    }

    pub fn to_json_string(&self) -> String {
        let q = self.q();
        let mut word = vec![0; self.span];
        let table = self
            .table
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                decode_word(i, q, &mut word);
                (self.space.format_word(&word), v)
            })
            .collect();
        let file = PotentialFile {
            q,
            r: self.span,
            labels: self.space.labels.clone(),
            table,
        };
        serde_json::to_string_pretty(&file).expect("potential serializes")
    }
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    u32::try_from(exp).ok().and_then(|e| base.checked_pow(e))
}

pub(crate) fn encode_word(word: &[usize], q: usize) -> usize {
    word.iter().fold(0, |acc, &s| acc * q + s)
}

pub(crate) fn decode_word(mut idx: usize, q: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = idx % q;
        idx /= q;
    }
}

/// Where a frequency table came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencySource {
    Exact,
    Estimated(usize),
}

/// Distinct weight values `v_j` with their frequencies `p_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    values: Vec<f64>,
    freqs: Vec<f64>,
    source: FrequencySource,
}

impl FrequencyTable {
    pub fn new(values: Vec<f64>, freqs: Vec<f64>, source: FrequencySource) -> Result<Self> {
        if values.is_empty() || values.len() != freqs.len() {
            return Err(Error::invalid(
                "frequency table",
                format!("{} values vs {} frequencies", values.len(), freqs.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("frequency table", "non-finite value"));
        }
        for (i, v) in values.iter().enumerate() {
            if values[..i].contains(v) {
                return Err(Error::invalid("frequency table", format!("duplicate value {v}")));
            }
        }
        if let Some(p) = freqs.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::range("frequency", p, "p_j >= 0"));
        }
        let total: f64 = freqs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::range("sum of frequencies", total, "1 ± 1e-12"));
        }
        Ok(Self {
            values,
            freqs,
            source,
        })
    }

    pub fn exact(values: Vec<f64>, freqs: Vec<f64>) -> Result<Self> {
        Self::new(values, freqs, FrequencySource::Exact)
    }

    /// `{-1: 3/π², 0: 1 - 6/π², 1: 3/π²}`, the limiting law of `μ(n)`.
    pub fn moebius() -> Self {
        let half = SQUAREFREE_DENSITY / 2.0;
        let zero = 1.0 - SQUAREFREE_DENSITY;
        Self {
            values: vec![-1.0, 0.0, 1.0],
            freqs: vec![half, zero, half],
            source: FrequencySource::Exact,
        }
    }

    /// `{0: 1 - 6/π², 1: 6/π²}`, the limiting law of `μ(n)²`.
    pub fn squarefree() -> Self {
        Self {
            values: vec![0.0, 1.0],
            freqs: vec![1.0 - SQUAREFREE_DENSITY, SQUAREFREE_DENSITY],
            source: FrequencySource::Exact,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn source(&self) -> FrequencySource {
        self.source
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.freqs.iter().copied())
    }

    pub fn freq_of(&self, value: f64) -> f64 {
        self.iter().find(|(v, _)| *v == value).map_or(0.0, |(_, p)| p)
    }

    /// `Σ p_j |v_j|`, the supremum of attainable weighted averages.
    pub fn abs_mean(&self) -> f64 {
        self.iter().map(|(v, p)| p * v.abs()).sum()
    }
}

/// How a weight sequence is produced.
#[derive(Debug, Clone)]
pub enum WeightKind {
    Constant(f64),
    /// Coding of the golden-mean rotation `n ↦ {n g}` by intervals of
    /// lengths `p_j`: a uniquely ergodic sequence with exact frequencies.
    Rotation { table: FrequencyTable },
    /// Independent draws from `table`, addressed by `(seed, n)`.
    Iid { seed: u64, table: FrequencyTable },
    Substitutive {
        substitution: Substitution,
        letter_values: Vec<f64>,
    },
    Moebius,
    Squarefree,
    /// Explicit values, index 0 first.
    File { path: PathBuf, values: Arc<[f64]> },
}

/// Deterministic, randomly addressable weights `w_n`.
#[derive(Debug, Clone)]
pub struct WeightSequence {
    kind: WeightKind,
    bound: f64,
    cache: Option<Arc<[f64]>>,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

impl WeightSequence {
    fn with_kind(kind: WeightKind) -> Self {
        let bound = match &kind {
            WeightKind::Constant(v) => v.abs(),
            WeightKind::Rotation { table } | WeightKind::Iid { table, .. } => {
                table.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
            }
            WeightKind::Substitutive { letter_values, .. } => {
                letter_values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            }
            WeightKind::Moebius | WeightKind::Squarefree => 1.0,
            WeightKind::File { values, .. } => values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        };
        Self {
            kind,
            bound,
            cache: None,
        }
    }

    pub fn constant(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::invalid("weights", "constant must be finite"));
        }
        Ok(Self::with_kind(WeightKind::Constant(value)))
    }

    pub fn rotation(table: FrequencyTable) -> Self {
        Self::with_kind(WeightKind::Rotation { table })
    }

    pub fn iid(seed: u64, table: FrequencyTable) -> Self {
        Self::with_kind(WeightKind::Iid { seed, table })
    }

    /// Substitutive sequence `φ(u_ζ)` with `φ` given per letter (in alphabet order).
    pub fn substitutive(substitution: Substitution, letter_values: Vec<f64>) -> Result<Self> {
        if letter_values.len() != substitution.alphabet().len() {
            return Err(Error::invalid(
                "letter map",
                format!(
                    "{} values for an alphabet of {} letters",
                    letter_values.len(),
                    substitution.alphabet().len()
                ),
            ));
        }
        if letter_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("letter map", "non-finite value"));
        }
        Ok(Self::with_kind(WeightKind::Substitutive {
            substitution,
            letter_values,
        }))
    }

    pub fn moebius() -> Self {
        Self::with_kind(WeightKind::Moebius)
    }

    pub fn squarefree() -> Self {
        Self::with_kind(WeightKind::Squarefree)
    }

    pub fn from_values(path: impl Into<PathBuf>, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("weights", format!("non-finite value at index {i}")));
        }
        Ok(Self::with_kind(WeightKind::File {
            path: path.into(),
            values: values.into(),
        }))
    }

    /// One real per line, index 0 first. Blank lines and `#` comments are skipped.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                Error::invalid("weights file", format!("line {}: {line:?} is not a real", lineno + 1))
            })?;
            values.push(v);
        }
        Self::from_values(path, values)
    }

    /// Precompute `w_0..w_{n_max-1}` so later reads are table lookups.
    pub fn with_horizon(mut self, n_max: usize) -> Result<Self> {
        let cached = self.compute_range(0, n_max)?;
        self.cache = Some(cached.into());
        Ok(self)
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    /// Uniform bound on `|w_n|`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Limiting value frequencies when they are known in closed form.
    pub fn exact_frequencies(&self) -> Option<FrequencyTable> {
        match &self.kind {
            WeightKind::Constant(v) => FrequencyTable::exact(vec![*v], vec![1.0]).ok(),
            WeightKind::Rotation { table } | WeightKind::Iid { table, .. } => Some(table.clone()),
            WeightKind::Moebius => Some(FrequencyTable::moebius()),
            WeightKind::Squarefree => Some(FrequencyTable::squarefree()),
            WeightKind::Substitutive {
                substitution,
                letter_values,
            } => {
                let letter_freqs = substitution.letter_frequencies()?;
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for (&v, p) in letter_values.iter().zip(letter_freqs) {
                    let v = v + 0.0;
                    match merged.iter_mut().find(|(u, _)| *u == v) {
                        Some(slot) => slot.1 += p,
                        None => merged.push((v, p)),
                    }
                }
                merged.sort_by(|a, b| a.0.total_cmp(&b.0));
                let (values, freqs) = merged.into_iter().unzip();
                FrequencyTable::exact(values, freqs).ok()
            }
            WeightKind::File { .. } => None,
        }
    }

    /// `w_n`.
    pub fn weight_at(&self, n: usize) -> Result<f64> {
        if let Some(cache) = &self.cache {
            if let Some(&v) = cache.get(n) {
                return Ok(v);
            }
        }
        Ok(match &self.kind {
            WeightKind::Constant(v) => *v,
            WeightKind::Rotation { table } => rotation_value(table, n),
            WeightKind::Iid { seed, table } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_word_pos(2 * n as u128);
                iid_value(table, rng.next_u64())
            }
            WeightKind::Substitutive {
                substitution,
                letter_values,
            } => letter_values[substitution.letter_at(n)],
            WeightKind::Moebius => weights::moebius_of(n as u64) as f64,
            WeightKind::Squarefree => weights::moebius_of(n as u64).abs() as f64,
            WeightKind::File { values, path } => *values.get(n).ok_or_else(|| {
                Error::range(
                    "n",
                    n,
                    format!("0..{} (length of {})", values.len(), path.display()),
                )
            })?,
        })
    }

    /// `w_start..w_{end-1}` as a vector.
    pub fn values(&self, start: usize, end: usize) -> Result<Vec<f64>> {
        if start > end {
            return Err(Error::range("start", start, format!("<= end = {end}")));
        }
        if let Some(cache) = &self.cache {
            if end <= cache.len() {
                return Ok(cache[start..end].to_vec());
            }
        }
        self.compute_range(start, end)
    }

    fn compute_range(&self, start: usize, end: usize) -> Result<Vec<f64>> {
        Ok(match &self.kind {
            WeightKind::Constant(v) => vec![*v; end - start],
            WeightKind::Rotation { table } => (start..end).map(|n| rotation_value(table, n)).collect(),
            WeightKind::Iid { seed, table } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_word_pos(2 * start as u128);
                (start..end).map(|_| iid_value(table, rng.next_u64())).collect()
            }
            WeightKind::Substitutive {
                substitution,
                letter_values,
            } => {
                let prefix = substitution.fixed_point_prefix(end)?;
                prefix[start..end].iter().map(|&l| letter_values[l]).collect()
            }
            WeightKind::Moebius | WeightKind::Squarefree => {
                let mu = weights::moebius_sieve(end.max(1))?;
                let square = matches!(self.kind, WeightKind::Squarefree);
                mu[start..end]
                    .iter()
                    .map(|&m| if square { m.abs() as f64 } else { m as f64 })
                    .collect()
            }
            WeightKind::File { values, path } => {
                if end > values.len() {
                    return Err(Error::range(
                        "n",
                        end - 1,
                        format!("0..{} (length of {})", values.len(), path.display()),
                    ));
                }
                values[start..end].to_vec()
            }
        })
    }
}

fn rotation_value(table: &FrequencyTable, n: usize) -> f64 {
    pick(table, (n as f64 * GOLDEN).fract())
}

fn iid_value(table: &FrequencyTable, bits: u64) -> f64 {
    pick(table, (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64))
}

fn pick(table: &FrequencyTable, u: f64) -> f64 {
    let mut acc = 0.0;
    for (v, p) in table.iter() {
        acc += p;
        if u < acc {
            return v;
        }
    }
    // u landed in the rounding slack above the last cumulative sum
    *table.values().last().expect("table is nonempty")
}

/// Counting proportions of each value over indices `1..=n`.
pub fn empirical_frequencies(w: &WeightSequence, n: usize) -> Result<FrequencyTable> {
    empirical_frequencies_capped(w, n, DEFAULT_MAX_DISTINCT)
}

pub fn empirical_frequencies_capped(
    w: &WeightSequence,
    n: usize,
    max_distinct: usize,
) -> Result<FrequencyTable> {
    if n == 0 {
        return Err(Error::range("N", n, "N >= 1"));
    }
    let values = w.values(1, n + 1)?;
    let mut counts: Vec<(f64, usize)> = Vec::new();
    for v in values {
        // fold -0.0 into 0.0 so exact comparison sees one symbol
        let v = v + 0.0;
        match counts.iter_mut().find(|(u, _)| *u == v) {
            Some(slot) => slot.1 += 1,
            None => {
                if counts.len() == max_distinct {
                    return Err(Error::invalid(
                        "weights",
                        format!("more than {max_distinct} distinct values in w_1..w_{n}; not finite-valued"),
                    ));
                }
                counts.push((v, 1));
            }
        }
    }
    counts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = n as f64;
    let (values, freqs) = counts.into_iter().map(|(v, c)| (v, c as f64 / total)).unzip();
    FrequencyTable::new(values, freqs, FrequencySource::Estimated(n))
}
