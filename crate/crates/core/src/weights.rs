//! Weight generators: substitution fixed points and the Möbius sieve.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::parse_word;

/// Largest sieve the toolkit builds without an explicit budget.
pub const DEFAULT_SIEVE_BUDGET: usize = 200_000_000;

/// A substitution `ζ` on a finite alphabet with a start letter `α`.
/// Letters are indices into `alphabet`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substitution {
    alphabet: Vec<String>,
    rules: Vec<Vec<usize>>,
    start: usize,
}

#[derive(Serialize, Deserialize)]
struct SubstitutionFile {
    alphabet: Vec<String>,
    rules: BTreeMap<String, String>,
    start: String,
}

/// Outcome of the primitivity test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Primitivity {
    pub primitive: bool,
    /// Smallest `k` with `M^k > 0`, when primitive.
    pub power: Option<usize>,
}

impl Substitution {
    /// Validates nonempty images, the start-letter condition (the image of
    /// `α` begins with `α`) and unbounded growth of `ζ^n(α)`.
    pub fn new(alphabet: Vec<String>, rules: Vec<Vec<usize>>, start: usize) -> Result<Self> {
        let k = alphabet.len();
        if k == 0 {
            return Err(Error::invalid("substitution", "empty alphabet"));
        }
        for (i, l) in alphabet.iter().enumerate() {
            if l.is_empty() || alphabet[..i].contains(l) {
                return Err(Error::invalid("substitution", format!("bad or duplicate letter {l:?}")));
            }
        }
        if rules.len() != k {
            return Err(Error::invalid(
                "substitution",
                format!("{} rules for {k} letters", rules.len()),
            ));
        }
        if start >= k {
            return Err(Error::range("start", start, format!("0..{k}")));
        }
        for (a, image) in rules.iter().enumerate() {
            if image.is_empty() {
                return Err(Error::invalid(
                    "substitution",
                    format!("image of {:?} is empty", alphabet[a]),
                ));
            }
            if let Some(&bad) = image.iter().find(|&&b| b >= k) {
                return Err(Error::range("letter", bad, format!("0..{k}")));
            }
        }
        let s = Self {
            alphabet,
            rules,
            start,
        };
        if s.rules[start][0] != start {
            return Err(Error::invalid(
                "substitution",
                format!(
                    "image of start letter {:?} must begin with it (S1)",
                    s.alphabet[start]
                ),
            ));
        }
        // |ζ^n(α)| is nondecreasing under (S1); growth within |A| steps
        // decides (S2)
        let lens = s.image_lengths(k);
        if lens[k][start] <= 1 {
            return Err(Error::invalid(
                "substitution",
                format!("|ζ^n({:?})| does not grow (S2)", s.alphabet[start]),
            ));
        }
        Ok(s)
    }

    /// Parse `{"alphabet": [...], "rules": {"a": "ab", ...}, "start": "a"}`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: SubstitutionFile = serde_json::from_str(text)?;
        let lookup = |l: &str| {
            file.alphabet
                .iter()
                .position(|a| a == l)
                .ok_or_else(|| Error::invalid("substitution", format!("unknown letter {l:?}")))
        };
        let mut rules = vec![None; file.alphabet.len()];
        for (letter, image) in &file.rules {
            rules[lookup(letter)?] = Some(parse_word(&file.alphabet, image)?);
        }
        let rules = rules
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                r.ok_or_else(|| {
                    Error::invalid("substitution", format!("no rule for {:?}", file.alphabet[i]))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let start = lookup(&file.start)?;
        Self::new(file.alphabet, rules, start)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&s)
    }

    /// `0 ↦ 01, 1 ↦ 10`, start `0`.
    pub fn thue_morse() -> Self {
        Self::new(vec!["0".into(), "1".into()], vec![vec![0, 1], vec![1, 0]], 0)
            .expect("Thue–Morse is valid")
    }

    /// `0 ↦ 01, 1 ↦ 0`, start `0`.
    pub fn fibonacci() -> Self {
        Self::new(vec!["0".into(), "1".into()], vec![vec![0, 1], vec![0]], 0)
            .expect("Fibonacci is valid")
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn rules(&self) -> &[Vec<usize>] {
        &self.rules
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn letter_index(&self, letter: &str) -> Option<usize> {
        self.alphabet.iter().position(|a| a == letter)
    }

    pub fn format_word(&self, word: &[usize]) -> String {
        word.iter().map(|&l| self.alphabet[l].as_str()).collect()
    }

    /// Apply `ζ` letterwise.
    pub fn apply(&self, word: &[usize]) -> Vec<usize> {
        word.iter().flat_map(|&l| self.rules[l].iter().copied()).collect()
    }

    /// `lens[k][b] = |ζ^k(b)|`, saturating, for `k = 0..=steps`.
    fn image_lengths(&self, steps: usize) -> Vec<Vec<u64>> {
        let mut lens = vec![vec![1u64; self.alphabet.len()]];
        for _ in 0..steps {
            let prev = lens.last().unwrap();
            let next = self
                .rules
                .iter()
                .map(|img| img.iter().fold(0u64, |acc, &c| acc.saturating_add(prev[c])))
                .collect();
            lens.push(next);
        }
        lens
    }

    /// Prefix of the fixed point `u_ζ` with length at least `n`, obtained by
    /// iterating `ζ` on a buffer seeded with the start letter.
    pub fn fixed_point_prefix(&self, n: usize) -> Result<Vec<usize>> {
        let mut buf = vec![self.start];
        while buf.len() < n {
            buf = self.apply(&buf);
        }
        Ok(buf)
    }

    /// Letter `u_n` of the fixed point, located by descending the
    /// substitution tree without materializing the prefix.
    pub fn letter_at(&self, n: usize) -> usize {
        let mut lens = self.image_lengths(0);
        while lens.last().unwrap()[self.start] <= n as u64 {
            let k = lens.len() - 1;
            lens = self.image_lengths(k + 1);
        }
        let mut letter = self.start;
        let mut pos = n as u64;
        for level in (1..lens.len()).rev() {
            let below = &lens[level - 1];
            for &c in &self.rules[letter] {
                if pos < below[c] {
                    letter = c;
                    break;
                }
                pos -= below[c];
            }
        }
        letter
    }

    /// Incidence matrix `M[b][c]` = number of `b` in `ζ(c)`.
    pub fn incidence(&self) -> Vec<Vec<u64>> {
        let k = self.alphabet.len();
        let mut m = vec![vec![0u64; k]; k];
        for (c, image) in self.rules.iter().enumerate() {
            for &b in image {
                m[b][c] += 1;
            }
        }
        m
    }

    /// Smallest `k <= |A|²` with `M^k` entrywise positive.
    pub fn primitivity_check(&self) -> Primitivity {
        let k = self.alphabet.len();
        let base: Vec<Vec<bool>> = self
            .incidence()
            .iter()
            .map(|row| row.iter().map(|&x| x > 0).collect())
            .collect();
        let mut power = base.clone();
        for p in 1..=k * k {
            if power.iter().all(|row| row.iter().all(|&x| x)) {
                return Primitivity {
                    primitive: true,
                    power: Some(p),
                };
            }
            power = bool_matmul(&power, &base);
        }
        Primitivity {
            primitive: false,
            power: None,
        }
    }

    /// Letter frequencies in `u_ζ` (normalized Perron vector of the incidence
    /// matrix). `None` for non-primitive substitutions.
    pub fn letter_frequencies(&self) -> Option<Vec<f64>> {
        if !self.primitivity_check().primitive {
            return None;
        }
        let m = self.incidence();
        let k = m.len();
        let mut v = vec![1.0 / k as f64; k];
        for _ in 0..100_000 {
            let mut next: Vec<f64> = (0..k)
                .map(|b| (0..k).map(|c| m[b][c] as f64 * v[c]).sum())
                .collect();
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|x| *x /= total);
            let delta = next.iter().zip(&v).fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
            v = next;
            if delta < 1e-16 {
                break;
            }
        }
        Some(v)
    }
}

fn bool_matmul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let k = a.len();
    (0..k)
        .map(|i| (0..k).map(|j| (0..k).any(|l| a[i][l] && b[l][j])).collect())
        .collect()
}

/// `μ(0..=n)` with the convention `μ(0) = 0`, by a linear sieve.
pub fn moebius_sieve(n: usize) -> Result<Vec<i8>> {
    moebius_sieve_with_budget(n, DEFAULT_SIEVE_BUDGET)
}

pub fn moebius_sieve_with_budget(n: usize, budget: usize) -> Result<Vec<i8>> {
    if n == 0 {
        return Err(Error::range("N", n, "N >= 1"));
    }
    if n > budget {
        return Err(Error::range("N", n, format!("1..={budget} (sieve memory budget)")));
    }
    let mut mu = vec![0i8; n + 1];
    let mut composite = vec![false; n + 1];
    let mut primes: Vec<usize> = Vec::new();
    mu[1] = 1;
    for i in 2..=n {
        if !composite[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            let m = i * p;
            if m > n {
                break;
            }
            composite[m] = true;
            if i % p == 0 {
                mu[m] = 0;
                break;
            }
            mu[m] = -mu[i];
        }
    }
    Ok(mu)
}

/// `μ(n)` by trial division; `μ(0) = 0`.
pub fn moebius_of(mut n: u64) -> i8 {
    if n == 0 {
        return 0;
    }
    let mut sign = 1i8;
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}
