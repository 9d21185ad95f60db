//! Return words over a prefix `u` of a sequence `x`: the factors of `x`
//! between two successive occurrences of `u`.
//!
//! Everything here is horizon-bounded. A return-word set is what was observed
//! in `x[..N]`; `stable` records whether doubling the horizon from `N/2` to
//! `N` added any new return word.

use serde::Serialize;

use crate::error::{Error, Result};

/// All positions `i` with `x[i..i+|u|] == u` and `i + |u| <= N`, overlaps
/// included.
pub fn occurrences<T: PartialEq>(x: &[T], u: &[T], horizon: usize) -> Vec<usize> {
    let n = horizon.min(x.len());
    if u.is_empty() || u.len() > n {
        return Vec::new();
    }
    x[..n]
        .windows(u.len())
        .enumerate()
        .filter(|(_, w)| *w == u)
        .map(|(i, _)| i)
        .collect()
}

/// Smallest `p >= 1` with `u[i] == u[i + p]` for all valid `i` (|u| if none).
pub fn smallest_period<T: PartialEq>(u: &[T]) -> usize {
    (1..u.len())
        .find(|&p| u[p..].iter().zip(u).all(|(a, b)| a == b))
        .unwrap_or(u.len())
}

/// Unique factorization of a prefix of `x` into return words over `u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnWordDecomposition<T> {
    pub prefix: Vec<T>,
    /// Distinct return words in order of first appearance.
    pub returns: Vec<Vec<T>>,
    /// Index into `returns` for each consecutive block `m_0 m_1 ...`.
    pub sequence: Vec<usize>,
    pub counts: Vec<usize>,
    pub freqs: Vec<f64>,
    /// Symbols covered by complete blocks; the trailing partial block is dropped.
    pub coverage: usize,
    /// No new return word appeared between horizon `N/2` and `N`.
    pub stable: bool,
}

impl<T: Clone> ReturnWordDecomposition<T> {
    /// Concatenation of the blocks, equal to `x[..coverage]`.
    pub fn reconstruct(&self) -> Vec<T> {
        self.sequence
            .iter()
            .flat_map(|&i| self.returns[i].iter().cloned())
            .collect()
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.sequence.iter().map(|&i| self.returns[i].as_slice())
    }

    /// `Σ p_v |v|`.
    pub fn mean_length(&self) -> f64 {
        self.returns
            .iter()
            .zip(&self.freqs)
            .map(|(v, p)| p * v.len() as f64)
            .sum()
    }
}

/// Decompose `x[..N]` over the prefix `u`.
pub fn decompose<T: PartialEq + Clone>(
    x: &[T],
    u: &[T],
    horizon: usize,
) -> Result<ReturnWordDecomposition<T>> {
    if u.is_empty() {
        return Err(Error::invalid("prefix", "u must be nonempty"));
    }
    if x.len() < u.len() || &x[..u.len()] != u {
        return Err(Error::invalid("prefix", "u is not a prefix of x"));
    }
    let occ = occurrences(x, u, horizon);
    if occ.len() < 2 {
        return Err(Error::InsufficientHorizon(format!(
            "{} occurrence(s) of the prefix within N = {horizon}; need at least 2",
            occ.len()
        )));
    }
    let mut returns: Vec<Vec<T>> = Vec::new();
    let mut sequence = Vec::with_capacity(occ.len() - 1);
    let mut counts = Vec::new();
    let mut half_distinct = 0;
    for pair in occ.windows(2) {
        let word = &x[pair[0]..pair[1]];
        let idx = match returns.iter().position(|r| r.as_slice() == word) {
            Some(i) => i,
            None => {
                returns.push(word.to_vec());
                counts.push(0);
                returns.len() - 1
            }
        };
        counts[idx] += 1;
        sequence.push(idx);
        if pair[1] + u.len() <= horizon / 2 {
            half_distinct = returns.len();
        }
    }
    let total = sequence.len() as f64;
    let freqs = counts.iter().map(|&c| c as f64 / total).collect();
    Ok(ReturnWordDecomposition {
        prefix: u.to_vec(),
        stable: half_distinct == returns.len(),
        returns,
        sequence,
        counts,
        freqs,
        coverage: *occ.last().unwrap(),
    })
}

/// The set of return words over `u` observed in `x[..N]`, in order of first
/// appearance.
pub fn return_words<T: PartialEq + Clone>(x: &[T], u: &[T], horizon: usize) -> Result<Vec<Vec<T>>> {
    decompose(x, u, horizon).map(|d| d.returns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::Substitution;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    fn sorted(words: Vec<Vec<char>>) -> Vec<String> {
        let mut v: Vec<String> = words.into_iter().map(|w| w.into_iter().collect()).collect();
        v.sort();
        v
    }

    fn thue_morse(n: usize) -> Vec<char> {
        let tm = Substitution::thue_morse();
        tm.fixed_point_prefix(n).unwrap()[..n]
            .iter()
            .map(|&l| if l == 0 { '0' } else { '1' })
            .collect()
    }

    #[test]
    fn overlapping_occurrences() {
        assert_eq!(occurrences(&chars("0101010"), &chars("010"), 7), vec![0, 2, 4]);
        assert_eq!(occurrences(&chars("0101010"), &chars("010"), 2), Vec::<usize>::new());
    }

    #[test]
    fn thue_morse_occurrences_of_zero() {
        assert_eq!(occurrences(&chars("01101001"), &chars("0"), 8), vec![0, 3, 5, 6]);
    }

    #[test]
    fn thue_morse_return_sets() {
        let x = thue_morse(1 << 12);
        assert_eq!(sorted(return_words(&x, &chars("0"), x.len()).unwrap()), ["0", "01", "011"]);
        assert_eq!(
            sorted(return_words(&x, &chars("01"), x.len()).unwrap()),
            ["01", "010", "011", "0110"]
        );
    }

    #[test]
    fn periodic_sequence_single_return() {
        let x: Vec<char> = "01".repeat(50).chars().collect();
        let d = decompose(&x, &chars("01"), 100).unwrap();
        assert_eq!(d.returns, vec![chars("01")]);
        assert!(d.stable);
    }

    #[test]
    fn decomposition_over_zero() {
        // t_n is the parity of the binary digit sum of n
        let x: Vec<char> = (0u32..200).map(|n| if n.count_ones() % 2 == 0 { '0' } else { '1' }).collect();
        assert_eq!(x, thue_morse(200));
        let d = decompose(&x, &chars("0"), x.len()).unwrap();
        let blocks: Vec<String> = d.blocks().take(19).map(|b| b.iter().collect()).collect();
        let expect = "011 01 0 011 0 01 011 01 0 01 011 0 011 01 0 011 0 01 011";
        assert_eq!(blocks.join(" "), expect);
    }

    #[test]
    fn constant_word() {
        let x = vec!['a'; 10];
        let d = decompose(&x, &['a'], 10).unwrap();
        assert_eq!(d.sequence.len(), 9);
        assert_eq!(d.returns, vec![vec!['a']]);
    }

    #[test]
    fn reconstruction_and_errors() {
        let x = thue_morse(1000);
        let d = decompose(&x, &x[..5], 1000).unwrap();
        assert_eq!(d.reconstruct(), x[..d.coverage]);
        assert!((d.freqs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(decompose(&x, &chars("11"), 1000).is_err());
        assert!(matches!(
            decompose(&x, &x[..64], 100),
            Err(Error::InsufficientHorizon(_))
        ));
    }

    #[test]
    fn periods() {
        assert_eq!(smallest_period(&chars("abab")), 2);
        assert_eq!(smallest_period(&chars("abc")), 3);
        assert_eq!(smallest_period(&chars("aaaa")), 1);
        assert_eq!(smallest_period(&chars("0110")), 3);
    }
}
