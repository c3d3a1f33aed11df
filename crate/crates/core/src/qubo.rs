//! QUBO problems, bitstrings, exhaustive search and solution distributions.
//!
//! A problem is stored in symmetric convention: any input matrix is replaced
//! by `(Q + Qᵀ) / 2`, which leaves `aᵀ Q a` unchanged for every binary `a`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default cap on the number of variables [`BruteForce`] will enumerate.
pub const DEFAULT_MAX_BRUTE_FORCE_VARS: usize = 26;

/// A binary vector. Ordering is lexicographic over the bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParameter(format!("bit value {b} is not 0 or 1")));
        }
        Ok(Self(bits))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Decodes the `n` low bits of `index`, most significant bit first, so that
    /// numeric order of indices matches lexicographic order of bitstrings.
    pub fn from_index(index: u64, n: usize) -> Self {
        Self((0..n).map(|i| ((index >> (n - 1 - i)) & 1) as u8).collect())
    }

    /// Inverse of [`BitString::from_index`]; requires `len() <= 64`.
    pub fn to_index(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i] == 1
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }
}

impl From<Vec<bool>> for BitString {
    fn from(v: Vec<bool>) -> Self {
        Self(v.into_iter().map(u8::from).collect())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidParameter(format!("invalid bit character '{other}'"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Self)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A QUBO instance: minimize `aᵀ Q a` over `a ∈ {0,1}ⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    n: usize,
    /// Row-major, symmetric.
    q: Vec<f64>,
}

/// Structured form: `{"n": 2, "q": [[..], [..]]}`.
#[derive(Serialize, Deserialize)]
struct QuboDocument {
    #[serde(default)]
    n: Option<usize>,
    q: Vec<Vec<f64>>,
}

impl Serialize for QuboProblem {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        QuboDocument {
            n: Some(self.n),
            q: self.to_rows(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuboProblem {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = QuboDocument::deserialize(d)?;
        if let Some(n) = doc.n {
            if n != doc.q.len() {
                return Err(serde::de::Error::custom(format!(
                    "declared n = {n} but matrix has {} rows",
                    doc.q.len()
                )));
            }
        }
        QuboProblem::from_rows(&doc.q).map_err(serde::de::Error::custom)
    }
}

impl QuboProblem {
    /// Builds a problem from a row-major `n × n` buffer, symmetrizing it.
    pub fn from_dense(n: usize, mut q: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("QUBO matrix"));
        }
        if q.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: q.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                if !q[i * n + j].is_finite() {
                    return Err(Error::NonFinite(i, j));
                }
            }
        }
        const TILE: usize = 32;
        for bi in (0..n).step_by(TILE) {
            for bj in (bi..n).step_by(TILE) {
                for i in bi..(bi + TILE).min(n) {
                    for j in bj.max(i + 1)..(bj + TILE).min(n) {
                        let avg = 0.5 * (q[i * n + j] + q[j * n + i]);
                        q[i * n + j] = avg;
                        q[j * n + i] = avg;
                    }
                }
            }
        }
        Ok(Self { n, q })
    }

    /// For matrices symmetric by construction: only checks finiteness.
    pub(crate) fn from_symmetric(n: usize, q: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(q.len(), n * n);
        if let Some(p) = q.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(p / n, p % n));
        }
        Ok(Self { n, q })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    row,
                    cols: r.len(),
                });
            }
        }
        Self::from_dense(n, rows.concat())
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_dense(n, vec![0.0; n * n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.q[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.q.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.q.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Median over all `n²` entries (mean of the two central values for even counts).
    pub fn median(&self) -> f64 {
        let mut v = self.q.clone();
        v.sort_by(f64::total_cmp);
        let m = v.len();
        if m % 2 == 1 {
            v[m / 2]
        } else {
            0.5 * (v[m / 2 - 1] + v[m / 2])
        }
    }

    /// `Σ_{i,j} a_i q_ij a_j`, every ordered pair counted.
    pub fn energy(&self, a: &BitString) -> Result<f64> {
        if a.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: a.len(),
            });
        }
        Ok(self.energy_unchecked(a.bits()))
    }

    pub(crate) fn energy_unchecked(&self, a: &[u8]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            if a[i] == 0 {
                continue;
            }
            let row = self.row(i);
            for j in 0..self.n {
                if a[j] == 1 {
                    e += row[j];
                }
            }
        }
        e
    }

    /// Parses the plain-text format: one row per line, whitespace-separated
    /// decimals. Blank lines and lines starting with `#` are ignored.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|e| Error::Parse {
                        line: lineno + 1,
                        msg: format!("'{tok}': {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Incrementally maintained flip energies for single-bit moves.
///
/// `field[i] = 2 Σ_{j≠i} q_ij a_j`, so flipping bit `i` changes the energy by
/// `(1 − 2 a_i)(q_ii + field[i])`.
#[derive(Debug, Clone)]
pub(crate) struct LocalFields {
    pub bits: Vec<u8>,
    pub field: Vec<f64>,
    pub energy: f64,
}

impl LocalFields {
    pub fn new(p: &QuboProblem, bits: Vec<u8>) -> Self {
        let n = p.n();
        let mut field = vec![0.0; n];
        for (i, f) in field.iter_mut().enumerate() {
            let row = p.row(i);
            *f = 2.0
                * (0..n)
                    .filter(|&j| j != i && bits[j] == 1)
                    .map(|j| row[j])
                    .sum::<f64>();
        }
        let energy = p.energy_unchecked(&bits);
        Self { bits, field, energy }
    }

    #[inline]
    pub fn delta(&self, p: &QuboProblem, i: usize) -> f64 {
        let s = if self.bits[i] == 1 { -1.0 } else { 1.0 };
        s * (p.get(i, i) + self.field[i])
    }

    #[inline]
    pub fn flip(&mut self, p: &QuboProblem, i: usize, delta: f64) {
        let change = if self.bits[i] == 1 { -2.0 } else { 2.0 };
        self.bits[i] ^= 1;
        self.energy += delta;
        let row = p.row(i);
        for (j, f) in self.field.iter_mut().enumerate() {
            if j != i {
                *f += change * row[j];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    energy: f64,
    index: u64,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.energy
            .total_cmp(&other.energy)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exhaustive minimizer; the reference oracle for every other backend.
#[derive(Debug, Clone, Copy)]
pub struct BruteForce {
    pub max_vars: usize,
    pub parallel: bool,
}

impl Default for BruteForce {
    fn default() -> Self {
        Self {
            max_vars: DEFAULT_MAX_BRUTE_FORCE_VARS,
            parallel: true,
        }
    }
}

impl BruteForce {
    /// Returns the `top_k` lowest-energy bitstrings, ascending by energy with
    /// lexicographic tie-breaking. Energies are exact evaluations of
    /// [`QuboProblem::energy`], so results do not depend on `parallel`.
    pub fn solve(&self, p: &QuboProblem, top_k: usize) -> Result<Vec<(BitString, f64)>> {
        let n = p.n();
        if n > self.max_vars || n > 63 {
            return Err(Error::TooLarge {
                n,
                max: self.max_vars.min(63),
            });
        }
        if top_k == 0 {
            return Err(Error::InvalidParameter("top_k must be positive".into()));
        }
        let total = 1u64 << n;
        let top_k = top_k.min(total as usize);
        let prefix_bits = n.min(6);
        let chunks = 1u64 << prefix_bits;
        let low_bits = n - prefix_bits;
        let tol = 1e-9 * (1.0 + p.as_slice().iter().map(|v| v.abs()).sum::<f64>());

        let search = |prefix: u64| scan_chunk(p, prefix, low_bits, top_k, tol);
        let mut all: Vec<Candidate> = if self.parallel {
            (0..chunks).into_par_iter().flat_map_iter(search).collect()
        } else {
            (0..chunks).flat_map(search).collect()
        };
        all.sort();
        all.truncate(top_k);
        Ok(all
            .into_iter()
            .map(|c| (BitString::from_index(c.index, n), c.energy))
            .collect())
    }
}

fn scan_chunk(p: &QuboProblem, prefix: u64, low_bits: usize, top_k: usize, tol: f64) -> Vec<Candidate> {
    let n = p.n();
    let start = prefix << low_bits;
    let exact = |index: u64| p.energy_unchecked(BitString::from_index(index, n).bits());
    let mut state = LocalFields::new(p, BitString::from_index(start, n).0);
    let mut index = start;
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(top_k + 1);

    let offer = |heap: &mut BinaryHeap<Candidate>, approx: f64, index: u64| {
        if heap.len() == top_k {
            let worst = *heap.peek().expect("heap is full");
            if approx > worst.energy + tol {
                return;
            }
            let cand = Candidate {
                energy: exact(index),
                index,
            };
            if cand < worst {
                heap.pop();
                heap.push(cand);
            }
        } else {
            heap.push(Candidate {
                energy: exact(index),
                index,
            });
        }
    };

    offer(&mut heap, state.energy, index);
    for step in 1..(1u64 << low_bits) {
        let bit = step.trailing_zeros() as usize;
        let var = n - 1 - bit;
        let d = state.delta(p, var);
        state.flip(p, var, d);
        index ^= 1 << bit;
        offer(&mut heap, state.energy, index);
    }
    heap.into_vec()
}

/// Convenience wrapper around [`BruteForce::solve`] with default limits.
pub fn brute_force_solve(p: &QuboProblem, top_k: usize) -> Result<Vec<(BitString, f64)>> {
    BruteForce::default().solve(p, top_k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionEntry {
    pub bits: BitString,
    pub count: u64,
    pub probability: f64,
}

/// Measured or sampled bitstrings with their frequencies, sorted by descending
/// probability and then ascending bitstring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDistribution {
    entries: Vec<SolutionEntry>,
    total_shots: u64,
}

impl SolutionDistribution {
    pub fn from_samples<I>(samples: I) -> Result<Self>
    where
        I: IntoIterator<Item = BitString>,
    {
        let mut counts: HashMap<BitString, u64> = HashMap::new();
        let mut len = None;
        for (index, s) in samples.into_iter().enumerate() {
            match len {
                None => len = Some(s.len()),
                Some(expected) if expected != s.len() => {
                    return Err(Error::Ragged {
                        index,
                        expected,
                        got: s.len(),
                    })
                }
                _ => {}
            }
            *counts.entry(s).or_insert(0) += 1;
        }
        if counts.is_empty() {
            return Err(Error::Empty("sample list"));
        }
        Self::from_counts(counts)
    }

    pub fn from_counts<I>(counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BitString, u64)>,
    {
        let mut merged: HashMap<BitString, u64> = HashMap::new();
        for (b, c) in counts {
            *merged.entry(b).or_insert(0) += c;
        }
        merged.retain(|_, c| *c > 0);
        let total: u64 = merged.values().sum();
        if total == 0 {
            return Err(Error::Empty("distribution"));
        }
        let mut entries: Vec<SolutionEntry> = merged
            .into_iter()
            .map(|(bits, count)| SolutionEntry {
                bits,
                count,
                probability: count as f64 / total as f64,
            })
            .collect();
        entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.bits.cmp(&b.bits)));
        Ok(Self {
            entries,
            total_shots: total,
        })
    }

    pub fn entries(&self) -> &[SolutionEntry] {
        &self.entries
    }

    pub fn total_shots(&self) -> u64 {
        self.total_shots
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The highest-probability bitstring.
    pub fn modal(&self) -> &BitString {
        &self.entries[0].bits
    }

    pub fn bit_len(&self) -> usize {
        self.entries[0].bits.len()
    }

    pub fn probability_of(&self, bits: &BitString) -> f64 {
        self.entries
            .iter()
            .find(|e| &e.bits == bits)
            .map_or(0.0, |e| e.probability)
    }
}

/// Aggregates samples into a [`SolutionDistribution`].
pub fn distribution_from_samples(samples: Vec<BitString>) -> Result<SolutionDistribution> {
    SolutionDistribution::from_samples(samples)
}
