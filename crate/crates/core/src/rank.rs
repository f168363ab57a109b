//! Two-probe certificates for the rank problem.
//!
//! The table is the sorted list of the set. To certify `rank(x) = i` the
//! prover reveals the adjacent pair `(i, l), (i + 1, u)` with `l <= x < u`;
//! the two ends of the table need a single cell.

use std::collections::BTreeSet;

use crate::cell::{bit_length, CellWord, CertificateTable, ProbeSet, Verdict, Verifier};
use crate::error::{Error, Result};

/// A set `S ⊆ [U]` together with its universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankInstance {
    universe: u64,
    elements: BTreeSet<u64>,
}

impl RankInstance {
    pub fn new(universe: u64, elements: impl IntoIterator<Item = u64>) -> Result<Self> {
        if universe == 0 {
            return Err(Error::InvalidParams("universe must be positive".into()));
        }
        let elements: BTreeSet<u64> = elements.into_iter().collect();
        if let Some(&x) = elements.iter().find(|&&x| x >= universe) {
            return Err(Error::OutOfUniverse { x, universe });
        }
        Ok(RankInstance { universe, elements })
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> impl Iterator<Item = u64> + '_ {
        self.elements.iter().copied()
    }
}

/// Sorted-element table: cell `i` holds the `i`-th smallest element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankTable {
    universe: u64,
    table: CertificateTable,
}

impl RankTable {
    /// Builds the table. Requires `w > lg U`, i.e. `2^w > U`.
    pub fn build(inst: &RankInstance, width: u32) -> Result<Self> {
        let required = bit_length(inst.universe as u128);
        let fits = width >= 64 || (1u64 << width) > inst.universe;
        if !fits {
            return Err(Error::WidthTooSmall { width, required });
        }
        let entries = inst.elements().map(CellWord::from).collect();
        Ok(RankTable {
            universe: inst.universe,
            table: CertificateTable::new(width, entries)?,
        })
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn table(&self) -> &CertificateTable {
        &self.table
    }

    pub fn elements(&self) -> Vec<u64> {
        self.table.entries().iter().map(|w| w.value() as u64).collect()
    }

    /// The verifier for this table. It knows only the public parameters
    /// `n` and `U`, never the contents.
    pub fn verifier(&self) -> RankVerifier {
        RankVerifier {
            universe: self.universe,
            len: self.len(),
        }
    }

    /// Prover: picks the cells that certify `rank(x)`. Free computation, so a
    /// binary search over the whole table is fine.
    pub fn prove(&self, x: u64) -> Result<Vec<usize>> {
        if x >= self.universe {
            return Err(Error::OutOfUniverse {
                x,
                universe: self.universe,
            });
        }
        let n = self.len();
        let rank = self
            .table
            .entries()
            .partition_point(|w| w.value() <= x as u128);
        Ok(match (n, rank) {
            (0, _) => vec![],
            (_, 0) => vec![1],
            (n, r) if r == n => vec![n],
            (_, r) => vec![r, r + 1],
        })
    }

    /// Runs prover and verifier together.
    pub fn rank(&self, x: u64) -> Result<Verdict<usize>> {
        let indices = self.prove(x)?;
        let probes = self.table.probe(&indices)?;
        Ok(self.verifier().verify(&x, &probes))
    }
}

/// Checks a rank certificate for a table with known length `n` over `[U]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankVerifier {
    pub universe: u64,
    pub len: usize,
}

impl Verifier for RankVerifier {
    type Query = u64;
    type Answer = usize;

    fn verify(&self, &x: &u64, probes: &ProbeSet) -> Verdict<usize> {
        let n = self.len;
        if x >= self.universe || probes.len() > 2 {
            return Verdict::Reject;
        }
        if n == 0 {
            return if probes.is_empty() {
                Verdict::Accept(0)
            } else {
                Verdict::Reject
            };
        }
        if probes.iter().any(|(i, _)| i == 0 || i > n) {
            return Verdict::Reject;
        }
        let x = x as u128;
        let pairs: Vec<(usize, u128)> = probes.iter().map(|(i, w)| (i, w.value())).collect();
        if let [(i, lo), (j, hi)] = pairs[..] {
            if i + 1 == j && lo <= x && x < hi {
                return Verdict::Accept(i);
            }
        }
        for &(i, v) in &pairs {
            if i == 1 && x < v {
                return Verdict::Accept(0);
            }
            if i == n && x >= v {
                return Verdict::Accept(n);
            }
        }
        Verdict::Reject
    }
}

/// Rank verification for a table whose length is not known to the verifier.
///
/// Valid cells have `key >= 1`, strictly increasing with the index, and every
/// cell past the end reads with `key == 0`. Accepted shapes:
///
/// * `{(1, a)}` with `key(a) == 0` (empty table) or `x < key(a)`: rank 0;
/// * `{(i, a), (i + 1, b)}` with `1 <= key(a) <= x` and either `key(b) == 0`
///   or `x < key(b)`: rank `i`.
pub fn verify_open_ended(
    x: u64,
    probes: &ProbeSet,
    key: impl Fn(CellWord) -> u64,
) -> Verdict<usize> {
    let pairs: Vec<(usize, u64)> = probes.iter().map(|(i, w)| (i, key(w))).collect();
    match pairs[..] {
        [(1, k)] if k == 0 || x < k => Verdict::Accept(0),
        [(i, lo), (j, hi)] if i >= 1 && i + 1 == j && lo >= 1 && lo <= x && (hi == 0 || x < hi) => {
            Verdict::Accept(i)
        }
        _ => Verdict::Reject,
    }
}
