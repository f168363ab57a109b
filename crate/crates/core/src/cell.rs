//! The cell-probe machine.
//!
//! [`InstrumentedMemory`] is a sparse, zero-initialized array of `w`-bit cells
//! that counts every read and write and keeps a framed change log so a batch
//! of writes can be undone. [`CertificateTable`] and [`ProbeSet`] describe the
//! static side: a table of `s` cells and the `t` cells a verifier is shown.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};

pub type Address = u64;

/// Widest cell the simulator supports.
pub const MAX_WIDTH: u32 = 128;

/// Number of bits needed to write `x` in binary (0 for 0).
pub fn bit_length(x: u128) -> u32 {
    u128::BITS - x.leading_zeros()
}

/// `ceil(lg x)`, with `ceil(lg 0) = ceil(lg 1) = 0`.
pub fn ceil_log2(x: u128) -> u32 {
    if x <= 1 {
        0
    } else {
        bit_length(x - 1)
    }
}

/// Default cell width for an instance with `updates` updates:
/// `max(64, 2 * ceil(lg(2m)))`.
pub fn default_width(updates: u64) -> u32 {
    64.max(2 * ceil_log2(2 * updates as u128))
}

fn check_width(width: u32) -> Result<()> {
    if width == 0 || width > MAX_WIDTH {
        return Err(Error::InvalidWidth(width));
    }
    Ok(())
}

/// Contents of one memory cell.
///
/// The word itself does not know its width; the memory or table holding it
/// enforces `value < 2^w`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellWord(u128);

impl CellWord {
    pub const ZERO: CellWord = CellWord(0);

    pub const fn new(value: u128) -> Self {
        CellWord(value)
    }

    pub const fn value(self) -> u128 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn fits(self, width: u32) -> bool {
        bit_length(self.0) <= width
    }

    fn checked(self, width: u32) -> Result<Self> {
        if self.fits(width) {
            Ok(self)
        } else {
            Err(Error::ValueTooWide {
                value: self.0,
                width,
            })
        }
    }
}

impl From<u128> for CellWord {
    fn from(value: u128) -> Self {
        CellWord(value)
    }
}

impl From<u64> for CellWord {
    fn from(value: u64) -> Self {
        CellWord(value as u128)
    }
}

impl fmt::Display for CellWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Read access to a cell memory. Implementations count each call as a probe.
///
/// Reads are fallible because a memory may be simulated through certificates
/// whose verification can reject.
pub trait CellRead {
    fn read(&mut self, addr: Address) -> Result<CellWord>;
}

pub trait CellWrite: CellRead {
    fn write(&mut self, addr: Address, val: CellWord) -> Result<()>;
}

/// One change-log entry: the value `addr` held before a write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogRecord {
    pub addr: Address,
    pub previous: CellWord,
}

/// Addressable `w`-bit cells with probe counters and a revertible change log.
#[derive(Debug, Clone)]
pub struct InstrumentedMemory {
    width: u32,
    // zero words are never stored, so two memories with equal contents
    // compare equal as maps
    cells: HashMap<Address, CellWord>,
    probes: u64,
    log: Vec<LogRecord>,
    frames: Vec<usize>,
}

impl InstrumentedMemory {
    pub fn new(width: u32) -> Result<Self> {
        check_width(width)?;
        Ok(InstrumentedMemory {
            width,
            cells: HashMap::new(),
            probes: 0,
            log: Vec::new(),
            frames: Vec::new(),
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn probe_count(&self) -> u64 {
        self.probes
    }

    pub fn open_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn read(&mut self, addr: Address) -> CellWord {
        self.probes += 1;
        self.peek(addr)
    }

    /// Reads a cell without charging a probe. Used by builders whose work is
    /// free in the model.
    pub fn peek(&self, addr: Address) -> CellWord {
        self.cells.get(&addr).copied().unwrap_or(CellWord::ZERO)
    }

    pub fn write(&mut self, addr: Address, val: CellWord) -> Result<()> {
        let val = val.checked(self.width)?;
        self.probes += 1;
        let previous = self.store(addr, val);
        if !self.frames.is_empty() {
            self.log.push(LogRecord { addr, previous });
        }
        Ok(())
    }

    fn store(&mut self, addr: Address, val: CellWord) -> CellWord {
        let previous = if val.is_zero() {
            self.cells.remove(&addr)
        } else {
            self.cells.insert(addr, val)
        };
        previous.unwrap_or(CellWord::ZERO)
    }

    pub fn push_frame(&mut self) {
        self.frames.push(self.log.len());
    }

    /// Undoes, newest first, every write recorded since the matching
    /// [`push_frame`](Self::push_frame).
    pub fn pop_frame(&mut self) -> Result<()> {
        let start = self.frames.pop().ok_or(Error::NoOpenFrame)?;
        while self.log.len() > start {
            let rec = self.log.pop().expect("log shorter than frame start");
            self.store(rec.addr, rec.previous);
        }
        Ok(())
    }

    /// Change-log records of the innermost open frame, oldest first.
    pub fn frame_records(&self) -> &[LogRecord] {
        match self.frames.last() {
            Some(&start) => &self.log[start..],
            None => &[],
        }
    }

    /// Non-zero cells, ordered by address.
    pub fn snapshot(&self) -> BTreeMap<Address, CellWord> {
        self.cells.iter().map(|(&a, &v)| (a, v)).collect()
    }
}

impl CellRead for InstrumentedMemory {
    fn read(&mut self, addr: Address) -> Result<CellWord> {
        Ok(InstrumentedMemory::read(self, addr))
    }
}

impl CellWrite for InstrumentedMemory {
    fn write(&mut self, addr: Address, val: CellWord) -> Result<()> {
        InstrumentedMemory::write(self, addr, val)
    }
}

/// A static table of `s` cells addressed `1..=s`.
///
/// Addresses past the end read as the zero word, the same convention as the
/// sparse memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateTable {
    width: u32,
    entries: Vec<CellWord>,
}

impl CertificateTable {
    pub fn new(width: u32, entries: Vec<CellWord>) -> Result<Self> {
        check_width(width)?;
        for e in &entries {
            e.checked(width)?;
        }
        Ok(CertificateTable { width, entries })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Number of cells `s`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Cell `index` (1-based).
    pub fn get(&self, index: usize) -> CellWord {
        index
            .checked_sub(1)
            .and_then(|i| self.entries.get(i))
            .copied()
            .unwrap_or(CellWord::ZERO)
    }

    pub fn entries(&self) -> &[CellWord] {
        &self.entries
    }

    /// Reveals the cells at `indices` to a verifier.
    pub fn probe(&self, indices: &[usize]) -> Result<ProbeSet> {
        ProbeSet::from_pairs(indices.iter().map(|&i| (i, self.get(i))))
    }
}

/// The cells `T_d(P)` shown to a verifier: distinct addresses with contents.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProbeSet {
    items: BTreeMap<usize, CellWord>,
}

impl ProbeSet {
    pub fn empty() -> Self {
        ProbeSet::default()
    }

    /// Builds a probe set from explicit pairs. Contents are not checked
    /// against any table; use [`CertificateTable::probe`] for honest sets.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, CellWord)>) -> Result<Self> {
        let mut items = BTreeMap::new();
        for (addr, word) in pairs {
            if items.insert(addr, word).is_some() {
                return Err(Error::DuplicateProbe(addr));
            }
        }
        Ok(ProbeSet { items })
    }

    /// `t`, the number of probed cells.
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, addr: usize) -> Option<CellWord> {
        self.items.get(&addr).copied()
    }

    /// Pairs in increasing address order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, CellWord)> + '_ {
        self.items.iter().map(|(&a, &w)| (a, w))
    }
}

/// Outcome of a verifier: an answer, or `⊥`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict<A> {
    Accept(A),
    Reject,
}

impl<A> Verdict<A> {
    pub fn is_reject(&self) -> bool {
        matches!(self, Verdict::Reject)
    }

    pub fn accepted(self) -> Option<A> {
        match self {
            Verdict::Accept(a) => Some(a),
            Verdict::Reject => None,
        }
    }

    pub fn map<B>(self, f: impl FnOnce(A) -> B) -> Verdict<B> {
        match self {
            Verdict::Accept(a) => Verdict::Accept(f(a)),
            Verdict::Reject => Verdict::Reject,
        }
    }
}

/// A query-specific checking procedure for some `(s, w, t)`-certificate code.
///
/// A verifier must never accept with a wrong answer; it may reject any probe
/// set it cannot certify.
pub trait Verifier {
    type Query: ?Sized;
    type Answer;

    fn verify(&self, query: &Self::Query, probes: &ProbeSet) -> Verdict<Self::Answer>;
}

pub fn verify_generic<V: Verifier>(
    verifier: &V,
    query: &V::Query,
    probes: &ProbeSet,
) -> Verdict<V::Answer> {
    verifier.verify(query, probes)
}
