//! Static full persistence through non-deterministic cell lookups.
//!
//! [`PersistentStore::build`] walks the version tree depth first. Entering a
//! node opens a change-log frame and runs its updates; leaving it pops the
//! frame. Each cell `c` gets an event table with one entry per traversal time
//! at which its contents changed, holding `(time, contents after the event)`
//! packed into a single cell with the time in the high bits.
//!
//! The contents of `c` at version `u` are those after the last event at or
//! before `u`'s discovery time, i.e. the entry whose index is the rank of
//! `d_u` among the event times. That rank is certified with at most two
//! probes, so a simulated read costs at most two probes after a single
//! discovery-time lookup per query.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::cell::{
    bit_length, Address, CellRead, CellWord, CertificateTable, InstrumentedMemory, ProbeSet,
    Verdict, MAX_WIDTH,
};
use crate::dynamic::DynamicStructure;
use crate::error::{Error, Result};
use crate::rank::verify_open_ended;

pub type VersionId = usize;

/// Rooted tree of versions; node 0 is the root and every node carries a
/// sequence of updates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionTree<U> {
    parent: Vec<Option<VersionId>>,
    children: Vec<Vec<VersionId>>,
    updates: Vec<Vec<U>>,
}

impl<U> VersionTree<U> {
    pub fn new(root_updates: Vec<U>) -> Self {
        VersionTree {
            parent: vec![None],
            children: vec![Vec::new()],
            updates: vec![root_updates],
        }
    }

    /// Appends a new last child of `parent` and returns its identifier.
    pub fn add_child(&mut self, parent: VersionId, updates: Vec<U>) -> Result<VersionId> {
        self.check(parent)?;
        let id = self.parent.len();
        self.parent.push(Some(parent));
        self.children.push(Vec::new());
        self.updates.push(updates);
        self.children[parent].push(id);
        Ok(id)
    }

    pub fn push_update(&mut self, node: VersionId, update: U) -> Result<()> {
        self.check(node)?;
        self.updates[node].push(update);
        Ok(())
    }

    fn check(&self, node: VersionId) -> Result<()> {
        if node < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownVersion(node))
        }
    }

    /// `|R|`.
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, node: VersionId) -> bool {
        node < self.len()
    }

    /// `m`, the total number of updates.
    pub fn update_count(&self) -> usize {
        self.updates.iter().map(Vec::len).sum()
    }

    pub fn parent(&self, node: VersionId) -> Option<VersionId> {
        self.parent.get(node).copied().flatten()
    }

    pub fn children(&self, node: VersionId) -> &[VersionId] {
        &self.children[node]
    }

    pub fn updates(&self, node: VersionId) -> &[U] {
        &self.updates[node]
    }

    /// Nodes from the root down to `node`, inclusive.
    pub fn path_from_root(&self, node: VersionId) -> Result<Vec<VersionId>> {
        self.check(node)?;
        let mut path: Vec<VersionId> =
            std::iter::successors(Some(node), |&n| self.parent(n)).collect();
        path.reverse();
        Ok(path)
    }

    /// Depth-first event schedule; the event at position `k` happens at
    /// time `k + 1`.
    pub fn dfs_schedule(&self) -> Vec<TraversalEvent> {
        let mut out = Vec::with_capacity(2 * self.len());
        let mut stack: Vec<(VersionId, usize)> = vec![(0, 0)];
        out.push(TraversalEvent::Discover(0));
        while let Some(top) = stack.last_mut() {
            let (node, next) = *top;
            if let Some(&child) = self.children[node].get(next) {
                top.1 += 1;
                out.push(TraversalEvent::Discover(child));
                stack.push((child, 0));
            } else {
                out.push(TraversalEvent::Finish(node));
                stack.pop();
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraversalEvent {
    Discover(VersionId),
    Finish(VersionId),
}

/// Discovery and finish times of every version node, times `1..=2|R|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraversalClock {
    discovery: Vec<u64>,
    finish: Vec<u64>,
}

impl TraversalClock {
    pub fn of<U>(tree: &VersionTree<U>) -> Self {
        let mut discovery = vec![0; tree.len()];
        let mut finish = vec![0; tree.len()];
        for (k, ev) in tree.dfs_schedule().into_iter().enumerate() {
            let time = k as u64 + 1;
            match ev {
                TraversalEvent::Discover(v) => discovery[v] = time,
                TraversalEvent::Finish(v) => finish[v] = time,
            }
        }
        TraversalClock { discovery, finish }
    }

    pub fn discovery(&self, node: VersionId) -> u64 {
        self.discovery[node]
    }

    pub fn finish(&self, node: VersionId) -> u64 {
        self.finish[node]
    }
}

/// History of one cell: `(event time, contents after the event)`, strictly
/// increasing in time, plus the packed certificate table the verifier sees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellEventTable {
    cell: Address,
    events: Vec<(u64, CellWord)>,
    packed: CertificateTable,
}

impl CellEventTable {
    pub fn cell(&self) -> Address {
        self.cell
    }

    pub fn events(&self) -> &[(u64, CellWord)] {
        &self.events
    }

    /// The set `S_c` of event times.
    pub fn times(&self) -> Vec<u64> {
        self.events.iter().map(|&(t, _)| t).collect()
    }

    pub fn contents(&self) -> Vec<CellWord> {
        self.events.iter().map(|&(_, c)| c).collect()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn table(&self) -> &CertificateTable {
        &self.packed
    }
}

/// Chooses which cells of an event table to reveal for a discovery time.
///
/// The verifier never trusts the choice, so any implementation is safe; only
/// honest ones get accepted.
pub trait CellProver {
    fn select(&self, table: &CertificateTable, layout: PackedLayout, time: u64) -> Vec<usize>;
}

impl<F> CellProver for F
where
    F: Fn(&CertificateTable, PackedLayout, u64) -> Vec<usize>,
{
    fn select(&self, table: &CertificateTable, layout: PackedLayout, time: u64) -> Vec<usize> {
        self(table, layout, time)
    }
}

/// Locates the predecessor of the discovery time by binary search.
#[derive(Debug, Clone, Copy, Default)]
pub struct BinarySearchProver;

impl CellProver for BinarySearchProver {
    fn select(&self, table: &CertificateTable, layout: PackedLayout, time: u64) -> Vec<usize> {
        let rank = table
            .entries()
            .partition_point(|&w| layout.time(w) <= time);
        if rank == 0 {
            vec![1]
        } else {
            vec![rank, rank + 1]
        }
    }
}

/// How `(time, contents)` pairs share one cell: contents in the low
/// `inner_width` bits, time above them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PackedLayout {
    pub inner_width: u32,
}

impl PackedLayout {
    pub fn pack(self, time: u64, contents: CellWord) -> CellWord {
        CellWord::new(((time as u128) << self.inner_width) | contents.value())
    }

    pub fn time(self, word: CellWord) -> u64 {
        (word.value() >> self.inner_width) as u64
    }

    pub fn contents(self, word: CellWord) -> CellWord {
        let mask = if self.inner_width >= 128 {
            u128::MAX
        } else {
            (1u128 << self.inner_width) - 1
        };
        CellWord::new(word.value() & mask)
    }
}

/// Output of the persistence transformation: per-cell event tables and the
/// node-to-discovery-time table.
#[derive(Debug, Clone)]
pub struct PersistentStore {
    width: u32,
    layout: PackedLayout,
    per_cell: BTreeMap<Address, CellEventTable>,
    // version ids are 0..|R|, so a direct-indexed table serves as the map;
    // entry v + 1 holds d_v
    discovery: CertificateTable,
    versions: usize,
    updates: usize,
    max_update_probes: u64,
}

fn empty_table() -> &'static CertificateTable {
    static EMPTY: OnceLock<CertificateTable> = OnceLock::new();
    EMPTY.get_or_init(|| CertificateTable::new(1, Vec::new()).expect("width 1 is valid"))
}

impl PersistentStore {
    /// Bits needed for an event time: `bits(2|R|)`.
    pub fn time_bits(versions: usize) -> u32 {
        bit_length(2 * versions as u128)
    }

    /// Smallest store width for `versions` nodes over `inner_width`-bit cells.
    pub fn required_width(versions: usize, inner_width: u32) -> u32 {
        Self::time_bits(versions) + inner_width
    }

    /// Builds the store with the smallest sufficient cell width.
    pub fn build<D: DynamicStructure>(
        tree: &VersionTree<D::Update>,
        ds: &D,
        inner_width: u32,
    ) -> Result<Self> {
        let width = Self::required_width(tree.len(), inner_width);
        Self::build_with_width(tree, ds, inner_width, width)
    }

    pub fn build_with_width<D: DynamicStructure>(
        tree: &VersionTree<D::Update>,
        ds: &D,
        inner_width: u32,
        width: u32,
    ) -> Result<Self> {
        let required = Self::required_width(tree.len(), inner_width);
        if width > MAX_WIDTH {
            return Err(Error::InvalidWidth(width));
        }
        if width < required {
            return Err(Error::WidthTooSmall { width, required });
        }
        let layout = PackedLayout { inner_width };
        let mut mem = InstrumentedMemory::new(inner_width)?;
        let mut history: BTreeMap<Address, Vec<(u64, CellWord)>> = BTreeMap::new();
        let mut discovery = vec![CellWord::ZERO; tree.len()];
        let mut max_update_probes = 0;

        for (k, ev) in tree.dfs_schedule().into_iter().enumerate() {
            let time = k as u64 + 1;
            match ev {
                TraversalEvent::Discover(v) => {
                    discovery[v] = CellWord::from(time);
                    mem.push_frame();
                    for upd in tree.updates(v) {
                        let before = mem.probe_count();
                        ds.apply_update(&mut mem, upd)?;
                        max_update_probes = max_update_probes.max(mem.probe_count() - before);
                    }
                    // several writes to one cell collapse into one event
                    for (addr, prior) in frame_priors(&mem) {
                        let now = mem.peek(addr);
                        if now != prior {
                            history.entry(addr).or_default().push((time, now));
                        }
                    }
                }
                TraversalEvent::Finish(_) => {
                    let touched: Vec<(Address, CellWord)> = frame_priors(&mem)
                        .into_keys()
                        .map(|addr| (addr, mem.peek(addr)))
                        .collect();
                    mem.pop_frame()?;
                    for (addr, before_pop) in touched {
                        let restored = mem.peek(addr);
                        if restored != before_pop {
                            history.entry(addr).or_default().push((time, restored));
                        }
                    }
                }
            }
        }

        let per_cell = history
            .into_iter()
            .map(|(cell, events)| {
                let packed = events.iter().map(|&(t, c)| layout.pack(t, c)).collect();
                let packed = CertificateTable::new(width, packed)?;
                Ok((cell, CellEventTable { cell, events, packed }))
            })
            .collect::<Result<_>>()?;

        Ok(PersistentStore {
            width,
            layout,
            per_cell,
            discovery: CertificateTable::new(width, discovery)?,
            versions: tree.len(),
            updates: tree.update_count(),
            max_update_probes,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn inner_width(&self) -> u32 {
        self.layout.inner_width
    }

    pub fn layout(&self) -> PackedLayout {
        self.layout
    }

    pub fn version_count(&self) -> usize {
        self.versions
    }

    pub fn update_count(&self) -> usize {
        self.updates
    }

    /// Measured `t_u`: most probes spent by a single update during the build.
    pub fn max_update_probes(&self) -> u64 {
        self.max_update_probes
    }

    /// `s`: cells across all event tables plus the discovery table.
    pub fn measured_s(&self) -> usize {
        self.per_cell.values().map(CellEventTable::len).sum::<usize>() + self.discovery.len()
    }

    /// `4 * (m * t_u + |R|)`.
    pub fn space_bound(&self) -> u64 {
        4 * (self.updates as u64 * self.max_update_probes + self.versions as u64)
    }

    pub fn event_table(&self, addr: Address) -> Option<&CellEventTable> {
        self.per_cell.get(&addr)
    }

    pub fn event_tables(&self) -> impl Iterator<Item = &CellEventTable> {
        self.per_cell.values()
    }

    pub fn discovery_table(&self) -> &CertificateTable {
        &self.discovery
    }

    /// Packed table for `addr`; cells that never changed have an empty one.
    pub fn table_for(&self, addr: Address) -> &CertificateTable {
        self.per_cell
            .get(&addr)
            .map(CellEventTable::table)
            .unwrap_or_else(|| empty_table())
    }

    /// One probe: `d_u` for `version`.
    pub fn lookup_discovery(&self, version: VersionId, probes: &mut u64) -> Result<u64> {
        if version >= self.versions {
            return Err(Error::UnknownVersion(version));
        }
        *probes += 1;
        Ok(self.discovery.get(version + 1).value() as u64)
    }

    /// Verifier for one simulated read: certifies the rank of `time` among
    /// the event times and returns the contents stored at that rank (zero at
    /// rank 0).
    pub fn verify_cell(&self, time: u64, probes: &ProbeSet) -> Verdict<CellWord> {
        let layout = self.layout;
        verify_open_ended(time, probes, |w| layout.time(w)).map(|rank| match rank {
            0 => CellWord::ZERO,
            r => layout.contents(probes.get(r).expect("accepted rank is probed")),
        })
    }

    /// Contents of `addr` at `version`, with the probes spent (at most 3).
    pub fn cell_at_version(&self, addr: Address, version: VersionId) -> Result<(CellWord, u64)> {
        let mut reader = self.reader(version, BinarySearchProver)?;
        let word = reader.read(addr)?;
        Ok((word, reader.probes()))
    }

    /// A read handle that sees memory as it was right after `version` was
    /// discovered. Creating it costs the discovery lookup.
    pub fn reader<P: CellProver>(&self, version: VersionId, prover: P) -> Result<VersionedReader<'_, P>> {
        let mut probes = 0;
        let time = self.lookup_discovery(version, &mut probes)?;
        Ok(VersionedReader {
            store: self,
            time,
            probes,
            prover,
        })
    }
}

// Value each cell held before the innermost frame, keyed by address.
fn frame_priors(mem: &InstrumentedMemory) -> BTreeMap<Address, CellWord> {
    let mut priors = BTreeMap::new();
    for rec in mem.frame_records() {
        priors.entry(rec.addr).or_insert(rec.previous);
    }
    priors
}

/// Simulated memory at a fixed version; every read goes through a prover
/// and the certificate verifier.
pub struct VersionedReader<'a, P> {
    store: &'a PersistentStore,
    time: u64,
    probes: u64,
    prover: P,
}

impl<P> VersionedReader<'_, P> {
    pub fn discovery_time(&self) -> u64 {
        self.time
    }

    pub fn probes(&self) -> u64 {
        self.probes
    }
}

impl<P: CellProver> CellRead for VersionedReader<'_, P> {
    fn read(&mut self, addr: Address) -> Result<CellWord> {
        let table = self.store.table_for(addr);
        let indices = self.prover.select(table, self.store.layout, self.time);
        let probes = table.probe(&indices)?;
        self.probes += probes.len() as u64;
        match self.store.verify_cell(self.time, &probes) {
            Verdict::Accept(word) => Ok(word),
            Verdict::Reject => Err(Error::Rejected { addr }),
        }
    }
}

/// A query `q` asked at version `u`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersistentQuery<Q> {
    pub query: Q,
    pub version: VersionId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryOutcome<A> {
    pub answer: A,
    pub probes: u64,
}

pub fn persistent_query<D: DynamicStructure>(
    store: &PersistentStore,
    ds: &D,
    pq: &PersistentQuery<D::Query>,
) -> Result<QueryOutcome<D::Answer>> {
    persistent_query_with(store, ds, pq, BinarySearchProver)
}

/// Like [`persistent_query`] with a caller-supplied prover.
pub fn persistent_query_with<D: DynamicStructure, P: CellProver>(
    store: &PersistentStore,
    ds: &D,
    pq: &PersistentQuery<D::Query>,
    prover: P,
) -> Result<QueryOutcome<D::Answer>> {
    let mut reader = store.reader(pq.version, prover)?;
    let answer = ds.answer_query(&mut reader, &pq.query)?;
    Ok(QueryOutcome {
        answer,
        probes: reader.probes(),
    })
}

/// Ground truth: runs the root-to-version updates on a fresh memory, then
/// the query. `probes` counts only the query.
pub fn replay_oracle<D: DynamicStructure>(
    tree: &VersionTree<D::Update>,
    ds: &D,
    pq: &PersistentQuery<D::Query>,
    inner_width: u32,
) -> Result<QueryOutcome<D::Answer>> {
    let mut mem = InstrumentedMemory::new(inner_width)?;
    for node in tree.path_from_root(pq.version)? {
        for upd in tree.updates(node) {
            ds.apply_update(&mut mem, upd)?;
        }
    }
    let before = mem.probe_count();
    let answer = ds.answer_query(&mut mem, &pq.query)?;
    Ok(QueryOutcome {
        answer,
        probes: mem.probe_count() - before,
    })
}
