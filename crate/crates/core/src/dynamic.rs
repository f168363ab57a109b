//! Dynamic data structures that live entirely in cell memory.
//!
//! A [`DynamicStructure`] is a pair of procedures that touch memory only
//! through [`CellRead`] / [`CellWrite`], so the same code can run on a plain
//! [`InstrumentedMemory`](crate::cell::InstrumentedMemory) or on a persistent
//! store that simulates reads through certificates.

use std::fmt::Debug;

use crate::cell::{Address, CellRead, CellWord, CellWrite};
use crate::error::{Error, Result};

pub trait DynamicStructure {
    type Update: Clone + Debug;
    type Query: Clone + Debug;
    type Answer: Clone + Debug + PartialEq;

    fn apply_update<M: CellWrite + ?Sized>(&self, mem: &mut M, update: &Self::Update)
        -> Result<()>;

    /// Queries get read-only access, so they cannot write.
    fn answer_query<M: CellRead + ?Sized>(
        &self,
        mem: &mut M,
        query: &Self::Query,
    ) -> Result<Self::Answer>;
}

/// A node of a complete `b`-ary tree: layer 0 is the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreeNode {
    pub layer: u32,
    pub index: u64,
}

impl TreeNode {
    pub const ROOT: TreeNode = TreeNode { layer: 0, index: 0 };

    pub const fn new(layer: u32, index: u64) -> Self {
        TreeNode { layer, index }
    }
}

/// Number of nodes above layer `layer` in a complete `degree`-ary tree,
/// `(b^L - 1) / (b - 1)`.
pub fn layer_offset(degree: u64, layer: u32) -> u64 {
    (0..layer).fold(0u64, |acc, l| acc + degree.pow(l))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkAction {
    Mark,
    Unmark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarkUpdate {
    pub node: TreeNode,
    pub action: MarkAction,
}

impl MarkUpdate {
    pub fn mark(node: TreeNode) -> Self {
        MarkUpdate {
            node,
            action: MarkAction::Mark,
        }
    }

    pub fn unmark(node: TreeNode) -> Self {
        MarkUpdate {
            node,
            action: MarkAction::Unmark,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AncestorQuery {
    pub node: TreeNode,
}

/// Marked ancestor on a complete tree of degree `b` and depth `d`.
///
/// One cell per node holds its mark bit; node `(L, i)` lives at
/// `layer_offset(b, L) + i`. Updates cost one probe and a query climbs to the
/// root reading one cell per level. A node counts as its own ancestor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarkedAncestorTree {
    degree: u64,
    depth: u32,
}

impl MarkedAncestorTree {
    pub fn new(degree: u64, depth: u32) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidParams(format!("degree {degree} < 2")));
        }
        if degree.checked_pow(depth + 1).is_none() {
            return Err(Error::InvalidParams(format!(
                "tree of degree {degree} and depth {depth} is too large"
            )));
        }
        Ok(MarkedAncestorTree { degree, depth })
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn layer_width(&self, layer: u32) -> u64 {
        self.degree.pow(layer)
    }

    pub fn node_count(&self) -> u64 {
        layer_offset(self.degree, self.depth + 1)
    }

    pub fn contains(&self, node: TreeNode) -> bool {
        node.layer <= self.depth && node.index < self.layer_width(node.layer)
    }

    fn check(&self, node: TreeNode) -> Result<()> {
        if self.contains(node) {
            Ok(())
        } else {
            Err(Error::NodeOutOfBounds {
                layer: node.layer,
                index: node.index,
            })
        }
    }

    pub fn parent(&self, node: TreeNode) -> Option<TreeNode> {
        (node.layer > 0).then(|| TreeNode::new(node.layer - 1, node.index / self.degree))
    }

    /// Nodes from `node` up to the root, inclusive.
    pub fn ancestors(&self, node: TreeNode) -> impl Iterator<Item = TreeNode> + '_ {
        std::iter::successors(Some(node), move |&n| self.parent(n))
    }

    pub fn address(&self, node: TreeNode) -> Address {
        layer_offset(self.degree, node.layer) + node.index
    }

    pub fn nodes(&self) -> impl Iterator<Item = TreeNode> + '_ {
        (0..=self.depth)
            .flat_map(move |l| (0..self.layer_width(l)).map(move |i| TreeNode::new(l, i)))
    }
}

impl DynamicStructure for MarkedAncestorTree {
    type Update = MarkUpdate;
    type Query = AncestorQuery;
    type Answer = bool;

    fn apply_update<M: CellWrite + ?Sized>(&self, mem: &mut M, upd: &MarkUpdate) -> Result<()> {
        self.check(upd.node)?;
        let bit = match upd.action {
            MarkAction::Mark => 1u64,
            MarkAction::Unmark => 0,
        };
        mem.write(self.address(upd.node), bit.into())
    }

    fn answer_query<M: CellRead + ?Sized>(&self, mem: &mut M, q: &AncestorQuery) -> Result<bool> {
        self.check(q.node)?;
        // no early exit: every query reads exactly layer + 1 cells
        let mut marked = false;
        for node in self.ancestors(q.node) {
            marked |= !mem.read(self.address(node))?.is_zero();
        }
        Ok(marked)
    }
}

/// A write of `value` into register `addr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterWrite {
    pub addr: Address,
    pub value: CellWord,
}

/// The simplest dynamic structure: updates write a cell, queries read one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RegisterFile;

impl DynamicStructure for RegisterFile {
    type Update = RegisterWrite;
    type Query = Address;
    type Answer = CellWord;

    fn apply_update<M: CellWrite + ?Sized>(&self, mem: &mut M, upd: &RegisterWrite) -> Result<()> {
        mem.write(upd.addr, upd.value)
    }

    fn answer_query<M: CellRead + ?Sized>(&self, mem: &mut M, addr: &Address) -> Result<CellWord> {
        mem.read(*addr)
    }
}
