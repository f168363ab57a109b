//! Butterfly reachability as static fully persistent marked ancestor.
//!
//! Both the version tree `R` and the marked tree `T` are complete `b`-ary
//! trees of depth `d`. Leaves of `R` stand for sources and leaves of `T` for
//! sinks. A missing edge from `l` (layer `i`) to `u` (layer `i + 1`) becomes a
//! mark on node `sum_{k=0}^{i} b^(i-k) u[k]` of layer `i + 1` of `T`, placed in
//! node `sum_{k=0}^{d-i-1} b^k l[i+k]` of layer `d - i` of `R`: exactly the
//! subtree of sources that can reach `l`. A source reaches a sink iff the
//! sink's leaf has no marked ancestor at the source's version.

use crate::butterfly::{ButterflyEdge, ButterflyShape, ButterflySubgraph};
use crate::cell::default_width;
use crate::dynamic::{layer_offset, AncestorQuery, MarkUpdate, MarkedAncestorTree, TreeNode};
use crate::error::{Error, Result};
use crate::persistence::{
    persistent_query, PersistentQuery, PersistentStore, QueryOutcome, VersionId, VersionTree,
};

/// Where one missing edge lands: the `R` node holding the update and the `T`
/// node it marks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdatePlacement {
    pub version_node: TreeNode,
    pub mark_target: TreeNode,
}

pub fn edge_to_update(shape: &ButterflyShape, e: &ButterflyEdge) -> Result<UpdatePlacement> {
    ButterflyEdge::new(shape, e.layer, e.lower, e.upper)?;
    let (b, d, i) = (shape.degree(), shape.depth(), e.layer);
    let lower = shape.digits(e.lower);
    let upper = shape.digits(e.upper);
    let version_index: u64 = (0..d - i)
        .map(|k| b.pow(k) * lower[(i + k) as usize])
        .sum();
    let mark_index: u64 = (0..=i).map(|k| b.pow(i - k) * upper[k as usize]).sum();
    Ok(UpdatePlacement {
        version_node: TreeNode::new(d - i, version_index),
        mark_target: TreeNode::new(i + 1, mark_index),
    })
}

/// Which version to ask and which leaf of `T` to query for a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryPlacement {
    /// Leaf of `R`; its position is the source index.
    pub version_leaf: TreeNode,
    /// Leaf of `T`; its position is the sink index with digits reversed.
    pub query_leaf: TreeNode,
}

pub fn query_map(shape: &ButterflyShape, source: u64, sink: u64) -> Result<QueryPlacement> {
    shape.check_index(source)?;
    shape.check_index(sink)?;
    let mut digits = shape.digits(sink);
    digits.reverse();
    Ok(QueryPlacement {
        version_leaf: TreeNode::new(shape.depth(), source),
        query_leaf: TreeNode::new(shape.depth(), shape.from_digits(&digits)),
    })
}

#[derive(Debug, Clone)]
pub struct ReductionInstance {
    shape: ButterflyShape,
    version_tree: VersionTree<MarkUpdate>,
    marked_tree: MarkedAncestorTree,
}

impl ReductionInstance {
    /// One mark per missing edge, appended in edge enumeration order.
    pub fn build(g: &ButterflySubgraph) -> Self {
        let shape = *g.shape();
        let (b, d) = (shape.degree(), shape.depth());
        let marked_tree = MarkedAncestorTree::new(b, d).expect("butterfly shape bounds the tree");

        // BFS order, so node (L, p) gets id layer_offset(b, L) + p
        let mut version_tree = VersionTree::new(Vec::new());
        for layer in 1..=d {
            for pos in 0..b.pow(layer) {
                let parent = (layer_offset(b, layer - 1) + pos / b) as VersionId;
                let id = version_tree
                    .add_child(parent, Vec::new())
                    .expect("parent added in an earlier layer");
                debug_assert_eq!(id as u64, layer_offset(b, layer) + pos);
            }
        }

        let mut inst = ReductionInstance {
            shape,
            version_tree,
            marked_tree,
        };
        for e in g.missing() {
            let p = edge_to_update(&shape, e).expect("subgraph edges are valid");
            let node = inst.version_id(p.version_node);
            inst.version_tree
                .push_update(node, MarkUpdate::mark(p.mark_target))
                .expect("version node exists");
        }
        inst
    }

    pub fn shape(&self) -> &ButterflyShape {
        &self.shape
    }

    pub fn version_tree(&self) -> &VersionTree<MarkUpdate> {
        &self.version_tree
    }

    pub fn marked_tree(&self) -> &MarkedAncestorTree {
        &self.marked_tree
    }

    pub fn version_id(&self, node: TreeNode) -> VersionId {
        (layer_offset(self.shape.degree(), node.layer) + node.index) as VersionId
    }

    /// Cell width of the simulated marked-ancestor memory.
    pub fn inner_width(&self) -> u32 {
        default_width(self.version_tree.update_count() as u64)
    }

    pub fn build_store(&self) -> Result<PersistentStore> {
        PersistentStore::build(&self.version_tree, &self.marked_tree, self.inner_width())
    }

    /// Reachability from `source` to `sink` answered through the store.
    pub fn answer_reachability(
        &self,
        store: &PersistentStore,
        source: u64,
        sink: u64,
    ) -> Result<QueryOutcome<bool>> {
        if store.version_count() != self.version_tree.len() {
            return Err(Error::InvalidParams(
                "store was not built from this instance".into(),
            ));
        }
        let q = query_map(&self.shape, source, sink)?;
        let pq = PersistentQuery {
            query: AncestorQuery { node: q.query_leaf },
            version: self.version_id(q.version_leaf),
        };
        let out = persistent_query(store, &self.marked_tree, &pq)?;
        Ok(QueryOutcome {
            answer: !out.answer,
            probes: out.probes,
        })
    }
}

pub fn build_instance(g: &ButterflySubgraph) -> ReductionInstance {
    ReductionInstance::build(g)
}
