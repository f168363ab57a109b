//! Butterfly graphs of degree `b` and depth `d`.
//!
//! Layers `0..=d` each hold `b^d` nodes, viewed as base-`b` digit vectors
//! with digit 0 least significant. An edge joins layer `i` to layer `i + 1`
//! when the two vectors agree everywhere except possibly at coordinate `i`.
//! Every source reaches every sink along exactly one path.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ButterflyShape {
    degree: u64,
    depth: u32,
}

impl ButterflyShape {
    pub fn new(degree: u64, depth: u32) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidParams(format!("degree must be >= 2, got {degree}")));
        }
        if depth < 1 {
            return Err(Error::InvalidParams("depth must be >= 1".into()));
        }
        // total_edges = d * b^(d+1) must fit
        let fits = degree
            .checked_pow(depth + 1)
            .and_then(|x| x.checked_mul(depth as u64))
            .is_some_and(|x| x <= usize::MAX as u64);
        if !fits {
            return Err(Error::InvalidParams(format!(
                "butterfly of degree {degree} and depth {depth} is too large"
            )));
        }
        Ok(ButterflyShape { degree, depth })
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn nodes_per_layer(&self) -> u64 {
        self.degree.pow(self.depth)
    }

    pub fn total_edges(&self) -> u64 {
        self.depth as u64 * self.degree.pow(self.depth + 1)
    }

    pub fn check_index(&self, index: u64) -> Result<()> {
        let limit = self.nodes_per_layer();
        if index < limit {
            Ok(())
        } else {
            Err(Error::IndexOutOfBounds { index, limit })
        }
    }

    /// Base-`b` digits of `index`, least significant first, length `d`.
    pub fn digits(&self, index: u64) -> Vec<u64> {
        let mut rest = index;
        (0..self.depth)
            .map(|_| {
                let digit = rest % self.degree;
                rest /= self.degree;
                digit
            })
            .collect()
    }

    pub fn from_digits(&self, digits: &[u64]) -> u64 {
        digits.iter().rev().fold(0, |acc, &d| acc * self.degree + d)
    }

    pub fn digit(&self, index: u64, coord: u32) -> u64 {
        index / self.degree.pow(coord) % self.degree
    }

    /// `index` with coordinate `coord` replaced by `value`.
    pub fn with_digit(&self, index: u64, coord: u32, value: u64) -> u64 {
        let place = self.degree.pow(coord);
        index - self.digit(index, coord) * place + value * place
    }

    /// Every edge, ordered by (layer, lower index, upper index).
    pub fn edges(&self) -> impl Iterator<Item = ButterflyEdge> + '_ {
        (0..self.depth).flat_map(move |layer| {
            (0..self.nodes_per_layer()).flat_map(move |lower| {
                (0..self.degree).map(move |v| ButterflyEdge {
                    layer,
                    lower,
                    upper: self.with_digit(lower, layer, v),
                })
            })
        })
    }

    /// Position of `edge` in [`edges`](Self::edges) order.
    pub fn edge_ordinal(&self, edge: &ButterflyEdge) -> usize {
        let per_layer = self.nodes_per_layer() * self.degree;
        let slot = edge.layer as u64 * per_layer
            + edge.lower * self.degree
            + self.digit(edge.upper, edge.layer);
        slot as usize
    }

    /// The unique source-to-sink path. The node at layer `i + 1` has digits
    /// `sink[0..=i]` followed by `source[i+1..]`.
    pub fn unique_path(&self, source: u64, sink: u64) -> Result<Vec<ButterflyEdge>> {
        self.check_index(source)?;
        self.check_index(sink)?;
        let mut node = source;
        Ok((0..self.depth)
            .map(|layer| {
                let next = self.with_digit(node, layer, self.digit(sink, layer));
                let edge = ButterflyEdge {
                    layer,
                    lower: node,
                    upper: next,
                };
                node = next;
                edge
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LayerNode {
    pub layer: u32,
    pub index: u64,
}

/// An edge from `lower` in layer `layer` to `upper` in layer `layer + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ButterflyEdge {
    pub layer: u32,
    pub lower: u64,
    pub upper: u64,
}

impl ButterflyEdge {
    pub fn new(shape: &ButterflyShape, layer: u32, lower: u64, upper: u64) -> Result<Self> {
        if layer >= shape.depth {
            return Err(Error::InvalidEdge(format!(
                "layer {layer} out of range 0..{}",
                shape.depth
            )));
        }
        let limit = shape.nodes_per_layer();
        if lower >= limit || upper >= limit {
            return Err(Error::InvalidEdge(format!(
                "endpoint out of range: {lower} -> {upper}, layer size {limit}"
            )));
        }
        if shape.with_digit(upper, layer, 0) != shape.with_digit(lower, layer, 0) {
            return Err(Error::InvalidEdge(format!(
                "{lower} -> {upper} differs outside coordinate {layer}"
            )));
        }
        Ok(ButterflyEdge {
            layer,
            lower,
            upper,
        })
    }

    pub fn lower_node(&self) -> LayerNode {
        LayerNode {
            layer: self.layer,
            index: self.lower,
        }
    }

    pub fn upper_node(&self) -> LayerNode {
        LayerNode {
            layer: self.layer + 1,
            index: self.upper,
        }
    }
}

/// A butterfly with some edges removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ButterflySubgraph {
    shape: ButterflyShape,
    missing: BTreeSet<ButterflyEdge>,
}

impl ButterflySubgraph {
    pub fn full(shape: ButterflyShape) -> Self {
        ButterflySubgraph {
            shape,
            missing: BTreeSet::new(),
        }
    }

    pub fn with_missing(
        shape: ButterflyShape,
        missing: impl IntoIterator<Item = ButterflyEdge>,
    ) -> Result<Self> {
        let mut g = Self::full(shape);
        for e in missing {
            g.remove_edge(e)?;
        }
        Ok(g)
    }

    /// Subgraph whose missing edges are the set bits of `mask`, by edge
    /// ordinal. Only for butterflies with at most 64 edges.
    pub fn from_mask(shape: ButterflyShape, mask: u64) -> Self {
        let missing = shape
            .edges()
            .enumerate()
            .filter(|&(i, _)| i < 64 && mask >> i & 1 == 1)
            .map(|(_, e)| e)
            .collect();
        ButterflySubgraph { shape, missing }
    }

    pub fn remove_edge(&mut self, e: ButterflyEdge) -> Result<()> {
        ButterflyEdge::new(&self.shape, e.layer, e.lower, e.upper)?;
        self.missing.insert(e);
        Ok(())
    }

    pub fn shape(&self) -> &ButterflyShape {
        &self.shape
    }

    /// Missing edges in enumeration order.
    pub fn missing(&self) -> &BTreeSet<ButterflyEdge> {
        &self.missing
    }

    pub fn is_missing(&self, e: &ButterflyEdge) -> bool {
        self.missing.contains(e)
    }

    /// `n`, the number of edges still present.
    pub fn present_edges(&self) -> u64 {
        self.shape.total_edges() - self.missing.len() as u64
    }
}

/// Reachability by scanning the unique path for a missing edge.
pub fn oracle_reachable(g: &ButterflySubgraph, source: u64, sink: u64) -> Result<bool> {
    Ok(g
        .shape
        .unique_path(source, sink)?
        .iter()
        .all(|e| !g.is_missing(e)))
}

/// Reachability by breadth-first search over present edges, independent of
/// the path structure.
pub fn bfs_reachable(g: &ButterflySubgraph, source: u64, sink: u64) -> Result<bool> {
    let shape = g.shape;
    shape.check_index(source)?;
    shape.check_index(sink)?;
    let width = shape.nodes_per_layer();
    let mut seen = vec![false; width as usize];
    seen[source as usize] = true;
    let mut frontier: VecDeque<u64> = VecDeque::from([source]);
    for layer in 0..shape.depth {
        let mut next = vec![false; width as usize];
        let mut queue = VecDeque::new();
        while let Some(node) = frontier.pop_front() {
            for v in 0..shape.degree {
                let upper = shape.with_digit(node, layer, v);
                let e = ButterflyEdge {
                    layer,
                    lower: node,
                    upper,
                };
                if !g.is_missing(&e) && !next[upper as usize] {
                    next[upper as usize] = true;
                    queue.push_back(upper);
                }
            }
        }
        seen = next;
        frontier = queue;
    }
    Ok(seen[sink as usize])
}

/// One missing edge in the JSON instance format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub layer: u32,
    pub lower_index: u64,
    pub upper_index: u64,
}

/// On-disk instance: `{"degree", "depth", "missing_edges": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub degree: u64,
    pub depth: u32,
    pub missing_edges: Vec<EdgeRecord>,
}

impl From<&ButterflySubgraph> for InstanceFile {
    fn from(g: &ButterflySubgraph) -> Self {
        InstanceFile {
            degree: g.shape.degree,
            depth: g.shape.depth,
            missing_edges: g
                .missing
                .iter()
                .map(|e| EdgeRecord {
                    layer: e.layer,
                    lower_index: e.lower,
                    upper_index: e.upper,
                })
                .collect(),
        }
    }
}

impl TryFrom<InstanceFile> for ButterflySubgraph {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        let bad = |e: Error| Error::InstanceParse(e.to_string());
        let shape = ButterflyShape::new(file.degree, file.depth).map_err(bad)?;
        let mut g = ButterflySubgraph::full(shape);
        for r in file.missing_edges {
            let e = ButterflyEdge::new(&shape, r.layer, r.lower_index, r.upper_index).map_err(bad)?;
            if g.is_missing(&e) {
                return Err(Error::InstanceParse(format!("duplicate missing edge {e:?}")));
            }
            g.missing.insert(e);
        }
        Ok(g)
    }
}

impl ButterflySubgraph {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| Error::InstanceParse(e.to_string()))?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&InstanceFile::from(self))
            .expect("instance serializes");
        out.push('\n');
        out
    }
}
