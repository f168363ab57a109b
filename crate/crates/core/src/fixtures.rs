//! Small worked instances used by tests, the acceptance suite and the demo.

use crate::butterfly::{ButterflyEdge, ButterflyShape, ButterflySubgraph};
use crate::cell::{Address, CellWord};
use crate::dynamic::RegisterWrite;
use crate::persistence::{VersionId, VersionTree};

/// Four-node version tree: a root with one child, which has two children.
/// The root writes `x` to `cell` and the first grandchild writes `y`; `z` is
/// the initial (zero) contents. DFS times are root (1, 8), child (2, 7),
/// grandchildren (3, 4) and (5, 6).
#[derive(Debug, Clone)]
pub struct DfsExample {
    pub tree: VersionTree<RegisterWrite>,
    pub cell: Address,
    pub x: CellWord,
    pub y: CellWord,
    pub z: CellWord,
    /// The second grandchild, discovered at time 5.
    pub double_circled: VersionId,
}

pub fn dfs_example() -> DfsExample {
    let cell = 0;
    let (x, y, z) = (CellWord::new(0x78), CellWord::new(0x79), CellWord::ZERO);
    let mut tree = VersionTree::new(vec![RegisterWrite { addr: cell, value: x }]);
    let mid = tree.add_child(0, vec![]).expect("root exists");
    tree.add_child(mid, vec![RegisterWrite { addr: cell, value: y }])
        .expect("mid exists");
    let double_circled = tree.add_child(mid, vec![]).expect("mid exists");
    DfsExample {
        tree,
        cell,
        x,
        y,
        z,
        double_circled,
    }
}

/// Degree-2, depth-2 butterfly with five named missing edges `e_1..e_5`.
/// Sources `s_1..s_4` and sinks `t_1..t_4` are indices `0..4`.
#[derive(Debug, Clone)]
pub struct ButterflyExample {
    pub graph: ButterflySubgraph,
    pub named: Vec<(&'static str, ButterflyEdge)>,
}

impl ButterflyExample {
    pub fn name_of(&self, e: &ButterflyEdge) -> Option<&'static str> {
        self.named.iter().find(|(_, f)| f == e).map(|&(n, _)| n)
    }
}

pub fn butterfly_example() -> ButterflyExample {
    let shape = ButterflyShape::new(2, 2).expect("valid shape");
    let edge = |layer, lower, upper| {
        ButterflyEdge::new(&shape, layer, lower, upper).expect("valid edge")
    };
    let named = vec![
        ("e_1", edge(0, 0, 1)),
        ("e_2", edge(0, 2, 2)),
        ("e_3", edge(1, 0, 0)),
        ("e_4", edge(1, 1, 1)),
        ("e_5", edge(1, 3, 1)),
    ];
    let graph = ButterflySubgraph::with_missing(shape, named.iter().map(|&(_, e)| e))
        .expect("edges valid");
    ButterflyExample { graph, named }
}
