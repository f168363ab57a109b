//! Acceptance suite. Each test is one criterion and prints a single
//! `[PASS]` / `[FAIL]` line with its measured runtime.
//!
//! Run with `cargo test -p cellprobe --test acceptance -- --nocapture`.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use cellprobe::butterfly::{oracle_reachable, ButterflyShape, ButterflySubgraph};
use cellprobe::cell::{CellWord, ProbeSet, Verdict, Verifier};
use cellprobe::cli::{bound_curve, generate, BENCH_HEADER};
use cellprobe::dynamic::{AncestorQuery, MarkUpdate, MarkedAncestorTree, RegisterFile, TreeNode};
use cellprobe::fixtures::{butterfly_example, dfs_example};
use cellprobe::persistence::{
    persistent_query, replay_oracle, PersistentQuery, PersistentStore, VersionTree,
};
use cellprobe::rank::{RankInstance, RankTable};
use cellprobe::reduction::{build_instance, edge_to_update, ReductionInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn criterion(id: u32, title: &str, limit: Option<Duration>, body: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let result = body();
    let elapsed = start.elapsed();
    let result = match (result, limit) {
        (Ok(_), Some(max)) if elapsed > max => Err(format!("took {elapsed:?}, limit {max:?}")),
        (r, _) => r,
    };
    match result {
        Ok(detail) => println!("[PASS] AC{id} {title}: {detail} ({elapsed:.2?})"),
        Err(why) => {
            println!("[FAIL] AC{id} {title}: {why} ({elapsed:.2?})");
            panic!("AC{id} failed: {why}");
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(4, |n| n.get())
}

/// Checks every source-sink pair of `g` through the reduction; returns
/// (pairs checked, max probes).
fn check_all_pairs(g: &ButterflySubgraph) -> Result<(usize, u64), String> {
    let inst = build_instance(g);
    let store = inst.build_store().map_err(|e| e.to_string())?;
    let n = g.shape().nodes_per_layer();
    let mut max_probes = 0;
    for s in 0..n {
        for t in 0..n {
            let out = inst.answer_reachability(&store, s, t).map_err(|e| e.to_string())?;
            let truth = oracle_reachable(g, s, t).unwrap();
            if out.answer != truth {
                return Err(format!("mismatch {s}->{t} in {:?}", g.missing()));
            }
            max_probes = max_probes.max(out.probes);
        }
    }
    Ok(((n * n) as usize, max_probes))
}

#[test]
fn ac1_worked_reduction_example() {
    criterion(1, "worked reduction example, exact", Some(Duration::from_secs(1)), || {
        let ex = butterfly_example();
        let shape = *ex.graph.shape();

        let p = edge_to_update(&shape, &ex.named[0].1).unwrap();
        ensure(
            (p.version_node, p.mark_target) == (TreeNode::new(2, 0), TreeNode::new(1, 1)),
            || format!("e_1 placement {p:?}"),
        )?;

        let inst = build_instance(&ex.graph);
        let groups: Vec<Vec<&str>> = (0..inst.version_tree().len())
            .map(|v| {
                ex.named
                    .iter()
                    .filter(|(_, e)| {
                        let p = edge_to_update(&shape, e).unwrap();
                        inst.version_id(p.version_node) == v
                    })
                    .map(|&(n, _)| n)
                    .collect()
            })
            .collect();
        let expected: Vec<Vec<&str>> = vec![
            vec![],
            vec!["e_3", "e_4"],
            vec!["e_5"],
            vec!["e_1"],
            vec![],
            vec!["e_2"],
            vec![],
        ];
        ensure(groups == expected, || format!("placements {groups:?}"))?;
        for (v, names) in expected.iter().enumerate() {
            ensure(inst.version_tree().updates(v).len() == names.len(), || {
                format!("update count at version {v}")
            })?;
        }

        let store = inst.build_store().unwrap();
        let t = inst.marked_tree();
        let marks: Vec<TreeNode> = t
            .nodes()
            .filter(|&n| store.cell_at_version(t.address(n), 3).unwrap().0 != CellWord::ZERO)
            .collect();
        ensure(
            marks == vec![TreeNode::new(1, 1), TreeNode::new(2, 0), TreeNode::new(2, 2)],
            || format!("s_1 marks {marks:?}"),
        )?;

        let out = Command::new(env!("CARGO_BIN_EXE_cellprobe"))
            .arg("demo-figure3")
            .output()
            .map_err(|e| e.to_string())?;
        let text = String::from_utf8_lossy(&out.stdout);
        for line in [
            "e_1: version layer 2 index 0; mark layer 1 index 1",
            "layer 1 index 0: {e_3, e_4}",
            "layer 1 index 1: {e_5}",
            "layer 2 index 0 (s_1): {e_1}",
            "layer 2 index 2 (s_3): {e_2}",
            "marks at version s_1: layer 1 index 1; layer 2 index 0; layer 2 index 2",
        ] {
            ensure(text.contains(line), || format!("transcript lacks {line:?}"))?;
        }
        Ok("placements, version tree and s_1 marks exact".into())
    });
}

#[test]
fn ac2_dfs_event_table_example() {
    criterion(2, "DFS event table example, exact", Some(Duration::from_secs(1)), || {
        let ex = dfs_example();
        let store = PersistentStore::build(&ex.tree, &RegisterFile, 8).map_err(|e| e.to_string())?;
        let table = store.event_table(ex.cell).ok_or("no event table for c")?;
        ensure(table.times() == vec![1, 3, 4, 8], || format!("S_c = {:?}", table.times()))?;
        ensure(table.contents() == vec![ex.x, ex.y, ex.x, ex.z], || {
            format!("contents {:?}", table.contents())
        })?;
        let (word, probes) = store.cell_at_version(ex.cell, ex.double_circled).unwrap();
        ensure(word == ex.x, || format!("contents at time 5: {word}"))?;
        ensure(probes <= 3, || format!("{probes} probes"))?;
        Ok("S_c = {1,3,4,8}, contents (x,y,x,z), lookup at time 5 = x".into())
    });
}

#[test]
fn ac3_exhaustive_reduction() {
    criterion(3, "exhaustive reduction b=2 d=2", Some(Duration::from_secs(300)), || {
        let shape = ButterflyShape::new(2, 2).unwrap();
        let total: u64 = 1 << 16;
        let workers = threads() as u64;
        let results: Vec<Result<usize, String>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    scope.spawn(move || {
                        let mut checks = 0;
                        for mask in (w..total).step_by(workers as usize) {
                            let g = ButterflySubgraph::from_mask(shape, mask);
                            checks += check_all_pairs(&g)?.0;
                        }
                        Ok(checks)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut checks = 0;
        for r in results {
            checks += r?;
        }
        ensure(checks == (1 << 16) * 16, || format!("{checks} checks"))?;
        Ok(format!("{checks} checks, 0 mismatches"))
    });
}

#[test]
fn ac4_randomized_reduction() {
    criterion(4, "randomized reduction d=3", Some(Duration::from_secs(300)), || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xac4);
        let mut jobs = Vec::new();
        for b in [2u64, 3] {
            for _ in 0..500 {
                jobs.push((b, rng.gen::<f64>(), rng.gen::<u64>()));
            }
        }
        let workers = threads();
        let results: Vec<Result<usize, String>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let jobs = &jobs;
                    scope.spawn(move || {
                        let mut checks = 0;
                        for &(b, p, seed) in jobs.iter().skip(w).step_by(workers) {
                            let shape = ButterflyShape::new(b, 3).unwrap();
                            let g = generate(shape, p, seed).map_err(|e| e.to_string())?;
                            checks += check_all_pairs(&g)?.0;
                        }
                        Ok(checks)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut checks = 0;
        for r in results {
            checks += r?;
        }
        Ok(format!("{} subgraphs, {checks} checks, 0 mismatches", jobs.len()))
    });
}

fn random_mark_tree(rng: &mut ChaCha8Rng) -> (MarkedAncestorTree, VersionTree<MarkUpdate>) {
    let t = MarkedAncestorTree::new(rng.gen_range(2..=3), rng.gen_range(1..=3)).unwrap();
    let nodes = rng.gen_range(1..=50);
    let mut tree = VersionTree::new(Vec::new());
    for v in 1..nodes {
        tree.add_child(rng.gen_range(0..v), Vec::new()).unwrap();
    }
    for _ in 0..rng.gen_range(0..=200) {
        let layer = rng.gen_range(0..=t.depth());
        let node = TreeNode::new(layer, rng.gen_range(0..t.layer_width(layer)));
        let upd = if rng.gen_bool(0.6) {
            MarkUpdate::mark(node)
        } else {
            MarkUpdate::unmark(node)
        };
        tree.push_update(rng.gen_range(0..nodes), upd).unwrap();
    }
    (t, tree)
}

#[test]
fn ac5_persistence_matches_replay() {
    criterion(5, "persistence oracle equivalence", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xac5);
        let mut pairs = 0;
        for _ in 0..150 {
            let (t, tree) = random_mark_tree(&mut rng);
            let store = PersistentStore::build(&tree, &t, 64).map_err(|e| e.to_string())?;
            for v in 0..tree.len() {
                for node in t.nodes() {
                    let pq = PersistentQuery { query: AncestorQuery { node }, version: v };
                    let got = persistent_query(&store, &t, &pq).map_err(|e| e.to_string())?;
                    let want = replay_oracle(&tree, &t, &pq, 64).unwrap();
                    ensure(got.answer == want.answer, || format!("mismatch at {pq:?}"))?;
                    pairs += 1;
                }
            }
        }
        Ok(format!("150 trees, {pairs} (query, version) pairs, 0 mismatches"))
    });
}

#[test]
fn ac6_certificate_bounds() {
    criterion(6, "space and probe bounds", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(0xac6);
        let mut stores = 0;
        let mut queries = 0;
        let mut worst_space = 0.0f64;
        for _ in 0..150 {
            let (t, tree) = random_mark_tree(&mut rng);
            let store = PersistentStore::build(&tree, &t, 64).unwrap();
            let s = store.measured_s() as u64;
            ensure(s <= store.space_bound(), || format!("s = {s} > {}", store.space_bound()))?;
            worst_space = worst_space.max(s as f64 / store.space_bound() as f64);
            stores += 1;
            for v in 0..tree.len() {
                for node in t.nodes() {
                    let pq = PersistentQuery { query: AncestorQuery { node }, version: v };
                    let got = persistent_query(&store, &t, &pq).unwrap();
                    let direct = replay_oracle(&tree, &t, &pq, 64).unwrap();
                    ensure(got.probes <= 2 * direct.probes + 2, || {
                        format!("{} probes vs direct {}", got.probes, direct.probes)
                    })?;
                    queries += 1;
                }
            }
        }
        for (b, d) in [(2u64, 1u32), (2, 2), (2, 3), (3, 2), (3, 3)] {
            for seed in 0..20 {
                let g = generate(ButterflyShape::new(b, d).unwrap(), 0.5, seed).unwrap();
                let inst: ReductionInstance = build_instance(&g);
                let store = inst.build_store().unwrap();
                let s = store.measured_s() as u64;
                ensure(s <= store.space_bound(), || format!("reduction s = {s}"))?;
                stores += 1;
                let (_, max_probes) = check_all_pairs(&g)?;
                ensure(max_probes <= 2 * (d as u64 + 1) + 2, || {
                    format!("reduction query used {max_probes} probes")
                })?;
                queries += 1;
            }
        }
        Ok(format!(
            "{stores} stores, {queries} query checks; worst s / bound = {worst_space:.3}"
        ))
    });
}

#[test]
fn ac7_rank_certificates_exhaustive() {
    criterion(7, "rank certificate soundness/completeness", Some(Duration::from_secs(10)), || {
        let results: Vec<Result<u64, String>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (1u64..=16)
                .map(|universe| scope.spawn(move || check_universe(universe)))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut verifications = 0;
        for r in results {
            verifications += r?;
        }
        Ok(format!("{verifications} verifier calls, 0 wrong ranks"))
    });
}

fn check_universe(universe: u64) -> Result<u64, String> {
    let mut calls = 0;
    for mask in 0u32..(1 << universe) {
        if mask.count_ones() > 8 {
            continue;
        }
        let elems: Vec<u64> = (0..universe).filter(|&e| mask >> e & 1 == 1).collect();
        let table = RankTable::build(&RankInstance::new(universe, elems.clone()).unwrap(), 8)
            .map_err(|e| e.to_string())?;
        let verifier = table.verifier();
        let n = elems.len();
        let mut subsets: Vec<Vec<usize>> = vec![vec![]];
        for i in 1..=n {
            subsets.push(vec![i]);
            for j in i + 1..=n {
                subsets.push(vec![i, j]);
            }
        }
        let probe_sets: Vec<ProbeSet> =
            subsets.iter().map(|p| table.table().probe(p).unwrap()).collect();
        for x in 0..universe {
            let truth = elems.iter().filter(|&&e| e <= x).count();
            for probes in &probe_sets {
                calls += 1;
                if let Verdict::Accept(r) = verifier.verify(&x, probes) {
                    ensure(r == truth, || format!("S={elems:?} x={x} {probes:?} gave {r}"))?;
                }
            }
            let proof = table.prove(x).unwrap();
            ensure(proof.len() <= 2, || "certificate larger than 2".into())?;
            let got = verifier.verify(&x, &table.table().probe(&proof).unwrap());
            ensure(got == Verdict::Accept(truth), || {
                format!("S={elems:?} x={x}: prover set gave {got:?}")
            })?;
        }
    }
    Ok(calls)
}

#[test]
fn ac8_unique_paths() {
    criterion(8, "path uniqueness b=2 d<=3", None, || {
        for d in 1..=3u32 {
            let shape = ButterflyShape::new(2, d).unwrap();
            let n = shape.nodes_per_layer() as usize;
            let edges: Vec<_> = shape.edges().collect();
            for source in 0..n {
                // count[v] = number of paths source -> v; keep every path
                let mut paths: Vec<Vec<Vec<u64>>> = vec![Vec::new(); n];
                paths[source] = vec![vec![source as u64]];
                for layer in 0..d {
                    let mut next: Vec<Vec<Vec<u64>>> = vec![Vec::new(); n];
                    for e in edges.iter().filter(|e| e.layer == layer) {
                        for p in &paths[e.lower as usize] {
                            let mut q = p.clone();
                            q.push(e.upper);
                            next[e.upper as usize].push(q);
                        }
                    }
                    paths = next;
                }
                for (sink, found) in paths.iter().enumerate() {
                    ensure(found.len() == 1, || {
                        format!("d={d} {source}->{sink}: {} paths", found.len())
                    })?;
                    let unique = shape.unique_path(source as u64, sink as u64).unwrap();
                    let nodes: Vec<u64> = std::iter::once(source as u64)
                        .chain(unique.iter().map(|e| e.upper))
                        .collect();
                    ensure(nodes == found[0], || format!("d={d} {source}->{sink} differs"))?;
                }
            }
        }
        Ok("exactly one path per pair for d = 1, 2, 3, equal to unique_path".into())
    });
}

#[test]
fn ac9_bench_report() {
    criterion(9, "bench CSV sanity", None, || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let path = dir.path().join("bench.csv");
        let status = Command::new(env!("CARGO_BIN_EXE_cellprobe"))
            .args(["bench", "--degree", "2", "--depth", "1,2,3", "--trials", "5", "--seed", "9"])
            .arg("--out")
            .arg(&path)
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("bench exited with {status}"))?;
        let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
        ensure(text.lines().next() == Some(BENCH_HEADER), || "header".into())?;
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut rows = 0;
        let mut depths = BTreeSet::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            ensure(rec.len() == 8, || format!("row has {} fields", rec.len()))?;
            let num = |i: usize| rec[i].parse::<u64>().map_err(|e| format!("{e}: {:?}", &rec[i]));
            let (b, d, n, s, w, t_max) = (num(0)?, num(1)?, num(2)?, num(4)?, num(5)?, num(6)?);
            num(3)?;
            ensure(b == 2, || "degree".into())?;
            depths.insert(d);
            ensure(t_max <= 2 * (d + 1) + 2, || format!("t_max {t_max} at d={d}"))?;
            let expected = bound_curve(n, s as usize, w as u32);
            match (expected, &rec[7]) {
                (None, "") => {}
                (Some(v), field) => {
                    let got: f64 = field.parse().map_err(|_| format!("bound {field:?}"))?;
                    let direct = (n as f64).log2() / ((s * w) as f64 / n as f64).log2();
                    ensure((got - direct).abs() <= 1e-9 && (v - direct).abs() <= 1e-9, || {
                        format!("bound {got} vs {direct}")
                    })?;
                }
                (None, field) => return Err(format!("unexpected bound {field:?}")),
            }
            rows += 1;
        }
        ensure(rows == 15, || format!("{rows} rows"))?;
        ensure(depths == BTreeSet::from([1, 2, 3]), || format!("depths {depths:?}"))?;
        Ok(format!("{rows} rows, all within 2(d+1)+2 probes"))
    });
}
