//! Shared input builders for the criterion benchmarks.

use rand::Rng;

use paircalc_core::network::{Element, NetworkSpec};
use paircalc_core::pair::Pair;
use paircalc_core::rng;
use paircalc_core::tree::{NodeSpec, PartitionTree};

/// A balanced partition tree with the given branching factor and depth,
/// leaf weights drawn from a seeded stream.
pub fn layered_tree(branching: usize, depth: usize, seed: u64) -> PartitionTree {
    let mut rng = rng::seeded(seed);
    let mut nodes = Vec::new();
    let mut level = vec!["n0".to_string()];
    let mut next = 1usize;
    for d in 0..depth {
        let mut below = Vec::new();
        for id in &level {
            let children: Vec<String> = (0..branching)
                .map(|_| {
                    let child = format!("n{next}");
                    next += 1;
                    child
                })
                .collect();
            below.extend(children.clone());
            nodes.push(NodeSpec::Internal {
                id: id.clone(),
                children,
            });
        }
        if d + 1 == depth {
            for id in &below {
                nodes.push(NodeSpec::Leaf {
                    id: id.clone(),
                    weight: rng.random_range(0.1..10.0),
                });
            }
        }
        level = below;
    }
    PartitionTree::from_nodes(nodes, "n0").expect("layered tree is valid")
}

/// A chain of `stages` balanced interferometer stages: split, phase one
/// arm, recombine, repeat.
pub fn interferometer_chain(stages: usize) -> NetworkSpec {
    let t = Pair::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let r = Pair::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    let mut elements = vec![Element::source("src", 1.0)];
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut wire = "src".to_string();
    for s in 0..stages {
        let split = format!("split{s}");
        let arm = format!("arm{s}");
        let merge = format!("merge{s}");
        elements.push(Element::splitter(&split, vec![t, r]));
        elements.push(Element::phase(&arm, 0.1 + s as f64));
        elements.push(Element::combiner(&merge));
        edges.push((wire.clone(), split.clone()));
        edges.push((split.clone(), arm.clone()));
        edges.push((split.clone(), merge.clone()));
        edges.push((arm.clone(), merge.clone()));
        wire = merge;
    }
    elements.push(Element::detector("d"));
    edges.push((wire, "d".to_string()));
    let refs: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    NetworkSpec::new(elements, &refs)
}
