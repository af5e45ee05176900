//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vippy::algebra::extended_components;
use vippy::bench::gen::{random_document, RandomDocSpec};
use vippy::dht::{Dht, PeerAddr};
use vippy::extract::{match_pattern, Cell, Tuple};
use vippy::materialize::{CostModel, ReceivePolicy, SendPolicy, Simulation};
use vippy::pattern::{jp, Annotation, Annotations, Axis, JoinedTreePattern, NodeTest, PatternNode, TreePattern, ViewDefinition};
use vippy::xml::{is_ancestor, is_parent, tokens, Document, NodeKind, StructuralId, XmlNode};

fn node_ok(p: &vippy::pattern::PNode, n: &XmlNode<'_>) -> bool {
    let label_ok = match p.test {
        NodeTest::Element => n.kind() != NodeKind::Text && n.label() == p.label,
        NodeTest::Keyword => n.kind() == NodeKind::Text && tokens(n.label()).any(|t| t == p.label),
    };
    label_ok && p.value_predicate.as_ref().is_none_or(|c| &n.string_value() == c)
}

/// Enumerates every assignment of document nodes to pattern nodes, checks
/// edges with Dewey parent/ancestor tests, projects, sorts by the Dewey IDs
/// of the targets and removes duplicate projections.
pub fn brute_match(v: &TreePattern, d: &Document) -> Vec<Tuple> {
    let nodes: Vec<XmlNode> = d.nodes().collect();
    let ids: Vec<StructuralId> = nodes.iter().map(|n| n.id()).collect();
    let mut assign = vec![0usize; v.len()];
    let mut found: Vec<(Vec<StructuralId>, Vec<StructuralId>, Tuple)> = Vec::new();
    fn rec(
        v: &TreePattern,
        nodes: &[XmlNode],
        ids: &[StructuralId],
        k: usize,
        assign: &mut Vec<usize>,
        found: &mut Vec<(Vec<StructuralId>, Vec<StructuralId>, Tuple)>,
    ) {
        if k == v.len() {
            let mut cells = Vec::new();
            let mut targets = Vec::new();
            let mut first_id = None;
            for (pi, p) in v.nodes().iter().enumerate() {
                if p.annotations.is_empty() {
                    continue;
                }
                let n = &nodes[assign[pi]];
                targets.push(ids[assign[pi]].clone());
                for a in p.annotations.iter() {
                    if a == Annotation::Id && first_id.is_none() {
                        first_id = Some(ids[assign[pi]].clone());
                    }
                    cells.push(match a {
                        Annotation::Id => Cell::Id(ids[assign[pi]].clone()),
                        Annotation::Val => Cell::val(&n.string_value()),
                        Annotation::Cont => Cell::cont(&n.serialize()),
                    });
                }
            }
            let key = first_id.into_iter().collect();
            found.push((key, targets, Tuple(cells)));
            return;
        }
        let p = v.node(k);
        for (i, n) in nodes.iter().enumerate() {
            if !node_ok(p, n) {
                continue;
            }
            let edge_ok = match p.parent {
                None => p.axis == Axis::Descendant || ids[i].path() == [1],
                Some(par) => {
                    let a = &ids[assign[par]];
                    match p.axis {
                        Axis::Child => is_parent(a, &ids[i]),
                        Axis::Descendant => is_ancestor(a, &ids[i]),
                    }
                }
            };
            if edge_ok {
                assign[k] = i;
                rec(v, nodes, ids, k + 1, assign, found);
            }
        }
    }
    rec(v, &nodes, &ids, 0, &mut assign, &mut found);
    found.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    let mut seen = HashSet::new();
    found.into_iter().filter(|(_, _, t)| seen.insert(t.clone())).map(|(_, _, t)| t).collect()
}

/// Random pattern of 1..=max_nodes nodes over `labels`, with random axes,
/// annotations, occasional value predicates and keyword leaves.
pub fn random_pattern<R: Rng>(rng: &mut R, labels: &[&str], words: &[&str], max_nodes: usize) -> TreePattern {
    let n = rng.gen_range(1..=max_nodes);
    let mut parents = vec![None];
    for i in 1..n {
        parents.push(Some(rng.gen_range(0..i)));
    }
    let mut built: Vec<PatternNode> = (0..n)
        .map(|_| {
            let mut p = if rng.gen_bool(0.1) {
                PatternNode::keyword(*words.choose(rng).unwrap())
            } else {
                PatternNode::new(*labels.choose(rng).unwrap())
            };
            if p.test == NodeTest::Element {
                let mut a = Annotations::NONE;
                for x in Annotation::ALL {
                    if rng.gen_bool(0.3) {
                        a.insert(x);
                    }
                }
                p.annotations = a;
                if rng.gen_bool(0.1) {
                    p.value_predicate = Some(words.choose(rng).unwrap().to_string());
                }
            }
            p
        })
        .collect();
    // Keyword nodes must be leaves: re-hang their children on the root.
    for i in 1..n {
        let mut par = parents[i].unwrap();
        while built[par].test == NodeTest::Keyword {
            par = parents[par].unwrap_or(0);
            if par == 0 {
                break;
            }
        }
        parents[i] = Some(par);
    }
    if built[0].test == NodeTest::Keyword {
        built[0] = PatternNode::new(*labels.choose(rng).unwrap()).ann(Annotation::Id);
    }
    let axes: Vec<Axis> = (0..n).map(|_| if rng.gen_bool(0.5) { Axis::Child } else { Axis::Descendant }).collect();
    for i in (1..n).rev() {
        let child = std::mem::replace(&mut built[i], PatternNode::new("_"));
        let ax = if child.test == NodeTest::Keyword { Axis::Descendant } else { axes[i] };
        let p = parents[i].unwrap();
        built[p].children.insert(0, (ax, child));
    }
    let root_axis = if rng.gen_bool(0.8) { Axis::Descendant } else { Axis::Child };
    TreePattern::new(root_axis, built.swap_remove(0))
}

fn sorted(mut v: Vec<Tuple>) -> Vec<Tuple> {
    v.sort();
    v
}

/// Expected contents of each view stream: the union of per-document matches.
pub fn expected_streams(views: &[ViewDefinition], docs: &[Arc<Document>]) -> BTreeMap<String, Vec<Tuple>> {
    let mut out = BTreeMap::new();
    for v in views {
        for (i, c) in extended_components(&v.pattern).iter().enumerate() {
            let mut all = Vec::new();
            for d in docs {
                all.extend(match_pattern(c, d));
            }
            out.insert(v.stream_id(i), sorted(all));
        }
    }
    out
}

/// One randomized interleaving of view and document publications; checks
/// the stores against the union of per-document matches.
pub fn interleaving_case(seed: u64) -> Result<(), String> {
    let labels = ["a", "b", "c", "d"];
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let peers = rng.gen_range(2..8u32);
        let cost = CostModel { interval_us: 1_000_000, latency_us: rng.gen_range(1_000..50_000), ..CostModel::default() };
        let mut sim = Simulation::new(Dht::new(peers), cost, SendPolicy::default(), ReceivePolicy::default(), seed);
        let mut views = Vec::new();
        for k in 0..rng.gen_range(1..6) {
            let p = if rng.gen_bool(0.2) {
                jp("//a[ID]$x; //b[val]$y; $x=$y")
            } else {
                JoinedTreePattern::single(random_pattern(&mut rng, &labels, &["x"], 4))
            };
            let v = ViewDefinition::new(format!("v{k}"), p, PeerAddr(rng.gen_range(0..peers)));
            sim.schedule_view(rng.gen_range(0..5_000_000), v.clone());
            views.push(v);
        }
        let mut docs = Vec::new();
        for k in 0..rng.gen_range(1..8) {
            let spec = RandomDocSpec { max_nodes: 60, ..RandomDocSpec::default() };
            let d = Arc::new(Document::parse_str(&random_document(&mut rng, &spec), &format!("d{k}")).unwrap());
            sim.schedule_document(rng.gen_range(0..5_000_000), PeerAddr(rng.gen_range(0..peers)), d.clone());
            docs.push(d);
        }
        let (rep, stores) = sim.run();
        let expected = expected_streams(&views, &docs);
        for (sid, exp) in &expected {
            let got = stores.get(sid).map(|s| sorted(s.scan())).unwrap_or_default();
            if &got != exp {
                return Err(format!("seed {seed} stream {sid}: {} tuples stored, {} expected", got.len(), exp.len()));
            }
        }
        let mut pairs = rep.contributions.clone();
        let n = pairs.len();
        pairs.sort();
        pairs.dedup();
        if pairs.len() != n {
            return Err(format!("seed {seed}: a pair contributed twice"));
        }
        if rep.streams.iter().any(|s| s.duplicates > 0) {
            return Err(format!("seed {seed}: duplicate batches stored"));
        }
    }
    Ok(())
}

