//! The view-retrieval workload: a 30-node query, three variants and 360
//! embeddable views drawn from each.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dht::PeerAddr;
use crate::pattern::{embed, sub_paths, Axis, JoinedTreePattern, PatternNode, TreePattern, ViewDefinition};

pub const QUERY_NODES: usize = 30;
pub const QUERY_HEIGHT: usize = 5;
/// Sub-path sets of trees with distinct labels have odd size (the root
/// alone counts 1, every other chain end counts an even 2^depth), so 370
/// is out of reach; 373 is the nearest count a 30-node binary tree of
/// height 5 can have.
pub const TARGET_SUB_PATHS: usize = 373;
pub const VIEWS_PER_VARIANT: usize = 360;

/// Parent of each node, pre-order; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    pub parent: Vec<Option<usize>>,
}

impl Shape {
    pub fn depth(&self, i: usize) -> usize {
        let mut d = 0;
        let mut c = i;
        while let Some(p) = self.parent[c] {
            d += 1;
            c = p;
        }
        d
    }

    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        let mut c = b;
        while let Some(p) = self.parent[c] {
            if p == a {
                return true;
            }
            c = p;
        }
        false
    }

    fn children(&self, i: usize) -> Vec<usize> {
        (0..self.parent.len()).filter(|&c| self.parent[c] == Some(i)).collect()
    }

    /// `labels[i]` labels node `i`; every node returns its ID.
    pub fn pattern(&self, labels: &[String]) -> JoinedTreePattern {
        fn build(s: &Shape, labels: &[String], i: usize) -> PatternNode {
            s.children(i).into_iter().fold(PatternNode::new(labels[i].clone()).id(), |n, c| n.child(build(s, labels, c)))
        }
        JoinedTreePattern::single(TreePattern::new(Axis::Descendant, build(self, labels, 0)))
    }
}

/// Per-level node counts of binary trees with `n` nodes and `h + 1`
/// levels whose sub-path count (the sum of 2^depth over nodes) is `target`.
fn level_profiles(n: usize, h: usize, target: usize) -> Vec<Vec<usize>> {
    fn rec(levels: &mut Vec<usize>, n: usize, h: usize, target: usize, out: &mut Vec<Vec<usize>>) {
        let used: usize = levels.iter().sum();
        let weight: usize = levels.iter().enumerate().map(|(d, c)| c << d).sum();
        if levels.len() == h + 1 {
            if used == n && weight == target {
                out.push(levels.clone());
            }
            return;
        }
        if used >= n || weight >= target {
            return;
        }
        for c in 1..=(2 * levels[levels.len() - 1]).min(n - used) {
            levels.push(c);
            rec(levels, n, h, target, out);
            levels.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut vec![1], n, h, target, &mut out);
    out
}

/// A random tree with the given level counts, at most two children per
/// node, in pre-order.
fn random_shape<R: Rng>(rng: &mut R, levels: &[usize]) -> Shape {
    let mut parent = vec![None];
    let mut kids = vec![0usize];
    let mut prev = vec![0];
    for &c in &levels[1..] {
        let mut cur = Vec::with_capacity(c);
        for _ in 0..c {
            let open: Vec<usize> = prev.iter().copied().filter(|&p| kids[p] < 2).collect();
            let p = *open.choose(rng).unwrap();
            kids[p] += 1;
            cur.push(parent.len());
            parent.push(Some(p));
            kids.push(0);
        }
        prev = cur;
    }
    let n = parent.len();
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![0];
    while let Some(i) = stack.pop() {
        order.push(i);
        let mut cs: Vec<usize> = (0..n).filter(|&c| parent[c] == Some(i)).collect();
        cs.reverse();
        stack.extend(cs);
    }
    let mut pos = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        pos[i] = k;
    }
    Shape { parent: order.iter().map(|&i| parent[i].map(|p| pos[p])).collect() }
}

/// Labels for `positions` of `shape` taken from `labels` (given for the
/// same positions under the original assignment) so that no ancestor pair
/// of the original stays an ancestor pair: deeper labels move up.
fn scramble(shape: &Shape, positions: &[usize], labels: &[String]) -> Vec<String> {
    let mut by_old: Vec<usize> = (0..positions.len()).collect();
    by_old.sort_by_key(|&k| std::cmp::Reverse(shape.depth(positions[k])));
    let mut slots: Vec<usize> = (0..positions.len()).collect();
    slots.sort_by_key(|&k| shape.depth(positions[k]));
    let mut out = vec![String::new(); positions.len()];
    for (o, s) in by_old.into_iter().zip(slots) {
        out[s] = labels[o].clone();
    }
    out
}

#[derive(Debug, Clone)]
pub struct Exp8Family {
    pub shape: Shape,
    /// q, q', q'', q'''.
    pub queries: [JoinedTreePattern; 4],
    /// Index of the source query and the view.
    pub views: Vec<(usize, ViewDefinition)>,
    pub seed: u64,
}

impl Exp8Family {
    pub fn q(&self) -> &JoinedTreePattern {
        &self.queries[0]
    }

    pub fn view_defs(&self) -> Vec<ViewDefinition> {
        self.views.iter().map(|(_, v)| v.clone()).collect()
    }

    /// Views with an embedding into `q`.
    pub fn embeddable(&self) -> Vec<&ViewDefinition> {
        self.views.iter().map(|(_, v)| v).filter(|v| embed(&v.pattern, self.q()).is_some()).collect()
    }
}

/// A random view of 2 to 5 nodes embedding into the single-tree `q`.
fn random_view<R: Rng>(rng: &mut R, q: &TreePattern) -> JoinedTreePattern {
    let n = q.len();
    let roots: Vec<usize> = (0..n).filter(|&i| !q.node(i).children.is_empty()).collect();
    let r = *roots.choose(rng).unwrap();
    let below: Vec<usize> = (0..n).filter(|&j| q.is_ancestor(r, j)).collect();
    let k = rng.gen_range(2..=5.min(below.len() + 1));
    let mut chosen: Vec<usize> = below.choose_multiple(rng, k - 1).copied().collect();
    chosen.push(r);
    chosen.sort();
    let id_of = rng.gen_range(0..k);
    let ids: Vec<bool> = (0..k).map(|i| i == id_of || rng.gen_bool(0.3)).collect();
    fn build<R: Rng>(rng: &mut R, q: &TreePattern, chosen: &[usize], ids: &[bool], at: usize) -> PatternNode {
        let i = chosen[at];
        let mut node = PatternNode::new(q.node(i).label.clone());
        if ids[at] {
            node = node.id();
        }
        for (c_at, &c) in chosen.iter().enumerate() {
            // Children in the view: chosen descendants with no chosen node between.
            let nearest = chosen.iter().rev().find(|&&a| q.is_ancestor(a, c)).copied();
            if nearest != Some(i) {
                continue;
            }
            let sub = build(rng, q, chosen, ids, c_at);
            node = if q.node(c).parent == Some(i) && rng.gen_bool(0.5) { node.child(sub) } else { node.desc(sub) };
        }
        node
    }
    JoinedTreePattern::single(TreePattern::new(Axis::Descendant, build(rng, q, &chosen, &ids, 0)))
}

pub fn gen_exp8_family(seed: u64) -> Exp8Family {
    gen_exp8_family_with(seed, TARGET_SUB_PATHS, VIEWS_PER_VARIANT, 250)
}

/// The query has exactly `target` leaf sub-paths.
///
/// # Panics
/// If no 30-node binary tree of height 5 has that many sub-paths.
pub fn gen_exp8_family_with(seed: u64, target: usize, per_variant: usize, peers: u32) -> Exp8Family {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<String> = (1..=QUERY_NODES).map(|i| format!("a{i}")).collect();
    let profiles = level_profiles(QUERY_NODES, QUERY_HEIGHT, target);
    assert!(!profiles.is_empty(), "no query shape has {target} sub-paths");
    let levels = profiles.choose(&mut rng).unwrap().clone();
    let shape = random_shape(&mut rng, &levels);
    debug_assert_eq!(sub_paths(&shape.pattern(&a)).len(), target);
    let half = QUERY_NODES / 2;
    let all: Vec<usize> = (0..QUERY_NODES).collect();
    let q1_labels = scramble(&shape, &all, &a);
    let mut q2_labels = a.clone();
    let second: Vec<usize> = (half..QUERY_NODES).collect();
    q2_labels.splice(half.., scramble(&shape, &second, &a[half..]));
    let mut q3_labels = a.clone();
    for (k, l) in q3_labels[half..].iter_mut().enumerate() {
        *l = format!("b{}", k + 1);
    }
    let queries = [shape.pattern(&a), shape.pattern(&q1_labels), shape.pattern(&q2_labels), shape.pattern(&q3_labels)];
    let mut views = Vec::with_capacity(4 * per_variant);
    for (qi, q) in queries.iter().enumerate() {
        for k in 0..per_variant {
            let p = random_view(&mut rng, q.pattern(0));
            assert!(embed(&p, q).is_some(), "generated view does not embed");
            let holder = PeerAddr(rng.gen_range(0..peers));
            views.push((qi, ViewDefinition::new(format!("q{qi}.v{k}"), p, holder)));
        }
    }
    Exp8Family { shape, queries, views, seed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{height, labels};

    #[test]
    fn family_shape() {
        let f = gen_exp8_family(3);
        assert_eq!(f.views.len(), 1440);
        assert_eq!(height(f.q()), 5);
        assert_eq!(labels(f.q()).len(), 30);
        assert_eq!(sub_paths(f.q()).len(), TARGET_SUB_PATHS);
        assert!(TARGET_SUB_PATHS <= crate::pattern::leaf_count(f.q()) << height(f.q()));
        assert!(f.views.iter().all(|(_, v)| (2..=5).contains(&v.pattern.size())));
        assert!(f.shape.parent.iter().enumerate().all(|(i, _)| f.shape.children(i).len() <= 2));
        let q3 = labels(&f.queries[3]);
        assert!((1..=15).all(|i| q3.contains(&format!("b{i}")) && q3.contains(&format!("a{i}"))));
    }

    #[test]
    fn variants_disagree_on_structure() {
        let f = gen_exp8_family(3);
        let pos = |q: &JoinedTreePattern, l: &str| q.pattern(0).nodes().iter().position(|n| n.label == l).unwrap();
        let q = f.q();
        for i in 1..=30 {
            for j in 1..=30 {
                let (li, lj) = (format!("a{i}"), format!("a{j}"));
                if !q.pattern(0).is_ancestor(pos(q, &li), pos(q, &lj)) {
                    continue;
                }
                let q1 = &f.queries[1];
                assert!(!q1.pattern(0).is_ancestor(pos(q1, &li), pos(q1, &lj)), "{li} {lj}");
                if i > 15 && j > 15 {
                    let q2 = &f.queries[2];
                    assert!(!q2.pattern(0).is_ancestor(pos(q2, &li), pos(q2, &lj)), "{li} {lj}");
                }
            }
        }
        // q'' keeps the first half in place.
        for i in 0..15 {
            assert_eq!(f.queries[2].pattern(0).node(i).label, q.pattern(0).node(i).label);
        }
    }

    #[test]
    fn even_counts_are_unreachable() {
        assert!(level_profiles(QUERY_NODES, QUERY_HEIGHT, 370).is_empty());
        assert_eq!(level_profiles(QUERY_NODES, QUERY_HEIGHT, 373), vec![vec![1, 2, 4, 8, 12, 3]]);
    }

    #[test]
    fn deterministic() {
        let a = gen_exp8_family(11);
        let b = gen_exp8_family(11);
        assert_eq!(a.queries, b.queries);
        assert_eq!(a.view_defs(), b.view_defs());
    }
}
