//! Single-pass stack-based twig matching over the pre-order arena.
//!
//! Each pattern node owns a stack of frames, one per open document node it
//! matched. A frame collects partial results per pattern child; when the
//! document node closes the frame is popped, combined, and its result is
//! handed to the parent pattern node's top frame. Results for descendant
//! edges are passed down to the next frame of the same pattern node on pop.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::pattern::{Annotation, Axis, NodeTest, TreePattern};
use crate::xml::{contains_token, tokens, Document, NodeKind};

use super::tuple::{Cell, Tuple};

/// Matches of one pattern: per embedding, the document nodes bound to the
/// pattern's annotated nodes (pattern pre-order).
type Targets = Vec<u32>;

struct Frame {
    doc: u32,
    acc: Vec<Vec<Targets>>,
}

struct Prepared<'p> {
    t: &'p TreePattern,
    /// Position of each node among its parent's children.
    child_pos: Vec<usize>,
    /// Whether each node's subtree contains an annotated node.
    carries: Vec<bool>,
    live: bool,
}

/// Where root-axis steps are anchored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Context {
    /// `/a` is the document element, `//a` is any element.
    Document,
    /// `/a` is a child, `//a` a strict descendant, of this arena node.
    Node(u32),
}

/// (subtree end, node, pushed frames)
type OpenNode = (u32, u32, Vec<(usize, usize)>);

fn prepare<'p>(t: &'p TreePattern) -> Prepared<'p> {
    let n = t.len();
    let mut child_pos = vec![0; n];
    let mut carries = vec![false; n];
    for i in (0..n).rev() {
        let node = t.node(i);
        for (k, &c) in node.children.iter().enumerate() {
            child_pos[c] = k;
            carries[i] |= carries[c];
        }
        carries[i] |= !node.annotations.is_empty();
    }
    Prepared { t, child_pos, carries, live: true }
}

/// Evaluates every pattern in one traversal; returns raw targets per pattern
/// in no particular order.
pub fn match_targets(patterns: &[&TreePattern], d: &Document, ctx: Context) -> Vec<Vec<Targets>> {
    let mut prep: Vec<Prepared> = patterns.iter().map(|t| prepare(t)).collect();
    let mut by_sym: HashMap<u32, Vec<(usize, usize)>> = HashMap::new();
    let mut by_word: HashMap<&str, Vec<(usize, usize)>> = HashMap::new();
    for (pi, p) in prep.iter_mut().enumerate() {
        for (ni, n) in p.t.nodes().iter().enumerate() {
            match n.test {
                NodeTest::Element => match d.symbol(&n.label) {
                    Some(s) => by_sym.entry(s).or_default().push((pi, ni)),
                    None => p.live = false,
                },
                NodeTest::Keyword => by_word.entry(n.label.as_str()).or_default().push((pi, ni)),
            }
        }
    }
    for list in by_sym.values_mut() {
        list.retain(|&(pi, _)| prep[pi].live);
    }
    for list in by_word.values_mut() {
        list.retain(|&(pi, _)| prep[pi].live);
    }
    let mut stacks: Vec<Vec<Vec<Frame>>> = prep.iter().map(|p| (0..p.t.len()).map(|_| Vec::new()).collect()).collect();
    let mut out: Vec<Vec<Targets>> = vec![Vec::new(); patterns.len()];
    let (lo, hi) = match ctx {
        Context::Document => (0u32, d.len() as u32),
        Context::Node(c) => (c + 1, d.subtree_end(c)),
    };
    // Open document nodes that pushed frames: (subtree end, node, pushed).
    let mut open: Vec<OpenNode> = Vec::new();
    let mut eligible: Vec<(usize, usize)> = Vec::new();
    let any_words = !by_word.is_empty();

    let is_eligible = |stacks: &Vec<Vec<Vec<Frame>>>, pi: usize, ni: usize, i: u32| -> bool {
        let t = prep[pi].t;
        let node = t.node(ni);
        match node.parent {
            None => match (ctx, node.axis) {
                (Context::Document, Axis::Child) => i == 0,
                (Context::Document, Axis::Descendant) => true,
                (Context::Node(c), Axis::Child) => d.parent_of(i) == Some(c),
                (Context::Node(_), Axis::Descendant) => true,
            },
            Some(pp) => {
                let st = &stacks[pi][pp];
                match node.axis {
                    Axis::Descendant => !st.is_empty(),
                    Axis::Child => st.last().is_some_and(|f| Some(f.doc) == d.parent_of(i)),
                }
            }
        }
    };

    for i in lo..=hi {
        while let Some(&(end, _, _)) = open.last() {
            if end > i && i < hi {
                break;
            }
            let (_, node, pushed) = open.pop().unwrap();
            close(&prep, &mut stacks, &mut out, d, node, pushed);
        }
        if i == hi {
            break;
        }
        match d.kind_of(i) {
            NodeKind::Element | NodeKind::Attribute => {
                let Some(list) = d.node_symbol(i).and_then(|s| by_sym.get(&s)) else { continue };
                eligible.clear();
                for &(pi, ni) in list {
                    if is_eligible(&stacks, pi, ni, i) {
                        eligible.push((pi, ni));
                    }
                }
                if eligible.is_empty() {
                    continue;
                }
                for &(pi, ni) in &eligible {
                    let nk = prep[pi].t.node(ni).children.len();
                    stacks[pi][ni].push(Frame { doc: i, acc: vec![Vec::new(); nk] });
                }
                open.push((d.subtree_end(i), i, eligible.clone()));
            }
            NodeKind::Text => {
                if !any_words {
                    continue;
                }
                let text = d.text_of(i).unwrap_or("");
                let mut seen = HashSet::new();
                for w in tokens(text) {
                    if !seen.insert(w) {
                        continue;
                    }
                    let Some(list) = by_word.get(w) else { continue };
                    for &(pi, ni) in list {
                        if !is_eligible(&stacks, pi, ni, i) {
                            continue;
                        }
                        let p = &prep[pi];
                        let node = p.t.node(ni);
                        let r = if node.annotations.is_empty() { vec![] } else { vec![i] };
                        deliver(p, &mut stacks[pi], &mut out[pi], ni, vec![r]);
                    }
                }
            }
        }
    }
    out
}

fn deliver(p: &Prepared, stacks: &mut [Vec<Frame>], out: &mut Vec<Targets>, ni: usize, results: Vec<Targets>) {
    if results.is_empty() {
        return;
    }
    match p.t.node(ni).parent {
        None => out.extend(results),
        Some(pp) => {
            let top = stacks[pp].last_mut().expect("eligible node has a parent frame");
            let slot = &mut top.acc[p.child_pos[ni]];
            if !p.carries[ni] {
                if slot.is_empty() {
                    slot.push(Vec::new());
                }
            } else {
                slot.extend(results);
            }
        }
    }
}

fn close(
    prep: &[Prepared],
    stacks: &mut [Vec<Vec<Frame>>],
    out: &mut [Vec<Targets>],
    d: &Document,
    node: u32,
    pushed: Vec<(usize, usize)>,
) {
    let frames: Vec<(usize, usize, Frame)> =
        pushed.into_iter().map(|(pi, ni)| (pi, ni, stacks[pi][ni].pop().expect("pushed frame"))).collect();
    let mut sv: Option<String> = None;
    for (pi, ni, mut frame) in frames {
        let p = &prep[pi];
        let pn = p.t.node(ni);
        let ok = frame.acc.iter().all(|a| !a.is_empty())
            && match &pn.value_predicate {
                None => true,
                Some(c) => sv.get_or_insert_with(|| d.node(node).string_value()) == c,
            };
        let results = if ok {
            let own: Targets = if pn.annotations.is_empty() { vec![] } else { vec![node] };
            let mut cur = vec![own];
            for (k, acc) in frame.acc.iter_mut().enumerate() {
                if p.carries[pn.children[k]] {
                    acc.sort_unstable();
                    acc.dedup();
                    let mut next = Vec::with_capacity(cur.len() * acc.len());
                    for r in &cur {
                        for c in acc.iter() {
                            let mut x = r.clone();
                            x.extend_from_slice(c);
                            next.push(x);
                        }
                    }
                    cur = next;
                }
            }
            cur
        } else {
            Vec::new()
        };
        // Descendant-edge results also hold for the next frame down.
        if let Some(below) = stacks[pi][ni].last_mut() {
            for (k, acc) in frame.acc.into_iter().enumerate() {
                if p.t.node(pn.children[k]).axis == Axis::Descendant && !acc.is_empty() {
                    if p.carries[pn.children[k]] {
                        below.acc[k].extend(acc);
                    } else if below.acc[k].is_empty() {
                        below.acc[k].push(Vec::new());
                    }
                }
            }
        }
        deliver(p, &mut stacks[pi], &mut out[pi], ni, results);
    }
}

/// Cells for one embedding, in schema order.
struct CellMaker<'d> {
    d: &'d Document,
    ids: HashMap<u32, crate::xml::StructuralId>,
    vals: HashMap<u32, Arc<str>>,
    conts: HashMap<u32, Arc<str>>,
}

impl<'d> CellMaker<'d> {
    fn new(d: &'d Document) -> Self {
        CellMaker { d, ids: HashMap::new(), vals: HashMap::new(), conts: HashMap::new() }
    }

    fn cell(&mut self, n: u32, a: Annotation) -> Cell {
        let d = self.d;
        match a {
            Annotation::Id => Cell::Id(self.ids.entry(n).or_insert_with(|| d.node(n).id()).clone()),
            Annotation::Val => Cell::Val(self.vals.entry(n).or_insert_with(|| Arc::from(d.node(n).string_value())).clone()),
            Annotation::Cont => Cell::Cont(self.conts.entry(n).or_insert_with(|| Arc::from(d.node(n).serialize())).clone()),
        }
    }
}

/// Orders raw targets, builds cells, and drops duplicates on the projected
/// columns keeping the first occurrence.
pub fn finish(t: &TreePattern, d: &Document, mut targets: Vec<Targets>) -> Vec<Tuple> {
    let annotated: Vec<usize> = t.annotated().collect();
    let first_id = annotated.iter().position(|&n| t.node(n).annotations.has(Annotation::Id));
    targets.sort_unstable_by(|a, b| match first_id {
        Some(k) => a[k].cmp(&b[k]).then_with(|| a.cmp(b)),
        None => a.cmp(b),
    });
    targets.dedup();
    let all_ids = annotated.iter().all(|&n| t.node(n).annotations.has(Annotation::Id));
    let mut maker = CellMaker::new(d);
    let mut seen = HashSet::new();
    let mut res = Vec::with_capacity(targets.len());
    for tg in targets {
        let mut cells = Vec::new();
        for (k, &pn) in annotated.iter().enumerate() {
            for a in t.node(pn).annotations.iter() {
                cells.push(maker.cell(tg[k], a));
            }
        }
        let tup = Tuple(cells);
        if all_ids || seen.insert(tup.clone()) {
            res.push(tup);
        }
    }
    res
}

/// v(d) for one tree pattern.
pub fn match_pattern(v: &TreePattern, d: &Document) -> Vec<Tuple> {
    match_many(&[v], d).pop().unwrap()
}

/// v(d) for several patterns, sharing one traversal.
pub fn match_many(vs: &[&TreePattern], d: &Document) -> Vec<Vec<Tuple>> {
    let raw = match_targets(vs, d, Context::Document);
    vs.iter().zip(raw).map(|(v, r)| finish(v, d, r)).collect()
}

/// Matches `v` below arena node `ctx` (used by navigation over fragments).
pub fn match_below(v: &TreePattern, d: &Document, ctx: u32) -> Vec<Tuple> {
    let raw = match_targets(&[v], d, Context::Node(ctx)).pop().unwrap();
    finish(v, d, raw)
}

/// True when the keyword predicate holds somewhere below `n`.
pub fn has_keyword_below(d: &Document, n: u32, w: &str) -> bool {
    (n + 1..d.subtree_end(n)).any(|i| d.kind_of(i) == NodeKind::Text && contains_token(d.text_of(i).unwrap_or(""), w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::tp;

    fn doc(s: &str) -> Document {
        Document::parse_str(s, "d").unwrap()
    }

    fn paths(ts: &[Tuple]) -> Vec<Vec<Vec<u32>>> {
        ts.iter().map(|t| t.0.iter().map(|c| c.as_id().unwrap().path().to_vec()).collect()).collect()
    }

    #[test]
    fn two_children() {
        let r = match_pattern(&tp("//a[ID]/b[ID]"), &doc("<a><b/><b/></a>"));
        assert_eq!(paths(&r), vec![vec![vec![1], vec![1, 1]], vec![vec![1], vec![1, 2]]]);
    }

    #[test]
    fn nested_descendants() {
        let d = doc("<a><a><b/></a><b/></a>");
        let r = match_pattern(&tp("//a[ID]//b[ID]"), &d);
        assert_eq!(
            paths(&r),
            vec![vec![vec![1], vec![1, 1, 1]], vec![vec![1], vec![1, 2]], vec![vec![1, 1], vec![1, 1, 1]]]
        );
        let r = match_pattern(&tp("//a[ID]/b[ID]"), &d);
        assert_eq!(paths(&r).len(), 2);
    }

    #[test]
    fn predicates_keywords_values() {
        let d = doc("<r><book><title>Found. of Databases</title><year>1995</year></book><book><year>2008</year></book></r>");
        assert_eq!(match_pattern(&tp("//book[ID][year[='2008']]"), &d).len(), 1);
        assert_eq!(match_pattern(&tp("//book[ID][contains(.,'Databases')]"), &d).len(), 1);
        assert_eq!(match_pattern(&tp("//r[contains(.,'Databases')]/book[ID]"), &d).len(), 2);
        let v = match_pattern(&tp("//book/year[val]"), &d);
        assert_eq!(v, vec![Tuple(vec![Cell::val("1995")]), Tuple(vec![Cell::val("2008")])]);
        assert!(match_pattern(&tp("/book[ID]"), &d).is_empty());
        assert_eq!(match_pattern(&tp("/r[ID]"), &d).len(), 1);
    }

    #[test]
    fn projection_dedups() {
        let d = doc("<r><a><b>x</b><b>x</b></a></r>");
        assert_eq!(match_pattern(&tp("//a/b[val]"), &d).len(), 1);
        assert_eq!(match_pattern(&tp("//a[ID]/b"), &d).len(), 1);
        assert_eq!(match_pattern(&tp("//r//b[cont]"), &d).len(), 1);
    }

    #[test]
    fn many_equals_single() {
        let d = doc("<r><a><b/><c>t</c></a><a><c>u</c></a></r>");
        let ps = [tp("//a[ID]/c[val]"), tp("//r//b[ID]"), tp("//a[cont]"), tp("//zz[ID]")];
        let refs: Vec<&TreePattern> = ps.iter().collect();
        let many = match_many(&refs, &d);
        for (p, m) in ps.iter().zip(many) {
            assert_eq!(match_pattern(p, &d), m);
        }
    }

    #[test]
    fn below_context() {
        let d = doc("<book><author>a1</author><x><author>a2</author></x></book>");
        assert_eq!(match_below(&tp("//author[cont]"), &d, 0).len(), 2);
        assert_eq!(match_below(&tp("/author[cont]"), &d, 0).len(), 1);
        assert!(match_below(&tp("//book[ID]"), &d, 0).is_empty());
    }
}
