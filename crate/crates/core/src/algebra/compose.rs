//! Evaluation of joined tree patterns: each component is matched on its
//! own, with `val` added on value-join endpoints, then components are
//! combined by the value joins and projected to the visible columns.

use std::collections::HashSet;

use crate::extract::{match_many, Tuple};
use crate::pattern::{Annotation, JoinedTreePattern, NodeRef, TreePattern};
use crate::xml::Document;

/// Components extended with hidden `val` on every join endpoint.
pub fn extended_components(p: &JoinedTreePattern) -> Vec<TreePattern> {
    let mut comps: Vec<TreePattern> = p.patterns().to_vec();
    for &(a, b) in p.joins() {
        for r in [a, b] {
            comps[r.pattern].node_mut(r.node).annotations.insert(Annotation::Val);
        }
    }
    comps
}

/// Position of (node, ann) in a tuple of `t`.
pub fn cell_index(t: &TreePattern, node: usize, ann: Annotation) -> Option<usize> {
    let mut k = 0;
    for (i, n) in t.nodes().iter().enumerate() {
        for a in n.annotations.iter() {
            if i == node && a == ann {
                return Some(k);
            }
            k += 1;
        }
    }
    None
}

/// Combines per-component tuples (in extended-component schema) into
/// tuples of `p`'s visible schema, deduplicated.
pub fn compose(p: &JoinedTreePattern, parts: &[Vec<Tuple>]) -> Vec<Tuple> {
    let ext = extended_components(p);
    assert_eq!(parts.len(), ext.len(), "one stream per component");
    let key = |r: NodeRef| cell_index(&ext[r.pattern], r.node, Annotation::Val).expect("join endpoint carries val");
    // Joins checked once the later component is bound.
    let mut checks: Vec<Vec<(NodeRef, usize, NodeRef, usize)>> = vec![Vec::new(); ext.len()];
    for &(a, b) in p.joins() {
        let (x, y) = if a.pattern <= b.pattern { (a, b) } else { (b, a) };
        checks[y.pattern].push((x, key(x), y, key(y)));
    }
    let out_cols: Vec<(usize, usize)> = p
        .columns()
        .iter()
        .map(|c| (c.node.pattern, cell_index(&ext[c.node.pattern], c.node.node, c.ann).unwrap()))
        .collect();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut chosen: Vec<&Tuple> = Vec::with_capacity(ext.len());
    fn rec<'a>(
        i: usize,
        parts: &'a [Vec<Tuple>],
        checks: &[Vec<(NodeRef, usize, NodeRef, usize)>],
        out_cols: &[(usize, usize)],
        chosen: &mut Vec<&'a Tuple>,
        seen: &mut HashSet<Tuple>,
        out: &mut Vec<Tuple>,
    ) {
        if i == parts.len() {
            let t = Tuple(out_cols.iter().map(|&(c, k)| chosen[c].0[k].clone()).collect());
            if seen.insert(t.clone()) {
                out.push(t);
            }
            return;
        }
        for t in &parts[i] {
            let ok = checks[i].iter().all(|&(x, kx, _, ky)| {
                let left = if x.pattern == i { t } else { chosen[x.pattern] };
                left.0[kx].as_text() == t.0[ky].as_text()
            });
            if ok {
                chosen.push(t);
                rec(i + 1, parts, checks, out_cols, chosen, seen, out);
                chosen.pop();
            }
        }
    }
    rec(0, parts, &checks, &out_cols, &mut chosen, &mut seen, &mut out);
    out
}

/// Per-component tuples over a collection, documents in order.
pub fn component_streams(p: &JoinedTreePattern, docs: &[&Document]) -> Vec<Vec<Tuple>> {
    let ext = extended_components(p);
    let refs: Vec<&TreePattern> = ext.iter().collect();
    let mut parts = vec![Vec::new(); ext.len()];
    for d in docs {
        for (i, ts) in match_many(&refs, d).into_iter().enumerate() {
            parts[i].extend(ts);
        }
    }
    parts
}

/// p over a document collection, with set semantics.
pub fn evaluate(p: &JoinedTreePattern, docs: &[&Document]) -> Vec<Tuple> {
    compose(p, &component_streams(p, docs))
}
