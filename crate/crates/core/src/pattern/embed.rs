//! Homomorphisms from a view pattern into a query pattern.

use super::tree::*;

/// `mapping[view component][view node]` is the image in the query.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Embedding {
    pub mapping: Vec<Vec<NodeRef>>,
}

impl Embedding {
    pub fn image(&self, r: NodeRef) -> NodeRef {
        self.mapping[r.pattern][r.node]
    }
}

/// Union-find over query nodes linked by value joins, plus constant
/// predicates: two nodes are equal-valued if in one class or sharing `[=c]`.
struct ValueClasses {
    parent: Vec<usize>,
    offsets: Vec<usize>,
}

impl ValueClasses {
    fn new(q: &JoinedTreePattern) -> Self {
        let mut offsets = Vec::new();
        let mut total = 0;
        for t in q.patterns() {
            offsets.push(total);
            total += t.len();
        }
        let mut vc = ValueClasses { parent: (0..total).collect(), offsets };
        for &(a, b) in q.joins() {
            let (x, y) = (vc.flat(a), vc.flat(b));
            let (rx, ry) = (vc.find(x), vc.find(y));
            vc.parent[rx] = ry;
        }
        vc
    }

    fn flat(&self, r: NodeRef) -> usize {
        self.offsets[r.pattern] + r.node
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn equal(&mut self, q: &JoinedTreePattern, a: NodeRef, b: NodeRef) -> bool {
        if a == b {
            return true;
        }
        let (fa, fb) = (self.flat(a), self.flat(b));
        if self.find(fa) == self.find(fb) {
            return true;
        }
        match (&q.node(a).value_predicate, &q.node(b).value_predicate) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }
}

fn node_compatible(v: &PNode, q: &PNode) -> bool {
    v.label == q.label
        && v.test == q.test
        && match &v.value_predicate {
            None => true,
            Some(c) => q.value_predicate.as_deref() == Some(c.as_str()),
        }
}

/// Query nodes strictly below `x` (any edge kinds).
fn descendants(t: &TreePattern, x: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack: Vec<usize> = t.node(x).children.iter().rev().copied().collect();
    while let Some(n) = stack.pop() {
        out.push(n);
        stack.extend(t.node(n).children.iter().rev().copied());
    }
    out.sort();
    out
}

struct Search<'a> {
    v: &'a JoinedTreePattern,
    q: &'a JoinedTreePattern,
    classes: ValueClasses,
    mapping: Vec<Vec<NodeRef>>,
    limit: usize,
    out: Vec<Embedding>,
}

impl Search<'_> {
    fn candidates(&self, vp: usize, vn: usize) -> Vec<NodeRef> {
        let vt = self.v.pattern(vp);
        let node = vt.node(vn);
        let mut c = Vec::new();
        match node.parent {
            None => {
                for (qi, qt) in self.q.patterns().iter().enumerate() {
                    match node.axis {
                        Axis::Child => {
                            if qt.root_axis() == Axis::Child {
                                c.push(NodeRef::new(qi, 0));
                            }
                        }
                        Axis::Descendant => c.extend((0..qt.len()).map(|n| NodeRef::new(qi, n))),
                    }
                }
            }
            Some(par) => {
                let img = self.mapping[vp][par];
                let qt = self.q.pattern(img.pattern);
                match node.axis {
                    Axis::Child => c.extend(
                        qt.node(img.node)
                            .children
                            .iter()
                            .filter(|&&k| qt.node(k).axis == Axis::Child)
                            .map(|&k| NodeRef::new(img.pattern, k)),
                    ),
                    Axis::Descendant => {
                        c.extend(descendants(qt, img.node).into_iter().map(|k| NodeRef::new(img.pattern, k)))
                    }
                }
            }
        }
        c.retain(|&r| node_compatible(node, self.q.node(r)));
        c
    }

    fn joins_ok(&mut self) -> bool {
        for &(a, b) in self.v.joins() {
            let (ia, ib) = (self.mapping[a.pattern][a.node], self.mapping[b.pattern][b.node]);
            if !self.classes.equal(self.q, ia, ib) {
                return false;
            }
        }
        true
    }

    fn go(&mut self, vp: usize, vn: usize) {
        if self.out.len() >= self.limit {
            return;
        }
        if vp == self.v.patterns().len() {
            if self.joins_ok() {
                self.out.push(Embedding { mapping: self.mapping.clone() });
            }
            return;
        }
        if vn == self.v.pattern(vp).len() {
            return self.go(vp + 1, 0);
        }
        for c in self.candidates(vp, vn) {
            self.mapping[vp][vn] = c;
            self.go(vp, vn + 1);
            if self.out.len() >= self.limit {
                return;
            }
        }
    }
}

/// Up to `limit` embeddings, in a fixed backtracking order (view nodes in
/// pre-order, query candidates in component then pre-order).
pub fn embeddings(v: &JoinedTreePattern, q: &JoinedTreePattern, limit: usize) -> Vec<Embedding> {
    let mut s = Search {
        v,
        q,
        classes: ValueClasses::new(q),
        mapping: v.patterns().iter().map(|t| vec![NodeRef::new(0, 0); t.len()]).collect(),
        limit,
        out: Vec::new(),
    };
    s.go(0, 0);
    s.out
}

pub fn embed(v: &JoinedTreePattern, q: &JoinedTreePattern) -> Option<Embedding> {
    embeddings(v, q, 1).into_iter().next()
}

/// Re-checks label, edge and predicate conditions for a mapping.
pub fn is_valid_embedding(v: &JoinedTreePattern, q: &JoinedTreePattern, e: &Embedding) -> bool {
    let mut classes = ValueClasses::new(q);
    for (vp, t) in v.patterns().iter().enumerate() {
        if e.mapping.get(vp).map(|m| m.len()) != Some(t.len()) {
            return false;
        }
        for (vn, n) in t.nodes().iter().enumerate() {
            let img = e.mapping[vp][vn];
            if img.pattern >= q.patterns().len() || img.node >= q.pattern(img.pattern).len() {
                return false;
            }
            if !node_compatible(n, q.node(img)) {
                return false;
            }
            let qt = q.pattern(img.pattern);
            match n.parent {
                None => {
                    if n.axis == Axis::Child && (img.node != 0 || qt.root_axis() != Axis::Child) {
                        return false;
                    }
                }
                Some(par) => {
                    let pimg = e.mapping[vp][par];
                    if pimg.pattern != img.pattern {
                        return false;
                    }
                    let ok = match n.axis {
                        Axis::Child => qt.node(img.node).parent == Some(pimg.node) && qt.node(img.node).axis == Axis::Child,
                        Axis::Descendant => qt.is_ancestor(pimg.node, img.node),
                    };
                    if !ok {
                        return false;
                    }
                }
            }
        }
    }
    v.joins().iter().all(|&(a, b)| classes.equal(q, e.image(a), e.image(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::literal::jp;

    #[test]
    fn identity() {
        let p = jp("//a[ID]/b[val]//c; //d$x; //e$y; $x=$y");
        let e = embed(&p, &p).unwrap();
        for r in p.node_refs() {
            assert_eq!(e.image(r), r);
        }
    }

    #[test]
    fn edges() {
        let q = jp("//a/b//c");
        assert!(embed(&jp("//a//c"), &q).is_some());
        assert!(embed(&jp("//a/c"), &q).is_none());
        assert!(embed(&jp("//b"), &q).is_some());
        assert!(embed(&jp("/a"), &q).is_none());
        assert!(embed(&jp("/a"), &jp("/a/b")).is_some());
        assert!(embed(&jp("//a//b"), &jp("//a/b")).is_some());
        assert!(embed(&jp("//a/b"), &jp("//a//b")).is_none());
    }

    #[test]
    fn predicates() {
        assert!(embed(&jp("//a/b"), &jp("//a/b[='1']")).is_some());
        assert!(embed(&jp("//a/b[='1']"), &jp("//a/b[='1']")).is_some());
        assert!(embed(&jp("//a/b[='1']"), &jp("//a/b")).is_none());
        assert!(embed(&jp("//a/b[='1']"), &jp("//a/b[='2']")).is_none());
        assert!(embed(&jp("//a[contains(.,'w')]"), &jp("//a[b[contains(.,'w')]]")).is_some());
        assert!(embed(&jp("//a[contains(.,'w')]"), &jp("//a/b")).is_none());
    }

    #[test]
    fn value_joins() {
        let q = jp("//a/x$p; //b/x$q; //c/x$r; $p=$q, $q=$r");
        assert!(embed(&jp("//a/x$s; //c/x$t; $s=$t"), &q).is_some());
        let q2 = jp("//a/x$p; //b/x$q; //c/x; $p=$q");
        assert!(embed(&jp("//a/x$s; //c/x$t; $s=$t"), &q2).is_none());
        let q3 = jp("//a/x[='1']; //c/x[='1']");
        assert!(embed(&jp("//a/x$s; //c/x$t; $s=$t"), &q3).is_some());
    }

    #[test]
    fn embeddings_are_valid() {
        let q = jp("//a[//a[b]]/b//b");
        let v = jp("//a//b");
        let all = embeddings(&v, &q, 100);
        assert_eq!(all.len(), 4);
        assert!(all.iter().all(|e| is_valid_embedding(&v, &q, e)));
    }
}
