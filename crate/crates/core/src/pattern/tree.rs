use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    Child,
    Descendant,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Child => "/",
            Axis::Descendant => "//",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Annotation {
    Id,
    Val,
    Cont,
}

impl Annotation {
    pub const ALL: [Annotation; 3] = [Annotation::Id, Annotation::Val, Annotation::Cont];

    pub fn as_str(self) -> &'static str {
        match self {
            Annotation::Id => "ID",
            Annotation::Val => "val",
            Annotation::Cont => "cont",
        }
    }

    pub fn parse(s: &str) -> Option<Annotation> {
        match s {
            "ID" => Some(Annotation::Id),
            "val" => Some(Annotation::Val),
            "cont" => Some(Annotation::Cont),
            _ => None,
        }
    }

    fn bit(self) -> u8 {
        match self {
            Annotation::Id => 1,
            Annotation::Val => 2,
            Annotation::Cont => 4,
        }
    }
}

/// Subset of {ID, val, cont}.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Annotations(u8);

impl Annotations {
    pub const NONE: Annotations = Annotations(0);

    pub fn of(list: &[Annotation]) -> Self {
        let mut a = Annotations::NONE;
        for &x in list {
            a.insert(x);
        }
        a
    }

    pub fn has(self, a: Annotation) -> bool {
        self.0 & a.bit() != 0
    }

    pub fn insert(&mut self, a: Annotation) {
        self.0 |= a.bit();
    }

    pub fn remove(&mut self, a: Annotation) {
        self.0 &= !a.bit();
    }

    pub fn union(self, o: Annotations) -> Annotations {
        Annotations(self.0 | o.0)
    }

    pub fn contains_all(self, o: Annotations) -> bool {
        self.0 & o.0 == o.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Annotation> {
        Annotation::ALL.into_iter().filter(move |a| self.has(*a))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_bits(b: u8) -> Option<Self> {
        (b & !7 == 0).then_some(Annotations(b))
    }
}

impl fmt::Debug for Annotations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<_> = self.iter().map(|a| a.as_str()).collect();
        write!(f, "{{{}}}", v.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeTest {
    /// Element or attribute (labels starting with `@`).
    Element,
    /// `contains(., w)`: matched by a text descendant holding token w.
    Keyword,
}

/// Recursive builder form of a pattern node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternNode {
    pub label: String,
    pub test: NodeTest,
    pub annotations: Annotations,
    pub value_predicate: Option<String>,
    pub children: Vec<(Axis, PatternNode)>,
}

impl PatternNode {
    pub fn new(label: impl Into<String>) -> Self {
        PatternNode {
            label: label.into(),
            test: NodeTest::Element,
            annotations: Annotations::NONE,
            value_predicate: None,
            children: Vec::new(),
        }
    }

    pub fn keyword(word: impl Into<String>) -> Self {
        PatternNode { test: NodeTest::Keyword, ..PatternNode::new(word) }
    }

    pub fn ann(mut self, a: Annotation) -> Self {
        self.annotations.insert(a);
        self
    }

    pub fn id(self) -> Self {
        self.ann(Annotation::Id)
    }

    pub fn val(self) -> Self {
        self.ann(Annotation::Val)
    }

    pub fn cont(self) -> Self {
        self.ann(Annotation::Cont)
    }

    pub fn eq_const(mut self, c: impl Into<String>) -> Self {
        self.value_predicate = Some(c.into());
        self
    }

    pub fn child(mut self, n: PatternNode) -> Self {
        self.children.push((Axis::Child, n));
        self
    }

    pub fn desc(mut self, n: PatternNode) -> Self {
        self.children.push((Axis::Descendant, n));
        self
    }

    pub fn contains(self, word: impl Into<String>) -> Self {
        self.desc(PatternNode::keyword(word))
    }
}

/// One node of a [`TreePattern`] arena.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PNode {
    pub label: String,
    pub test: NodeTest,
    pub annotations: Annotations,
    pub value_predicate: Option<String>,
    pub parent: Option<usize>,
    /// Edge from the parent; for the root, the axis from the document root.
    pub axis: Axis,
    pub children: Vec<usize>,
    pub depth: usize,
}

/// A tree pattern stored as a pre-order arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreePattern {
    nodes: Vec<PNode>,
}

impl TreePattern {
    pub fn new(root_axis: Axis, root: PatternNode) -> Self {
        fn walk(n: PatternNode, axis: Axis, parent: Option<usize>, depth: usize, out: &mut Vec<PNode>) -> usize {
            let idx = out.len();
            out.push(PNode {
                label: n.label,
                test: n.test,
                annotations: n.annotations,
                value_predicate: n.value_predicate,
                parent,
                axis,
                children: Vec::new(),
                depth,
            });
            for (ax, c) in n.children {
                let ci = walk(c, ax, Some(idx), depth + 1, out);
                out[idx].children.push(ci);
            }
            idx
        }
        let mut nodes = Vec::new();
        walk(root, root_axis, None, 0, &mut nodes);
        TreePattern { nodes }
    }

    /// `//root`.
    pub fn anywhere(root: PatternNode) -> Self {
        TreePattern::new(Axis::Descendant, root)
    }

    pub fn to_node(&self) -> PatternNode {
        fn build(t: &TreePattern, i: usize) -> PatternNode {
            let n = &t.nodes[i];
            PatternNode {
                label: n.label.clone(),
                test: n.test,
                annotations: n.annotations,
                value_predicate: n.value_predicate.clone(),
                children: n.children.iter().map(|&c| (t.nodes[c].axis, build(t, c))).collect(),
            }
        }
        build(self, 0)
    }

    pub fn root_axis(&self) -> Axis {
        self.nodes[0].axis
    }

    pub fn root(&self) -> &PNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[PNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &PNode {
        &self.nodes[i]
    }

    pub fn node_mut(&mut self, i: usize) -> &mut PNode {
        &mut self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Labels from the root down to node `i`.
    pub fn path_to(&self, i: usize) -> Vec<&str> {
        let mut p = Vec::new();
        let mut cur = Some(i);
        while let Some(c) = cur {
            p.push(self.nodes[c].label.as_str());
            cur = self.nodes[c].parent;
        }
        p.reverse();
        p
    }

    /// Strict ancestor test on arena indices.
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        let mut cur = self.nodes[b].parent;
        while let Some(c) = cur {
            if c == a {
                return true;
            }
            cur = self.nodes[c].parent;
        }
        false
    }

    pub fn annotated(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| !self.nodes[i].annotations.is_empty())
    }

    pub fn with_annotation(mut self, node: usize, a: Annotation) -> Self {
        self.nodes[node].annotations.insert(a);
        self
    }

    /// Same structure, annotations cleared.
    pub fn stripped(&self) -> TreePattern {
        let mut t = self.clone();
        for n in &mut t.nodes {
            n.annotations = Annotations::NONE;
        }
        t
    }
}

/// Node of a joined pattern: (component index, arena index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef {
    pub pattern: usize,
    pub node: usize,
}

impl NodeRef {
    pub fn new(pattern: usize, node: usize) -> Self {
        NodeRef { pattern, node }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Column {
    pub node: NodeRef,
    pub ann: Annotation,
    pub name: String,
}

/// Tree patterns connected by value-equality edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JoinedTreePattern {
    patterns: Vec<TreePattern>,
    joins: Vec<(NodeRef, NodeRef)>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PatternError {
    #[error("a joined pattern needs at least one tree pattern")]
    Empty,
    #[error("value join endpoint {0:?} is not a pattern node")]
    BadJoin(NodeRef),
}

impl JoinedTreePattern {
    pub fn new(patterns: Vec<TreePattern>, joins: Vec<(NodeRef, NodeRef)>) -> Result<Self, PatternError> {
        if patterns.is_empty() {
            return Err(PatternError::Empty);
        }
        for &(a, b) in &joins {
            for r in [a, b] {
                if r.pattern >= patterns.len() || r.node >= patterns[r.pattern].len() {
                    return Err(PatternError::BadJoin(r));
                }
            }
        }
        let mut joins: Vec<_> = joins.into_iter().filter(|(a, b)| a != b).map(|(a, b)| if a <= b { (a, b) } else { (b, a) }).collect();
        joins.sort();
        joins.dedup();
        Ok(JoinedTreePattern { patterns, joins })
    }

    pub fn single(p: TreePattern) -> Self {
        JoinedTreePattern { patterns: vec![p], joins: Vec::new() }
    }

    pub fn patterns(&self) -> &[TreePattern] {
        &self.patterns
    }

    pub fn pattern(&self, i: usize) -> &TreePattern {
        &self.patterns[i]
    }

    pub fn joins(&self) -> &[(NodeRef, NodeRef)] {
        &self.joins
    }

    pub fn node(&self, r: NodeRef) -> &PNode {
        self.patterns[r.pattern].node(r.node)
    }

    pub fn node_refs(&self) -> impl Iterator<Item = NodeRef> + '_ {
        self.patterns
            .iter()
            .enumerate()
            .flat_map(|(p, t)| (0..t.len()).map(move |n| NodeRef::new(p, n)))
    }

    pub fn size(&self) -> usize {
        self.patterns.iter().map(|p| p.len()).sum()
    }

    pub fn set_annotations(&mut self, r: NodeRef, a: Annotations) {
        self.patterns[r.pattern].node_mut(r.node).annotations = a;
    }

    /// Column stems: the label, with `_k` appended to the k-th repeat.
    pub fn stems(&self) -> Vec<Vec<String>> {
        let mut seen = std::collections::HashMap::<&str, usize>::new();
        let mut out = Vec::new();
        for p in &self.patterns {
            let mut v = Vec::new();
            for n in p.nodes() {
                let c = seen.entry(n.label.as_str()).or_insert(0);
                *c += 1;
                v.push(if *c == 1 { n.label.clone() } else { format!("{}_{}", n.label, c) });
            }
            out.push(v);
        }
        out
    }

    /// Output schema: annotated nodes, components in order, each in
    /// pre-order, ID before val before cont.
    pub fn columns(&self) -> Vec<Column> {
        let stems = self.stems();
        let mut cols = Vec::new();
        for (pi, p) in self.patterns.iter().enumerate() {
            for (ni, n) in p.nodes().iter().enumerate() {
                for a in n.annotations.iter() {
                    cols.push(Column {
                        node: NodeRef::new(pi, ni),
                        ann: a,
                        name: format!("{}.{}", stems[pi][ni], a.as_str()),
                    });
                }
            }
        }
        cols
    }

    pub fn has_annotation(&self) -> bool {
        self.patterns.iter().any(|p| p.annotated().next().is_some())
    }
}

impl From<TreePattern> for JoinedTreePattern {
    fn from(p: TreePattern) -> Self {
        JoinedTreePattern::single(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arena_roundtrip() {
        let n = PatternNode::new("book").id().child(PatternNode::new("title").val()).desc(PatternNode::new("last").val());
        let t = TreePattern::anywhere(n.clone());
        assert_eq!(t.len(), 3);
        assert_eq!(t.node(2).axis, Axis::Descendant);
        assert_eq!(t.to_node(), n);
        assert_eq!(t.path_to(2), ["book", "last"]);
    }

    #[test]
    fn column_names() {
        let a = TreePattern::anywhere(PatternNode::new("a").id().child(PatternNode::new("a").val().cont()));
        let j = JoinedTreePattern::single(a);
        let names: Vec<_> = j.columns().into_iter().map(|c| c.name).collect();
        assert_eq!(names, ["a.ID", "a_2.val", "a_2.cont"]);
    }

    #[test]
    fn bad_join_rejected() {
        let a = TreePattern::anywhere(PatternNode::new("a").id());
        let e = JoinedTreePattern::new(vec![a], vec![(NodeRef::new(0, 0), NodeRef::new(0, 3))]);
        assert_eq!(e.unwrap_err(), PatternError::BadJoin(NodeRef::new(0, 3)));
    }
}
