use std::collections::BTreeSet;

use super::tree::*;

/// A label path; edge kinds are not part of it.
pub type LabelPath = Vec<String>;

pub fn path_key(p: &[impl AsRef<str>]) -> String {
    p.iter().map(|s| s.as_ref()).collect::<Vec<_>>().join(".")
}

/// All node labels, keyword leaves included. Value predicate constants are
/// not labels.
pub fn labels(p: &JoinedTreePattern) -> BTreeSet<String> {
    p.patterns().iter().flat_map(|t| t.nodes().iter().map(|n| n.label.clone())).collect()
}

/// Labels of annotated nodes plus keyword leaves directly under an
/// annotated node.
pub fn annotated_labels(p: &JoinedTreePattern) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for t in p.patterns() {
        for n in t.nodes() {
            if !n.annotations.is_empty() {
                out.insert(n.label.clone());
            } else if n.test == NodeTest::Keyword {
                if let Some(par) = n.parent {
                    if !t.node(par).annotations.is_empty() {
                        out.insert(n.label.clone());
                    }
                }
            }
        }
    }
    out
}

fn owned(p: Vec<&str>) -> LabelPath {
    p.into_iter().map(str::to_string).collect()
}

/// LP: root-to-leaf label paths, unioned over components.
pub fn leaf_paths(p: &JoinedTreePattern) -> BTreeSet<LabelPath> {
    let mut out = BTreeSet::new();
    for t in p.patterns() {
        for (i, n) in t.nodes().iter().enumerate() {
            if n.children.is_empty() {
                out.insert(owned(t.path_to(i)));
            }
        }
    }
    out
}

/// RP: rooted paths ending at an annotated node.
pub fn return_paths(p: &JoinedTreePattern) -> BTreeSet<LabelPath> {
    let mut out = BTreeSet::new();
    for t in p.patterns() {
        for i in t.annotated() {
            out.insert(owned(t.path_to(i)));
        }
    }
    out
}

/// Every non-empty subsequence of `p`, in order.
pub fn subsequences(p: &[String]) -> BTreeSet<LabelPath> {
    assert!(p.len() < 32, "path too long for subsequence enumeration");
    let mut out = BTreeSet::new();
    for mask in 1u32..(1u32 << p.len()) {
        out.insert((0..p.len()).filter(|i| mask & (1 << i) != 0).map(|i| p[i].clone()).collect());
    }
    out
}

/// SP: all non-empty sub-paths of some leaf path.
pub fn sub_paths(q: &JoinedTreePattern) -> BTreeSet<LabelPath> {
    leaf_paths(q).iter().flat_map(|p| subsequences(p)).collect()
}

/// Height in edges of the tallest component.
pub fn height(q: &JoinedTreePattern) -> usize {
    q.patterns().iter().flat_map(|t| t.nodes().iter().map(|n| n.depth)).max().unwrap_or(0)
}

/// Number of leaves over all components.
pub fn leaf_count(q: &JoinedTreePattern) -> usize {
    q.patterns().iter().map(|t| t.nodes().iter().filter(|n| n.children.is_empty()).count()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::literal::jp;

    fn keys(s: BTreeSet<LabelPath>) -> Vec<String> {
        s.iter().map(|p| path_key(p)).collect()
    }

    #[test]
    fn single_node() {
        let a = jp("//a[ID]");
        assert_eq!(labels(&a).into_iter().collect::<Vec<_>>(), ["a"]);
        assert_eq!(keys(leaf_paths(&a)), ["a"]);
        assert_eq!(keys(return_paths(&a)), ["a"]);
        assert!(return_paths(&jp("//a/b")).is_empty());
    }

    #[test]
    fn sub_path_example() {
        assert_eq!(keys(sub_paths(&jp("//a/b"))), ["a", "a.b", "b"]);
        let s: Vec<String> = (0..5).map(|i| i.to_string()).collect();
        assert_eq!(subsequences(&s).len(), 31);
    }

    #[test]
    fn keyword_leaves_are_labels() {
        let v = jp("//bibliography//book[contains(.,'Databases')][ID]");
        let l: Vec<_> = labels(&v).into_iter().collect();
        assert_eq!(l, ["Databases", "bibliography", "book"]);
        assert!(annotated_labels(&v).contains("Databases"));
    }
}
