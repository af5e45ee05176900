use std::fmt;
use std::sync::Arc;

/// Dewey identifier: the path of 1-based child ordinals from the root
/// (the root element is `[1]`) plus the owning document.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StructuralId {
    doc: Arc<str>,
    path: Vec<u32>,
}

impl StructuralId {
    /// Panics if `path` is empty or contains a zero component.
    pub fn new(doc: impl Into<Arc<str>>, path: Vec<u32>) -> Self {
        assert!(!path.is_empty(), "empty Dewey path");
        assert!(path.iter().all(|&c| c >= 1), "Dewey components are 1-based");
        StructuralId { doc: doc.into(), path }
    }

    pub fn root(doc: impl Into<Arc<str>>) -> Self {
        StructuralId::new(doc, vec![1])
    }

    pub fn doc(&self) -> &str {
        &self.doc
    }

    pub fn doc_arc(&self) -> &Arc<str> {
        &self.doc
    }

    pub fn path(&self) -> &[u32] {
        &self.path
    }

    pub fn depth(&self) -> usize {
        self.path.len()
    }

    pub fn child(&self, ordinal: u32) -> Self {
        let mut path = self.path.clone();
        path.push(ordinal);
        StructuralId::new(self.doc.clone(), path)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.path.len() <= 1 {
            return None;
        }
        Some(StructuralId {
            doc: self.doc.clone(),
            path: self.path[..self.path.len() - 1].to_vec(),
        })
    }

    /// `self` is the parent of `other`. Cross-document pairs give false.
    pub fn is_parent_of(&self, other: &StructuralId) -> bool {
        is_parent(self, other)
    }

    pub fn is_ancestor_of(&self, other: &StructuralId) -> bool {
        is_ancestor(self, other)
    }
}

pub fn is_parent(a: &StructuralId, b: &StructuralId) -> bool {
    a.doc == b.doc && b.path.len() == a.path.len() + 1 && b.path.starts_with(&a.path)
}

pub fn is_ancestor(a: &StructuralId, b: &StructuralId) -> bool {
    a.doc == b.doc && b.path.len() > a.path.len() && b.path.starts_with(&a.path)
}

impl fmt::Display for StructuralId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#", self.doc)?;
        for (i, c) in self.path.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for StructuralId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(p: &[u32]) -> StructuralId {
        StructuralId::new("d", p.to_vec())
    }

    #[test]
    fn parent_examples() {
        assert!(is_parent(&id(&[1, 2]), &id(&[1, 2, 3])));
        assert!(!is_parent(&id(&[1]), &id(&[1, 2, 3])));
        assert!(!is_parent(&id(&[1, 2]), &id(&[1, 2])));
    }

    #[test]
    fn ancestor_examples() {
        assert!(is_ancestor(&id(&[1]), &id(&[1, 2, 3])));
        assert!(!is_ancestor(&id(&[1, 2]), &id(&[1, 3])));
        assert!(!is_ancestor(&id(&[1]), &id(&[1])));
    }

    #[test]
    fn cross_document_is_false() {
        let a = StructuralId::new("x", vec![1]);
        let b = StructuralId::new("y", vec![1, 1]);
        assert!(!is_parent(&a, &b));
        assert!(!is_ancestor(&a, &b));
    }

    #[test]
    fn display() {
        assert_eq!(id(&[1, 4, 2]).to_string(), "d#1.4.2");
    }
}
