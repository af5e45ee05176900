use std::fmt;
use std::sync::Arc;

use crate::xml::StructuralId;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    Id(StructuralId),
    Val(Arc<str>),
    Cont(Arc<str>),
}

impl Cell {
    pub fn val(s: &str) -> Cell {
        Cell::Val(Arc::from(s))
    }

    pub fn cont(s: &str) -> Cell {
        Cell::Cont(Arc::from(s))
    }

    pub fn as_id(&self) -> Option<&StructuralId> {
        match self {
            Cell::Id(i) => Some(i),
            _ => None,
        }
    }

    /// Text of a val or cont cell.
    pub fn as_text(&self) -> Option<&str> {
        match self {
            Cell::Val(s) | Cell::Cont(s) => Some(s),
            Cell::Id(_) => None,
        }
    }

    /// Bytes this cell occupies on the wire (approximate for IDs).
    pub fn byte_size(&self) -> usize {
        match self {
            Cell::Id(i) => 2 + i.depth() * 2,
            Cell::Val(s) | Cell::Cont(s) => 2 + s.len(),
        }
    }
}

impl fmt::Debug for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Id(i) => write!(f, "{i}"),
            Cell::Val(s) => write!(f, "{s:?}"),
            Cell::Cont(s) => write!(f, "cont{s:?}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Tuple(pub Vec<Cell>);

impl Tuple {
    pub fn cells(&self) -> &[Cell] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn byte_size(&self) -> usize {
        1 + self.0.iter().map(Cell::byte_size).sum::<usize>()
    }

    pub fn concat(&self, other: &Tuple) -> Tuple {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Tuple(v)
    }

    pub fn project(&self, cols: &[usize]) -> Tuple {
        Tuple(cols.iter().map(|&c| self.0[c].clone()).collect())
    }
}

impl fmt::Debug for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}
