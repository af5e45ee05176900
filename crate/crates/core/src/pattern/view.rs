use crate::codec::{put_str, put_varint, DecodeError, Reader};
use crate::dht::PeerAddr;

use super::tree::*;

/// A published view: its pattern, the peer storing its tuples and the
/// interval in which it was published.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ViewDefinition {
    pub view_id: String,
    pub pattern: JoinedTreePattern,
    pub holder: PeerAddr,
    pub timestamp_interval: u64,
}

const FORMAT: u8 = 1;

impl ViewDefinition {
    pub fn new(view_id: impl Into<String>, pattern: JoinedTreePattern, holder: PeerAddr) -> Self {
        ViewDefinition { view_id: view_id.into(), pattern, holder, timestamp_interval: 0 }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![FORMAT];
        put_str(&mut out, &self.view_id);
        put_varint(&mut out, self.holder.0 as u64);
        put_varint(&mut out, self.timestamp_interval);
        encode_pattern(&self.pattern, &mut out);
        out
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(buf);
        let tag = r.u8()?;
        if tag != FORMAT {
            return Err(DecodeError::Format(tag));
        }
        let view_id = r.str()?.to_string();
        let holder = PeerAddr(u32::try_from(r.varint()?).map_err(|_| DecodeError::Invalid("holder"))?);
        let timestamp_interval = r.varint()?;
        let pattern = decode_pattern(&mut r)?;
        if !r.is_empty() {
            return Err(DecodeError::Invalid("trailing bytes"));
        }
        Ok(ViewDefinition { view_id, pattern, holder, timestamp_interval })
    }

    /// Stream id of component `i` (plain id for single-component views).
    pub fn stream_id(&self, i: usize) -> String {
        if self.pattern.patterns().len() == 1 {
            self.view_id.clone()
        } else {
            format!("{}#{}", self.view_id, i)
        }
    }
}

pub fn encode_pattern(p: &JoinedTreePattern, out: &mut Vec<u8>) {
    put_varint(out, p.patterns().len() as u64);
    for t in p.patterns() {
        put_varint(out, t.len() as u64);
        for n in t.nodes() {
            put_str(out, &n.label);
            out.push(match n.test {
                NodeTest::Element => 0,
                NodeTest::Keyword => 1,
            });
            out.push(n.annotations.bits());
            out.push(match n.axis {
                Axis::Child => 0,
                Axis::Descendant => 1,
            });
            put_varint(out, n.parent.map(|p| p as u64 + 1).unwrap_or(0));
            match &n.value_predicate {
                None => out.push(0),
                Some(c) => {
                    out.push(1);
                    put_str(out, c);
                }
            }
        }
    }
    put_varint(out, p.joins().len() as u64);
    for (a, b) in p.joins() {
        for r in [a, b] {
            put_varint(out, r.pattern as u64);
            put_varint(out, r.node as u64);
        }
    }
}

pub fn decode_pattern(r: &mut Reader<'_>) -> Result<JoinedTreePattern, DecodeError> {
    let np = r.varint()? as usize;
    let mut trees = Vec::with_capacity(np.min(64));
    for _ in 0..np {
        let nn = r.varint()? as usize;
        let mut flat: Vec<(PatternNode, Axis, Option<usize>)> = Vec::with_capacity(nn.min(1024));
        for i in 0..nn {
            let label = r.str()?.to_string();
            let test = match r.u8()? {
                0 => NodeTest::Element,
                1 => NodeTest::Keyword,
                _ => return Err(DecodeError::Invalid("node test")),
            };
            let ann = Annotations::from_bits(r.u8()?).ok_or(DecodeError::Invalid("annotations"))?;
            let axis = match r.u8()? {
                0 => Axis::Child,
                1 => Axis::Descendant,
                _ => return Err(DecodeError::Invalid("axis")),
            };
            let parent = match r.varint()? {
                0 => None,
                p => Some(p as usize - 1),
            };
            if (i == 0) != parent.is_none() || parent.is_some_and(|p| p >= i) {
                return Err(DecodeError::Invalid("parent"));
            }
            let value_predicate = match r.u8()? {
                0 => None,
                1 => Some(r.str()?.to_string()),
                _ => return Err(DecodeError::Invalid("predicate flag")),
            };
            let mut n = PatternNode::new(label);
            n.test = test;
            n.annotations = ann;
            n.value_predicate = value_predicate;
            flat.push((n, axis, parent));
        }
        if flat.is_empty() {
            return Err(DecodeError::Invalid("empty tree"));
        }
        // Children appear after parents in pre-order: fold back to front.
        let root_axis = flat[0].1;
        while flat.len() > 1 {
            let (n, axis, parent) = flat.pop().unwrap();
            flat[parent.unwrap()].0.children.insert(0, (axis, n));
        }
        let root = flat.pop().unwrap().0;
        trees.push(TreePattern::new(root_axis, root));
    }
    let nj = r.varint()? as usize;
    let mut joins = Vec::with_capacity(nj.min(64));
    for _ in 0..nj {
        let a = NodeRef::new(r.varint()? as usize, r.varint()? as usize);
        let b = NodeRef::new(r.varint()? as usize, r.varint()? as usize);
        joins.push((a, b));
    }
    JoinedTreePattern::new(trees, joins).map_err(|_| DecodeError::Invalid("pattern"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::literal::jp;

    #[test]
    fn codec_roundtrip() {
        let p = jp("//book[ID][contains(.,'x')]/author$a[val]//last[='L']; //paper/author$b; $a=$b");
        let mut v = ViewDefinition::new("v8", p, PeerAddr(7));
        v.timestamp_interval = 42;
        let back = ViewDefinition::decode(&v.encode()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn rejects_unknown_format() {
        let mut b = ViewDefinition::new("v", jp("//a[ID]"), PeerAddr(0)).encode();
        b[0] = 9;
        assert_eq!(ViewDefinition::decode(&b), Err(DecodeError::Format(9)));
        assert!(ViewDefinition::decode(&b[..0]).is_err());
    }
}
