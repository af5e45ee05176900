//! Length-prefixed binary frames for tuple batches.
//!
//! Frame: u32 LE body length, then view_id, doc uri, varint seq_no, u8 last,
//! varint tuple count; each tuple is a varint cell count followed by tagged
//! cells (0 = ID: doc uri, empty when equal to the batch uri, then varint
//! component count and components; 1 = val; 2 = cont).

use std::sync::Arc;

use crate::codec::{put_str, put_varint, DecodeError, Reader};
use crate::xml::StructuralId;

use super::tuple::{Cell, Tuple};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleBatch {
    pub view_id: String,
    pub doc: String,
    pub seq_no: u64,
    pub tuples: Vec<Tuple>,
    pub last: bool,
}

pub const DEFAULT_BATCH_TUPLES: usize = 1000;
pub const DEFAULT_BATCH_BYTES: usize = 256 * 1024;

impl TupleBatch {
    pub fn byte_size(&self) -> usize {
        16 + self.view_id.len() + self.doc.len() + self.tuples.iter().map(Tuple::byte_size).sum::<usize>()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut body = Vec::with_capacity(self.byte_size());
        put_str(&mut body, &self.view_id);
        put_str(&mut body, &self.doc);
        put_varint(&mut body, self.seq_no);
        body.push(self.last as u8);
        put_varint(&mut body, self.tuples.len() as u64);
        for t in &self.tuples {
            encode_tuple(&mut body, t, &self.doc);
        }
        let mut out = Vec::with_capacity(body.len() + 4);
        out.extend_from_slice(&(body.len() as u32).to_le_bytes());
        out.extend_from_slice(&body);
        out
    }

    /// Decodes one frame; returns the batch and the bytes consumed.
    pub fn decode(buf: &[u8]) -> Result<(TupleBatch, usize), DecodeError> {
        if buf.len() < 4 {
            return Err(DecodeError::Truncated);
        }
        let len = u32::from_le_bytes(buf[..4].try_into().unwrap()) as usize;
        if buf.len() - 4 < len {
            return Err(DecodeError::Truncated);
        }
        let mut r = Reader::new(&buf[4..4 + len]);
        let view_id = r.str()?.to_string();
        let doc = r.str()?.to_string();
        let doc_arc: Arc<str> = Arc::from(doc.as_str());
        let seq_no = r.varint()?;
        let last = match r.u8()? {
            0 => false,
            1 => true,
            _ => return Err(DecodeError::Invalid("last flag")),
        };
        let n = r.varint()? as usize;
        let mut tuples = Vec::with_capacity(n.min(4096));
        for _ in 0..n {
            tuples.push(decode_tuple(&mut r, &doc_arc)?);
        }
        if !r.is_empty() {
            return Err(DecodeError::Invalid("trailing bytes in frame"));
        }
        Ok((TupleBatch { view_id, doc, seq_no, tuples, last }, 4 + len))
    }
}

/// Appends one tuple; ID cells of document `doc` omit the uri.
pub fn encode_tuple(out: &mut Vec<u8>, t: &Tuple, doc: &str) {
    put_varint(out, t.0.len() as u64);
    for c in &t.0 {
        match c {
            Cell::Id(id) => {
                out.push(0);
                put_str(out, if id.doc() == doc { "" } else { id.doc() });
                put_varint(out, id.path().len() as u64);
                for &p in id.path() {
                    put_varint(out, p as u64);
                }
            }
            Cell::Val(s) => {
                out.push(1);
                put_str(out, s);
            }
            Cell::Cont(s) => {
                out.push(2);
                put_str(out, s);
            }
        }
    }
}

pub fn decode_tuple(r: &mut Reader<'_>, doc: &Arc<str>) -> Result<Tuple, DecodeError> {
    let nc = r.varint()? as usize;
    let mut cells = Vec::with_capacity(nc.min(64));
    for _ in 0..nc {
        cells.push(match r.u8()? {
            0 => {
                let u = r.str()?;
                let uri = if u.is_empty() { doc.clone() } else { Arc::from(u) };
                let k = r.varint()? as usize;
                if k == 0 {
                    return Err(DecodeError::Invalid("empty Dewey path"));
                }
                let mut path = Vec::with_capacity(k.min(256));
                for _ in 0..k {
                    let c = u32::try_from(r.varint()?).map_err(|_| DecodeError::Invalid("component"))?;
                    if c == 0 {
                        return Err(DecodeError::Invalid("zero Dewey component"));
                    }
                    path.push(c);
                }
                Cell::Id(StructuralId::new(uri, path))
            }
            1 => Cell::Val(Arc::from(r.str()?)),
            2 => Cell::Cont(Arc::from(r.str()?)),
            _ => return Err(DecodeError::Invalid("cell tag")),
        });
    }
    Ok(Tuple(cells))
}

/// Splits a tuple stream into batches of at most `max_tuples` tuples and
/// roughly `max_bytes` bytes. An empty stream yields no batches.
pub fn into_batches(view_id: &str, doc: &str, tuples: Vec<Tuple>, max_tuples: usize, max_bytes: usize) -> Vec<TupleBatch> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    let mut bytes = 0;
    for t in tuples {
        let sz = t.byte_size();
        if !cur.is_empty() && (cur.len() >= max_tuples || bytes + sz > max_bytes) {
            out.push(std::mem::take(&mut cur));
            bytes = 0;
        }
        bytes += sz;
        cur.push(t);
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    let n = out.len();
    out.into_iter()
        .enumerate()
        .map(|(i, tuples)| TupleBatch { view_id: view_id.to_string(), doc: doc.to_string(), seq_no: i as u64, tuples, last: i + 1 == n })
        .collect()
}
