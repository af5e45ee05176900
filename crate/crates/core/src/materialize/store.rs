//! Ordered key-value persistence for view tuples.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::codec::Reader;
use crate::dht::stable_hash;
use crate::extract::{decode_tuple, encode_tuple, Tuple, TupleBatch};

/// Minimal sorted-map interface a view store needs.
pub trait SortedStore: Send {
    fn put(&mut self, key: &[u8], value: &[u8]) -> io::Result<()>;
    fn get(&self, key: &[u8]) -> Option<&[u8]>;
    fn contains(&self, key: &[u8]) -> bool {
        self.get(key).is_some()
    }
    /// Entries in key order.
    fn entries(&self) -> Box<dyn Iterator<Item = (&[u8], &[u8])> + '_>;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn sync(&mut self) -> io::Result<()>;
}

#[derive(Debug, Default, Clone)]
pub struct MemoryStore {
    map: BTreeMap<Vec<u8>, Vec<u8>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl SortedStore for MemoryStore {
    fn put(&mut self, key: &[u8], value: &[u8]) -> io::Result<()> {
        self.map.insert(key.to_vec(), value.to_vec());
        Ok(())
    }

    fn get(&self, key: &[u8]) -> Option<&[u8]> {
        self.map.get(key).map(Vec::as_slice)
    }

    fn entries(&self) -> Box<dyn Iterator<Item = (&[u8], &[u8])> + '_> {
        Box::new(self.map.iter().map(|(k, v)| (k.as_slice(), v.as_slice())))
    }

    fn len(&self) -> usize {
        self.map.len()
    }

    fn sync(&mut self) -> io::Result<()> {
        Ok(())
    }
}

const MAGIC: &[u8; 4] = b"VPST";
const VERSION: u8 = 1;

/// Append-only log of (key, value) records replayed into memory on open.
/// Record: u32 LE key length, u32 LE value length, key, value, u64 LE hash
/// of both. A torn tail is truncated on open.
pub struct FileStore {
    path: PathBuf,
    map: BTreeMap<Vec<u8>, Vec<u8>>,
    out: BufWriter<File>,
}

fn record_hash(k: &[u8], v: &[u8]) -> u64 {
    let mut b = Vec::with_capacity(k.len() + v.len() + 1);
    b.extend_from_slice(k);
    b.push(0xff);
    b.extend_from_slice(v);
    stable_hash(&b)
}

impl FileStore {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut f = OpenOptions::new().read(true).write(true).create(true).truncate(false).open(&path)?;
        let mut buf = Vec::new();
        f.read_to_end(&mut buf)?;
        let mut map = BTreeMap::new();
        let mut good = 5usize;
        if buf.is_empty() {
            f.write_all(MAGIC)?;
            f.write_all(&[VERSION])?;
        } else {
            if buf.len() < 5 || &buf[..4] != MAGIC {
                return Err(io::Error::new(io::ErrorKind::InvalidData, "not a view store file"));
            }
            if buf[4] != VERSION {
                return Err(io::Error::new(io::ErrorKind::InvalidData, format!("store version {}", buf[4])));
            }
            let mut pos = 5;
            while pos + 8 <= buf.len() {
                let kl = u32::from_le_bytes(buf[pos..pos + 4].try_into().unwrap()) as usize;
                let vl = u32::from_le_bytes(buf[pos + 4..pos + 8].try_into().unwrap()) as usize;
                let end = pos + 8 + kl + vl + 8;
                if end > buf.len() {
                    break;
                }
                let k = &buf[pos + 8..pos + 8 + kl];
                let v = &buf[pos + 8 + kl..pos + 8 + kl + vl];
                let h = u64::from_le_bytes(buf[end - 8..end].try_into().unwrap());
                if h != record_hash(k, v) {
                    break;
                }
                map.insert(k.to_vec(), v.to_vec());
                pos = end;
                good = pos;
            }
        }
        f.set_len(good as u64)?;
        f.seek(SeekFrom::Start(good as u64))?;
        Ok(FileStore { path, map, out: BufWriter::new(f) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl SortedStore for FileStore {
    fn put(&mut self, key: &[u8], value: &[u8]) -> io::Result<()> {
        self.out.write_all(&(key.len() as u32).to_le_bytes())?;
        self.out.write_all(&(value.len() as u32).to_le_bytes())?;
        self.out.write_all(key)?;
        self.out.write_all(value)?;
        self.out.write_all(&record_hash(key, value).to_le_bytes())?;
        self.map.insert(key.to_vec(), value.to_vec());
        Ok(())
    }

    fn get(&self, key: &[u8]) -> Option<&[u8]> {
        self.map.get(key).map(Vec::as_slice)
    }

    fn entries(&self) -> Box<dyn Iterator<Item = (&[u8], &[u8])> + '_> {
        Box::new(self.map.iter().map(|(k, v)| (k.as_slice(), v.as_slice())))
    }

    fn len(&self) -> usize {
        self.map.len()
    }

    fn sync(&mut self) -> io::Result<()> {
        self.out.flush()?;
        self.out.get_ref().sync_data()
    }
}

impl Drop for FileStore {
    fn drop(&mut self) {
        let _ = self.out.flush();
    }
}

/// Tuples of one view stream keyed by (doc uri, batch seq_no, position).
pub struct ViewStore {
    view_id: String,
    store: Box<dyn SortedStore>,
    tuples: usize,
    bytes: usize,
}

fn key(doc: &str, seq: u64, i: u32) -> Vec<u8> {
    let mut k = Vec::with_capacity(doc.len() + 13);
    k.extend_from_slice(doc.as_bytes());
    k.push(0);
    k.extend_from_slice(&seq.to_be_bytes());
    k.extend_from_slice(&i.to_be_bytes());
    k
}

fn split_key(k: &[u8]) -> Option<&str> {
    let z = k.len().checked_sub(13)?;
    std::str::from_utf8(&k[..z]).ok()
}

impl ViewStore {
    pub fn new(view_id: impl Into<String>, store: Box<dyn SortedStore>) -> Self {
        let mut vs = ViewStore { view_id: view_id.into(), store, tuples: 0, bytes: 0 };
        for t in vs.scan() {
            vs.tuples += 1;
            vs.bytes += t.byte_size();
        }
        vs
    }

    pub fn in_memory(view_id: impl Into<String>) -> Self {
        ViewStore::new(view_id, Box::new(MemoryStore::new()))
    }

    pub fn open(view_id: impl Into<String>, path: impl AsRef<Path>) -> io::Result<Self> {
        Ok(ViewStore::new(view_id, Box::new(FileStore::open(path)?)))
    }

    pub fn view_id(&self) -> &str {
        &self.view_id
    }

    /// True when batch (doc, seq_no) is already stored.
    pub fn has_batch(&self, doc: &str, seq: u64) -> bool {
        self.store.contains(&key(doc, seq, 0))
    }

    /// Stores a batch; a batch seen before is ignored and returns false.
    pub fn apply(&mut self, b: &TupleBatch) -> io::Result<bool> {
        if b.tuples.is_empty() || self.has_batch(&b.doc, b.seq_no) {
            return Ok(false);
        }
        let mut val = Vec::new();
        for (i, t) in b.tuples.iter().enumerate() {
            val.clear();
            encode_tuple(&mut val, t, &b.doc);
            self.store.put(&key(&b.doc, b.seq_no, i as u32), &val)?;
            self.tuples += 1;
            self.bytes += t.byte_size();
        }
        Ok(true)
    }

    /// All tuples in key order.
    pub fn scan(&self) -> Vec<Tuple> {
        let mut out = Vec::with_capacity(self.tuples);
        let mut last: Option<(Vec<u8>, Arc<str>)> = None;
        for (k, v) in self.store.entries() {
            let Some(doc) = split_key(k) else { continue };
            let arc = match &last {
                Some((d, a)) if d.as_slice() == doc.as_bytes() => a.clone(),
                _ => {
                    let a: Arc<str> = Arc::from(doc);
                    last = Some((doc.as_bytes().to_vec(), a.clone()));
                    a
                }
            };
            let mut r = Reader::new(v);
            if let Ok(t) = decode_tuple(&mut r, &arc) {
                out.push(t);
            }
        }
        out
    }

    pub fn tuple_count(&self) -> usize {
        self.tuples
    }

    pub fn byte_count(&self) -> usize {
        self.bytes
    }

    pub fn sync(&mut self) -> io::Result<()> {
        self.store.sync()
    }
}

impl std::fmt::Debug for ViewStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ViewStore").field("view_id", &self.view_id).field("tuples", &self.tuples).finish()
    }
}
