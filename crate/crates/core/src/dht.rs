//! In-process structured overlay: consistent hashing with virtual nodes and
//! finger-style routing for hop accounting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Address of a peer in the simulated network.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PeerAddr(pub u32);

impl fmt::Debug for PeerAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

impl fmt::Display for PeerAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PeerId {
    pub point: u64,
    pub addr: PeerAddr,
}

/// FNV-1a followed by a 64-bit finalizer; stable across runs and platforms.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^ (h >> 33)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DhtError {
    #[error("peer {0} is unreachable (retriable)")]
    Unreachable(PeerAddr),
    #[error("the overlay has no peers")]
    Empty,
    #[error("unknown peer {0}")]
    UnknownPeer(PeerAddr),
}

impl DhtError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, DhtError::Unreachable(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpReceipt {
    pub responsible: PeerAddr,
    pub hops: u32,
}

#[derive(Debug, Default, Clone)]
struct PeerState {
    entries: BTreeMap<String, BTreeSet<Vec<u8>>>,
    down: bool,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct DhtStats {
    pub puts: u64,
    pub gets: u64,
    pub max_hops: u32,
    pub total_hops: u64,
}

#[derive(Debug, Clone)]
pub struct Dht {
    vnodes: usize,
    /// Virtual node points, sorted.
    ring: Vec<(u64, PeerAddr)>,
    /// Peers sorted by primary point; index = routing rank.
    ranks: Vec<PeerId>,
    peers: BTreeMap<PeerAddr, PeerState>,
    transient_failures: u32,
    stats: DhtStats,
}

pub const DEFAULT_VNODES: usize = 64;

impl Dht {
    pub fn new(n_peers: u32) -> Self {
        Dht::with_vnodes(n_peers, DEFAULT_VNODES)
    }

    pub fn with_vnodes(n_peers: u32, vnodes: usize) -> Self {
        let mut d = Dht {
            vnodes: vnodes.max(1),
            ring: Vec::new(),
            ranks: Vec::new(),
            peers: BTreeMap::new(),
            transient_failures: 0,
            stats: DhtStats::default(),
        };
        for i in 0..n_peers {
            d.peers.insert(PeerAddr(i), PeerState::default());
        }
        d.rebuild();
        d
    }

    fn point(addr: PeerAddr, v: usize) -> u64 {
        stable_hash(format!("peer-{}-{}", addr.0, v).as_bytes())
    }

    fn rebuild(&mut self) {
        self.ring.clear();
        self.ranks.clear();
        for &a in self.peers.keys() {
            for v in 0..self.vnodes {
                self.ring.push((Dht::point(a, v), a));
            }
            self.ranks.push(PeerId { point: Dht::point(a, 0), addr: a });
        }
        self.ring.sort();
        self.ranks.sort();
    }

    /// Adds a peer and moves the entries it becomes responsible for.
    pub fn add_peer(&mut self, addr: PeerAddr) {
        if self.peers.contains_key(&addr) {
            return;
        }
        self.peers.insert(addr, PeerState::default());
        self.rebuild();
        self.rebalance();
    }

    /// Removes a peer, handing its entries to their new owners.
    pub fn remove_peer(&mut self, addr: PeerAddr) {
        if let Some(st) = self.peers.remove(&addr) {
            self.rebuild();
            for (k, vals) in st.entries {
                if let Ok(p) = self.responsible_peer(&k) {
                    self.peers.get_mut(&p.addr).unwrap().entries.entry(k).or_default().extend(vals);
                }
            }
        }
    }

    fn rebalance(&mut self) {
        let mut moves = Vec::new();
        for (&a, st) in &self.peers {
            for k in st.entries.keys() {
                let owner = self.owner_of(k);
                if owner != a {
                    moves.push((a, k.clone(), owner));
                }
            }
        }
        for (from, k, to) in moves {
            let vals = self.peers.get_mut(&from).unwrap().entries.remove(&k).unwrap();
            self.peers.get_mut(&to).unwrap().entries.entry(k).or_default().extend(vals);
        }
    }

    pub fn peer_count(&self) -> usize {
        self.peers.len()
    }

    pub fn peers(&self) -> impl Iterator<Item = PeerAddr> + '_ {
        self.peers.keys().copied()
    }

    fn owner_of(&self, key: &str) -> PeerAddr {
        let h = stable_hash(key.as_bytes());
        let i = self.ring.partition_point(|&(p, _)| p < h);
        self.ring[i % self.ring.len()].1
    }

    /// Successor of hash(key) on the ring.
    pub fn responsible_peer(&self, key: &str) -> Result<PeerId, DhtError> {
        if self.ring.is_empty() {
            return Err(DhtError::Empty);
        }
        let addr = self.owner_of(key);
        Ok(PeerId { point: Dht::point(addr, 0), addr })
    }

    fn rank(&self, addr: PeerAddr) -> Result<usize, DhtError> {
        self.ranks.iter().position(|p| p.addr == addr).ok_or(DhtError::UnknownPeer(addr))
    }

    /// Peers visited from `from` to `to`, greedy over fingers at rank
    /// offsets 2^i; at most ceil(log2 N) hops.
    pub fn route(&self, from: PeerAddr, to: PeerAddr) -> Result<Vec<PeerAddr>, DhtError> {
        let n = self.ranks.len();
        let (a, b) = (self.rank(from)?, self.rank(to)?);
        let mut d = (b + n - a) % n;
        let mut cur = a;
        let mut path = Vec::new();
        while d > 0 {
            let step = 1usize << (usize::BITS - 1 - d.leading_zeros());
            cur = (cur + step) % n;
            d -= step;
            path.push(self.ranks[cur].addr);
        }
        Ok(path)
    }

    pub fn hops(&self, from: PeerAddr, to: PeerAddr) -> Result<u32, DhtError> {
        Ok(self.route(from, to)?.len() as u32)
    }

    /// Marks a peer unreachable (or reachable again).
    pub fn set_down(&mut self, addr: PeerAddr, down: bool) {
        if let Some(p) = self.peers.get_mut(&addr) {
            p.down = down;
        }
    }

    /// The next `n` operations fail with a retriable error.
    pub fn inject_transient_failures(&mut self, n: u32) {
        self.transient_failures = n;
    }

    fn reach(&mut self, from: PeerAddr, key: &str) -> Result<OpReceipt, DhtError> {
        let owner = self.responsible_peer(key)?.addr;
        let hops = self.hops(from, owner)?;
        if self.transient_failures > 0 {
            self.transient_failures -= 1;
            return Err(DhtError::Unreachable(owner));
        }
        if self.peers[&owner].down {
            return Err(DhtError::Unreachable(owner));
        }
        self.stats.max_hops = self.stats.max_hops.max(hops);
        self.stats.total_hops += hops as u64;
        Ok(OpReceipt { responsible: owner, hops })
    }

    /// Adds `value` to the entry of `key`; idempotent.
    pub fn put(&mut self, from: PeerAddr, key: &str, value: &[u8]) -> Result<OpReceipt, DhtError> {
        let r = self.reach(from, key)?;
        self.stats.puts += 1;
        let st = self.peers.get_mut(&r.responsible).unwrap();
        let set = st.entries.entry(key.to_string()).or_default();
        if !set.contains(value) {
            set.insert(value.to_vec());
        }
        Ok(r)
    }

    /// Current values of `key`, in byte order.
    pub fn get(&mut self, from: PeerAddr, key: &str) -> Result<(Vec<Vec<u8>>, OpReceipt), DhtError> {
        let r = self.reach(from, key)?;
        self.stats.gets += 1;
        let vals = self.peers[&r.responsible].entries.get(key).map(|s| s.iter().cloned().collect()).unwrap_or_default();
        Ok((vals, r))
    }

    pub fn stats(&self) -> DhtStats {
        self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = DhtStats::default();
    }

    /// Total (key, value) pairs stored, optionally restricted to a key prefix.
    pub fn entry_count(&self, prefix: &str) -> usize {
        self.peers
            .values()
            .flat_map(|p| p.entries.iter())
            .filter(|(k, _)| k.starts_with(prefix))
            .map(|(_, v)| v.len())
            .sum()
    }

    /// Number of keys owned by each peer.
    pub fn load(&self) -> BTreeMap<PeerAddr, usize> {
        self.peers.iter().map(|(&a, p)| (a, p.entries.len())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_peer_owns_everything() {
        let d = Dht::new(1);
        for k in ["a", "b", "zzz"] {
            assert_eq!(d.responsible_peer(k).unwrap().addr, PeerAddr(0));
        }
    }

    #[test]
    fn put_get_idempotent() {
        let mut d = Dht::new(10);
        d.put(PeerAddr(3), "book", b"v1@p2").unwrap();
        d.put(PeerAddr(5), "book", b"v1@p2").unwrap();
        let (vals, _) = d.get(PeerAddr(0), "book").unwrap();
        assert_eq!(vals, vec![b"v1@p2".to_vec()]);
        assert!(d.get(PeerAddr(0), "none").unwrap().0.is_empty());
    }

    #[test]
    fn removing_other_peer_keeps_owner() {
        let mut d = Dht::new(20);
        d.put(PeerAddr(0), "k", b"x").unwrap();
        let owner = d.responsible_peer("k").unwrap().addr;
        let other = (0..20).map(PeerAddr).find(|&p| p != owner).unwrap();
        d.remove_peer(other);
        assert_eq!(d.responsible_peer("k").unwrap().addr, owner);
        assert_eq!(d.get(owner, "k").unwrap().0.len(), 1);
    }

    #[test]
    fn membership_change_keeps_entries() {
        let mut d = Dht::new(5);
        for i in 0..200 {
            d.put(PeerAddr(0), &format!("k{i}"), b"v").unwrap();
        }
        d.add_peer(PeerAddr(99));
        d.remove_peer(PeerAddr(2));
        for i in 0..200 {
            assert_eq!(d.get(PeerAddr(1), &format!("k{i}")).unwrap().0.len(), 1);
        }
    }

    #[test]
    fn failures_are_retriable() {
        let mut d = Dht::new(4);
        let owner = d.responsible_peer("k").unwrap().addr;
        d.set_down(owner, true);
        let e = d.put(PeerAddr(0), "k", b"v").unwrap_err();
        assert!(e.is_retriable());
        d.set_down(owner, false);
        d.inject_transient_failures(2);
        assert!(d.put(PeerAddr(0), "k", b"v").is_err());
        assert!(d.put(PeerAddr(0), "k", b"v").is_err());
        assert!(d.put(PeerAddr(0), "k", b"v").is_ok());
    }

    #[test]
    fn hop_bound() {
        let d = Dht::new(250);
        for a in 0..250 {
            for k in 0..20 {
                let owner = d.responsible_peer(&format!("key{k}")).unwrap().addr;
                assert!(d.hops(PeerAddr(a), owner).unwrap() <= 8);
            }
        }
    }
}
