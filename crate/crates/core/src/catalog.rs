//! View-definition indexing in the DHT and the interval-timestamp protocol.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::dht::{Dht, DhtError, PeerAddr};
use crate::extract::doc_keys;
use crate::pattern::{annotated_labels, labels, leaf_paths, path_key, return_paths, sub_paths, JoinedTreePattern, ViewDefinition};
use crate::xml::Document;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Strategy {
    Li,
    #[default]
    Rli,
    Lpi,
    Rpi,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Li, Strategy::Rli, Strategy::Lpi, Strategy::Rpi];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Li => "LI",
            Strategy::Rli => "RLI",
            Strategy::Lpi => "LPI",
            Strategy::Rpi => "RPI",
        }
    }

    /// Namespace of the query-driven index. LI shares the content index.
    fn space(self) -> &'static str {
        match self {
            Strategy::Li => CONTENT,
            Strategy::Rli => "R|",
            Strategy::Lpi => "P|",
            Strategy::Rpi => "Q|",
        }
    }

    fn uses_paths(self) -> bool {
        matches!(self, Strategy::Lpi | Strategy::Rpi)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "li" => Ok(Strategy::Li),
            "rli" => Ok(Strategy::Rli),
            "lpi" => Ok(Strategy::Lpi),
            "rpi" => Ok(Strategy::Rpi),
            _ => Err(format!("unknown strategy `{s}` (li, rli, lpi, rpi)")),
        }
    }
}

const CONTENT: &str = "L|";
const INTERVAL: &str = "T|";

/// Index keys of a view under a strategy (without namespace).
pub fn index_keys(strategy: Strategy, p: &JoinedTreePattern) -> BTreeSet<String> {
    match strategy {
        Strategy::Li => labels(p),
        Strategy::Rli => annotated_labels(p),
        Strategy::Lpi => leaf_paths(p).iter().map(|x| path_key(x)).collect(),
        Strategy::Rpi => return_paths(p).iter().map(|x| path_key(x)).collect(),
    }
}

/// Lookup keys for a query under a strategy (without namespace).
pub fn lookup_keys(strategy: Strategy, q: &JoinedTreePattern) -> BTreeSet<String> {
    if strategy.uses_paths() {
        sub_paths(q).iter().map(|x| path_key(x)).collect()
    } else {
        labels(q)
    }
}

pub fn content_key(label: &str) -> String {
    format!("{CONTENT}{label}")
}

pub fn strategy_key(s: Strategy, key: &str) -> String {
    format!("{}{key}", s.space())
}

pub fn interval_key(i: u64) -> String {
    format!("{INTERVAL}{i}")
}

/// Index of the interval (i*len, (i+1)*len] containing `t`.
pub fn interval_of(t: u64, len: u64) -> u64 {
    t.saturating_sub(1) / len.max(1)
}

pub const MAX_ATTEMPTS: u32 = 32;

fn with_retry<T>(mut op: impl FnMut() -> Result<T, DhtError>) -> Result<(T, u32), DhtError> {
    let mut attempts = 0;
    loop {
        attempts += 1;
        match op() {
            Ok(v) => return Ok((v, attempts)),
            Err(e) if e.is_retriable() && attempts < MAX_ATTEMPTS => continue,
            Err(e) => return Err(e),
        }
    }
}

/// DHT operations issued by a catalog call.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpLog {
    /// (DHT key, hops) per successful operation.
    pub ops: Vec<(String, u32)>,
    pub retries: u32,
}

impl OpLog {
    pub fn count(&self) -> usize {
        self.ops.len()
    }

    pub fn max_hops(&self) -> u32 {
        self.ops.iter().map(|o| o.1).max().unwrap_or(0)
    }
}

/// All DHT keys under which a view is published.
pub fn publication_keys(v: &ViewDefinition, strategy: Strategy) -> Vec<String> {
    let mut keys: BTreeSet<String> = labels(&v.pattern).iter().map(|l| content_key(l)).collect();
    keys.extend(index_keys(strategy, &v.pattern).iter().map(|k| strategy_key(strategy, k)));
    let mut out: Vec<String> = keys.into_iter().collect();
    out.push(interval_key(v.timestamp_interval));
    out
}

/// Puts the view under its content keys, strategy keys and interval key,
/// retrying transient failures.
pub fn publish_view(dht: &mut Dht, from: PeerAddr, v: &ViewDefinition, strategy: Strategy) -> Result<OpLog, DhtError> {
    let value = v.encode();
    let mut log = OpLog::default();
    for k in publication_keys(v, strategy) {
        let (r, attempts) = with_retry(|| dht.put(from, &k, &value))?;
        log.retries += attempts - 1;
        log.ops.push((k, r.hops));
    }
    Ok(log)
}

#[derive(Debug, Clone, Default)]
pub struct LookupResult {
    /// Distinct views, by view id.
    pub views: Vec<ViewDefinition>,
    pub log: OpLog,
}

impl LookupResult {
    pub fn ids(&self) -> BTreeSet<String> {
        self.views.iter().map(|v| v.view_id.clone()).collect()
    }

    pub fn lookups(&self) -> usize {
        self.log.count()
    }
}

fn gather(dht: &mut Dht, from: PeerAddr, keys: impl IntoIterator<Item = String>) -> Result<LookupResult, DhtError> {
    let mut found: BTreeMap<String, ViewDefinition> = BTreeMap::new();
    let mut log = OpLog::default();
    for k in keys {
        let ((vals, r), attempts) = with_retry(|| dht.get(from, &k))?;
        log.retries += attempts - 1;
        log.ops.push((k, r.hops));
        for b in vals {
            if let Ok(v) = ViewDefinition::decode(&b) {
                found.entry(v.view_id.clone()).or_insert(v);
            }
        }
    }
    Ok(LookupResult { views: found.into_values().collect(), log })
}

/// Views a document may contribute to: union of gets over its keys.
pub fn lookup_for_document(dht: &mut Dht, from: PeerAddr, d: &Document) -> Result<LookupResult, DhtError> {
    gather(dht, from, doc_keys(d).iter().map(|k| content_key(k)))
}

/// Candidate views for a query.
pub fn lookup_for_query(dht: &mut Dht, from: PeerAddr, q: &JoinedTreePattern, strategy: Strategy) -> Result<LookupResult, DhtError> {
    gather(dht, from, lookup_keys(strategy, q).iter().map(|k| strategy_key(strategy, k)))
}

/// Views published during interval `i`.
pub fn poll_interval(dht: &mut Dht, from: PeerAddr, i: u64) -> Result<LookupResult, DhtError> {
    gather(dht, from, [interval_key(i)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contribution {
    /// Tuples are being shipped.
    Pending,
    /// The holder acknowledged the final batch.
    Done,
}

/// Per-peer record of which (document, view) pairs have contributed.
#[derive(Debug, Clone, Default)]
pub struct ContributionLog {
    entries: BTreeMap<(String, String), Contribution>,
}

impl ContributionLog {
    /// Claims the pair; false if it is already pending or done.
    pub fn claim(&mut self, doc: &str, view: &str) -> bool {
        let k = (doc.to_string(), view.to_string());
        if self.entries.contains_key(&k) {
            return false;
        }
        self.entries.insert(k, Contribution::Pending);
        true
    }

    pub fn complete(&mut self, doc: &str, view: &str) {
        self.entries.insert((doc.to_string(), view.to_string()), Contribution::Done);
    }

    /// Releases a pending claim so the pair can be shipped again.
    pub fn abandon(&mut self, doc: &str, view: &str) {
        let k = (doc.to_string(), view.to_string());
        if self.entries.get(&k) == Some(&Contribution::Pending) {
            self.entries.remove(&k);
        }
    }

    pub fn state(&self, doc: &str, view: &str) -> Option<Contribution> {
        self.entries.get(&(doc.to_string(), view.to_string())).copied()
    }

    pub fn done(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().filter(|(_, s)| **s == Contribution::Done).map(|((d, v), _)| (d.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
