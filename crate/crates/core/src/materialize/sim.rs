//! Deterministic discrete-event simulation of document publication, view
//! publication, interval polling and the tuple shipping pipeline.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{compose, extended_components};
use crate::catalog::{interval_of, lookup_for_document, poll_interval, publish_view, ContributionLog, OpLog, Strategy};
use crate::dht::{Dht, PeerAddr};
use crate::extract::{into_batches, match_many, Tuple, TupleBatch};
use crate::pattern::{TreePattern, ViewDefinition};
use crate::xml::Document;

use super::net::{CostModel, Links, Micros};
use super::store::ViewStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SendMode {
    Sequential,
    Parallel,
}

/// How a publisher ships the streams of one document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SendPolicy {
    pub mode: SendMode,
}

impl Default for SendPolicy {
    fn default() -> Self {
        SendPolicy { mode: SendMode::Parallel }
    }
}

/// Consumer-side admission control and buffering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReceivePolicy {
    pub max_concurrent_senders: usize,
    /// Buffer capacity in tuples; None is unlimited.
    pub buffer_capacity: Option<usize>,
}

impl Default for ReceivePolicy {
    fn default() -> Self {
        ReceivePolicy { max_concurrent_senders: 64, buffer_capacity: None }
    }
}

/// Global span and per-phase totals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaterializationClock {
    pub first_start: Option<Micros>,
    pub last_ack: Micros,
    pub extraction: Micros,
    pub exchange: Micros,
    pub storage: Micros,
}

impl MaterializationClock {
    pub fn materialization_time(&self) -> Micros {
        self.first_start.map_or(0, |s| self.last_ack.saturating_sub(s))
    }

    fn start(&mut self, t: Micros) {
        self.first_start = Some(self.first_start.map_or(t, |s| s.min(t)));
    }
}

/// One metric sample; `value` carries a count or size when meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub phase: &'static str,
    pub peer: PeerAddr,
    pub view: String,
    pub doc: String,
    pub start: Micros,
    pub end: Micros,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StreamReport {
    pub stream: String,
    pub view: String,
    pub doc: String,
    pub publisher: PeerAddr,
    pub consumer: PeerAddr,
    pub tuples: usize,
    pub bytes: usize,
    pub batches: usize,
    pub extract_start: Micros,
    pub extract_end: Micros,
    pub send_start: Micros,
    pub last_arrival: Micros,
    pub store_start: Option<Micros>,
    pub store_end: Micros,
    pub final_ack: Micros,
    pub retransmissions: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, Default)]
pub struct SimReport {
    pub clock: MaterializationClock,
    pub streams: Vec<StreamReport>,
    pub rows: Vec<MetricRow>,
    /// (doc, view) pairs completed, in completion order.
    pub contributions: Vec<(String, String)>,
    pub dht_lookups: usize,
    pub end_time: Micros,
}

#[derive(Debug, Clone)]
enum Ev {
    PublishView(Box<ViewDefinition>),
    PublishDoc(usize),
    Discovered { doc: usize, views: Vec<String> },
    Poll { peer: PeerAddr, interval: u64 },
    Extracted { doc: usize, view: String, streams: Vec<usize> },
    AdmitReq(usize),
    AdmitGrant(usize),
    Arrive { s: usize, k: usize },
    Ack { s: usize, k: usize },
    Timeout { s: usize, k: usize },
    Stored { consumer: PeerAddr },
    FinalAck(usize),
}

fn class(e: &Ev) -> u8 {
    match e {
        Ev::PublishView(_) => 0,
        Ev::Poll { .. } => 2,
        _ => 1,
    }
}

struct DocEntry {
    peer: PeerAddr,
    doc: Arc<Document>,
    published: Option<Micros>,
}

struct Stream {
    rep: StreamReport,
    batches: Vec<TupleBatch>,
    next: usize,
    acked: Vec<bool>,
    inflight: usize,
    received: Vec<bool>,
    stored: usize,
    doc: usize,
}

#[derive(Default)]
struct Consumer {
    active: usize,
    /// Admitted streams per publisher; storage contention counts publishers.
    senders: BTreeMap<PeerAddr, usize>,
    waiting: VecDeque<usize>,
    buffer: VecDeque<(usize, usize)>,
    buffered: usize,
    held: VecDeque<(usize, usize)>,
    busy: Option<(usize, usize)>,
}

pub struct Simulation {
    pub cost: CostModel,
    pub send: SendPolicy,
    pub recv: ReceivePolicy,
    pub strategy: Strategy,
    dht: Dht,
    links: Links,
    now: Micros,
    seq: u64,
    queue: BinaryHeap<Reverse<(Micros, u8, u64)>>,
    pending: BTreeMap<u64, Ev>,
    views: BTreeMap<String, ViewDefinition>,
    last_view_interval: Option<u64>,
    docs: Vec<DocEntry>,
    logs: BTreeMap<PeerAddr, ContributionLog>,
    /// Streams still to finish per (doc, view).
    open: BTreeMap<(usize, String), usize>,
    polling: BTreeSet<PeerAddr>,
    cpu_free: BTreeMap<PeerAddr, Micros>,
    seq_queues: BTreeMap<(PeerAddr, usize), (bool, VecDeque<usize>)>,
    consumers: BTreeMap<PeerAddr, Consumer>,
    stores: BTreeMap<String, ViewStore>,
    streams: Vec<Stream>,
    report: SimReport,
    rng: ChaCha8Rng,
}

impl Simulation {
    pub fn new(dht: Dht, cost: CostModel, send: SendPolicy, recv: ReceivePolicy, seed: u64) -> Self {
        Simulation {
            cost,
            send,
            recv,
            strategy: Strategy::default(),
            dht,
            links: Links::new(),
            now: 0,
            seq: 0,
            queue: BinaryHeap::new(),
            pending: BTreeMap::new(),
            views: BTreeMap::new(),
            last_view_interval: None,
            docs: Vec::new(),
            logs: BTreeMap::new(),
            open: BTreeMap::new(),
            polling: BTreeSet::new(),
            cpu_free: BTreeMap::new(),
            seq_queues: BTreeMap::new(),
            consumers: BTreeMap::new(),
            stores: BTreeMap::new(),
            streams: Vec::new(),
            report: SimReport::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn push(&mut self, t: Micros, e: Ev) {
        self.seq += 1;
        self.queue.push(Reverse((t, class(&e), self.seq)));
        self.pending.insert(self.seq, e);
    }

    /// Publishes a view definition at time `t` (its holder is `v.holder`).
    pub fn schedule_view(&mut self, t: Micros, v: ViewDefinition) {
        let i = interval_of(t, self.cost.interval_us);
        self.last_view_interval = Some(self.last_view_interval.map_or(i, |m| m.max(i)));
        self.push(t, Ev::PublishView(Box::new(v)));
    }

    /// Publishes a document from `peer` at time `t`.
    pub fn schedule_document(&mut self, t: Micros, peer: PeerAddr, doc: Arc<Document>) {
        self.docs.push(DocEntry { peer, doc, published: None });
        let i = self.docs.len() - 1;
        self.push(t, Ev::PublishDoc(i));
    }

    /// Runs until no events remain.
    pub fn run(mut self) -> (SimReport, BTreeMap<String, ViewStore>) {
        while let Some(Reverse((t, _, id))) = self.queue.pop() {
            self.now = t;
            let e = self.pending.remove(&id).expect("scheduled");
            self.step(e);
        }
        let mut rep = self.report;
        rep.end_time = self.now;
        for s in &self.streams {
            rep.streams.push(s.rep.clone());
        }
        (rep, self.stores)
    }

    fn row(&mut self, phase: &'static str, peer: PeerAddr, view: &str, doc: &str, (start, end): (Micros, Micros), value: f64) {
        self.report.rows.push(MetricRow { phase, peer, view: view.to_string(), doc: doc.to_string(), start, end, value });
    }

    fn lookup_time(&self, log: &OpLog) -> Micros {
        // Gets are issued together; each hop is one message.
        2 * self.cost.latency_us * log.max_hops() as Micros
    }

    fn step(&mut self, e: Ev) {
        match e {
            Ev::PublishView(v) => {
                let v = *v;
                let mut v = v;
                v.timestamp_interval = interval_of(self.now, self.cost.interval_us);
                let log = publish_view(&mut self.dht, v.holder, &v, self.strategy).unwrap_or_default();
                let id = v.view_id.clone();
                self.row("view_publish", v.holder, &id, "", (self.now, self.now + self.lookup_time(&log)), log.count() as f64);
                for i in 0..v.pattern.patterns().len() {
                    let sid = v.stream_id(i);
                    self.stores.entry(sid.clone()).or_insert_with(|| ViewStore::in_memory(sid));
                }
                self.views.insert(id, v);
            }
            Ev::PublishDoc(d) => {
                self.docs[d].published = Some(self.now);
                let peer = self.docs[d].peer;
                let res = lookup_for_document(&mut self.dht, peer, &self.docs[d].doc).unwrap_or_default();
                self.report.dht_lookups += res.lookups();
                let done = self.now + self.lookup_time(&res.log);
                let uri = self.docs[d].doc.uri().to_string();
                self.row("lookup", peer, "", &uri, (self.now, done), res.lookups() as f64);
                let views: Vec<String> = res.views.iter().map(|v| v.view_id.clone()).collect();
                self.push(done, Ev::Discovered { doc: d, views });
                if self.polling.insert(peer) {
                    let i = interval_of(self.now, self.cost.interval_us);
                    if self.last_view_interval.is_some_and(|m| i <= m) {
                        self.push((i + 1) * self.cost.interval_us, Ev::Poll { peer, interval: i });
                    }
                }
            }
            Ev::Poll { peer, interval } => {
                let res = poll_interval(&mut self.dht, peer, interval).unwrap_or_default();
                self.report.dht_lookups += res.lookups();
                let done = self.now + self.lookup_time(&res.log);
                let ids: Vec<String> = res.views.iter().map(|v| v.view_id.clone()).collect();
                self.row("poll", peer, "", "", (self.now, done), ids.len() as f64);
                for d in 0..self.docs.len() {
                    let e = &self.docs[d];
                    let eligible = e.peer == peer
                        && e.published.is_some_and(|t| interval_of(t, self.cost.interval_us) <= interval);
                    if eligible && !ids.is_empty() {
                        self.push(done, Ev::Discovered { doc: d, views: ids.clone() });
                    }
                }
                if self.last_view_interval.is_some_and(|m| interval < m) {
                    self.push((interval + 2) * self.cost.interval_us, Ev::Poll { peer, interval: interval + 1 });
                }
            }
            Ev::Discovered { doc, views } => self.contribute(doc, views),
            Ev::Extracted { doc, view, streams } => {
                if streams.is_empty() {
                    self.finish_pair(doc, &view);
                    return;
                }
                let publisher = self.docs[doc].peer;
                for &s in &streams {
                    match self.send.mode {
                        SendMode::Parallel => self.request_admission(s),
                        SendMode::Sequential => {
                            let q = self.seq_queues.entry((publisher, doc)).or_default();
                            q.1.push_back(s);
                        }
                    }
                }
                if self.send.mode == SendMode::Sequential {
                    self.next_sequential(publisher, doc);
                }
            }
            Ev::AdmitReq(s) => {
                let c = self.streams[s].rep.consumer;
                let cons = self.consumers.entry(c).or_default();
                if cons.active < self.recv.max_concurrent_senders.max(1) {
                    cons.active += 1;
                    let p = self.streams[s].rep.publisher;
                    *cons.senders.entry(p).or_default() += 1;
                    let t = self.links.message(&self.cost, self.now, c, p);
                    self.push(t, Ev::AdmitGrant(s));
                } else {
                    cons.waiting.push_back(s);
                }
            }
            Ev::AdmitGrant(s) => {
                self.streams[s].rep.send_start = self.now;
                self.pump(s);
            }
            Ev::Arrive { s, k } => self.arrive(s, k),
            Ev::Ack { s, k } => {
                let st = &mut self.streams[s];
                if !st.acked[k] {
                    st.acked[k] = true;
                    st.inflight -= 1;
                    self.pump(s);
                }
            }
            Ev::Timeout { s, k } => {
                if !self.streams[s].acked[k] {
                    self.streams[s].rep.retransmissions += 1;
                    self.transmit(s, k);
                }
            }
            Ev::Stored { consumer } => self.stored(consumer),
            Ev::FinalAck(s) => {
                self.streams[s].rep.final_ack = self.now;
                self.report.clock.last_ack = self.report.clock.last_ack.max(self.now);
                let (doc, publisher) = (self.streams[s].doc, self.streams[s].rep.publisher);
                let view = self.streams[s].rep.view.clone();
                let r = self.streams[s].rep.clone();
                self.report.clock.exchange += r.last_arrival.saturating_sub(r.send_start);
                self.report.clock.storage += r.store_end.saturating_sub(r.store_start.unwrap_or(r.store_end));
                self.row("exchange", publisher, &r.stream, &r.doc, (r.send_start, r.last_arrival), r.bytes as f64);
                self.row("storage", r.consumer, &r.stream, &r.doc, (r.store_start.unwrap_or(r.store_end), r.store_end), r.tuples as f64);
                let key = (doc, view.clone());
                let left = self.open.get_mut(&key).expect("open pair");
                *left -= 1;
                if *left == 0 {
                    self.open.remove(&key);
                    self.finish_pair(doc, &view);
                }
                if self.send.mode == SendMode::Sequential {
                    if let Some(q) = self.seq_queues.get_mut(&(publisher, doc)) {
                        q.0 = false;
                    }
                    self.next_sequential(publisher, doc);
                }
            }
        }
    }

    fn finish_pair(&mut self, doc: usize, view: &str) {
        let e = &self.docs[doc];
        let (peer, uri) = (e.peer, e.doc.uri().to_string());
        self.logs.entry(peer).or_default().complete(&uri, view);
        self.report.clock.last_ack = self.report.clock.last_ack.max(self.now);
        self.report.contributions.push((uri, view.to_string()));
    }

    /// Claims, extracts and queues the (doc, view) pairs not yet shipped.
    fn contribute(&mut self, doc: usize, views: Vec<String>) {
        let peer = self.docs[doc].peer;
        let d = self.docs[doc].doc.clone();
        let log = self.logs.entry(peer).or_default();
        let fresh: Vec<String> = views.into_iter().filter(|v| log.claim(d.uri(), v)).collect();
        if fresh.is_empty() {
            return;
        }
        let mut comps: Vec<TreePattern> = Vec::new();
        let mut owner: Vec<(usize, usize)> = Vec::new();
        for (vi, v) in fresh.iter().enumerate() {
            for (ci, c) in extended_components(&self.views[v].pattern).into_iter().enumerate() {
                comps.push(c);
                owner.push((vi, ci));
            }
        }
        let refs: Vec<&TreePattern> = comps.iter().collect();
        let results = match_many(&refs, &d);
        let out_bytes: usize = results.iter().flatten().map(Tuple::byte_size).sum();
        let cost = self.cost.extraction_us(d.size_bytes(), comps.len(), out_bytes);
        let free = self.cpu_free.entry(peer).or_insert(0);
        let start = self.now.max(*free);
        let end = start + cost;
        *free = end;
        self.report.clock.start(start);
        self.report.clock.extraction += end - start;
        self.row("extraction", peer, &fresh.join("+"), d.uri(), (start, end), d.size_bytes() as f64);
        let mut per_view: Vec<Vec<usize>> = vec![Vec::new(); fresh.len()];
        let mut comp_results: Vec<Vec<Vec<Tuple>>> = vec![Vec::new(); fresh.len()];
        for ((vi, _), r) in owner.iter().zip(results) {
            comp_results[*vi].push(r);
        }
        for (vi, parts) in comp_results.into_iter().enumerate() {
            let v = self.views[&fresh[vi]].clone();
            for (ci, tuples) in parts.into_iter().enumerate() {
                if tuples.is_empty() {
                    continue;
                }
                let sid = v.stream_id(ci);
                let rep = StreamReport {
                    stream: sid.clone(),
                    view: v.view_id.clone(),
                    doc: d.uri().to_string(),
                    publisher: peer,
                    consumer: v.holder,
                    tuples: tuples.len(),
                    bytes: tuples.iter().map(Tuple::byte_size).sum(),
                    extract_start: start,
                    extract_end: end,
                    ..Default::default()
                };
                let batches = into_batches(&sid, d.uri(), tuples, self.cost.batch_tuples, self.cost.batch_bytes);
                let n = batches.len();
                self.streams.push(Stream {
                    rep: StreamReport { batches: n, ..rep },
                    batches,
                    next: 0,
                    acked: vec![false; n],
                    inflight: 0,
                    received: vec![false; n],
                    stored: 0,
                    doc,
                });
                per_view[vi].push(self.streams.len() - 1);
            }
        }
        for (vi, streams) in per_view.into_iter().enumerate() {
            if !streams.is_empty() {
                self.open.insert((doc, fresh[vi].clone()), streams.len());
            }
            self.push(end, Ev::Extracted { doc, view: fresh[vi].clone(), streams });
        }
    }

    fn next_sequential(&mut self, publisher: PeerAddr, doc: usize) {
        let Some(q) = self.seq_queues.get_mut(&(publisher, doc)) else { return };
        if q.0 {
            return;
        }
        if let Some(s) = q.1.pop_front() {
            q.0 = true;
            self.request_admission(s);
        }
    }

    fn request_admission(&mut self, s: usize) {
        let (p, c) = (self.streams[s].rep.publisher, self.streams[s].rep.consumer);
        let t = self.links.message(&self.cost, self.now, p, c);
        self.push(t, Ev::AdmitReq(s));
    }

    fn pump(&mut self, s: usize) {
        while self.streams[s].inflight < self.cost.window.max(1) && self.streams[s].next < self.streams[s].batches.len() {
            let k = self.streams[s].next;
            self.streams[s].next += 1;
            self.streams[s].inflight += 1;
            self.transmit(s, k);
        }
    }

    fn transmit(&mut self, s: usize, k: usize) {
        let (p, c) = (self.streams[s].rep.publisher, self.streams[s].rep.consumer);
        let bytes = self.streams[s].batches[k].byte_size() as u64;
        let t = self.links.transfer(&self.cost, self.now, p, c, bytes);
        let lost = self.cost.loss_rate > 0.0 && p != c && self.rng.gen_bool(self.cost.loss_rate.min(1.0));
        if !lost {
            self.push(t, Ev::Arrive { s, k });
        }
        if self.cost.loss_rate > 0.0 {
            self.push(t + self.cost.rto_us, Ev::Timeout { s, k });
        }
    }

    fn ack(&mut self, s: usize, k: usize) {
        let (p, c) = (self.streams[s].rep.publisher, self.streams[s].rep.consumer);
        let t = self.links.message(&self.cost, self.now, c, p);
        self.push(t, Ev::Ack { s, k });
    }

    fn arrive(&mut self, s: usize, k: usize) {
        self.streams[s].rep.last_arrival = self.streams[s].rep.last_arrival.max(self.now);
        if self.streams[s].received[k] {
            self.streams[s].rep.duplicates += 1;
            self.ack(s, k);
            return;
        }
        let c = self.streams[s].rep.consumer;
        let n = self.streams[s].batches[k].tuples.len();
        let cap = self.recv.buffer_capacity;
        let cons = self.consumers.entry(c).or_default();
        let room = cap.is_none_or(|cap| cons.buffered == 0 || cons.buffered + n <= cap);
        if room && cons.held.is_empty() {
            cons.buffer.push_back((s, k));
            cons.buffered += n;
            self.streams[s].received[k] = true;
            self.ack(s, k);
            self.kick(c);
        } else if !cons.held.contains(&(s, k)) {
            cons.held.push_back((s, k));
        }
    }

    fn kick(&mut self, c: PeerAddr) {
        let cons = self.consumers.entry(c).or_default();
        if cons.busy.is_some() {
            return;
        }
        let Some((s, k)) = cons.buffer.pop_front() else { return };
        cons.busy = Some((s, k));
        let sessions = cons.senders.len();
        let bytes = self.streams[s].batches[k].byte_size();
        let st = &mut self.streams[s].rep;
        st.store_start.get_or_insert(self.now);
        let t = self.now + self.cost.store_us(bytes, sessions);
        self.push(t, Ev::Stored { consumer: c });
    }

    fn stored(&mut self, c: PeerAddr) {
        let cons = self.consumers.get_mut(&c).expect("consumer");
        let (s, k) = cons.busy.take().expect("busy");
        let n = self.streams[s].batches[k].tuples.len();
        cons.buffered -= n;
        let sid = self.streams[s].rep.stream.clone();
        let store = self.stores.entry(sid.clone()).or_insert_with(|| ViewStore::in_memory(sid));
        if !store.apply(&self.streams[s].batches[k]).unwrap_or(false) {
            self.streams[s].rep.duplicates += 1;
        }
        self.streams[s].stored += 1;
        self.streams[s].rep.store_end = self.now;
        // Held batches move into the freed buffer space.
        let cap = self.recv.buffer_capacity;
        let mut admitted = Vec::new();
        {
            let cons = self.consumers.get_mut(&c).unwrap();
            while let Some(&(hs, hk)) = cons.held.front() {
                let hn = self.streams[hs].batches[hk].tuples.len();
                if cap.is_none_or(|cap| cons.buffered == 0 || cons.buffered + hn <= cap) {
                    cons.held.pop_front();
                    cons.buffer.push_back((hs, hk));
                    cons.buffered += hn;
                    admitted.push((hs, hk));
                } else {
                    break;
                }
            }
        }
        for (hs, hk) in admitted {
            if self.streams[hs].received[hk] {
                continue;
            }
            self.streams[hs].received[hk] = true;
            self.ack(hs, hk);
        }
        if self.streams[s].stored == self.streams[s].batches.len() {
            let p = self.streams[s].rep.publisher;
            let t = self.links.message(&self.cost, self.now, c, p);
            self.push(t, Ev::FinalAck(s));
            let cons = self.consumers.get_mut(&c).unwrap();
            cons.active -= 1;
            if let Some(n) = cons.senders.get_mut(&p) {
                *n -= 1;
                if *n == 0 {
                    cons.senders.remove(&p);
                }
            }
            if let Some(w) = cons.waiting.pop_front() {
                cons.active += 1;
                let wp = self.streams[w].rep.publisher;
                *cons.senders.entry(wp).or_default() += 1;
                let t = self.links.message(&self.cost, self.now, c, wp);
                self.push(t, Ev::AdmitGrant(w));
            }
        }
        self.kick(c);
    }
}

/// Tuples of a view, composing its component streams.
pub fn scan_view(v: &ViewDefinition, stores: &BTreeMap<String, ViewStore>) -> Vec<Tuple> {
    let parts: Vec<Vec<Tuple>> =
        (0..v.pattern.patterns().len()).map(|i| stores.get(&v.stream_id(i)).map(ViewStore::scan).unwrap_or_default()).collect();
    if parts.len() == 1 {
        return parts.into_iter().next().unwrap();
    }
    compose(&v.pattern, &parts)
}
