//! Scenario runner: builds each workload point, simulates it and reports
//! metric rows.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::catalog::{lookup_for_query, publish_view, strategy_key, Strategy};
use crate::dht::{Dht, PeerAddr};
use crate::exec::{execute, place, ViewStats};
use crate::extract::Tuple;
use crate::materialize::{scan_view, CostModel, ExtractMode, Micros, ReceivePolicy, SendMode, SimReport, Simulation};
use crate::pattern::{jp, leaf_paths, JoinedTreePattern, ViewDefinition};
use crate::rewrite::rewrite;
use crate::xml::Document;

use super::config::{ConfigError, Experiment, ExperimentConfig, Params};
use super::exp8::gen_exp8_family;
use super::fixtures::{CAMERA_QUERIES, CAMERA_VIEWS};
use super::gen::{gen_camera_doc, gen_site_doc, gen_tagged_doc, CameraDoc};

pub const CSV_HEADER: &str = "run_id,phase,peer,view,doc,start,end,value";

const MB: usize = 1 << 20;
const KB: usize = 1 << 10;
/// Documents are published this long after views.
const DOC_TIME: Micros = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub run_id: String,
    pub phase: String,
    pub peer: Option<PeerAddr>,
    pub view: String,
    pub doc: String,
    pub start: Micros,
    pub end: Micros,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub rows: Vec<CsvRow>,
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(CSV_HEADER.split(',')).expect("in-memory write");
        for r in &self.rows {
            let peer = r.peer.map(|p| p.0.to_string()).unwrap_or_default();
            let (start, end, value) = (r.start.to_string(), r.end.to_string(), r.value.to_string());
            w.write_record([r.run_id.as_str(), &r.phase, &peer, &r.view, &r.doc, &start, &end, &value]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    /// Run ids in order of first appearance.
    pub fn runs(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.rows.iter().filter(|r| seen.insert(r.run_id.as_str())).map(|r| r.run_id.as_str()).collect()
    }

    /// Value of the summary row (no peer, view or doc) of a run.
    pub fn summary(&self, run_id: &str, phase: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.run_id == run_id && r.phase == phase && r.peer.is_none() && r.view.is_empty() && r.doc.is_empty())
            .map(|r| r.value)
    }

    fn push(&mut self, run_id: &str, phase: &str, start: Micros, end: Micros, value: f64) {
        self.rows.push(CsvRow { run_id: run_id.into(), phase: phase.into(), peer: None, view: String::new(), doc: String::new(), start, end, value });
    }
}

/// Variant of a workload point besides the table values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Plain,
    Extract(ExtractMode),
    Send(SendMode),
    Admit(usize),
    Local(bool),
    Strategy(Strategy),
}

impl Mode {
    fn tag(self) -> String {
        match self {
            Mode::Plain => String::new(),
            Mode::Extract(ExtractMode::Parallel) | Mode::Send(SendMode::Parallel) => "parallel".into(),
            Mode::Extract(ExtractMode::Sequential) | Mode::Send(SendMode::Sequential) => "sequential".into(),
            Mode::Admit(n) => format!("admit{n}"),
            Mode::Local(true) => "local".into(),
            Mode::Local(false) => "remote".into(),
            Mode::Strategy(s) => s.name().to_ascii_lowercase(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub run_id: String,
    pub params: Params,
    pub mode: Mode,
    /// The swept value.
    pub x: usize,
}

fn default_sweep(exp: Experiment) -> Vec<usize> {
    match exp {
        Experiment::Numbered(1) => vec![4, 8],
        Experiment::Numbered(2) => vec![1, 2, 3, 4, 5],
        Experiment::Numbered(3) => vec![1, 2, 4, 8, 16, 32, 64],
        Experiment::Numbered(4) => vec![64, 512, 1024],
        Experiment::Numbered(5) => vec![64, 640, 1280, 3200],
        Experiment::Numbered(6) => vec![1, 2, 4, 8, 16, 32, 64],
        Experiment::Numbered(7) => vec![16, 32, 64, 128],
        Experiment::Numbered(8) => vec![1440],
        Experiment::Numbered(9) => vec![20, 50, 100, 200, 500],
        Experiment::DhtSize => vec![16, 32, 64, 128],
        Experiment::Netcap => vec![256, 512, 1024],
        Experiment::Subnets => vec![2, 4, 8, 12, 24],
        Experiment::Numbered(_) => vec![],
    }
}

fn modes(cfg: &ExperimentConfig) -> Vec<Mode> {
    match cfg.exp {
        Experiment::Numbered(1) => vec![Mode::Extract(ExtractMode::Sequential), Mode::Extract(ExtractMode::Parallel)],
        Experiment::Numbered(3) | Experiment::Numbered(4) => vec![Mode::Send(SendMode::Sequential), Mode::Send(SendMode::Parallel)],
        Experiment::Numbered(5) => vec![Mode::Admit(1), Mode::Admit(cfg.recv.max_concurrent_senders.max(2))],
        Experiment::Numbered(8) => Strategy::ALL.iter().map(|&s| Mode::Strategy(s)).collect(),
        Experiment::Netcap => vec![Mode::Local(true), Mode::Local(false)],
        _ => vec![Mode::Plain],
    }
}

/// Table values of a point with swept value `x`.
fn params(cfg: &ExperimentConfig, x: usize) -> Params {
    let p = |peers, doc_peers, views, view_peers, docs, doc_bytes| Params {
        peers,
        doc_peers,
        views,
        view_peers,
        docs,
        matching_docs: docs,
        doc_bytes: cfg.bytes(doc_bytes),
    };
    let mut t = match cfg.exp {
        Experiment::Numbered(1) => p(2, 1, x, 1, 1, 8 * MB),
        Experiment::Numbered(2) => p(2, 1, 1, 1, 1, x * MB),
        Experiment::Numbered(3) => p(65, 1, x, x, 5, MB),
        Experiment::Numbered(4) => p(65, 1, 64, 64, x, 16 * KB),
        Experiment::Numbered(5) => p(65, 64, 1, 1, x, 16 * KB),
        Experiment::Numbered(6) => p(65, x, 1, 1, 512, 16 * KB),
        Experiment::Numbered(7) => p(16, 16, 4, 4, x, MB),
        Experiment::Numbered(8) => Params { peers: 250, views: x, view_peers: 250, ..Params::default() },
        Experiment::Numbered(9) => p(20, 20, 2, 2, x, 32 * KB),
        Experiment::DhtSize => p(x, 8, 1, 1, 16, 256 * KB),
        Experiment::Netcap => p(16, 16, 16, 16, 16, x * KB),
        Experiment::Subnets => p(48, 48, 48 / x.max(1), 48 / x.max(1), 48, 0),
        Experiment::Numbered(_) => Params::default(),
    };
    if let Some(v) = cfg.peers {
        t.peers = v;
    }
    if let Some(v) = cfg.doc_peers {
        t.doc_peers = v;
    }
    if let Some(v) = cfg.views {
        t.views = v;
        t.view_peers = t.view_peers.min(v);
    }
    if let Some(v) = cfg.docs {
        t.docs = v;
        t.matching_docs = v;
    }
    if let Some(v) = cfg.doc_bytes {
        t.doc_bytes = v;
    }
    t
}

/// Every workload point, validated.
pub fn plan(cfg: &ExperimentConfig) -> Result<Vec<Point>, ConfigError> {
    let sweep = cfg.sweep.clone().unwrap_or_else(|| default_sweep(cfg.exp));
    let mut out = Vec::new();
    for m in modes(cfg) {
        for &x in &sweep {
            let params = params(cfg, x);
            let tag = m.tag();
            let run_id = if tag.is_empty() { format!("exp{}/x={x}", cfg.exp) } else { format!("exp{}/{tag}/x={x}", cfg.exp) };
            params.validate(&run_id)?;
            extra_checks(cfg.exp, &params, x, &run_id)?;
            out.push(Point { run_id, params, mode: m, x });
        }
    }
    Ok(out)
}

fn extra_checks(exp: Experiment, p: &Params, x: usize, point: &str) -> Result<(), ConfigError> {
    let bad = |msg: String| Err(ConfigError::Infeasible { point: point.into(), msg });
    match exp {
        Experiment::Numbered(1) if !(1..=8).contains(&x) => bad("between 1 and 8 views".into()),
        Experiment::Numbered(3) if !(x.is_power_of_two() && x <= 64) => bad("consumer count must be a power of two up to 64".into()),
        Experiment::Numbered(3) | Experiment::Numbered(4) if p.peers <= p.views => bad("one publisher plus the consumers".into()),
        Experiment::Numbered(7) if !p.doc_peers.is_multiple_of(p.views.max(1)) => bad("publishers must split evenly into groups".into()),
        Experiment::Subnets if 48 % x != 0 || x > p.peers => bad("documents per view must divide 48".into()),
        Experiment::DhtSize if p.peers <= p.doc_peers => bad("publishers plus the consumer exceed the network".into()),
        _ => Ok(()),
    }
}

/// Runs every point of `cfg`. Invalid workloads fail before any point is
/// simulated.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, ConfigError> {
    let points = plan(cfg)?;
    let mut report = Report::default();
    let mut docs = DocCache::default();
    for pt in &points {
        run_point(cfg, pt, &mut docs, &mut report);
    }
    Ok(report)
}

/// Parsed documents by generator key; reused under fresh uris.
#[derive(Default)]
struct DocCache {
    docs: BTreeMap<String, Arc<Document>>,
}

impl DocCache {
    fn get(&mut self, key: &str, uri: &str, gen: impl FnOnce() -> String) -> Arc<Document> {
        let base = self.docs.entry(key.to_string()).or_insert_with(|| Arc::new(Document::parse_str(&gen(), key).expect("generated documents parse")));
        Arc::new(base.with_uri(uri))
    }
}

struct Scenario {
    peers: u32,
    views: Vec<ViewDefinition>,
    docs: Vec<(PeerAddr, Arc<Document>)>,
    cost: CostModel,
    recv: ReceivePolicy,
    send: SendMode,
}

impl Scenario {
    fn new(cfg: &ExperimentConfig, peers: usize) -> Self {
        Scenario { peers: peers as u32, views: vec![], docs: vec![], cost: cfg.cost.clone(), recv: cfg.recv, send: cfg.send.mode }
    }

    fn view(&mut self, id: impl Into<String>, literal: &str, holder: usize) {
        self.views.push(ViewDefinition::new(id, jp(literal), PeerAddr(holder as u32)));
    }

    fn simulate(self, cfg: &ExperimentConfig) -> (SimReport, BTreeMap<String, crate::materialize::ViewStore>) {
        let send = crate::materialize::SendPolicy { mode: self.send };
        let mut sim = Simulation::new(Dht::new(self.peers), self.cost, send, self.recv, cfg.seed);
        sim.strategy = cfg.strategy;
        for v in self.views {
            sim.schedule_view(0, v);
        }
        for (p, d) in self.docs {
            sim.schedule_document(DOC_TIME, p, d);
        }
        sim.run()
    }
}

fn record(report: &mut Report, run_id: &str, rep: &SimReport) {
    for r in &rep.rows {
        report.rows.push(CsvRow {
            run_id: run_id.into(),
            phase: r.phase.into(),
            peer: Some(r.peer),
            view: r.view.clone(),
            doc: r.doc.clone(),
            start: r.start,
            end: r.end,
            value: r.value,
        });
    }
    let c = &rep.clock;
    let start = c.first_start.unwrap_or(0);
    report.push(run_id, "materialization", start, c.last_ack.max(start), c.materialization_time() as f64);
    report.push(run_id, "extraction_total", start, c.last_ack.max(start), c.extraction as f64);
    report.push(run_id, "exchange_total", start, c.last_ack.max(start), c.exchange as f64);
    report.push(run_id, "storage_total", start, c.last_ack.max(start), c.storage as f64);
    let tuples: usize = rep.streams.iter().map(|s| s.tuples).sum();
    let bytes: usize = rep.streams.iter().map(|s| s.bytes).sum();
    report.push(run_id, "tuples", start, c.last_ack.max(start), tuples as f64);
    report.push(run_id, "bytes", start, c.last_ack.max(start), bytes as f64);
}

fn camera_key(spec: &CameraDoc) -> String {
    format!("cam:{}:{}:{:?}:{}:{}", spec.root, spec.cameras, spec.labels, spec.target_bytes, spec.seed)
}

fn camera(cache: &mut DocCache, spec: CameraDoc, uri: String) -> Arc<Document> {
    let key = camera_key(&spec);
    cache.get(&key, &uri, || gen_camera_doc(&spec))
}

fn run_point(cfg: &ExperimentConfig, pt: &Point, cache: &mut DocCache, report: &mut Report) {
    let t = pt.params;
    let id = pt.run_id.as_str();
    match cfg.exp {
        Experiment::Numbered(1) => {
            let mut sc = Scenario::new(cfg, t.peers);
            if let Mode::Extract(m) = pt.mode {
                sc.cost.extract_mode = m;
            }
            for i in 1..=t.views {
                sc.view(format!("t{i}"), &format!("//t{i}[ID]"), 1);
            }
            let bytes = t.doc_bytes;
            sc.docs.push((PeerAddr(0), cache.get(&format!("tagged:{bytes}"), "e1/d", || gen_tagged_doc(8, bytes))));
            record(report, id, &sc.simulate(cfg).0);
        }
        Experiment::Numbered(2) => {
            let mut sc = Scenario::new(cfg, t.peers);
            sc.view("v", "//catalog[cont]", 1);
            sc.docs.push((PeerAddr(0), camera(cache, CameraDoc::new(t.doc_bytes), format!("e2/d{}", pt.x))));
            record(report, id, &sc.simulate(cfg).0);
        }
        Experiment::Numbered(3) => {
            let mut sc = Scenario::new(cfg, t.peers);
            if let Mode::Send(m) = pt.mode {
                sc.send = m;
            }
            let k = t.views;
            for j in 0..k {
                sc.view(format!("v{j}"), &format!("//catalog//camera[cont][type[contains(.,'p{k}n{j}')]]"), 1 + j % t.view_peers);
            }
            for d in 0..t.docs {
                sc.docs.push((PeerAddr(0), camera(cache, CameraDoc::new(t.doc_bytes).uniform(), format!("e3/d{d}"))));
            }
            record(report, id, &sc.simulate(cfg).0);
        }
        Experiment::Numbered(4) => {
            let mut sc = Scenario::new(cfg, t.peers);
            if let Mode::Send(m) = pt.mode {
                sc.send = m;
            }
            for k in 1..=t.views {
                sc.view(format!("v{k}"), &format!("//catalog//camera_{k}[cont]"), 1 + (k - 1) % t.view_peers);
            }
            for d in 0..t.docs {
                sc.docs.push((PeerAddr(0), camera(cache, CameraDoc::new(t.doc_bytes), format!("e4/d{d}"))));
            }
            record(report, id, &sc.simulate(cfg).0);
        }
        Experiment::Numbered(5) | Experiment::Numbered(6) => {
            let mut sc = Scenario::new(cfg, t.peers);
            if let Mode::Admit(n) = pt.mode {
                sc.recv.max_concurrent_senders = n;
            }
            sc.view("v", "//catalog/camera[cont]", 0);
            let e = cfg.exp;
            for d in 0..t.docs {
                let publisher = 1 + d % t.doc_peers;
                sc.docs.push((PeerAddr(publisher as u32), camera(cache, CameraDoc::new(t.doc_bytes).uniform(), format!("e{e}/d{d}"))));
            }
            record(report, id, &sc.simulate(cfg).0);
        }
        Experiment::Numbered(7) => {
            let mut sc = Scenario::new(cfg, t.peers);
            let mut peers: Vec<usize> = (0..t.doc_peers).collect();
            peers.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
            let groups = t.views;
            let size = t.doc_peers / groups;
            let per_peer = (t.docs / t.doc_peers).max(1);
            for g in 0..groups {
                let members = &peers[g * size..(g + 1) * size];
                sc.view(format!("g{g}"), &format!("//catalog{g}/camera[cont]"), members[0]);
                for (m, &p) in members.iter().enumerate() {
                    for k in 0..per_peer {
                        let spec = CameraDoc::new(t.doc_bytes).uniform().root(format!("catalog{g}"));
                        sc.docs.push((PeerAddr(p as u32), camera(cache, spec, format!("e7/g{g}/p{m}/d{k}"))));
                    }
                }
            }
            record(report, id, &sc.simulate(cfg).0);
        }
        Experiment::Numbered(8) => {
            if let Mode::Strategy(s) = pt.mode {
                run_exp8(cfg, pt, s, report);
            }
        }
        Experiment::Numbered(9) => run_exp9(cfg, pt, cache, report),
        Experiment::DhtSize => {
            let mut sc = Scenario::new(cfg, t.peers);
            sc.view("v", "//catalog/camera[cont]", 0);
            for d in 0..t.docs {
                let p = 1 + d % t.doc_peers;
                sc.docs.push((PeerAddr(p as u32), camera(cache, CameraDoc::new(t.doc_bytes).uniform(), format!("ds/d{d}"))));
            }
            record(report, id, &sc.simulate(cfg).0);
        }
        Experiment::Netcap => {
            let mut sc = Scenario::new(cfg, t.peers);
            let local = pt.mode == Mode::Local(true);
            for p in 0..t.docs {
                let holder = if local { p } else { (p + 1) % t.peers };
                sc.view(format!("v{p}"), &format!("//catalog{p}/camera[cont]"), holder);
                let spec = CameraDoc::new(t.doc_bytes).uniform().root(format!("catalog{p}"));
                sc.docs.push((PeerAddr(p as u32), camera(cache, spec, format!("nc/d{p}"))));
            }
            record(report, id, &sc.simulate(cfg).0);
        }
        Experiment::Subnets => {
            let mut sc = Scenario::new(cfg, t.peers);
            let n = pt.x;
            for g in 0..t.views {
                sc.view(format!("g{g}"), &format!("//site[g{g}[cont]]/people[cont]"), g * n);
            }
            let fanout = ((10.0 * cfg.scale).round() as usize).max(1);
            for p in 0..t.docs {
                let g = p / n;
                let key = format!("site:{g}:{fanout}");
                sc.docs.push((PeerAddr(p as u32), cache.get(&key, &format!("sn/d{p}"), || gen_site_doc(&format!("g{g}"), fanout, 100))));
            }
            record(report, id, &sc.simulate(cfg).0);
        }
        Experiment::Numbered(_) => {}
    }
}

/// Modelled embedding test cost per pair of pattern nodes.
const EMBED_US_PER_NODE_PAIR: f64 = 0.5;

fn run_exp8(cfg: &ExperimentConfig, pt: &Point, s: Strategy, report: &mut Report) {
    let fam = gen_exp8_family(cfg.seed);
    let q = fam.q();
    let mut dht = Dht::new(pt.params.peers as u32);
    let mut published = 0usize;
    let mut publish_us: Micros = 0;
    for (_, v) in &fam.views {
        let log = publish_view(&mut dht, v.holder, v, s).expect("publication on a healthy overlay");
        published += log.count();
        publish_us += log.ops.iter().map(|(_, h)| 2 * cfg.cost.latency_us * u64::from(*h)).sum::<Micros>();
    }
    let entries = dht.entry_count(&strategy_key(s, ""));
    let found = lookup_for_query(&mut dht, PeerAddr(0), q, s).expect("lookup on a healthy overlay");
    let lookup_us: Micros = found.log.ops.iter().map(|(_, h)| 2 * cfg.cost.latency_us * u64::from((*h).max(1))).sum();
    let retrieved = found.ids();
    let embeddable: BTreeSet<&str> = fam.embeddable().iter().map(|v| v.view_id.as_str()).collect();
    let useful = found.views.iter().filter(|v| embeddable.contains(v.view_id.as_str())).count();
    let embed_us: f64 = found.views.iter().map(|v| EMBED_US_PER_NODE_PAIR * (v.pattern.size() * q.size()) as f64).sum();
    let per_leaf: usize = leaf_paths(q).iter().map(|p| (1usize << p.len()) - 1).sum();
    let id = pt.run_id.as_str();
    report.push(id, "views", 0, 0, fam.views.len() as f64);
    report.push(id, "index_entries", 0, publish_us, entries as f64);
    report.push(id, "published_keys", 0, publish_us, published as f64);
    report.push(id, "lookups", 0, lookup_us, found.lookups() as f64);
    report.push(id, "lookups_per_leaf_path", 0, 0, per_leaf as f64);
    report.push(id, "retrieved", 0, lookup_us, retrieved.len() as f64);
    report.push(id, "useful", 0, lookup_us, useful as f64);
    report.push(id, "embeddable", 0, 0, embeddable.len() as f64);
    report.push(id, "lookup_time", 0, lookup_us, lookup_us as f64);
    report.push(id, "embedding_time", lookup_us, lookup_us + embed_us.ceil() as Micros, embed_us);
}

fn run_exp9(cfg: &ExperimentConfig, pt: &Point, cache: &mut DocCache, report: &mut Report) {
    let t = pt.params;
    let id = pt.run_id.as_str();
    let mut sc = Scenario::new(cfg, t.peers);
    // Two consumers and a query peer at distinct sites.
    let holders = [1usize, 2];
    let query_peer = PeerAddr(3);
    for ((name, lit), h) in CAMERA_VIEWS.iter().zip(holders) {
        sc.view(*name, lit, h);
    }
    for d in 0..t.docs {
        sc.docs.push((PeerAddr((d % t.doc_peers) as u32), camera(cache, CameraDoc::single(t.doc_bytes), format!("e9/d{d}"))));
    }
    let views = sc.views.clone();
    let (rep, stores) = sc.simulate(cfg);
    record(report, id, &rep);
    let mut source: BTreeMap<String, Vec<Tuple>> = BTreeMap::new();
    let mut stats = BTreeMap::new();
    for v in &views {
        let rows = scan_view(v, &stores);
        let bytes = rows.iter().map(Tuple::byte_size).sum();
        stats.insert(v.view_id.clone(), ViewStats { holder: v.holder, tuples: rows.len(), bytes });
        source.insert(v.view_id.clone(), rows);
    }
    for (qname, lit) in CAMERA_QUERIES {
        let q: JoinedTreePattern = jp(lit);
        let Some(r) = rewrite(&q, &views, 3).into_iter().next() else {
            report.push(id, &format!("{qname}_no_rewriting"), 0, 0, 0.0);
            continue;
        };
        let pp = place(&r.plan, &stats, query_peer).expect("stats for every used view");
        let ex = execute(&pp, &source, &cfg.cost).expect("plans type-check against their views");
        report.push(id, &format!("{qname}_response_time"), 0, ex.response_time, ex.response_time as f64);
        let ttfr = ex.first_result.unwrap_or(ex.response_time);
        report.push(id, &format!("{qname}_first_result"), 0, ttfr, ttfr as f64);
        report.push(id, &format!("{qname}_tuples"), 0, ex.response_time, ex.rows.len() as f64);
        report.push(id, &format!("{qname}_bytes_shipped"), 0, ex.response_time, ex.bytes_shipped as f64);
        report.push(id, &format!("{qname}_views"), 0, 0, r.used_views.len() as f64);
    }
}

/// Least-squares fit of `ys` against `xs`: (slope, intercept, R²).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let r2 = if sxx == 0.0 || syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_of_a_line_is_exact() {
        let (m, b, r2) = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((m - 2.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_points_fail_before_running() {
        let mut cfg = ExperimentConfig::new(Experiment::Numbered(6), 0);
        cfg.sweep = Some(vec![100]);
        assert!(matches!(run_experiment(&cfg), Err(ConfigError::Infeasible { .. })));
        let mut cfg = ExperimentConfig::new(Experiment::Numbered(2), 0);
        cfg.docs = Some(0);
        cfg.doc_peers = Some(3);
        assert!(matches!(plan(&cfg), Err(ConfigError::Infeasible { .. })));
    }

    #[test]
    fn csv_has_header_and_quotes() {
        let mut r = Report::default();
        r.push("a,b", "materialization", 0, 5, 5.0);
        assert_eq!(r.to_csv(), format!("{CSV_HEADER}\n\"a,b\",materialization,,,,0,5,5\n"));
    }
}
