//! On-disk workspaces for ad-hoc queries: `views.toml` plus `docs/*.xml`.
//!
//! ```toml
//! peers = 8
//! [[view]]
//! id = "v1"
//! pattern = "//book[ID]/title[val]"
//! holder = 1
//! [[doc]]
//! file = "bib.xml"
//! peer = 0
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::catalog::{lookup_for_query, publish_view, Strategy};
use crate::dht::{Dht, PeerAddr};
use crate::exec::{execute, place, tag_results, ExecReport, PhysicalPlan, ViewStats};
use crate::extract::{Cell, Tuple};
use crate::materialize::{scan_view, CostModel, ReceivePolicy, SendPolicy, Simulation};
use crate::pattern::{parse_literal, parse_query, to_literal, JoinedTreePattern, ReturnTemplate, ViewDefinition};
use crate::rewrite::{rewrite, Rewriting};
use crate::xml::Document;

use super::fixtures;
use super::gen::{gen_camera_doc, CameraDoc};

#[derive(Debug, thiserror::Error)]
pub enum ViewDirError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("views.toml: {0}")]
    Manifest(String),
    #[error("{file}: {msg}")]
    Document { file: String, msg: String },
    #[error("query: {0}")]
    Query(String),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ViewDirError + '_ {
    move |source| ViewDirError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone)]
pub struct ViewDir {
    pub peers: u32,
    pub views: Vec<ViewDefinition>,
    /// (file name, publishing peer, text).
    pub docs: Vec<(String, PeerAddr, String)>,
}

impl ViewDir {
    /// The bibliography document with the eight sample views.
    pub fn sample() -> Self {
        let views = fixtures::sample_views()
            .into_iter()
            .enumerate()
            .map(|(i, (n, p))| ViewDefinition::new(n, p, PeerAddr(1 + i as u32 % 4)))
            .collect();
        ViewDir { peers: 6, views, docs: vec![("bib.xml".into(), PeerAddr(0), fixtures::BIBLIOGRAPHY.into())] }
    }

    /// The conference and book documents with their two views.
    pub fn conf() -> Self {
        let views = fixtures::conf_views().into_iter().zip([1, 2]).map(|((n, p), h)| ViewDefinition::new(n, p, PeerAddr(h))).collect();
        let docs = fixtures::CONF_DOCS.iter().map(|(u, s)| (format!("{u}.xml"), PeerAddr(0), s.to_string())).collect();
        ViewDir { peers: 4, views, docs }
    }

    /// `n` single-camera catalogs of about `bytes` each and the two camera views.
    pub fn camera(n: usize, bytes: usize, seed: u64) -> Self {
        let views = fixtures::CAMERA_VIEWS
            .iter()
            .zip([1, 2])
            .map(|((id, lit), h)| ViewDefinition::new(*id, parse_literal(lit).expect("fixture"), PeerAddr(h)))
            .collect();
        let docs = (0..n)
            .map(|i| {
                let mut spec = CameraDoc::single(bytes);
                spec.seed = seed.wrapping_add(i as u64);
                (format!("cam{i}.xml"), PeerAddr(0), gen_camera_doc(&spec))
            })
            .collect();
        ViewDir { peers: 4, views, docs }
    }

    pub fn write(&self, dir: &Path) -> Result<(), ViewDirError> {
        let docs = dir.join("docs");
        fs::create_dir_all(&docs).map_err(io(&docs))?;
        let mut t = toml::Table::new();
        t.insert("peers".into(), toml::Value::Integer(self.peers.into()));
        let views = self
            .views
            .iter()
            .map(|v| {
                let mut e = toml::Table::new();
                e.insert("id".into(), v.view_id.clone().into());
                e.insert("pattern".into(), to_literal(&v.pattern).into());
                e.insert("holder".into(), toml::Value::Integer(v.holder.0.into()));
                toml::Value::Table(e)
            })
            .collect();
        t.insert("view".into(), toml::Value::Array(views));
        let mut entries = Vec::new();
        for (file, peer, text) in &self.docs {
            let p = docs.join(file);
            fs::write(&p, text).map_err(io(&p))?;
            let mut e = toml::Table::new();
            e.insert("file".into(), file.clone().into());
            e.insert("peer".into(), toml::Value::Integer(peer.0.into()));
            entries.push(toml::Value::Table(e));
        }
        t.insert("doc".into(), toml::Value::Array(entries));
        let m = dir.join("views.toml");
        fs::write(&m, toml::to_string(&t).map_err(|e| ViewDirError::Manifest(e.to_string()))?).map_err(io(&m))
    }

    pub fn load(dir: &Path) -> Result<Self, ViewDirError> {
        let m = dir.join("views.toml");
        let text = fs::read_to_string(&m).map_err(io(&m))?;
        let t: toml::Table = text.parse().map_err(|e: toml::de::Error| ViewDirError::Manifest(e.message().to_string()))?;
        let bad = |msg: String| ViewDirError::Manifest(msg);
        let int = |e: &toml::Table, k: &str| -> Result<u32, ViewDirError> {
            let v = e.get(k).and_then(toml::Value::as_integer).ok_or_else(|| bad(format!("missing integer `{k}`")))?;
            u32::try_from(v).map_err(|_| bad(format!("`{k}` out of range: {v}")))
        };
        let string = |e: &toml::Table, k: &str| -> Result<String, ViewDirError> {
            e.get(k).and_then(toml::Value::as_str).map(str::to_string).ok_or_else(|| bad(format!("missing string `{k}`")))
        };
        let tables = |k: &str| -> Result<Vec<toml::Table>, ViewDirError> {
            match t.get(k) {
                None => Ok(vec![]),
                Some(toml::Value::Array(a)) => {
                    a.iter().map(|x| x.as_table().cloned().ok_or_else(|| bad(format!("`{k}` entries must be tables")))).collect()
                }
                Some(_) => Err(bad(format!("`{k}` must be an array of tables"))),
            }
        };
        let mut views = Vec::new();
        for e in tables("view")? {
            let id = string(&e, "id")?;
            let pat = string(&e, "pattern")?;
            let p = parse_literal(&pat).map_err(|err| bad(format!("view {id}: {err}")))?;
            views.push(ViewDefinition::new(id, p, PeerAddr(int(&e, "holder")?)));
        }
        let mut docs = Vec::new();
        for e in tables("doc")? {
            let file = string(&e, "file")?;
            let p = dir.join("docs").join(&file);
            let text = fs::read_to_string(&p).map_err(io(&p))?;
            docs.push((file, PeerAddr(int(&e, "peer")?), text));
        }
        let highest = views.iter().map(|v| v.holder.0).chain(docs.iter().map(|d| d.1 .0)).max().unwrap_or(0);
        let peers = match t.get("peers") {
            Some(_) => int(&t, "peers")?,
            None => highest + 1,
        };
        if peers <= highest {
            return Err(bad(format!("peers = {peers} but peer {highest} is used")));
        }
        Ok(ViewDir { peers, views, docs })
    }
}

/// What `answer` did, step by step.
#[derive(Debug, Clone)]
pub struct QueryOutcome {
    pub strategy: Strategy,
    pub lookups: usize,
    pub candidates: Vec<String>,
    pub rewriting: Option<Rewriting>,
    pub physical: Option<PhysicalPlan>,
    pub exec: Option<ExecReport>,
    /// Tagged results for dialect queries, one tuple per line otherwise.
    pub output: String,
}

fn parse_q(q: &str) -> Result<(JoinedTreePattern, Option<ReturnTemplate>), ViewDirError> {
    if q.trim_start().starts_with("for ") {
        let p = parse_query(q).map_err(|e| ViewDirError::Query(e.to_string()))?;
        Ok((p.pattern, Some(p.template)))
    } else {
        Ok((parse_literal(q).map_err(|e| ViewDirError::Query(e.to_string()))?, None))
    }
}

fn plain_rows(rows: &[Tuple]) -> String {
    let mut out = String::new();
    for t in rows {
        let cells: Vec<String> = t
            .0
            .iter()
            .map(|c| match c {
                Cell::Id(i) => i.to_string(),
                Cell::Val(s) | Cell::Cont(s) => s.to_string(),
            })
            .collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

/// Materializes the workspace views in simulation, looks up candidate views
/// for `q` with `strategy`, rewrites and executes from peer 0.
pub fn answer(vd: &ViewDir, q: &str, strategy: Strategy, cost: &CostModel, seed: u64) -> Result<QueryOutcome, ViewDirError> {
    let (query, template) = parse_q(q)?;
    let mut sim = Simulation::new(Dht::new(vd.peers), cost.clone(), SendPolicy::default(), ReceivePolicy::default(), seed);
    sim.strategy = strategy;
    for v in &vd.views {
        sim.schedule_view(0, v.clone());
    }
    for (file, peer, text) in &vd.docs {
        let d = Document::parse_str(text, file.trim_end_matches(".xml"))
            .map_err(|e| ViewDirError::Document { file: file.clone(), msg: e.to_string() })?;
        sim.schedule_document(1_000_000, *peer, Arc::new(d));
    }
    let (_, stores) = sim.run();

    let mut dht = Dht::new(vd.peers);
    for v in &vd.views {
        publish_view(&mut dht, v.holder, v, strategy).map_err(|e| ViewDirError::Query(e.to_string()))?;
    }
    let found = lookup_for_query(&mut dht, PeerAddr(0), &query, strategy).map_err(|e| ViewDirError::Query(e.to_string()))?;
    let candidates: Vec<String> = found.ids().into_iter().collect();
    let mut out = QueryOutcome {
        strategy,
        lookups: found.lookups(),
        candidates,
        rewriting: None,
        physical: None,
        exec: None,
        output: String::new(),
    };
    let Some(r) = rewrite(&query, &found.views, 3).into_iter().next() else { return Ok(out) };

    let used: BTreeSet<&str> = r.used_views.iter().map(String::as_str).collect();
    let mut source: BTreeMap<String, Vec<Tuple>> = BTreeMap::new();
    let mut stats = BTreeMap::new();
    for v in found.views.iter().filter(|v| used.contains(v.view_id.as_str())) {
        let rows = scan_view(v, &stores);
        let bytes = rows.iter().map(Tuple::byte_size).sum();
        stats.insert(v.view_id.clone(), ViewStats { holder: v.holder, tuples: rows.len(), bytes });
        source.insert(v.view_id.clone(), rows);
    }
    let pp = place(&r.plan, &stats, PeerAddr(0)).map_err(|e| ViewDirError::Query(e.to_string()))?;
    let ex = execute(&pp, &source, cost).map_err(|e| ViewDirError::Query(e.to_string()))?;
    out.output = match &template {
        Some(t) => tag_results(&query, t, &ex.schema, &ex.rows),
        None => plain_rows(&ex.rows),
    };
    out.rewriting = Some(r);
    out.physical = Some(pp);
    out.exec = Some(ex);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_round_trips_and_answers() {
        let dir = tempfile::tempdir().unwrap();
        ViewDir::sample().write(dir.path()).unwrap();
        let vd = ViewDir::load(dir.path()).unwrap();
        assert_eq!(vd.views.len(), 8);
        let o = answer(&vd, "//book[ID]/title[val]", Strategy::Lpi, &CostModel::default(), 1).unwrap();
        assert!(o.candidates.contains(&"v1".to_string()));
        assert!(o.rewriting.is_some());
        assert!(o.output.contains("Found. of Databases"), "{}", o.output);
    }

    #[test]
    fn conf_query_is_tagged() {
        let o = answer(&ViewDir::conf(), fixtures::CONF_QUERY, Strategy::Li, &CostModel::default(), 1).unwrap();
        assert!(o.output.starts_with("<res><tval>"), "{}", o.output);
    }

    #[test]
    fn bad_manifest_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("views.toml"), "[[view]]\nid = 3\n").unwrap();
        assert!(matches!(ViewDir::load(dir.path()), Err(ViewDirError::Manifest(_))));
    }
}
