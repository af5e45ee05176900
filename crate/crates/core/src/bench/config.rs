//! Experiment configuration: which scenario, the workload table, policies
//! and the cost model. Files are `key = value` lines.

use std::fmt;
use std::str::FromStr;

use crate::catalog::Strategy;
use crate::materialize::{CostModel, ExtractMode, ReceivePolicy, SendMode, SendPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    /// Experiments 1 to 9.
    Numbered(u8),
    DhtSize,
    Netcap,
    Subnets,
}

impl Experiment {
    pub const ALL: [Experiment; 12] = [
        Experiment::Numbered(1),
        Experiment::Numbered(2),
        Experiment::Numbered(3),
        Experiment::Numbered(4),
        Experiment::Numbered(5),
        Experiment::Numbered(6),
        Experiment::Numbered(7),
        Experiment::Numbered(8),
        Experiment::Numbered(9),
        Experiment::DhtSize,
        Experiment::Netcap,
        Experiment::Subnets,
    ];
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Experiment::Numbered(n) => write!(f, "{n}"),
            Experiment::DhtSize => f.write_str("dht-size"),
            Experiment::Netcap => f.write_str("netcap"),
            Experiment::Subnets => f.write_str("subnets"),
        }
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "dht-size" => Ok(Experiment::DhtSize),
            "netcap" => Ok(Experiment::Netcap),
            "subnets" => Ok(Experiment::Subnets),
            _ => match s.parse::<u8>() {
                Ok(n @ 1..=9) => Ok(Experiment::Numbered(n)),
                _ => Err(ConfigError::Value { key: "exp".into(), msg: format!("unknown experiment `{s}` (1..9, dht-size, netcap, subnets)") }),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("infeasible workload at {point}: {msg}")]
    Infeasible { point: String, msg: String },
}

/// One point of the workload table: peers, publishers, views, view
/// holders, documents, matching documents and document size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Params {
    pub peers: usize,
    pub doc_peers: usize,
    pub views: usize,
    pub view_peers: usize,
    pub docs: usize,
    pub matching_docs: usize,
    pub doc_bytes: usize,
}

impl Params {
    pub fn validate(&self, point: &str) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Infeasible { point: point.to_string(), msg });
        if self.peers == 0 {
            return bad("no peers".into());
        }
        if self.doc_peers > self.peers {
            return bad(format!("|P_D| = {} exceeds |P| = {}", self.doc_peers, self.peers));
        }
        if self.view_peers > self.peers {
            return bad(format!("|P_V| = {} exceeds |P| = {}", self.view_peers, self.peers));
        }
        if self.matching_docs > self.docs {
            return bad(format!("|D_V| = {} exceeds |D| = {}", self.matching_docs, self.docs));
        }
        if self.docs > 0 && self.doc_peers == 0 {
            return bad("documents but no publishers".into());
        }
        if self.views > 0 && self.view_peers == 0 {
            return bad("views but no view holders".into());
        }
        if self.view_peers > self.views {
            return bad(format!("|P_V| = {} exceeds |V| = {}", self.view_peers, self.views));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub exp: Experiment,
    pub seed: u64,
    pub cost: CostModel,
    pub send: SendPolicy,
    pub recv: ReceivePolicy,
    pub strategy: Strategy,
    /// Multiplies every generated document size.
    pub scale: f64,
    /// Replaces the swept values of the experiment.
    pub sweep: Option<Vec<usize>>,
    /// Overrides for the base workload point.
    pub peers: Option<usize>,
    pub doc_peers: Option<usize>,
    pub views: Option<usize>,
    pub docs: Option<usize>,
    pub doc_bytes: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(exp: Experiment, seed: u64) -> Self {
        ExperimentConfig {
            exp,
            seed,
            cost: CostModel::default(),
            send: SendPolicy::default(),
            recv: ReceivePolicy::default(),
            strategy: Strategy::default(),
            scale: 1.0,
            sweep: None,
            peers: None,
            doc_peers: None,
            views: None,
            docs: None,
            doc_bytes: None,
        }
    }

    /// Parses `key = value` lines; `#` starts a comment. `exp` is required
    /// unless `default` is given.
    pub fn parse(text: &str, default: Option<Experiment>) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
        let exp = match table.get("exp") {
            Some(v) => value_str(v).parse()?,
            None => default.ok_or_else(|| ConfigError::Value { key: "exp".into(), msg: "missing".into() })?,
        };
        let mut cfg = ExperimentConfig::new(exp, 0);
        for (k, v) in &table {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &toml::Value) -> Result<(), ConfigError> {
        let err = |msg: &str| ConfigError::Value { key: key.to_string(), msg: msg.to_string() };
        let int = || v.as_integer().filter(|i| *i >= 0).map(|i| i as u64).ok_or_else(|| err("expected a non-negative integer"));
        let float = || v.as_float().or_else(|| v.as_integer().map(|i| i as f64)).ok_or_else(|| err("expected a number"));
        let c = &mut self.cost;
        match key {
            "exp" => {}
            "seed" => self.seed = int()?,
            "scale" => {
                self.scale = float()?;
                if self.scale.is_nan() || self.scale <= 0.0 {
                    return Err(err("must be positive"));
                }
            }
            "sweep" => {
                let arr = v.as_array().ok_or_else(|| err("expected an array"))?;
                let vals = arr
                    .iter()
                    .map(|x| x.as_integer().filter(|i| *i > 0).map(|i| i as usize).ok_or_else(|| err("expected positive integers")))
                    .collect::<Result<Vec<_>, _>>()?;
                self.sweep = Some(vals);
            }
            "peers" => self.peers = Some(int()? as usize),
            "doc_peers" => self.doc_peers = Some(int()? as usize),
            "views" => self.views = Some(int()? as usize),
            "docs" => self.docs = Some(int()? as usize),
            "doc_bytes" => self.doc_bytes = Some(int()? as usize),
            "strategy" => self.strategy = value_str(v).parse().map_err(|m: String| err(&m))?,
            "send" => {
                self.send.mode = match value_str(v).as_str() {
                    "parallel" => SendMode::Parallel,
                    "sequential" => SendMode::Sequential,
                    _ => return Err(err("parallel or sequential")),
                }
            }
            "extract" => {
                c.extract_mode = match value_str(v).as_str() {
                    "parallel" => ExtractMode::Parallel,
                    "sequential" => ExtractMode::Sequential,
                    _ => return Err(err("parallel or sequential")),
                }
            }
            "max_concurrent_senders" => self.recv.max_concurrent_senders = int()?.max(1) as usize,
            "buffer_capacity" => self.recv.buffer_capacity = Some(int()? as usize).filter(|&b| b > 0),
            "latency_us" => c.latency_us = int()?,
            "bandwidth" => c.bandwidth = int()?.max(1),
            "parse_ns_per_byte" => c.parse_ns_per_byte = float()?,
            "match_ns_per_byte" => c.match_ns_per_byte = float()?,
            "emit_ns_per_byte" => c.emit_ns_per_byte = float()?,
            "store_bytes_per_s" => c.store_bytes_per_s = int()?.max(1),
            "store_batch_us" => c.store_batch_us = int()?,
            "contention" => c.contention = float()?,
            "window" => c.window = int()?.max(1) as usize,
            "batch_tuples" => c.batch_tuples = int()?.max(1) as usize,
            "batch_bytes" => c.batch_bytes = int()?.max(1) as usize,
            "loss_rate" => {
                c.loss_rate = float()?;
                if !(0.0..1.0).contains(&c.loss_rate) {
                    return Err(err("must be in [0, 1)"));
                }
            }
            "rto_us" => c.rto_us = int()?.max(1),
            "interval_us" => c.interval_us = int()?.max(1),
            "operator_ns_per_byte" => c.operator_ns_per_byte = float()?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub(crate) fn bytes(&self, b: usize) -> usize {
        (b as f64 * self.scale).round() as usize
    }
}

fn value_str(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_key_values() {
        let c = ExperimentConfig::parse("exp = 3\nseed = 9\nsend = \"sequential\"\nlatency_us = 5000\nsweep = [1, 2]\n", None).unwrap();
        assert_eq!(c.exp, Experiment::Numbered(3));
        assert_eq!(c.seed, 9);
        assert_eq!(c.send.mode, SendMode::Sequential);
        assert_eq!(c.cost.latency_us, 5000);
        assert_eq!(c.sweep, Some(vec![1, 2]));
        let named = ExperimentConfig::parse("exp = \"dht-size\"", None).unwrap();
        assert_eq!(named.exp, Experiment::DhtSize);
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        assert_eq!(ExperimentConfig::parse("exp = 1\nbogus = 1", None), Err(ConfigError::UnknownKey("bogus".into())));
        assert!(ExperimentConfig::parse("exp = 12", None).is_err());
        assert!(ExperimentConfig::parse("exp = 1\nloss_rate = 2.0", None).is_err());
    }

    #[test]
    fn table_invariants() {
        let ok = Params { peers: 2, doc_peers: 1, views: 1, view_peers: 1, docs: 1, matching_docs: 1, doc_bytes: 10 };
        assert!(ok.validate("p").is_ok());
        assert!(Params { doc_peers: 3, ..ok }.validate("p").is_err());
        assert!(Params { view_peers: 3, ..ok }.validate("p").is_err());
        assert!(Params { matching_docs: 2, ..ok }.validate("p").is_err());
    }
}
