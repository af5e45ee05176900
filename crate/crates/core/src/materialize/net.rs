use std::collections::BTreeMap;

use crate::dht::PeerAddr;

/// Simulated time in microseconds.
pub type Micros = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractMode {
    /// One pass per view.
    Sequential,
    /// One pass evaluating every view.
    Parallel,
}

/// Cost parameters of the simulated network, CPUs and stores.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    /// One-way link latency.
    pub latency_us: Micros,
    /// Bytes per second through each peer's uplink and downlink.
    pub bandwidth: u64,
    /// Document traversal cost per pass.
    pub parse_ns_per_byte: f64,
    /// Matching cost per view per document byte.
    pub match_ns_per_byte: f64,
    /// Cost of building output tuples.
    pub emit_ns_per_byte: f64,
    pub store_bytes_per_s: u64,
    pub store_batch_us: Micros,
    /// Storage slowdown per additional publisher with an admitted session.
    pub contention: f64,
    /// Unacknowledged batches per session.
    pub window: usize,
    pub batch_tuples: usize,
    pub batch_bytes: usize,
    /// Size of control messages (admission, acks, lookups).
    pub message_bytes: u64,
    pub loss_rate: f64,
    pub rto_us: Micros,
    pub interval_us: Micros,
    pub extract_mode: ExtractMode,
    /// Local operator cost per input byte at query time.
    pub operator_ns_per_byte: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            latency_us: 20_000,
            bandwidth: 10_000_000,
            parse_ns_per_byte: 60.0,
            match_ns_per_byte: 60.0,
            emit_ns_per_byte: 60.0,
            store_bytes_per_s: 25_000_000,
            store_batch_us: 200,
            contention: 0.04,
            window: 4,
            batch_tuples: crate::extract::DEFAULT_BATCH_TUPLES,
            batch_bytes: crate::extract::DEFAULT_BATCH_BYTES,
            message_bytes: 64,
            loss_rate: 0.0,
            rto_us: 2_000_000,
            interval_us: 10_000_000,
            extract_mode: ExtractMode::Parallel,
            operator_ns_per_byte: 2.0,
        }
    }
}

pub fn ns_to_us(ns: f64) -> Micros {
    (ns / 1000.0).ceil() as Micros
}

impl CostModel {
    /// Extraction time of one document of `bytes` for `views` views
    /// producing `out_bytes` of tuples.
    pub fn extraction_us(&self, bytes: usize, views: usize, out_bytes: usize) -> Micros {
        let b = bytes as f64;
        let passes = match self.extract_mode {
            ExtractMode::Parallel => 1.0,
            ExtractMode::Sequential => views as f64,
        };
        ns_to_us(passes * self.parse_ns_per_byte * b + views as f64 * self.match_ns_per_byte * b + self.emit_ns_per_byte * out_bytes as f64)
    }

    pub fn tx_us(&self, bytes: u64) -> Micros {
        (bytes as u128 * 1_000_000).div_ceil(self.bandwidth.max(1) as u128) as Micros
    }

    pub fn store_us(&self, bytes: usize, sessions: usize) -> Micros {
        let base = bytes as f64 * 1e6 / self.store_bytes_per_s.max(1) as f64;
        self.store_batch_us + (base * (1.0 + self.contention * sessions.saturating_sub(1) as f64)).ceil() as Micros
    }

    pub fn operator_us(&self, bytes: usize) -> Micros {
        ns_to_us(self.operator_ns_per_byte * bytes as f64)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Nic {
    up_free: Micros,
    down_free: Micros,
}

/// Per-peer uplinks and downlinks shared by all flows, FIFO.
#[derive(Debug, Clone, Default)]
pub struct Links {
    nics: BTreeMap<PeerAddr, Nic>,
}

impl Links {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sends `bytes` at `now`; returns the arrival time at `to`. Local
    /// transfers are free.
    pub fn transfer(&mut self, cost: &CostModel, now: Micros, from: PeerAddr, to: PeerAddr, bytes: u64) -> Micros {
        if from == to {
            return now;
        }
        let tx = cost.tx_us(bytes);
        let up = self.nics.entry(from).or_default();
        let start = now.max(up.up_free);
        up.up_free = start + tx;
        let down = self.nics.entry(to).or_default();
        let dstart = (start + cost.latency_us).max(down.down_free);
        down.down_free = dstart + tx;
        dstart + tx
    }

    /// Small control message: latency plus its transmission time.
    pub fn message(&mut self, cost: &CostModel, now: Micros, from: PeerAddr, to: PeerAddr) -> Micros {
        if from == to {
            return now;
        }
        now + cost.latency_us + cost.tx_us(cost.message_bytes)
    }
}
