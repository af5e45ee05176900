//! The publisher to consumer data path: stores, link costs and the
//! discrete-event pipeline.

mod net;
mod sim;
mod store;

pub use net::{ns_to_us, CostModel, ExtractMode, Links, Micros};
pub use sim::{scan_view, MaterializationClock, MetricRow, ReceivePolicy, SendMode, SendPolicy, SimReport, Simulation, StreamReport};
pub use store::{FileStore, MemoryStore, SortedStore, ViewStore};
