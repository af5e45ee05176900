//! Distributed execution of rewriting plans over the simulated network.

mod place;
mod run;
mod tag;

pub use place::{place, PhysNode, PhysOp, PhysicalPlan, PlaceError, Side, ViewStats};
pub use run::{execute, execute_with, logical_of, EventKind, ExecEvent, ExecReport, Failure};
pub use tag::tag_results;
