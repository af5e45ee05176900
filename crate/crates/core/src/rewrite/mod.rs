//! Bounded exhaustive rewriting of queries over materialized views, checked
//! by evaluation on generated documents.

mod battery;
mod oracle;
mod search;

pub use battery::{battery, BatteryConfig};
pub use oracle::{equivalence_oracle, materialize, Oracle};
pub use search::{build_plan, combinations, instances, rewrite, rewrite_with, RewriteConfig, Rewriting, ViewInstance};
