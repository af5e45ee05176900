//! Logical algebra over view tuple streams.

mod compose;
mod eval;
mod plan;

pub use compose::{cell_index, component_streams, compose, evaluate, extended_components};
pub use eval::{cell_key, dedup_keep_first, eval_logical, hash_join, navigate, CellKey, EvalError, Relation, ViewSource};
pub use plan::{nav_columns, pred_text, ColumnInfo, LogicalPlan, Operand, PlanError, Pred, Schema};
