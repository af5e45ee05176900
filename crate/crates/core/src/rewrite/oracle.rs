use std::collections::HashMap;

use crate::algebra::{eval_logical, evaluate, LogicalPlan};
use crate::extract::Tuple;
use crate::pattern::JoinedTreePattern;
use crate::xml::Document;

/// View tuples over a document collection.
pub fn materialize(views: &[(String, JoinedTreePattern)], docs: &[&Document]) -> HashMap<String, Vec<Tuple>> {
    views.iter().map(|(id, p)| (id.clone(), evaluate(p, docs))).collect()
}

/// Precomputed expectations for one query over one battery: every document
/// on its own, then the whole collection.
pub struct Oracle {
    kinds: Vec<crate::pattern::Annotation>,
    expected: Vec<Vec<Tuple>>,
    stores: Vec<HashMap<String, Vec<Tuple>>>,
}

impl Oracle {
    pub fn new(q: &JoinedTreePattern, views: &[(String, JoinedTreePattern)], battery: &[Document]) -> Self {
        let mut sets: Vec<Vec<&Document>> = battery.iter().map(|d| vec![d]).collect();
        sets.push(battery.iter().collect());
        let expected = sets
            .iter()
            .map(|s| {
                let mut r = evaluate(q, s);
                r.sort();
                r
            })
            .collect();
        let stores = sets.iter().map(|s| materialize(views, s)).collect();
        Oracle { kinds: q.columns().iter().map(|c| c.ann).collect(), expected, stores }
    }

    /// Number of document sets with a nonempty query answer.
    pub fn nonempty(&self) -> usize {
        self.expected.iter().filter(|e| !e.is_empty()).count()
    }

    pub fn check(&self, plan: &LogicalPlan) -> bool {
        match plan.schema() {
            Ok(s) if s.iter().map(|c| c.kind).eq(self.kinds.iter().copied()) => {}
            _ => return false,
        }
        self.stores.iter().zip(&self.expected).all(|(store, exp)| match eval_logical(plan, store) {
            Ok(rel) => rel.sorted_rows() == *exp,
            Err(_) => false,
        })
    }
}

/// True when `plan` over the views returns exactly q's answer on every
/// battery document and on the battery as a whole.
pub fn equivalence_oracle(
    q: &JoinedTreePattern,
    plan: &LogicalPlan,
    views: &[(String, JoinedTreePattern)],
    battery: &[Document],
) -> bool {
    Oracle::new(q, views, battery).check(plan)
}
