use crate::algebra::Schema;
use crate::extract::{Cell, Tuple};
use crate::pattern::{JoinedTreePattern, ReturnTemplate};
use crate::xml::escape_text;

/// Wraps result tuples in the return-clause elements, one element per
/// tuple. Columns are matched to template items by query column name.
pub fn tag_results(q: &JoinedTreePattern, template: &ReturnTemplate, schema: &Schema, rows: &[Tuple]) -> String {
    let cols = q.columns();
    let pos: Vec<Option<usize>> = template
        .items
        .iter()
        .map(|it| {
            let name = cols.iter().find(|c| c.node == it.node && c.ann == it.ann).map(|c| c.name.as_str())?;
            schema.iter().position(|s| s.name == name)
        })
        .collect();
    let mut out = String::new();
    for t in rows {
        out.push('<');
        out.push_str(&template.element);
        out.push('>');
        for (it, p) in template.items.iter().zip(&pos) {
            out.push_str(&format!("<{}>", it.element));
            match p.map(|i| &t.0[i]) {
                Some(Cell::Id(id)) => escape_text(&id.to_string(), &mut out),
                Some(Cell::Val(s)) => escape_text(s, &mut out),
                Some(Cell::Cont(s)) => out.push_str(s),
                None => {}
            }
            out.push_str(&format!("</{}>", it.element));
        }
        out.push_str(&format!("</{}>", template.element));
    }
    out
}
