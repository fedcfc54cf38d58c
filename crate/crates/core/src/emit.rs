//! Output renderers for solutions and profiler counters.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde_json::{json, Map, Value as Json};

use crate::calculus::Mode;
use crate::constraint::{Valuation, Value};
use crate::engine::{Profiler, Solution};
use crate::model::RefSlot;

fn int_json(n: &BigInt) -> Json {
    match n.to_i64() {
        Some(v) => json!(v),
        None => json!(n.to_string()),
    }
}

fn value_json(v: &Value) -> Json {
    match v {
        Value::Int(n) => int_json(n),
        Value::Bool(b) => json!(b),
        Value::Real(q) if q.is_integer() => int_json(q.numer()),
        Value::Real(q) => json!(format!("{}/{}", q.numer(), q.denom())),
    }
}

fn witness_json(w: &Valuation) -> Json {
    Json::Object(w.iter().map(|(k, v)| (k.to_string(), value_json(v))).collect())
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Find => "find",
        Mode::Check => "check",
    }
}

/// JSON document for one solution; keys keep a fixed order.
pub fn solution_json(sol: &Solution, mode: Mode) -> Json {
    let objects: Vec<Json> = sol
        .graph
        .records()
        .map(|r| {
            let mut refs = Map::new();
            for (role, slot) in &r.refs {
                let targets: Vec<Json> = match slot {
                    RefSlot::Committed(set) => set.iter().map(|o| json!(o.name())).collect(),
                    RefSlot::Uncommitted => Vec::new(),
                };
                refs.insert(role.to_string(), Json::Array(targets));
            }
            json!({"id": r.id.name(), "class": r.class.as_str(), "refs": refs})
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("objects".into(), Json::Array(objects));
    doc.insert("constraint".into(), json!(sol.phi.to_string()));
    doc.insert(
        "witness".into(),
        sol.witness.as_ref().map(witness_json).unwrap_or(Json::Null),
    );
    doc.insert("mode".into(), json!(mode_name(mode)));
    if mode == Mode::Check {
        doc.insert(
            "violationFormula".into(),
            json!(sol.psi.as_ref().map(|p| p.to_string()).unwrap_or_default()),
        );
        doc.insert(
            "violatedRule".into(),
            sol.violation.as_ref().map(|v| json!(v.rule)).unwrap_or(Json::Null),
        );
    }
    Json::Object(doc)
}

pub fn solution_json_text(sol: &Solution, mode: Mode) -> String {
    let mut s = serde_json::to_string_pretty(&solution_json(sol, mode)).expect("JSON values serialize");
    s.push('\n');
    s
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering: one node per object, one edge per reference.
pub fn solution_dot(sol: &Solution) -> String {
    let mut out = String::from("digraph model {\n  node [shape=box];\n");
    for r in sol.graph.records() {
        let mut label = format!("{}:{}", r.id, r.class);
        if let Some(w) = &sol.witness {
            for (v, val) in w.iter().filter(|(v, _)| v.owner == r.id) {
                let _ = write!(label, "\\n{}={}", v.attr, val);
            }
        }
        let _ = writeln!(out, "  \"{}\" [label=\"{}\"];", r.id, dot_escape(&label).replace("\\\\n", "\\n"));
    }
    for r in sol.graph.records() {
        for (role, slot) in &r.refs {
            for t in slot.committed().into_iter().flatten() {
                let _ = writeln!(out, "  \"{}\" -> \"{}\" [label=\"{}\"];", r.id, t, role);
            }
        }
    }
    out.push_str("}\n");
    out
}

/// Counters as `key: value` lines followed by an aligned one-row table.
pub fn profiler_table(p: &Profiler) -> String {
    let values = p.values();
    let mut out = String::new();
    for (k, v) in Profiler::COLUMNS.iter().zip(values) {
        let _ = writeln!(out, "{k}: {v}");
    }
    let widths: Vec<usize> = Profiler::COLUMNS
        .iter()
        .zip(values)
        .map(|(k, v)| k.len().max(v.to_string().len()))
        .collect();
    let row = |cells: Vec<String>| -> String {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        format!("| {} |\n", padded.join(" | "))
    };
    out.push_str(&row(Profiler::COLUMNS.iter().map(|s| s.to_string()).collect()));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&format!("|-{}-|\n", rule.join("-|-")));
    out.push_str(&row(values.iter().map(u64::to_string).collect()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{Formula, SymVar};
    use crate::engine::Profiler;
    use crate::fixtures::oid;
    use crate::model::{ClassDecl, Graph, ObjectRecord};
    use num_rational::BigRational;

    fn empty() -> Solution {
        Solution {
            graph: Graph::new(),
            phi: Formula::True,
            psi: None,
            witness: Some(Valuation::new()),
            violation: None,
            profile: Profiler::default(),
        }
    }

    #[test]
    fn empty_model_json() {
        let text = serde_json::to_string(&solution_json(&empty(), Mode::Find)).unwrap();
        assert_eq!(text, r#"{"objects":[],"constraint":"true","witness":{},"mode":"find"}"#);
    }

    #[test]
    fn single_object_dot_has_no_edges() {
        let mut sol = empty();
        let decl = ClassDecl {
            name: oid("e1").class().clone(),
            roles: Vec::new(),
            attrs: Vec::new(),
        };
        sol.graph.insert(ObjectRecord::skeleton(oid("e1"), &decl));
        sol.witness = Some(Valuation::from([(
            SymVar::real(oid("e1"), "w"),
            Value::Real(BigRational::new(1.into(), 3.into())),
        )]));
        let dot = solution_dot(&sol);
        assert!(dot.contains("\"e1\" [label=\"e1:Employee\\nw=1/3\"]"), "{dot}");
        assert!(!dot.contains("->"));
        let j = solution_json(&sol, Mode::Find);
        assert_eq!(j["witness"]["r(e1,w)"], json!("1/3"));
    }

    #[test]
    fn table_lists_every_column() {
        let t = profiler_table(&Profiler {
            nf: 1,
            ..Profiler::default()
        });
        for c in Profiler::COLUMNS {
            assert!(t.contains(c));
        }
        assert!(t.contains("NF: 1"));
    }
}
