//! JSON views of the public data structures. Every rational is a
//! string to keep exactness, every collection is emitted in a sorted
//! order, and graph round-trips are lossless.

use serde_json::{json, Map, Value};

use crate::cycleclasses::Poly;
use crate::error::{Error, Result};
use crate::givental::DiffOperator;
use crate::graphs::{BipartiteGraph, Edge, InfVertex, TypeZeroVertex};
use crate::insertions::InsClass;
use crate::quantum::{EntryStatus, StructureTable};
use crate::rat::{rat_parse, rat_str, Rat};

pub fn rat_json(x: &Rat) -> Value {
    Value::String(rat_str(x))
}

fn roots_json(
    marks: impl Iterator<Item = (i64, u32)>,
    nodes: impl Iterator<Item = i64>,
) -> Value {
    let mut out = Vec::new();
    for (w, label) in marks {
        out.push(json!({"weight": w, "kind": "mark", "label": label}));
    }
    for w in nodes {
        out.push(json!({"weight": w, "kind": "node"}));
    }
    Value::Array(out)
}

/// One vertex list, zero side first, each tagged with its side; edges
/// refer to (side-relative vertex index, node-root slot) pairs, zero
/// side first.
pub fn graph_to_json(g: &BipartiteGraph) -> Value {
    let mut vertices = Vec::new();
    for v in &g.zero {
        vertices.push(json!({
            "side": "zero",
            "degree": v.degree,
            "legs": v.legs,
            "roots": roots_json(
                v.roots_zero.iter().copied().chain(v.roots_inf_mark.iter().copied()),
                v.roots_inf_node.iter().copied(),
            ),
        }));
    }
    for v in &g.inf {
        vertices.push(json!({
            "side": "inf",
            "degree": v.degree,
            "legs": v.legs,
            "roots": roots_json(v.roots_mark.iter().copied(), v.roots_node.iter().copied()),
        }));
    }
    let edges: Vec<Value> = g
        .edges
        .iter()
        .map(|e| json!([[e.zero_vertex, e.zero_slot], [e.inf_vertex, e.inf_slot]]))
        .collect();
    json!({
        "n": g.n_amb,
        "vertices": vertices,
        "edges": edges,
    })
}

fn as_u64(v: &Value, what: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| Error::Parse { msg: format!("{what} must be a nonnegative integer"), pos: 0 })
}

fn as_i64(v: &Value, what: &str) -> Result<i64> {
    v.as_i64().ok_or_else(|| Error::Parse { msg: format!("{what} must be an integer"), pos: 0 })
}

fn parse_roots(v: &Value) -> Result<(Vec<(i64, u32)>, Vec<i64>)> {
    let arr = v.as_array().ok_or_else(|| Error::Parse { msg: "roots must be a list".into(), pos: 0 })?;
    let mut marks = Vec::new();
    let mut nodes = Vec::new();
    for r in arr {
        let w = as_i64(&r["weight"], "root weight")?;
        match r["kind"].as_str() {
            Some("mark") => marks.push((w, as_u64(&r["label"], "root label")? as u32)),
            Some("node") => nodes.push(w),
            _ => {
                return Err(Error::Parse { msg: "root kind must be \"mark\" or \"node\"".into(), pos: 0 })
            }
        }
    }
    Ok((marks, nodes))
}

fn parse_legs(v: &Value) -> Result<Vec<u32>> {
    let arr = v.as_array().ok_or_else(|| Error::Parse { msg: "legs must be a list".into(), pos: 0 })?;
    arr.iter().map(|x| Ok(as_u64(x, "leg label")? as u32)).collect()
}

pub fn graph_from_json(v: &Value) -> Result<BipartiteGraph> {
    let n_amb = as_u64(&v["n"], "n")? as usize;
    let vertices = v["vertices"]
        .as_array()
        .ok_or_else(|| Error::Parse { msg: "vertices must be a list".into(), pos: 0 })?;
    let mut zero = Vec::new();
    let mut inf = Vec::new();
    let mut seen_inf = false;
    for vx in vertices {
        let degree = as_i64(&vx["degree"], "degree")?;
        let legs = parse_legs(&vx["legs"])?;
        let (marks, nodes) = parse_roots(&vx["roots"])?;
        match vx["side"].as_str() {
            Some("zero") => {
                if seen_inf {
                    return Err(Error::Parse { msg: "zero-side vertices must come first".into(), pos: 0 });
                }
                let (pos, neg): (Vec<_>, Vec<_>) = marks.into_iter().partition(|(w, _)| *w > 0);
                zero.push(TypeZeroVertex {
                    degree,
                    legs,
                    roots_zero: pos,
                    roots_inf_mark: neg,
                    roots_inf_node: nodes,
                });
            }
            Some("inf") => {
                seen_inf = true;
                inf.push(InfVertex { degree, legs, roots_mark: marks, roots_node: nodes });
            }
            _ => return Err(Error::Parse { msg: "side must be \"zero\" or \"inf\"".into(), pos: 0 }),
        }
    }
    let mut edges = Vec::new();
    let earr = v["edges"]
        .as_array()
        .ok_or_else(|| Error::Parse { msg: "edges must be a list".into(), pos: 0 })?;
    for e in earr {
        let pair = e.as_array().filter(|a| a.len() == 2).ok_or_else(|| Error::Parse {
            msg: "an edge is a pair of slots".into(),
            pos: 0,
        })?;
        let slot = |s: &Value, what: &str| -> Result<(usize, usize)> {
            let a = s.as_array().filter(|a| a.len() == 2).ok_or_else(|| Error::Parse {
                msg: format!("{what} must be [vertex, slot]"),
                pos: 0,
            })?;
            Ok((as_u64(&a[0], what)? as usize, as_u64(&a[1], what)? as usize))
        };
        let (zv, zs) = slot(&pair[0], "zero slot")?;
        let (iv, is) = slot(&pair[1], "inf slot")?;
        edges.push(Edge { zero_vertex: zv, zero_slot: zs, inf_vertex: iv, inf_slot: is });
    }
    let g = BipartiteGraph { n_amb, zero, inf, edges };
    g.validate()?;
    Ok(g)
}

/// Sorted monomial list; powers keyed by symbol names.
pub fn poly_to_json(p: &Poly) -> Value {
    let mut terms = Vec::new();
    for (mono, coef) in p.terms() {
        let mut powers = Map::new();
        for (sym, e) in mono {
            powers.insert(sym.to_string(), json!(e));
        }
        terms.push(json!({"coef": rat_str(coef), "powers": Value::Object(powers)}));
    }
    Value::Array(terms)
}

pub fn table_to_json(t: &StructureTable) -> Result<Value> {
    let ctx = t.ctx;
    let name = |label: (i64, usize)| -> Result<String> {
        Ok(InsClass::basis_class(ctx, label.0, label.1)?.render())
    };
    let mut entries = Vec::new();
    for ((a, b), list) in t.pairs() {
        for (m, entry) in list.iter().enumerate() {
            let mut coeffs = Map::new();
            for (label, c) in &entry.coeffs {
                coeffs.insert(name(*label)?, rat_json(c));
            }
            let status = match entry.status {
                EntryStatus::Determined => "determined",
                EntryStatus::Undetermined => "undetermined",
            };
            entries.push(json!({
                "lhs": name(a)?,
                "rhs": name(b)?,
                "q": m,
                "coeffs": Value::Object(coeffs),
                "status": status,
            }));
        }
    }
    Ok(json!({
        "n": ctx.n,
        "W": ctx.window,
        "Qmax": t.qmax,
        "entries": entries,
    }))
}

/// Term list; variables are [level, index, exponent] triples.
pub fn operator_to_json(op: &DiffOperator) -> Value {
    let var = |v: &(u32, i64, usize)| json!([v.0, v.1, v.2]);
    let terms: Vec<Value> = op
        .terms
        .iter()
        .map(|t| {
            json!({
                "hbar": t.hbar,
                "coef": rat_str(&t.coef),
                "vars": t.tmono.iter().map(var).collect::<Vec<_>>(),
                "derivs": t.derivs.iter().map(var).collect::<Vec<_>>(),
            })
        })
        .collect();
    Value::Array(terms)
}

pub fn rat_from_json(v: &Value) -> Result<Rat> {
    let s = v
        .as_str()
        .ok_or_else(|| Error::Parse { msg: "rational must be a string".into(), pos: 0 })?;
    rat_parse(s).ok_or_else(|| Error::Parse { msg: format!("bad rational \"{s}\""), pos: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{enumerate, TopType};
    use crate::insertions::PairContext;
    use crate::quantum::solve_structure_constants;

    #[test]
    fn graphs_round_trip_through_json() {
        let top = TopType::new(0, 0, 1, vec![2, -1]).unwrap();
        let graphs = enumerate(&top, 2).unwrap();
        assert!(!graphs.is_empty());
        for g in &graphs {
            let v = graph_to_json(g);
            let back = graph_from_json(&v).unwrap();
            assert_eq!(&back, g);
        }
    }

    #[test]
    fn table_dump_is_deterministic_and_tagged() {
        let t = solve_structure_constants(2, 2, 1).unwrap();
        let a = serde_json::to_string(&table_to_json(&t).unwrap()).unwrap();
        let b = serde_json::to_string(&table_to_json(&t).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"determined\""));
        assert!(a.contains("\"Qmax\":1"));
    }

    #[test]
    fn rationals_and_operators_serialize_as_strings() {
        let ctx = PairContext::new(2, 2).unwrap();
        let op = crate::givental::build_l(-1, ctx, 1).unwrap();
        let v = operator_to_json(&op);
        let s = serde_json::to_string(&v).unwrap();
        assert!(s.contains("\"coef\":\"-1\""));
        assert_eq!(rat_from_json(&json!("3/4")).unwrap(), crate::rat::rat_frac(3, 4));
        assert!(rat_from_json(&json!("3/0")).is_err());
    }
}
