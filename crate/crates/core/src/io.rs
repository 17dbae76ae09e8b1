//! Graph file format and JSON emission helpers.
//!
//! The on-disk graph format is
//! `{"vertices":[{"id":0,"condition":"dirichlet"|{"delta":a}}],
//!   "edges":[{"id":0,"from":0,"to":1,"length":l}]}`.
//! Floats are written with 17 significant digits so that read/write round
//! trips reproduce every f64 bit-exactly.

use crate::graph::{GraphError, MetricGraph, VertexCondition};
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use std::io::Write;

#[derive(Serialize, Deserialize)]
struct VertexRecord {
    id: usize,
    condition: VertexCondition,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    id: usize,
    from: usize,
    to: usize,
    length: f64,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    vertices: Vec<VertexRecord>,
    edges: Vec<EdgeRecord>,
}

pub fn graph_to_json(g: &MetricGraph) -> String {
    let file = GraphFile {
        vertices: g
            .vertices()
            .iter()
            .map(|v| VertexRecord {
                id: v.id,
                condition: v.condition,
            })
            .collect(),
        edges: g
            .edges()
            .iter()
            .map(|e| EdgeRecord {
                id: e.id,
                from: e.from,
                to: e.to,
                length: e.length,
            })
            .collect(),
    };
    to_json_string(&file)
}

pub fn graph_from_json(text: &str) -> Result<MetricGraph, GraphError> {
    let file: GraphFile =
        serde_json::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))?;
    // Ids in the file may be arbitrary distinct integers; remap densely in
    // order of appearance.
    let mut order: Vec<usize> = file.vertices.iter().map(|v| v.id).collect();
    order.sort_unstable();
    order.dedup();
    if order.len() != file.vertices.len() {
        return Err(GraphError::Parse("duplicate vertex ids".into()));
    }
    let index_of = |id: usize| -> Result<usize, GraphError> {
        order
            .binary_search(&id)
            .map_err(|_| GraphError::Parse(format!("edge references unknown vertex {id}")))
    };
    let mut conditions = vec![VertexCondition::kirchhoff(); order.len()];
    for v in &file.vertices {
        conditions[index_of(v.id)?] = v.condition;
    }
    let mut edges = Vec::with_capacity(file.edges.len());
    for e in &file.edges {
        edges.push((index_of(e.from)?, index_of(e.to)?, e.length));
    }
    MetricGraph::new(conditions, edges)
}

/// JSON formatter writing every float with 17 significant digits
/// (`{:.16e}`), enough to reproduce any f64 exactly on reparse.
pub struct SigDigitFormatter;

impl Formatter for SigDigitFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes any value to a JSON string with 17-significant-digit floats.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigitFormatter);
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("serde_json emits utf-8")
}

/// Formats one float for CSV output at 12 significant digits.
pub fn csv_float(value: f64) -> String {
    format!("{value:.11e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_family, FamilySpec};

    #[test]
    fn graph_json_roundtrip_is_bit_exact() {
        let g = make_family(&FamilySpec::RandomTree {
            seed: 3,
            max_edges: 7,
            length_range: (0.1, 2.0),
            leaf: VertexCondition::Dirichlet,
        })
        .unwrap();
        let text = graph_to_json(&g);
        let back = graph_from_json(&text).unwrap();
        assert_eq!(g, back);
        for (a, b) in g.edges().iter().zip(back.edges()) {
            assert_eq!(a.length.to_bits(), b.length.to_bits());
        }
    }

    #[test]
    fn condition_wire_format() {
        let g = MetricGraph::new(
            vec![VertexCondition::Dirichlet, VertexCondition::Delta(1.5)],
            vec![(0, 1, 2.0)],
        )
        .unwrap();
        let text = graph_to_json(&g);
        assert!(text.contains("\"dirichlet\""));
        assert!(text.contains("\"delta\""));
        let back = graph_from_json(&text).unwrap();
        assert_eq!(back.condition(1), VertexCondition::Delta(1.5));
    }

    #[test]
    fn seventeen_digit_floats_reparse_exactly() {
        let x = std::f64::consts::PI * 1e-7;
        let s = to_json_string(&vec![x]);
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0].to_bits(), x.to_bits());
    }
}
