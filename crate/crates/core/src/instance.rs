//! Compatibility graphs: vertices are patient-donor pairs or non-directed
//! donors, arcs point from a donor vertex to a compatible pair.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// PRA threshold at or above which a patient counts as highly sensitized.
pub const HIGH_PRA: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Pair,
    NonDirectedDonor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexRecord {
    pub id: usize,
    pub kind: VertexKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pra: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArcRecord {
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    EdgeList,
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("JSON error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{element}: {message}")]
    Validation { element: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
struct Document {
    vertices: Vec<VertexRecord>,
    arcs: Vec<ArcRecord>,
}

/// Directed compatibility graph with cached adjacency.
///
/// Arc ids are positions in [`CompatibilityGraph::arcs`]. Adjacency lists hold
/// `(neighbor, arc id)` pairs in arc order.
#[derive(Debug, Clone)]
pub struct CompatibilityGraph {
    vertices: Vec<VertexRecord>,
    arcs: Vec<ArcRecord>,
    out_adj: Vec<Vec<(usize, usize)>>,
    in_adj: Vec<Vec<(usize, usize)>>,
    arc_index: HashMap<(usize, usize), usize>,
}

impl PartialEq for CompatibilityGraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.arcs == other.arcs
    }
}

fn invalid(element: impl Into<String>, message: impl Into<String>) -> InstanceError {
    InstanceError::Validation {
        element: element.into(),
        message: message.into(),
    }
}

impl CompatibilityGraph {
    /// Validates the records and builds adjacency.
    pub fn new(vertices: Vec<VertexRecord>, arcs: Vec<ArcRecord>) -> Result<Self, InstanceError> {
        let n = vertices.len();
        for (pos, v) in vertices.iter().enumerate() {
            if v.id != pos {
                return Err(invalid(
                    format!("vertex {pos}"),
                    format!("id {} is not dense (expected {pos})", v.id),
                ));
            }
            if let Some(p) = v.pra {
                if v.kind != VertexKind::Pair {
                    return Err(invalid(format!("vertex {pos}"), "PRA given for a non-directed donor"));
                }
                if !(0.0..=100.0).contains(&p) {
                    return Err(invalid(format!("vertex {pos}"), format!("PRA {p} outside [0,100]")));
                }
            }
        }
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        let mut arc_index = HashMap::with_capacity(arcs.len());
        for (id, a) in arcs.iter().enumerate() {
            let element = format!("arc {id} ({}, {})", a.from, a.to);
            if a.from >= n || a.to >= n {
                return Err(invalid(element, "references a vertex that does not exist"));
            }
            if a.from == a.to {
                return Err(invalid(element, "self-loop"));
            }
            if vertices[a.to].kind != VertexKind::Pair {
                return Err(invalid(element, "head is a non-directed donor"));
            }
            if arc_index.insert((a.from, a.to), id).is_some() {
                return Err(invalid(element, "duplicate arc"));
            }
            out_adj[a.from].push((a.to, id));
            in_adj[a.to].push((a.from, id));
        }
        Ok(Self {
            vertices,
            arcs,
            out_adj,
            in_adj,
            arc_index,
        })
    }

    /// Convenience constructor from NDD ids and an arc list; PRA left unset.
    pub fn from_arcs(
        num_vertices: usize,
        ndds: &[usize],
        arcs: &[(usize, usize)],
    ) -> Result<Self, InstanceError> {
        let vertices = (0..num_vertices)
            .map(|id| VertexRecord {
                id,
                kind: if ndds.contains(&id) {
                    VertexKind::NonDirectedDonor
                } else {
                    VertexKind::Pair
                },
                pra: None,
            })
            .collect();
        let arcs = arcs.iter().map(|&(from, to)| ArcRecord { from, to }).collect();
        Self::new(vertices, arcs)
    }

    pub fn vertices(&self) -> &[VertexRecord] {
        &self.vertices
    }

    pub fn arcs(&self) -> &[ArcRecord] {
        &self.arcs
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn kind(&self, v: usize) -> VertexKind {
        self.vertices[v].kind
    }

    pub fn is_ndd(&self, v: usize) -> bool {
        self.vertices[v].kind == VertexKind::NonDirectedDonor
    }

    pub fn pra(&self, v: usize) -> f64 {
        self.vertices[v].pra.unwrap_or(0.0)
    }

    pub fn ndds(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_vertices()).filter(|&v| self.is_ndd(v))
    }

    pub fn pairs(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_vertices()).filter(|&v| !self.is_ndd(v))
    }

    pub fn num_ndds(&self) -> usize {
        self.ndds().count()
    }

    pub fn out_neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.out_adj[v]
    }

    pub fn in_neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.in_adj[v]
    }

    pub fn arc_id(&self, from: usize, to: usize) -> Option<usize> {
        self.arc_index.get(&(from, to)).copied()
    }

    pub fn arc(&self, id: usize) -> ArcRecord {
        self.arcs[id]
    }
}

/// Reads a graph in the given format.
pub fn parse_instance(source: &[u8], format: Format) -> Result<CompatibilityGraph, InstanceError> {
    match format {
        Format::Json => {
            let doc: Document = serde_json::from_slice(source).map_err(|e| InstanceError::Json {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
            CompatibilityGraph::new(doc.vertices, doc.arcs)
        }
        Format::EdgeList => parse_edge_list(source),
    }
}

/// Serializes a graph; `parse_instance` on the output yields an equal graph.
pub fn write_instance(graph: &CompatibilityGraph, format: Format) -> Vec<u8> {
    match format {
        Format::Json => {
            let doc = Document {
                vertices: graph.vertices.clone(),
                arcs: graph.arcs.clone(),
            };
            let mut out = serde_json::to_vec_pretty(&doc).expect("graph documents always serialize");
            out.push(b'\n');
            out
        }
        Format::EdgeList => write_edge_list(graph).into_bytes(),
    }
}

fn syntax(line: usize, message: impl Into<String>) -> InstanceError {
    InstanceError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_usize(token: &str, line: usize) -> Result<usize, InstanceError> {
    token
        .parse()
        .map_err(|_| syntax(line, format!("expected a vertex id, found `{token}`")))
}

fn parse_edge_list(source: &[u8]) -> Result<CompatibilityGraph, InstanceError> {
    let text = std::str::from_utf8(source).map_err(|e| syntax(0, format!("not UTF-8: {e}")))?;
    let mut num_vertices: Option<usize> = None;
    let mut ndds = Vec::new();
    let mut pra: Vec<(usize, f64, usize)> = Vec::new();
    let mut arcs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let head = tokens.next().unwrap_or_default();
        match head {
            "vertices" => {
                let count = tokens.next().ok_or_else(|| syntax(line, "missing vertex count"))?;
                num_vertices = Some(parse_usize(count, line)?);
            }
            "ndd" => {
                for t in tokens {
                    ndds.push(parse_usize(t, line)?);
                }
            }
            "pra" => {
                for t in tokens {
                    let (id, value) = t
                        .split_once(':')
                        .ok_or_else(|| syntax(line, format!("expected id:value, found `{t}`")))?;
                    let value: f64 = value
                        .parse()
                        .map_err(|_| syntax(line, format!("bad PRA value `{value}`")))?;
                    pra.push((parse_usize(id, line)?, value, line));
                }
            }
            _ => {
                let to = tokens.next().ok_or_else(|| syntax(line, "arc line needs two vertex ids"))?;
                if tokens.next().is_some() {
                    return Err(syntax(line, "arc line has more than two fields"));
                }
                arcs.push((parse_usize(head, line)?, parse_usize(to, line)?));
            }
        }
    }
    let n = num_vertices.ok_or_else(|| syntax(0, "missing `vertices N` header"))?;
    for &v in &ndds {
        if v >= n {
            return Err(invalid(format!("ndd {v}"), "vertex id out of range"));
        }
    }
    let mut vertices: Vec<VertexRecord> = (0..n)
        .map(|id| VertexRecord {
            id,
            kind: if ndds.contains(&id) {
                VertexKind::NonDirectedDonor
            } else {
                VertexKind::Pair
            },
            pra: None,
        })
        .collect();
    for (id, value, line) in pra {
        let v = vertices
            .get_mut(id)
            .ok_or_else(|| invalid(format!("pra entry on line {line}"), format!("vertex {id} does not exist")))?;
        v.pra = Some(value);
    }
    let arcs = arcs.into_iter().map(|(from, to)| ArcRecord { from, to }).collect();
    CompatibilityGraph::new(vertices, arcs)
}

fn write_edge_list(graph: &CompatibilityGraph) -> String {
    let mut out = String::new();
    writeln!(out, "vertices {}", graph.num_vertices()).unwrap();
    let ndds: Vec<String> = graph.ndds().map(|v| v.to_string()).collect();
    if !ndds.is_empty() {
        writeln!(out, "ndd {}", ndds.join(" ")).unwrap();
    }
    let pra: Vec<String> = graph
        .vertices()
        .iter()
        .filter_map(|v| v.pra.map(|p| format!("{}:{}", v.id, p)))
        .collect();
    if !pra.is_empty() {
        writeln!(out, "pra {}", pra.join(" ")).unwrap();
    }
    for a in graph.arcs() {
        writeln!(out, "{} {}", a.from, a.to).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::figure_one;

    #[test]
    fn figure_one_shape() {
        let g = figure_one();
        assert_eq!(g.num_vertices(), 10);
        assert_eq!(g.num_arcs(), 15);
        assert_eq!(g.num_ndds(), 1);
        let bytes = write_instance(&g, Format::Json);
        assert_eq!(parse_instance(&bytes, Format::Json).unwrap(), g);
    }

    #[test]
    fn empty_graph_round_trips() {
        let g = parse_instance(br#"{"vertices":[],"arcs":[]}"#, Format::Json).unwrap();
        assert_eq!(g.num_vertices(), 0);
        for format in [Format::Json, Format::EdgeList] {
            let bytes = write_instance(&g, format);
            assert_eq!(parse_instance(&bytes, format).unwrap(), g);
        }
    }

    #[test]
    fn rejects_arc_into_donor() {
        let err = CompatibilityGraph::from_arcs(2, &[0], &[(1, 0)]).unwrap_err();
        assert!(matches!(err, InstanceError::Validation { .. }), "{err}");
    }

    #[test]
    fn rejects_dangling_vertex() {
        let src = br#"{"vertices":[{"id":0,"kind":"pair"}],"arcs":[{"from":0,"to":3}]}"#;
        let err = parse_instance(src, Format::Json).unwrap_err();
        assert!(err.to_string().contains("arc 0"), "{err}");
    }

    #[test]
    fn json_errors_carry_position() {
        let src = b"{\n  \"vertices\": [\n    {\"id\": 0, \"kind\": \"robot\"}\n  ],\n  \"arcs\": []\n}";
        match parse_instance(src, Format::Json).unwrap_err() {
            InstanceError::Json { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn edge_list_reads_header_and_comments() {
        let src = b"# tiny\nvertices 3\nndd 2\npra 0:95 1:12.5\n2 0\n0 1 # arc\n1 0\n";
        let g = parse_instance(src, Format::EdgeList).unwrap();
        assert_eq!(g.num_arcs(), 3);
        assert!(g.is_ndd(2));
        assert_eq!(g.pra(0), 95.0);
        assert_eq!(g.pra(2), 0.0);
        let again = parse_instance(&write_instance(&g, Format::EdgeList), Format::EdgeList).unwrap();
        assert_eq!(again, g);
    }

    #[test]
    fn edge_list_syntax_error_has_line() {
        let src = b"vertices 2\n0 x\n";
        match parse_instance(src, Format::EdgeList).unwrap_err() {
            InstanceError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }
}
