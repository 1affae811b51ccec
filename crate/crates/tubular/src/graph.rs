//! Tubular graphs of groups: a finite multigraph (loops allowed) whose every
//! vertex carries a `Z^2` group and whose every edge carries a `Z` group
//! included into the two endpoint groups by nonzero vectors.
//!
//! Edges are directed records with a minus and a plus end because pairings
//! and dilation ratios are orientation-sensitive; reverse traversal is the
//! concern of the wall machinery, not of the data model.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lattice::{self, LatticeVector};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("invalid graph document: {0}")]
    Json(String),
    #[error("duplicate vertex id \"{0}\"")]
    DuplicateVertex(VertexId),
    #[error("edge \"{0}\": duplicate edge id")]
    DuplicateEdge(EdgeId),
    #[error("edge \"{edge}\": dangling vertex reference \"{vertex}\" on the {end} end")]
    DanglingVertex { edge: EdgeId, vertex: VertexId, end: End },
    #[error("edge \"{edge}\": zero inclusion vector on the {end} end")]
    ZeroInclusion { edge: EdgeId, end: End },
    #[error("unknown vertex \"{0}\"")]
    UnknownVertex(VertexId),
    #[error("unknown edge \"{0}\"")]
    UnknownEdge(EdgeId),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub String);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub String);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        VertexId(s.to_owned())
    }
}

impl From<&str> for EdgeId {
    fn from(s: &str) -> Self {
        EdgeId(s.to_owned())
    }
}

/// Which end of an edge an inclusion vector belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    Minus,
    Plus,
}

impl fmt::Display for End {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            End::Minus => "minus",
            End::Plus => "plus",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub id: EdgeId,
    pub minus: VertexId,
    pub plus: VertexId,
    pub z_minus: LatticeVector,
    pub z_plus: LatticeVector,
}

impl EdgeRecord {
    pub fn vertex(&self, end: End) -> &VertexId {
        match end {
            End::Minus => &self.minus,
            End::Plus => &self.plus,
        }
    }

    pub fn inclusion(&self, end: End) -> &LatticeVector {
        match end {
            End::Minus => &self.z_minus,
            End::Plus => &self.z_plus,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    vertices: Vec<VertexId>,
    edges: Vec<EdgeRecord>,
}

/// Verdict of the cocompact-cubulation screening.
///
/// Three or more parallelism classes of edge inclusions at a single vertex
/// already rule out a geometric action on a CAT(0) cube complex; with at most
/// two classes everywhere the remaining obstruction (an unbalanced
/// Baumslag-Solitar subgroup) is not decided here.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScreenVerdict {
    NotCocompactlyCubulated,
    InconclusiveRequiresBSCheck,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TubularGraph {
    vertices: Vec<VertexId>,
    edges: Vec<EdgeRecord>,
    vertex_index: BTreeMap<VertexId, usize>,
    edge_index: BTreeMap<EdgeId, usize>,
}

impl TubularGraph {
    pub fn new(vertices: Vec<VertexId>, edges: Vec<EdgeRecord>) -> Result<Self, GraphError> {
        let mut vertex_index = BTreeMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if vertex_index.insert(v.clone(), i).is_some() {
                return Err(GraphError::DuplicateVertex(v.clone()));
            }
        }
        let mut edge_index = BTreeMap::new();
        for (i, e) in edges.iter().enumerate() {
            if edge_index.insert(e.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateEdge(e.id.clone()));
            }
            for end in [End::Minus, End::Plus] {
                if !vertex_index.contains_key(e.vertex(end)) {
                    return Err(GraphError::DanglingVertex {
                        edge: e.id.clone(),
                        vertex: e.vertex(end).clone(),
                        end,
                    });
                }
                if e.inclusion(end).is_zero() {
                    return Err(GraphError::ZeroInclusion { edge: e.id.clone(), end });
                }
            }
        }
        Ok(TubularGraph { vertices, edges, vertex_index, edge_index })
    }

    /// Parses the JSON document format and validates every invariant.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDoc =
            serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        TubularGraph::new(doc.vertices, doc.edges)
    }

    /// Byte-deterministic serializer: fixed field order, pretty-printed,
    /// trailing newline. `parse` round-trips it exactly.
    pub fn to_json(&self) -> String {
        let doc = GraphDoc { vertices: self.vertices.clone(), edges: self.edges.clone() };
        let mut text = serde_json::to_string_pretty(&doc).expect("graph serialization");
        text.push('\n');
        text
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn has_vertex(&self, v: &VertexId) -> bool {
        self.vertex_index.contains_key(v)
    }

    pub fn edge(&self, id: &EdgeId) -> Result<&EdgeRecord, GraphError> {
        self.edge_index
            .get(id)
            .map(|&i| &self.edges[i])
            .ok_or_else(|| GraphError::UnknownEdge(id.clone()))
    }

    fn vertex_pos(&self, v: &VertexId) -> Result<usize, GraphError> {
        self.vertex_index.get(v).copied().ok_or_else(|| GraphError::UnknownVertex(v.clone()))
    }

    /// Edges incident to `v`, each with the end at which `v` sits. A loop at
    /// `v` appears twice, once per end.
    pub fn incidences(&self, v: &VertexId) -> Vec<(&EdgeRecord, End)> {
        let mut out = Vec::new();
        for e in &self.edges {
            if &e.minus == v {
                out.push((e, End::Minus));
            }
            if &e.plus == v {
                out.push((e, End::Plus));
            }
        }
        out
    }

    /// Distinct sign-normalized primitive representatives of the edge
    /// inclusions at `v`, in canonical (lexicographic) order. Both ends of a
    /// loop at `v` are counted.
    pub fn parallelism_classes(&self, v: &VertexId) -> Result<Vec<LatticeVector>, GraphError> {
        self.vertex_pos(v)?;
        let mut classes = BTreeSet::new();
        for (e, end) in self.incidences(v) {
            let class = lattice::canonical_class(e.inclusion(end))
                .expect("validated inclusions are nonzero");
            classes.insert(class);
        }
        Ok(classes.into_iter().collect())
    }

    /// Screening quoted from the classification of cocompactly cubulated
    /// tubular groups: three or more parallelism classes at any vertex is a
    /// definitive no; otherwise the Baumslag-Solitar side condition would
    /// still need checking, which this crate does not implement.
    pub fn cubulation_screen(&self) -> ScreenVerdict {
        for v in &self.vertices {
            let classes = self.parallelism_classes(v).expect("vertex is present");
            if classes.len() >= 3 {
                return ScreenVerdict::NotCocompactlyCubulated;
            }
        }
        ScreenVerdict::InconclusiveRequiresBSCheck
    }

    /// Connected components as sorted lists of vertex ids, ordered by their
    /// smallest vertex.
    pub fn components(&self) -> Vec<Vec<VertexId>> {
        let n = self.vertices.len();
        let mut seen = vec![false; n];
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &self.edges {
            let a = self.vertex_index[&e.minus];
            let b = self.vertex_index[&e.plus];
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| self.vertices[a].cmp(&self.vertices[b]));
        let mut out = Vec::new();
        for &root in &order {
            if seen[root] {
                continue;
            }
            let mut component = Vec::new();
            let mut queue = VecDeque::from([root]);
            seen[root] = true;
            while let Some(u) = queue.pop_front() {
                component.push(self.vertices[u].clone());
                for &w in &adjacency[u] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            component.sort();
            out.push(component);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1 && !self.vertices.is_empty()
    }

    /// A connected loop-free graph with `|E| = |V| - 1` is a tree; the edge
    /// count rules out loops and parallel edges on its own once connectivity
    /// holds.
    pub fn is_tree(&self) -> bool {
        self.is_connected() && self.edges.len() + 1 == self.vertices.len()
    }

    /// SHA-256 of the canonical serialization, hex-encoded. Certificates
    /// embed this so they can be matched to their input.
    pub fn sha256_hex(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
