//! Immersed-wall graphs over a tubular graph.
//!
//! A wall graph has one vertex per materialized copy of an equitable-set
//! element and, over each edge of the underlying graph, one edge per matched
//! pair of intersection points. Each wall edge stores the intersection
//! numbers of its two endpoint elements with the edge inclusions; the ratio
//! of the two is the factor the dilation function picks up when the edge is
//! traversed. Walls are undilated when every closed path has dilation 1,
//! which is decided here by exact rational potentials on a spanning tree.
//!
//! Copy counts coming out of the tree construction grow multiplicatively, so
//! a compressed form stores one record per (wall class, base vertex) and per
//! (wall class, base edge); it expands to the explicit graph on demand, under
//! a materialization limit.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equitable::{self, EquitableError, EquitableSet};
use crate::graph::{EdgeId, End, GraphError, TubularGraph, VertexId};
use crate::lattice::{self, LatticeVector};

#[derive(Debug, Error)]
pub enum WallError {
    #[error("invalid wall-graph document: {0}")]
    Json(String),
    #[error(transparent)]
    Set(#[from] EquitableError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("set not equitable: {0}")]
    NotEquitable(String),
    #[error("materialization would require {required} wall {what}, limit is {limit}")]
    TooLarge { what: &'static str, required: BigUint, limit: usize },
    #[error("wall edge {0} does not exist")]
    UnknownWallEdge(usize),
    #[error("disconnected step at path position {position}: edge {edge} does not start at the current vertex")]
    DisconnectedStep { position: usize, edge: usize },
    #[error("inconsistent wall graph: {0}")]
    Inconsistent(String),
}

/// Direction in which a wall edge is traversed; dilation picks up
/// `minus/plus` forward and the reciprocal in reverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Traversal {
    Forward,
    Reverse,
}

impl Traversal {
    fn flip(self) -> Self {
        match self {
            Traversal::Forward => Traversal::Reverse,
            Traversal::Reverse => Traversal::Forward,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub edge: usize,
    pub direction: Traversal,
}

impl PathStep {
    pub fn forward(edge: usize) -> Self {
        PathStep { edge, direction: Traversal::Forward }
    }

    pub fn reverse(edge: usize) -> Self {
        PathStep { edge, direction: Traversal::Reverse }
    }

    fn flip(self) -> Self {
        PathStep { edge: self.edge, direction: self.direction.flip() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallVertex {
    pub over: VertexId,
    pub element: LatticeVector,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallEdge {
    pub over: EdgeId,
    pub from: usize,
    pub to: usize,
    #[serde(with = "crate::serde_util::count_string")]
    pub minus_count: BigUint,
    #[serde(with = "crate::serde_util::count_string")]
    pub plus_count: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WallGraph {
    vertices: Vec<WallVertex>,
    edges: Vec<WallEdge>,
}

#[derive(Serialize, Deserialize)]
struct WallVertexDoc {
    id: usize,
    #[serde(flatten)]
    vertex: WallVertex,
}

#[derive(Serialize, Deserialize)]
struct WallEdgeDoc {
    id: usize,
    #[serde(flatten)]
    edge: WallEdge,
}

#[derive(Serialize, Deserialize)]
struct WallGraphDoc {
    vertices: Vec<WallVertexDoc>,
    edges: Vec<WallEdgeDoc>,
}

impl WallGraph {
    /// Structural validation only: endpoint indices in range and positive
    /// point counts. Consistency with an underlying graph is a separate
    /// check (`validate_against`).
    pub fn new(vertices: Vec<WallVertex>, edges: Vec<WallEdge>) -> Result<Self, WallError> {
        for (i, e) in edges.iter().enumerate() {
            if e.from >= vertices.len() || e.to >= vertices.len() {
                return Err(WallError::Inconsistent(format!(
                    "wall edge {i} references a missing wall vertex"
                )));
            }
            if e.minus_count.is_zero() || e.plus_count.is_zero() {
                return Err(WallError::Inconsistent(format!(
                    "wall edge {i} has a zero intersection count"
                )));
            }
        }
        Ok(WallGraph { vertices, edges })
    }

    pub fn parse(text: &str) -> Result<Self, WallError> {
        let doc: WallGraphDoc =
            serde_json::from_str(text).map_err(|e| WallError::Json(e.to_string()))?;
        for (i, v) in doc.vertices.iter().enumerate() {
            if v.id != i {
                return Err(WallError::Inconsistent(format!(
                    "wall vertex id {} at position {i}",
                    v.id
                )));
            }
        }
        for (i, e) in doc.edges.iter().enumerate() {
            if e.id != i {
                return Err(WallError::Inconsistent(format!("wall edge id {} at position {i}", e.id)));
            }
        }
        WallGraph::new(
            doc.vertices.into_iter().map(|v| v.vertex).collect(),
            doc.edges.into_iter().map(|e| e.edge).collect(),
        )
    }

    pub fn to_json(&self) -> String {
        let doc = WallGraphDoc {
            vertices: self
                .vertices
                .iter()
                .enumerate()
                .map(|(id, v)| WallVertexDoc { id, vertex: v.clone() })
                .collect(),
            edges: self
                .edges
                .iter()
                .enumerate()
                .map(|(id, e)| WallEdgeDoc { id, edge: e.clone() })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("wall serialization");
        text.push('\n');
        text
    }

    pub fn vertices(&self) -> &[WallVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[WallEdge] {
        &self.edges
    }

    /// Consistency with the underlying graph: the projection respects edge
    /// endpoints, and every stored point count equals the recomputed
    /// intersection number of the endpoint element with the edge inclusion.
    pub fn validate_against(&self, graph: &TubularGraph) -> Result<(), WallError> {
        for (i, v) in self.vertices.iter().enumerate() {
            if !graph.has_vertex(&v.over) {
                return Err(WallError::Inconsistent(format!(
                    "wall vertex {i} lies over unknown vertex \"{}\"",
                    v.over
                )));
            }
            if v.element.is_zero() {
                return Err(WallError::Inconsistent(format!("wall vertex {i} has zero element")));
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            let base = graph.edge(&e.over)?;
            let from = &self.vertices[e.from];
            let to = &self.vertices[e.to];
            if from.over != base.minus || to.over != base.plus {
                return Err(WallError::Inconsistent(format!(
                    "wall edge {i} over \"{}\" does not respect the projection", e.over
                )));
            }
            let minus = lattice::intersection_number(&from.element, &base.z_minus)
                .expect("validated nonzero");
            let plus =
                lattice::intersection_number(&to.element, &base.z_plus).expect("validated nonzero");
            if minus != e.minus_count || plus != e.plus_count {
                return Err(WallError::Inconsistent(format!(
                    "wall edge {i} over \"{}\": stored counts {}/{} but recomputed {}/{}",
                    e.over, e.minus_count, e.plus_count, minus, plus
                )));
            }
        }
        Ok(())
    }
}

fn step_ratio(e: &WallEdge, direction: Traversal) -> BigRational {
    let minus = BigInt::from(e.minus_count.clone());
    let plus = BigInt::from(e.plus_count.clone());
    match direction {
        Traversal::Forward => BigRational::new(minus, plus),
        Traversal::Reverse => BigRational::new(plus, minus),
    }
}

fn step_endpoints(e: &WallEdge, direction: Traversal) -> (usize, usize) {
    match direction {
        Traversal::Forward => (e.from, e.to),
        Traversal::Reverse => (e.to, e.from),
    }
}

/// Dilation of a connected edge path: the product over traversed edges of
/// `minus/plus` (forward) or `plus/minus` (reverse). The empty path has
/// dilation 1.
pub fn dilation(w: &WallGraph, path: &[PathStep]) -> Result<BigRational, WallError> {
    let mut value = BigRational::one();
    let mut position: Option<usize> = None;
    for (i, step) in path.iter().enumerate() {
        let e = w.edges.get(step.edge).ok_or(WallError::UnknownWallEdge(step.edge))?;
        let (start, end) = step_endpoints(e, step.direction);
        if let Some(at) = position {
            if at != start {
                return Err(WallError::DisconnectedStep { position: i, edge: step.edge });
            }
        }
        value *= step_ratio(e, step.direction);
        position = Some(end);
    }
    Ok(value)
}

fn reverse_path(path: &[PathStep]) -> Vec<PathStep> {
    path.iter().rev().map(|s| s.flip()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DilationWitness {
    pub path: Vec<PathStep>,
    #[serde(serialize_with = "serialize_rational")]
    pub dilation: BigRational,
}

fn serialize_rational<S: serde::Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

#[derive(Clone, Debug, Serialize)]
pub struct UndilatedReport {
    pub ok: bool,
    pub witness: Option<DilationWitness>,
}

/// Decides whether every closed path has dilation 1.
///
/// Each component gets exact rational potentials along a BFS spanning tree
/// (root potential 1, child = parent x edge ratio); the walls are undilated
/// iff every non-tree edge's ratio matches the potential quotient of its
/// endpoints. The first failing edge (by index) yields a witness: its
/// fundamental cycle, oriented so the dilation exceeds 1.
pub fn check_undilated(w: &WallGraph) -> UndilatedReport {
    let n = w.vertices.len();
    let mut adjacency: Vec<Vec<PathStep>> = vec![Vec::new(); n];
    for (i, e) in w.edges.iter().enumerate() {
        adjacency[e.from].push(PathStep::forward(i));
        if e.to != e.from {
            adjacency[e.to].push(PathStep::reverse(i));
        }
    }

    let mut potential: Vec<Option<BigRational>> = vec![None; n];
    let mut parent_step: Vec<Option<PathStep>> = vec![None; n];
    let mut parent_vertex: Vec<usize> = vec![usize::MAX; n];
    let mut depth: Vec<usize> = vec![0; n];
    let mut is_tree_edge = vec![false; w.edges.len()];

    for root in 0..n {
        if potential[root].is_some() {
            continue;
        }
        potential[root] = Some(BigRational::one());
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let base = potential[u].clone().expect("visited");
            for &step in &adjacency[u] {
                let e = &w.edges[step.edge];
                let (_, v) = step_endpoints(e, step.direction);
                if potential[v].is_none() {
                    potential[v] = Some(&base * step_ratio(e, step.direction));
                    parent_step[v] = Some(step);
                    parent_vertex[v] = u;
                    depth[v] = depth[u] + 1;
                    is_tree_edge[step.edge] = true;
                    queue.push_back(v);
                }
            }
        }
    }

    for (i, e) in w.edges.iter().enumerate() {
        if is_tree_edge[i] {
            continue;
        }
        let expected = potential[e.from].clone().expect("all visited")
            * step_ratio(e, Traversal::Forward);
        if expected == *potential[e.to].as_ref().expect("all visited") {
            continue;
        }
        // Fundamental cycle: the edge forward, then the tree path back.
        let mut path = vec![PathStep::forward(i)];
        path.extend(tree_path(&parent_step, &parent_vertex, &depth, e.to, e.from));
        let mut value = dilation(w, &path).expect("witness path is connected");
        debug_assert!(!value.is_one());
        if value < BigRational::one() {
            path = reverse_path(&path);
            value = value.recip();
        }
        return UndilatedReport { ok: false, witness: Some(DilationWitness { path, dilation: value }) };
    }
    UndilatedReport { ok: true, witness: None }
}

/// Tree path between two vertices of the same BFS tree, as traversal steps.
fn tree_path(
    parent_step: &[Option<PathStep>],
    parent_vertex: &[usize],
    depth: &[usize],
    from: usize,
    to: usize,
) -> Vec<PathStep> {
    let mut up_from = Vec::new();
    let mut up_to = Vec::new();
    let (mut a, mut b) = (from, to);
    while depth[a] > depth[b] {
        up_from.push(parent_step[a].expect("non-root").flip());
        a = parent_vertex[a];
    }
    while depth[b] > depth[a] {
        up_to.push(parent_step[b].expect("non-root").flip());
        b = parent_vertex[b];
    }
    while a != b {
        up_from.push(parent_step[a].expect("non-root").flip());
        a = parent_vertex[a];
        up_to.push(parent_step[b].expect("non-root").flip());
        b = parent_vertex[b];
    }
    // up_from climbs from..lca; descending lca..to re-flips the collected steps.
    let mut path = up_from;
    path.extend(up_to.into_iter().rev().map(|s| s.flip()));
    path
}

/// Connected components as sorted vertex-index lists, ordered by smallest
/// contained vertex.
pub fn components(w: &WallGraph) -> Vec<Vec<usize>> {
    let n = w.vertices.len();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &w.edges {
        adjacency[e.from].push(e.to);
        adjacency[e.to].push(e.from);
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut component = vec![root];
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    component.push(v);
                    queue.push_back(v);
                }
            }
        }
        component.sort_unstable();
        out.push(component);
    }
    out
}

/// The per-component equal-counts property: within each connected component,
/// all wall edges over the same base edge have equal minus counts and equal
/// plus counts. Over a tree this property already forces undilated walls, by
/// telescoping cancellation of opposite-direction factor pairs.
pub fn check_propdil(w: &WallGraph) -> bool {
    let mut component_of = vec![usize::MAX; w.vertices.len()];
    for (ci, component) in components(w).iter().enumerate() {
        for &v in component {
            component_of[v] = ci;
        }
    }
    let mut seen: BTreeMap<(usize, &EdgeId), (&BigUint, &BigUint)> = BTreeMap::new();
    for e in &w.edges {
        let key = (component_of[e.from], &e.over);
        match seen.get(&key) {
            None => {
                seen.insert(key, (&e.minus_count, &e.plus_count));
            }
            Some(&(minus, plus)) => {
                if *minus != e.minus_count || *plus != e.plus_count {
                    return false;
                }
            }
        }
    }
    true
}

/// Builds the explicit wall graph from an equitable set with the canonical
/// grid pairing: on each side of each base edge the intersection points are
/// ordered lexicographically by (element, copy index, point index) and the
/// two equal-length orderings are matched up pointwise.
pub fn build_walls(
    graph: &TubularGraph,
    set: &EquitableSet,
    limit: usize,
) -> Result<WallGraph, WallError> {
    let report = equitable::verify_equitable(graph, set)?;
    if !report.ok {
        return Err(WallError::NotEquitable(report.violations[0].to_string()));
    }

    let mut total = BigUint::zero();
    for v in graph.vertices() {
        for entry in set.entries(v).expect("coverage verified") {
            total += &entry.count;
        }
    }
    if total > BigUint::from(limit) {
        return Err(WallError::TooLarge { what: "vertices", required: total, limit });
    }

    // Wall vertex numbering: graph vertex order, then canonical entry order,
    // then copy index. first_copy locates the block of copies of one entry.
    let mut vertices = Vec::new();
    let mut first_copy: BTreeMap<(VertexId, LatticeVector), usize> = BTreeMap::new();
    for v in graph.vertices() {
        for entry in set.entries(v).expect("coverage verified") {
            let copies = entry.count.to_usize().expect("bounded by limit");
            first_copy.insert((v.clone(), entry.element.clone()), vertices.len());
            for _ in 0..copies {
                vertices.push(WallVertex { over: v.clone(), element: entry.element.clone() });
            }
        }
    }

    let mut total_edges = BigUint::zero();
    for e in graph.edges() {
        total_edges += equitable::edge_end_sum(graph, set, &e.id, End::Minus)?;
    }
    let edge_guard = limit.saturating_mul(16);
    if total_edges > BigUint::from(edge_guard) {
        return Err(WallError::TooLarge { what: "edges", required: total_edges, limit: edge_guard });
    }

    // One side of a base edge, flattened to (wall vertex, per-copy count) in
    // pairing order.
    let side_points = |v: &VertexId, inclusion: &LatticeVector| -> Vec<(usize, BigUint)> {
        let mut points = Vec::new();
        for entry in set.entries(v).expect("coverage verified") {
            let per_copy = lattice::intersection_number(&entry.element, inclusion)
                .expect("entries are nonzero");
            let per_copy_usize = per_copy.to_usize().expect("bounded by edge guard");
            let start = first_copy[&(v.clone(), entry.element.clone())];
            let copies = entry.count.to_usize().expect("bounded by limit");
            for copy in 0..copies {
                for _ in 0..per_copy_usize {
                    points.push((start + copy, per_copy.clone()));
                }
            }
        }
        points
    };

    let mut edges = Vec::new();
    for e in graph.edges() {
        let minus_points = side_points(&e.minus, &e.z_minus);
        let plus_points = side_points(&e.plus, &e.z_plus);
        debug_assert_eq!(minus_points.len(), plus_points.len(), "equitable sums match");
        for ((from, minus_count), (to, plus_count)) in
            minus_points.into_iter().zip(plus_points.into_iter())
        {
            edges.push(WallEdge { over: e.id.clone(), from, to, minus_count, plus_count });
        }
    }
    WallGraph::new(vertices, edges)
}

/// Pairing strategy marker carried by compressed wall graphs. The canonical
/// grid is the only built-in strategy; externally produced pairings enter
/// through the explicit format instead.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pairing {
    #[default]
    #[serde(rename = "canonical-grid")]
    CanonicalGrid,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassVertex {
    pub element: LatticeVector,
    #[serde(with = "crate::serde_util::count_string")]
    pub count: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEdge {
    #[serde(with = "crate::serde_util::count_string")]
    pub minus_per_copy: BigUint,
    #[serde(with = "crate::serde_util::count_string")]
    pub plus_per_copy: BigUint,
}

/// One wall class: a choice of element and copy count over each base vertex,
/// with the per-copy intersection counts over each base edge.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WallClass {
    pub vertices: BTreeMap<VertexId, ClassVertex>,
    pub edges: BTreeMap<EdgeId, ClassEdge>,
}

/// Multiplicity-counted wall graph: the disjoint union of its classes, where
/// class `s` over vertex `v` stands for `count` copies of one element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressedWallGraph {
    pub pairing: Pairing,
    pub classes: Vec<WallClass>,
}

impl CompressedWallGraph {
    pub fn parse(text: &str) -> Result<Self, WallError> {
        serde_json::from_str(text).map_err(|e| WallError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("serialization");
        text.push('\n');
        text
    }

    pub fn total_expanded_vertices(&self) -> BigUint {
        let mut total = BigUint::zero();
        for class in &self.classes {
            for cv in class.vertices.values() {
                total += &cv.count;
            }
        }
        total
    }

    /// Expansion consistency and projection consistency: recorded per-copy
    /// counts match recomputed intersection numbers, and for every recorded
    /// `(class, edge)` the two expanded endpoint totals agree
    /// (`N_minus * k = N_plus * l`).
    pub fn validate(&self, graph: &TubularGraph) -> Result<(), WallError> {
        for (s, class) in self.classes.iter().enumerate() {
            for (v, cv) in &class.vertices {
                if !graph.has_vertex(v) {
                    return Err(WallError::Inconsistent(format!(
                        "class {s} lies over unknown vertex \"{v}\""
                    )));
                }
                if cv.element.is_zero() {
                    return Err(WallError::Inconsistent(format!(
                        "class {s} at \"{v}\" has zero element"
                    )));
                }
                if cv.count.is_zero() {
                    return Err(WallError::Inconsistent(format!(
                        "class {s} at \"{v}\" has zero copy count"
                    )));
                }
            }
            for (eid, ce) in &class.edges {
                let base = graph.edge(eid)?;
                let minus_cv = class.vertices.get(&base.minus).ok_or_else(|| {
                    WallError::Inconsistent(format!(
                        "class {s} records edge \"{eid}\" but not its minus vertex"
                    ))
                })?;
                let plus_cv = class.vertices.get(&base.plus).ok_or_else(|| {
                    WallError::Inconsistent(format!(
                        "class {s} records edge \"{eid}\" but not its plus vertex"
                    ))
                })?;
                let k = lattice::intersection_number(&minus_cv.element, &base.z_minus)
                    .expect("nonzero");
                let l =
                    lattice::intersection_number(&plus_cv.element, &base.z_plus).expect("nonzero");
                if k != ce.minus_per_copy || l != ce.plus_per_copy {
                    return Err(WallError::Inconsistent(format!(
                        "class {s}, edge \"{eid}\": stored per-copy counts {}/{} but recomputed {k}/{l}",
                        ce.minus_per_copy, ce.plus_per_copy
                    )));
                }
                if &minus_cv.count * &ce.minus_per_copy != &plus_cv.count * &ce.plus_per_copy {
                    return Err(WallError::Inconsistent(format!(
                        "class {s}, edge \"{eid}\": endpoint totals differ ({} x {} vs {} x {})",
                        minus_cv.count, ce.minus_per_copy, plus_cv.count, ce.plus_per_copy
                    )));
                }
            }
        }
        Ok(())
    }

    /// The class graph: one wall vertex per recorded (class, base vertex) and
    /// one wall edge per recorded (class, base edge) with positive counts.
    /// Every explicit cycle of the expansion projects to a closed walk here
    /// with equal dilation, so class-level checks are sound for the
    /// expansion (and may be stricter on non-tree graphs).
    pub fn class_graph(&self, graph: &TubularGraph) -> Result<WallGraph, WallError> {
        let mut vertices = Vec::new();
        let mut index: BTreeMap<(usize, VertexId), usize> = BTreeMap::new();
        for (s, class) in self.classes.iter().enumerate() {
            for (v, cv) in &class.vertices {
                index.insert((s, v.clone()), vertices.len());
                vertices.push(WallVertex { over: v.clone(), element: cv.element.clone() });
            }
        }
        let mut edges = Vec::new();
        for (s, class) in self.classes.iter().enumerate() {
            for (eid, ce) in &class.edges {
                if ce.minus_per_copy.is_zero() && ce.plus_per_copy.is_zero() {
                    continue;
                }
                if ce.minus_per_copy.is_zero() || ce.plus_per_copy.is_zero() {
                    return Err(WallError::Inconsistent(format!(
                        "class {s}, edge \"{eid}\": one-sided zero per-copy count"
                    )));
                }
                let base = graph.edge(eid)?;
                let from = index[&(s, base.minus.clone())];
                let to = index[&(s, base.plus.clone())];
                edges.push(WallEdge {
                    over: eid.clone(),
                    from,
                    to,
                    minus_count: ce.minus_per_copy.clone(),
                    plus_count: ce.plus_per_copy.clone(),
                });
            }
        }
        WallGraph::new(vertices, edges)
    }

    /// Aggregates the per-class counts into a plain equitable set.
    pub fn equitable_set(&self) -> Result<EquitableSet, EquitableError> {
        EquitableSet::from_entries(self.classes.iter().flat_map(|class| {
            class
                .vertices
                .iter()
                .map(|(v, cv)| (v.clone(), cv.element.clone(), cv.count.clone()))
        }))
    }

    /// Materializes the explicit wall graph, class by class, with the grid
    /// pairing inside each (class, edge) bundle. Classes stay disjoint, so
    /// within a component every edge over one base edge carries the same
    /// per-copy counts.
    pub fn expand(&self, graph: &TubularGraph, limit: usize) -> Result<WallGraph, WallError> {
        self.validate(graph)?;
        let total = self.total_expanded_vertices();
        if total > BigUint::from(limit) {
            return Err(WallError::TooLarge { what: "vertices", required: total, limit });
        }
        let mut total_edges = BigUint::zero();
        for class in &self.classes {
            for (eid, ce) in &class.edges {
                let base = graph.edge(eid)?;
                let n_minus = &class.vertices[&base.minus].count;
                total_edges += n_minus * &ce.minus_per_copy;
            }
        }
        let edge_guard = limit.saturating_mul(16);
        if total_edges > BigUint::from(edge_guard) {
            return Err(WallError::TooLarge { what: "edges", required: total_edges, limit: edge_guard });
        }

        let mut vertices = Vec::new();
        let mut first_copy: BTreeMap<(usize, VertexId), usize> = BTreeMap::new();
        for (s, class) in self.classes.iter().enumerate() {
            for (v, cv) in &class.vertices {
                first_copy.insert((s, v.clone()), vertices.len());
                let copies = cv.count.to_usize().expect("bounded by limit");
                for _ in 0..copies {
                    vertices.push(WallVertex { over: v.clone(), element: cv.element.clone() });
                }
            }
        }

        let mut edges = Vec::new();
        for (s, class) in self.classes.iter().enumerate() {
            for (eid, ce) in &class.edges {
                if ce.minus_per_copy.is_zero() {
                    continue;
                }
                let base = graph.edge(eid)?;
                let side = |v: &VertexId, per_copy: &BigUint| -> Vec<usize> {
                    let start = first_copy[&(s, v.clone())];
                    let copies = class.vertices[v].count.to_usize().expect("bounded");
                    let points_per_copy = per_copy.to_usize().expect("bounded by edge guard");
                    let mut points = Vec::with_capacity(copies * points_per_copy);
                    for copy in 0..copies {
                        for _ in 0..points_per_copy {
                            points.push(start + copy);
                        }
                    }
                    points
                };
                let minus_points = side(&base.minus, &ce.minus_per_copy);
                let plus_points = side(&base.plus, &ce.plus_per_copy);
                debug_assert_eq!(minus_points.len(), plus_points.len(), "validated totals");
                for (from, to) in minus_points.into_iter().zip(plus_points.into_iter()) {
                    edges.push(WallEdge {
                        over: eid.clone(),
                        from,
                        to,
                        minus_count: ce.minus_per_copy.clone(),
                        plus_count: ce.plus_per_copy.clone(),
                    });
                }
            }
        }
        WallGraph::new(vertices, edges)
    }
}
