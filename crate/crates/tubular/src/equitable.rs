//! Equitable sets over a tubular graph and the three conditions checked on
//! them: the balancing condition (equal intersection-number sums across every
//! edge), fortification (a zero-intersection element at every edge end) and
//! primitivity of the stored elements.
//!
//! A non-primitive curve counts as `n` parallel primitive copies, so
//! ingestion normalizes every entry to a canonical primitive element with a
//! multiplicity and merges duplicates. The raw (as-deserialized) form is kept
//! around separately so `verify_primitive` can inspect data before repair.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EdgeId, End, GraphError, TubularGraph, VertexId};
use crate::lattice::{self, LatticeVector};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EquitableError {
    #[error("invalid equitable-set document: {0}")]
    Json(String),
    #[error("vertex \"{vertex}\": zero equitable element")]
    ZeroElement { vertex: VertexId },
    #[error("vertex \"{vertex}\": entry {element} has count 0")]
    ZeroCount { vertex: VertexId, element: LatticeVector },
    #[error("missing vertex coverage: no entries for vertex \"{0}\"")]
    MissingVertex(VertexId),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One entry of a canonical equitable set: a sign-normalized primitive
/// element with a positive multiplicity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub element: LatticeVector,
    #[serde(with = "crate::serde_util::count_string")]
    pub count: BigUint,
}

/// The as-deserialized form: entries exactly as the document listed them,
/// before normalization. `verify_primitive` runs on this.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RawEquitableSet(pub BTreeMap<VertexId, Vec<Entry>>);

impl RawEquitableSet {
    pub fn parse(text: &str) -> Result<Self, EquitableError> {
        serde_json::from_str(text).map_err(|e| EquitableError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("set serialization");
        text.push('\n');
        text
    }

    /// Normalizes into the canonical form: each element is replaced by its
    /// primitive representative, counts pick up the extracted multiplicity,
    /// and entries in the same parallelism class are merged.
    pub fn normalize(&self) -> Result<EquitableSet, EquitableError> {
        EquitableSet::from_entries(self.0.iter().flat_map(|(v, entries)| {
            entries.iter().map(move |e| (v.clone(), e.element.clone(), e.count.clone()))
        }))
    }
}

/// Canonical equitable set: per vertex, a list of entries with pairwise
/// distinct (hence pairwise non-parallel) canonical primitive elements,
/// sorted by element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EquitableSet {
    per_vertex: BTreeMap<VertexId, Vec<Entry>>,
}

impl EquitableSet {
    pub fn from_entries(
        entries: impl IntoIterator<Item = (VertexId, LatticeVector, BigUint)>,
    ) -> Result<Self, EquitableError> {
        let mut per_vertex: BTreeMap<VertexId, BTreeMap<LatticeVector, BigUint>> = BTreeMap::new();
        for (vertex, element, count) in entries {
            if element.is_zero() {
                return Err(EquitableError::ZeroElement { vertex });
            }
            if count.is_zero() {
                return Err(EquitableError::ZeroCount { vertex, element });
            }
            let (primitive, multiplicity) =
                lattice::primitive_decompose(&element).expect("nonzero element");
            let slot = per_vertex.entry(vertex).or_default().entry(primitive).or_default();
            *slot += count * multiplicity;
        }
        Ok(EquitableSet {
            per_vertex: per_vertex
                .into_iter()
                .map(|(v, classes)| {
                    let entries = classes
                        .into_iter()
                        .map(|(element, count)| Entry { element, count })
                        .collect();
                    (v, entries)
                })
                .collect(),
        })
    }

    pub fn parse(text: &str) -> Result<Self, EquitableError> {
        RawEquitableSet::parse(text)?.normalize()
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("set serialization");
        text.push('\n');
        text
    }

    /// The raw view of a canonical set (used to re-run `verify_primitive`
    /// after a serialization round trip).
    pub fn to_raw(&self) -> RawEquitableSet {
        RawEquitableSet(self.per_vertex.clone())
    }

    pub fn vertices(&self) -> impl Iterator<Item = &VertexId> {
        self.per_vertex.keys()
    }

    pub fn entries(&self, v: &VertexId) -> Option<&[Entry]> {
        self.per_vertex.get(v).map(|e| e.as_slice())
    }

    fn entries_checked(&self, v: &VertexId) -> Result<&[Entry], EquitableError> {
        match self.per_vertex.get(v) {
            Some(entries) if !entries.is_empty() => Ok(entries),
            _ => Err(EquitableError::MissingVertex(v.clone())),
        }
    }
}

/// A single verification failure; reports carry these rather than bare
/// strings so certificates can be machine-checked.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    UnequalEdgeSums {
        edge: EdgeId,
        #[serde(with = "crate::serde_util::count_string")]
        minus_sum: BigUint,
        #[serde(with = "crate::serde_util::count_string")]
        plus_sum: BigUint,
    },
    AllParallel {
        vertex: VertexId,
    },
    NotFortified {
        edge: EdgeId,
        end: End,
        vertex: VertexId,
        inclusion: LatticeVector,
    },
    NonPrimitive {
        vertex: VertexId,
        element: LatticeVector,
        repair_element: LatticeVector,
        #[serde(with = "crate::serde_util::count_string")]
        repair_multiplier: BigUint,
    },
    ZeroElement {
        vertex: VertexId,
    },
    EmptyVertex {
        vertex: VertexId,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::UnequalEdgeSums { edge, minus_sum, plus_sum } => write!(
                f,
                "edge \"{edge}\": intersection sums differ (minus end {minus_sum}, plus end {plus_sum})"
            ),
            Violation::AllParallel { vertex } => {
                write!(f, "vertex \"{vertex}\": all equitable elements are parallel")
            }
            Violation::NotFortified { edge, end, vertex, inclusion } => write!(
                f,
                "edge \"{edge}\" ({end} end at \"{vertex}\"): no equitable element has intersection number 0 with inclusion {inclusion}"
            ),
            Violation::NonPrimitive { vertex, element, repair_element, repair_multiplier } => write!(
                f,
                "vertex \"{vertex}\": element {element} is not primitive (repair: {repair_element} with count x{repair_multiplier})"
            ),
            Violation::ZeroElement { vertex } => {
                write!(f, "vertex \"{vertex}\": zero element")
            }
            Violation::EmptyVertex { vertex } => {
                write!(f, "vertex \"{vertex}\": no equitable elements")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl CheckReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        CheckReport { ok: violations.is_empty(), violations }
    }
}

/// Sum over the entries at the given end's vertex of
/// `count * intersection_number(element, inclusion)`.
pub fn edge_end_sum(
    graph: &TubularGraph,
    set: &EquitableSet,
    edge: &EdgeId,
    end: End,
) -> Result<BigUint, EquitableError> {
    let record = graph.edge(edge)?;
    let entries = set.entries_checked(record.vertex(end))?;
    let inclusion = record.inclusion(end);
    let mut sum = BigUint::zero();
    for entry in entries {
        let crossings =
            lattice::intersection_number(&entry.element, inclusion).expect("entries are nonzero");
        sum += &entry.count * crossings;
    }
    Ok(sum)
}

/// The balancing condition: for every edge the two end sums agree, and at
/// every vertex the entries are not all parallel. Distinct canonical
/// primitives are automatically non-parallel, so the second condition is a
/// count of distinct classes.
pub fn verify_equitable(
    graph: &TubularGraph,
    set: &EquitableSet,
) -> Result<CheckReport, EquitableError> {
    let mut violations = Vec::new();
    for v in graph.vertices() {
        if set.entries_checked(v)?.len() < 2 {
            violations.push(Violation::AllParallel { vertex: v.clone() });
        }
    }
    for e in graph.edges() {
        let minus_sum = edge_end_sum(graph, set, &e.id, End::Minus)?;
        let plus_sum = edge_end_sum(graph, set, &e.id, End::Plus)?;
        if minus_sum != plus_sum {
            violations.push(Violation::UnequalEdgeSums { edge: e.id.clone(), minus_sum, plus_sum });
        }
    }
    Ok(CheckReport::from_violations(violations))
}

/// Fortification: at every edge end some entry of the set at that vertex has
/// intersection number 0 with the inclusion vector. For torus curves "is
/// parallel to an element of the set" and "some element has intersection
/// number 0" coincide, so the zero-intersection test decides both readings.
pub fn verify_fortified(
    graph: &TubularGraph,
    set: &EquitableSet,
) -> Result<CheckReport, EquitableError> {
    let mut violations = Vec::new();
    for e in graph.edges() {
        for end in [End::Minus, End::Plus] {
            let vertex = e.vertex(end);
            let entries = set.entries_checked(vertex)?;
            let inclusion = e.inclusion(end);
            let fortified = entries.iter().any(|entry| {
                lattice::intersection_number(&entry.element, inclusion)
                    .expect("entries are nonzero")
                    .is_zero()
            });
            if !fortified {
                violations.push(Violation::NotFortified {
                    edge: e.id.clone(),
                    end,
                    vertex: vertex.clone(),
                    inclusion: inclusion.clone(),
                });
            }
        }
    }
    Ok(CheckReport::from_violations(violations))
}

/// Re-validates deserialized data: every stored element must be primitive
/// (non-primitive entries get a repair hint), nonzero, and no vertex may be
/// left without entries.
pub fn verify_primitive(raw: &RawEquitableSet) -> CheckReport {
    let mut violations = Vec::new();
    for (vertex, entries) in &raw.0 {
        if entries.is_empty() {
            violations.push(Violation::EmptyVertex { vertex: vertex.clone() });
        }
        for entry in entries {
            if entry.element.is_zero() {
                violations.push(Violation::ZeroElement { vertex: vertex.clone() });
                continue;
            }
            let (primitive, multiplicity) =
                lattice::primitive_decompose(&entry.element).expect("nonzero");
            if multiplicity != BigUint::from(1u8) {
                violations.push(Violation::NonPrimitive {
                    vertex: vertex.clone(),
                    element: entry.element.clone(),
                    repair_element: primitive,
                    repair_multiplier: multiplicity,
                });
            }
        }
    }
    CheckReport::from_violations(violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeRecord;

    fn lv(x: i64, y: i64) -> LatticeVector {
        LatticeVector::new(x, y)
    }

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    fn set(entries: &[(&str, (i64, i64), u64)]) -> EquitableSet {
        EquitableSet::from_entries(
            entries.iter().map(|&(v, (x, y), c)| (v.into(), lv(x, y), big(c))),
        )
        .unwrap()
    }

    fn single_edge_graph(z_minus: LatticeVector, z_plus: LatticeVector) -> TubularGraph {
        TubularGraph::new(
            vec!["v0".into(), "v1".into()],
            vec![EdgeRecord { id: "e0".into(), minus: "v0".into(), plus: "v1".into(), z_minus, z_plus }],
        )
        .unwrap()
    }

    #[test]
    fn end_sum_of_single_transversal_entry() {
        let g = single_edge_graph(lv(1, 0), lv(0, 1));
        let s = set(&[("v0", (0, 1), 1), ("v1", (1, 0), 1)]);
        assert_eq!(edge_end_sum(&g, &s, &"e0".into(), End::Minus).unwrap(), big(1));
    }

    #[test]
    fn end_sum_weights_by_counts() {
        let g = single_edge_graph(lv(1, 1), lv(0, 1));
        let s = set(&[("v0", (1, 0), 2), ("v0", (0, 1), 3), ("v1", (1, 0), 1)]);
        // 2*|det((1,0),(1,1))| + 3*|det((0,1),(1,1))| = 2 + 3.
        assert_eq!(edge_end_sum(&g, &s, &"e0".into(), End::Minus).unwrap(), big(5));
    }

    #[test]
    fn end_sum_of_parallel_entries_is_zero() {
        let g = single_edge_graph(lv(1, 0), lv(0, 1));
        let s = set(&[("v0", (1, 0), 7), ("v1", (1, 0), 1)]);
        assert_eq!(edge_end_sum(&g, &s, &"e0".into(), End::Minus).unwrap(), big(0));
    }

    #[test]
    fn edgeless_graph_with_two_classes_everywhere_is_equitable() {
        let g = TubularGraph::new(vec!["v0".into(), "v1".into()], vec![]).unwrap();
        let s = set(&[("v0", (1, 0), 1), ("v0", (0, 1), 1), ("v1", (1, 0), 1), ("v1", (0, 1), 1)]);
        assert!(verify_equitable(&g, &s).unwrap().ok);
    }

    #[test]
    fn balanced_single_edge_is_equitable() {
        let g = single_edge_graph(lv(1, 0), lv(0, 1));
        let s = set(&[
            ("v0", (0, 1), 1),
            ("v0", (1, 0), 1),
            ("v1", (0, 1), 1),
            ("v1", (1, 0), 1),
        ]);
        let report = verify_equitable(&g, &s).unwrap();
        assert!(report.ok, "{:?}", report.violations);
    }

    #[test]
    fn unbalanced_counts_name_the_edge_with_both_sums() {
        let g = single_edge_graph(lv(1, 0), lv(0, 1));
        let s = set(&[
            ("v0", (0, 1), 2),
            ("v0", (1, 0), 2),
            ("v1", (0, 1), 1),
            ("v1", (1, 0), 1),
        ]);
        let report = verify_equitable(&g, &s).unwrap();
        assert!(!report.ok);
        assert_eq!(
            report.violations,
            vec![Violation::UnequalEdgeSums {
                edge: "e0".into(),
                minus_sum: big(2),
                plus_sum: big(1),
            }]
        );
    }

    #[test]
    fn missing_coverage_is_an_error() {
        let g = single_edge_graph(lv(1, 0), lv(0, 1));
        let s = set(&[("v0", (0, 1), 1), ("v0", (1, 0), 1)]);
        assert_eq!(
            verify_equitable(&g, &s).unwrap_err(),
            EquitableError::MissingVertex("v1".into())
        );
    }

    #[test]
    fn parallel_inclusion_fortifies_its_end() {
        let g = single_edge_graph(lv(2, 0), lv(0, 1));
        let s = set(&[("v0", (1, 0), 1), ("v0", (0, 1), 1), ("v1", (1, 0), 1), ("v1", (0, 1), 1)]);
        let report = verify_fortified(&g, &s).unwrap();
        assert!(report.ok);
    }

    #[test]
    fn transversal_only_end_is_not_fortified() {
        let g = single_edge_graph(lv(1, 1), lv(0, 1));
        let s = set(&[("v0", (1, 0), 1), ("v0", (0, 1), 1), ("v1", (1, 0), 1), ("v1", (0, 1), 1)]);
        let report = verify_fortified(&g, &s).unwrap();
        assert!(!report.ok);
        assert_eq!(
            report.violations,
            vec![Violation::NotFortified {
                edge: "e0".into(),
                end: End::Minus,
                vertex: "v0".into(),
                inclusion: lv(1, 1),
            }]
        );
    }

    #[test]
    fn primitive_set_passes_revalidation() {
        let raw = RawEquitableSet::parse(r#"{ "v0": [ { "element": [1,2], "count": "5" } ] }"#)
            .unwrap();
        assert!(verify_primitive(&raw).ok);
    }

    #[test]
    fn non_primitive_entry_gets_a_repair_hint() {
        let raw = RawEquitableSet::parse(r#"{ "v0": [ { "element": [2,4], "count": "5" } ] }"#)
            .unwrap();
        let report = verify_primitive(&raw);
        assert!(!report.ok);
        assert_eq!(
            report.violations,
            vec![Violation::NonPrimitive {
                vertex: "v0".into(),
                element: lv(2, 4),
                repair_element: lv(1, 2),
                repair_multiplier: big(2),
            }]
        );
        // Normalization applies exactly the hinted repair.
        let normalized = raw.normalize().unwrap();
        assert_eq!(
            normalized.entries(&"v0".into()).unwrap(),
            &[Entry { element: lv(1, 2), count: big(10) }]
        );
    }

    #[test]
    fn empty_vertex_fails_revalidation() {
        let raw = RawEquitableSet::parse(r#"{ "v0": [] }"#).unwrap();
        let report = verify_primitive(&raw);
        assert!(!report.ok);
        assert_eq!(report.violations, vec![Violation::EmptyVertex { vertex: "v0".into() }]);
    }

    #[test]
    fn normalization_merges_parallel_entries() {
        let s = EquitableSet::from_entries([
            ("v0".into(), lv(1, 2), big(5)),
            ("v0".into(), lv(-2, -4), big(3)),
        ])
        .unwrap();
        assert_eq!(
            s.entries(&"v0".into()).unwrap(),
            &[Entry { element: lv(1, 2), count: big(11) }]
        );
    }

    #[test]
    fn counts_serialize_as_decimal_strings() {
        let huge: BigUint = "123456789012345678901234567890".parse().unwrap();
        let s = EquitableSet::from_entries([("v0".into(), lv(1, 0), huge.clone())]).unwrap();
        let text = s.to_json();
        assert!(text.contains("\"123456789012345678901234567890\""));
        let back = EquitableSet::parse(&text).unwrap();
        assert_eq!(back.entries(&"v0".into()).unwrap()[0].count, huge);
    }

    #[test]
    fn global_scaling_preserves_equitability() {
        let g = single_edge_graph(lv(1, 0), lv(1, 1));
        let base = [
            ("v0", (1, 0), 1u64),
            ("v0", (0, 1), 1),
            ("v1", (1, 1), 1),
            ("v1", (1, 0), 1),
        ];
        for factor in [1u64, 2, 7, 100] {
            let scaled = EquitableSet::from_entries(
                base.iter().map(|&(v, (x, y), c)| (v.into(), lv(x, y), big(c * factor))),
            )
            .unwrap();
            assert!(verify_equitable(&g, &scaled).unwrap().ok, "factor {factor}");
        }
    }

    #[test]
    fn adding_entries_never_breaks_fortification() {
        let g = single_edge_graph(lv(2, 0), lv(0, 3));
        let mut entries: Vec<(&str, (i64, i64), u64)> = vec![
            ("v0", (1, 0), 1),
            ("v0", (0, 1), 1),
            ("v1", (0, 1), 1),
            ("v1", (1, 0), 1),
        ];
        assert!(verify_fortified(&g, &set(&entries)).unwrap().ok);
        for extra in [("v0", (1, 1), 3u64), ("v1", (2, 1), 1), ("v0", (5, -3), 2)] {
            entries.push(extra);
            assert!(verify_fortified(&g, &set(&entries)).unwrap().ok);
        }
    }
}
