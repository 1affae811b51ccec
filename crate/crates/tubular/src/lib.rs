//! Exact-arithmetic toolkit for tubular groups: finite graphs of groups with
//! `Z^2` vertex groups and `Z` edge groups.
//!
//! The crate verifies the curvature-certificate conditions used for these
//! groups (equitable, fortified, primitive sets; undilated immersed walls),
//! constructs certified wall spaces for tree-shaped graphs, solves the word
//! problem for single-vertex tubular groups by Britton reduction, and decides
//! residual finiteness and Hopf-type properties for the `G_{p,q}` family.
//!
//! All arithmetic is arbitrary precision: copy counts produced by the tree
//! construction grow multiplicatively along paths and overflow fixed-width
//! integers almost immediately.

pub mod equitable;
pub mod gpq;
pub mod graph;
pub mod lattice;
pub mod treebuild;
pub mod walls;
pub mod words;

mod serde_util;

pub use equitable::{CheckReport, EquitableSet, RawEquitableSet, Violation};
pub use graph::{EdgeId, EdgeRecord, ScreenVerdict, TubularGraph, VertexId};
pub use lattice::{LatticeVector, SublatticeBasis};
pub use walls::{CompressedWallGraph, WallGraph};
pub use words::{GroupWord, HnnPresentation, Letter};
