//! Combinatorial Morse-Smale complexes of scalar fields on regular 3D grids.
//!
//! The pipeline assigns a discrete gradient by lower-star processing, extracts
//! critical cells, resolves saddle-extremum arcs by pointer doubling, marks
//! saddle-saddle reachability with a frontier BFS, contracts the resulting DAG
//! and counts gradient paths by iterated sparse matrix multiplication.

pub mod cli;
pub mod error;
pub mod extrema;
pub mod gradient;
pub mod grid;
pub mod msc;
pub mod path_matrix;
pub mod primitives;
pub mod saddle_graph;
pub mod synth;
pub mod volume;

pub use error::{Error, Result};
pub use grid::{CellId, GridDims, ScalarField};
