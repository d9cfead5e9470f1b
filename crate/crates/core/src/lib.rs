//! Discrete Riemannian geometry on gridded domains.
//!
//! A [`Grid`](grid::Grid) discretizes a parameter domain (interval, square,
//! n-cube, hexagon, cylinder, torus, sphere, projective plane) together with
//! its identifications. A [`MetricField`](metric::MetricField) samples a
//! positive definite tensor at every vertex. On top of that the crate
//! computes
//!
//! - graph distances, face distances, shortest loops in homotopy classes and
//!   systoles ([`geodesy`]),
//! - volumes, level-set lengths, coarea and volume profiles ([`measure`]),
//! - Besicovitch certificates built from the face-distance map
//!   ([`besicovitch`]),
//! - covers, partitions of unity, nerves, separating cuts and width
//!   certificates ([`covers`]),
//! - an experiment runner with the canonical gallery ([`experiment`]).
//!
//! Batch work (per-vertex searches, random sweeps) goes through [`exec`],
//! which uses rayon when the `parallel` feature is enabled.

pub mod besicovitch;
pub mod covers;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod geodesy;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod measure;
pub mod metric;

pub use error::{Error, Result};
pub use grid::{DomainKind, DomainTopology, FaceLabel, Grid, HexagonMask, StencilOrder, VertexId};
pub use metric::{MetricField, Polyline};
