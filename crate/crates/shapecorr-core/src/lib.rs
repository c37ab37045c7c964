//! Dense shape correspondence between triangle meshes.
//!
//! The crate computes vertex-to-vertex maps by combining the spectral
//! functional-map framework with externally supplied per-vertex descriptors:
//! multi-view lifted visual features, per-region language embeddings, and a
//! semantic region graph whose distances calibrate a contrastive training
//! objective. Everything here is pure computation on in-memory data; file
//! formats and the batch front-end live in the companion `shapecorr-cli`
//! crate.
//!
//! The crate is `no_std` (with `alloc`) so the solver core stays free of
//! platform dependencies; float transcendentals go through `libm`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod eval;
pub mod geodesics;
pub mod graph;
pub mod mat;
pub mod mesh;
pub mod model;
pub mod refine;
pub mod semantics;
pub mod spectral;
pub mod synth;
pub mod viewlift;

pub use mat::Mat;
pub use mesh::{MeshError, SparseOperator, TriangleMesh};
pub use spectral::{FunctionalMap, PointMap, SpectralBasis};
pub use viewlift::FeatureField;
