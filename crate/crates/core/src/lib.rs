//! Contrastive self-supervised learning on edge flows of 2-dimensional
//! simplicial complexes, with augmentations and negative weights derived from
//! the Hodge decomposition.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod complex;
pub mod contrastive;
pub mod datasets;
pub mod downstream;
pub mod error;
pub mod harness;
pub mod hodge;
pub mod linalg;
pub mod rng;
pub mod scnn;

pub use complex::{build_complex, IncidenceMatrices, SimplicialComplex2};
pub use error::{Error, Result};
pub use hodge::{hodge_basis, hodge_laplacians, hodge_project, EdgeFlow, HodgeBasis, HodgeContext};
pub use scnn::{EdgeOperators, ScnnParameters};
