//! Exact computation of Diophantine exponents of vectors, matrices and affine
//! subspaces through the exterior algebra of `ℤ^{n+1}` and the diagonal flow
//! on the space of lattices, plus a sampled check of quantitative
//! nondivergence.

pub mod error;
pub mod exponents;
pub mod exterior;
pub mod flows;
pub mod lattices;
pub mod linalg;
pub mod nondiv;
pub mod rational;
pub mod records;
pub mod rng;
pub mod subspaces;

pub use error::{Error, Result};
pub use exterior::{ContractionImage, IndexSet, Multivector};
pub use rational::{ExtQ, Q};
