//! Numerical toolkit for flatness of objective functions around a point:
//! variation profiles, the flatness preorder, first/second/k-th order
//! flatness coefficients, conservation-law flows and flat minima of matrix
//! factorization.

pub mod calculus;
pub mod conservation;
pub mod error;
pub mod funcmodel;
pub mod io;
pub mod jet;
pub mod linalg;
pub mod matfac;
pub mod profiler;
pub mod sphere;

pub use error::{FlatError, Result};
pub use funcmodel::{build_catalog_objective, CatalogEntry, Objective, OuterKind, Smoothness};
