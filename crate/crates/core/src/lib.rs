//! Numerical library for irreducible representations of non-Lie
//! commutation-relation algebras whose symplectic leaves are cylinders or
//! tori, their theta-function reproducing kernels, quantum Kähler
//! structures, coherent transforms, and machine-checkable residual
//! verification of the defining identities.

// `!(x > 0.0)` guards are deliberate: they reject NaN along with the
// out-of-domain sign, which `x <= 0.0` would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cmatrix;
pub mod coherent;
pub mod error;
pub mod factorization;
pub mod flows;
pub mod kernels;
pub mod par;
pub mod quad;
pub mod report;
pub mod representations;
pub mod scenario;
pub mod special;
pub mod theta;

pub use error::{Error, Result};
