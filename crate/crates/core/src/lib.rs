//! A desk-scale numerical laboratory for the L_p-Minkowski equation
//! det(∇²h + hI) = f h^{p−1} on S^n for exponents p ≤ −n−1.

pub mod counterexample;
pub mod error;
pub mod oracle;
pub mod pohozaev;
pub mod poly;
pub mod quadrature;
pub mod report;
pub mod spectral;
pub mod sphere;
pub mod support;
pub mod symmetry;
pub mod variational;

pub use error::{Error, Result};
