//! Prime-field arithmetic and symmetric bivariate polynomials.

mod field;
mod poly;

pub use field::{is_prime, FieldElement, FieldParams, MERSENNE_61};
pub use poly::{lagrange_reconstruct, BivariatePolynomial, PolynomialShare};
