//! Scalars and truncated Laurent expansions.

mod laurent;
pub mod linalg;
mod scalar;

pub use laurent::{
    d_function, lie_derivative, product_coeff, residue_at, residue_of_product, series_mul, LaurentExpansion, Point,
};
pub use scalar::{bits_for_digits, digits_for_bits, fma_into, Scalar, ScalarMode, GUARD_BITS};
