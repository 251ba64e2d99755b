//! Small dense-vector helpers over `Vec<F>`. Problem dimensions here are
//! tiny (p <= 3 for set computations), so plain vectors are the right tool.

use crate::scalar::Scalar;

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(F::zero(), |acc, (x, y)| acc + *x * *y)
}

pub fn norm<F: Scalar>(a: &[F]) -> F {
    dot(a, a).sqrt()
}

pub fn sub<F: Scalar>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(x, y)| *x - *y).collect()
}

pub fn add<F: Scalar>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(x, y)| *x + *y).collect()
}

pub fn scale<F: Scalar>(a: &[F], c: F) -> Vec<F> {
    a.iter().map(|x| *x * c).collect()
}

/// a + c * b
pub fn axpy<F: Scalar>(a: &[F], c: F, b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(x, y)| *x + c * *y).collect()
}

pub fn dist<F: Scalar>(a: &[F], b: &[F]) -> F {
    norm(&sub(a, b))
}

pub fn all_finite<F: Scalar>(a: &[F]) -> bool {
    a.iter().all(|x| x.is_finite())
}

pub fn zeros<F: Scalar>(n: usize) -> Vec<F> {
    vec![F::zero(); n]
}
