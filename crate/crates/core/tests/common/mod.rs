#![allow(dead_code)]

use cqoverlap::linalg::{complex_normal, random_orthonormal_tuple_with, ComplexMatrix, DensityMatrix};
use cqoverlap::seed::SeededRng;
use cqoverlap::CQChannel;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

/// Random Hermitian matrix `(G + G†)/2` with complex-normal `G`.
pub fn random_hermitian(d: usize, rng: &mut SeededRng) -> ComplexMatrix {
    let g = DMatrix::from_fn(d, d, |_, _| complex_normal(rng));
    let h = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    ComplexMatrix::new(h).unwrap()
}

/// Diagonal of a random rank-k projection, a point of the polytope whose
/// vertices are the 0/1 vectors with k ones.
pub fn projection_diagonal(n: usize, k: usize, rng: &mut SeededRng) -> Vec<f64> {
    let tuple = random_orthonormal_tuple_with(n, k, rng).unwrap();
    (0..n).map(|i| tuple.iter().map(|u| u.amplitudes()[i].norm_sqr()).sum()).collect()
}

/// `Tr(ρσ)` from a dense matrix product.
pub fn trace_of_product(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    (a.matrix().as_matrix() * b.matrix().as_matrix()).trace().re
}

/// `Tr(Φ(uu†) Φ(vv†))` by materializing both outputs.
pub fn dense_overlap(ch: &CQChannel, p: &[f64], q: &[f64]) -> f64 {
    let d = ch.d();
    let mix = |w: &[f64]| {
        let mut acc = DMatrix::<Complex64>::zeros(d, d);
        for (i, &wi) in w.iter().enumerate() {
            acc += ch.sigma(i).matrix().as_matrix() * Complex64::new(wi, 0.0);
        }
        acc
    };
    (mix(p) * mix(q)).trace().re
}

/// Random dimensions in the ranges used throughout the acceptance runs.
pub fn random_shape(rng: &mut SeededRng) -> (usize, usize) {
    (rng.random_range(2..=6), rng.random_range(2..=4))
}

/// A dense acceptance table with entries in `[0, max_p]`.
pub fn random_probs(len: usize, max_p: f64, rng: &mut SeededRng) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(0.0..=max_p)).collect()
}
