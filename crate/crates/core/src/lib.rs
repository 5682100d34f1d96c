//! Hilbert–Schmidt output-overlap optimization for classical–quantum channels.
//!
//! A classical–quantum channel measures its input in the computational basis
//! and emits a fixed density matrix `σ_i` for outcome `i`. For input pure
//! states `u = Σ α_i |i⟩` and `v = Σ β_j |j⟩` the output overlap is the
//! biquadratic form `Σ_ij |α_i|² |β_j|² Tr(σ_i σ_j)`. Over orthogonal pairs
//! its minimum is attained by two basis states and its maximum by a `|±⟩`
//! pair supported on two basis states; [`characterization`] computes both in
//! closed form and [`oracle`] searches the continuous problem independently.
//!
//! The remaining modules cover the SWAP-test verifiers and the reduction
//! channels built from acceptance tables ([`protocol`]) and a numerical
//! scanner for the k-state minimum-overlap bound ([`conjecture`]).

#![allow(clippy::needless_range_loop)]

pub mod channel;
pub mod characterization;
pub mod conjecture;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod protocol;
pub mod seed;

pub use channel::{CQChannel, GramMatrix};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, DensityMatrix, PureState};
