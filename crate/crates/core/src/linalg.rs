//! Dense complex matrices, density matrices and pure states.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, SeededRng};

/// Absolute tolerance for the Hermitian, PSD and unit-trace checks.
pub const STATE_TOL: f64 = 1e-10;

/// Pairwise inner products of generated orthonormal tuples stay below this.
pub const ORTHONORMAL_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Draws one sample of the complex standard normal distribution
/// (`E|z|² = 1`).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// A dense complex matrix with finite entries and at least one row and column.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::Dimension("matrix must have at least one row and column".into()));
        }
        if let Some((idx, z)) = m.iter().enumerate().find(|(_, z)| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(format!(
                "entry ({}, {}) = {}",
                idx % m.nrows(),
                idx / m.nrows(),
                z
            )));
        }
        Ok(Self(m))
    }

    /// Builds a matrix from row-major nested rows.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                ZERO
            }
        }))
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(DMatrix::identity(n, n))
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.diagonal().iter().sum()
    }

    /// `Tr(AB)` for square matrices of equal size.
    pub fn trace_product(&self, other: &Self) -> Result<Complex64> {
        if !self.is_square() || self.nrows() != other.ncols() || self.ncols() != other.nrows() {
            return Err(Error::Dimension(format!(
                "cannot form Tr(AB) for {}x{} and {}x{}",
                self.nrows(),
                self.ncols(),
                other.nrows(),
                other.ncols()
            )));
        }
        let n = self.nrows();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += self.0[(i, j)] * other.0[(j, i)];
            }
        }
        Ok(acc)
    }

    /// Largest entry of `|M - M†|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let m = &self.0;
        let mut worst: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part `(M + M†)/2`, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let sym = (&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        let mut eig: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        eig
    }

    pub fn min_hermitian_eigenvalue(&self) -> f64 {
        self.hermitian_eigenvalues()[0]
    }

    fn to_nested(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.nrows())
            .map(|i| (0..self.ncols()).map(|j| [self.0[(i, j)].re, self.0[(i, j)].im]).collect())
            .collect()
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_nested().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let rows: Vec<Vec<Complex64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .collect();
        ComplexMatrix::from_rows(&rows).map_err(D::Error::custom)
    }
}

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix whose state invariants hold by construction.
    pub(crate) fn new_unchecked(mat: ComplexMatrix) -> Self {
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.mat.get(i, j)
    }

    /// `|i⟩⟨i|` in dimension `d`.
    pub fn basis(d: usize, i: usize) -> Result<Self> {
        if i >= d {
            return Err(Error::Dimension(format!("basis index {i} out of range for d = {d}")));
        }
        let mut diag = vec![0.0; d];
        diag[i] = 1.0;
        Ok(Self::new_unchecked(ComplexMatrix::from_real_diagonal(&diag)?))
    }

    /// The maximally mixed state `I/d`.
    pub fn maximally_mixed(d: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0 / d as f64; d])
    }

    /// A diagonal state; the entries must form a probability vector.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        validate_density(ComplexMatrix::from_real_diagonal(probs)?)
    }

    pub fn projector(state: &PureState) -> Self {
        let a = state.amplitudes();
        let n = a.len();
        let m = DMatrix::from_fn(n, n, |i, j| a[i] * a[j].conj());
        Self::new_unchecked(ComplexMatrix(m))
    }
}

impl TryFrom<ComplexMatrix> for DensityMatrix {
    type Error = Error;

    fn try_from(m: ComplexMatrix) -> Result<Self> {
        validate_density(m)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(deserializer)?;
        validate_density(m).map_err(D::Error::custom)
    }
}

/// Checks the density-matrix invariants in the order Hermitian, trace, PSD
/// and reports the first one that fails.
pub fn validate_density(m: ComplexMatrix) -> Result<DensityMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "density matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let deviation = m.hermitian_deviation();
    if deviation > STATE_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let trace = m.trace().re;
    if (trace - 1.0).abs() > STATE_TOL {
        return Err(Error::TraceNotOne { trace });
    }
    let min_eigenvalue = m.min_hermitian_eigenvalue();
    if min_eigenvalue < -STATE_TOL {
        return Err(Error::NotPsd { min_eigenvalue });
    }
    Ok(DensityMatrix { mat: m })
}

/// `Tr(ρσ)` for two density matrices.
///
/// Computed as the Frobenius product `Σ_ij ρ_ij conj(σ_ij)`, whose real part
/// is bitwise symmetric in the two arguments.
pub fn hs_overlap(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension(format!(
            "overlap of {}-dim and {}-dim states",
            rho.dim(),
            sigma.dim()
        )));
    }
    let (a, b) = (rho.mat.as_matrix(), sigma.mat.as_matrix());
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        re += x.re * y.re + x.im * y.im;
        im += x.im * y.re - x.re * y.im;
    }
    if im.abs() > STATE_TOL {
        return Err(Error::ComplexTrace { imag: im });
    }
    Ok(re)
}

/// `Tr(ρ²)`, which lies in `[1/d, 1]`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.mat.as_matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// A Ginibre random state `GG†/Tr(GG†)` with complex Gaussian `G`.
pub fn random_density(d: usize, seed: u64) -> Result<DensityMatrix> {
    random_density_with(d, &mut rng_from_seed(seed))
}

pub fn random_density_with(d: usize, rng: &mut SeededRng) -> Result<DensityMatrix> {
    if d == 0 {
        return Err(Error::Dimension("state dimension must be at least 1".into()));
    }
    let g = DMatrix::from_fn(d, d, |_, _| complex_normal(rng));
    let mut w = &g * g.adjoint();
    let tr = w.trace().re;
    w /= Complex64::new(tr, 0.0);
    // Exact Hermitian symmetry and a real diagonal.
    for i in 0..d {
        w[(i, i)] = Complex64::new(w[(i, i)].re, 0.0);
        for j in (i + 1)..d {
            w[(j, i)] = w[(i, j)].conj();
        }
    }
    Ok(DensityMatrix::new_unchecked(ComplexMatrix(w)))
}

/// A unit vector in `C^n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PureState {
    #[serde(serialize_with = "serialize_amplitudes")]
    amplitudes: Vec<Complex64>,
}

fn serialize_amplitudes<S: Serializer>(a: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<[f64; 2]> = a.iter().map(|z| [z.re, z.im]).collect();
    pairs.serialize(s)
}

impl PureState {
    /// Accepts amplitudes whose Euclidean norm is within [`STATE_TOL`] of 1.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Dimension("pure state must have dimension at least 1".into()));
        }
        if amplitudes.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("pure state amplitude".into()));
        }
        let norm = l2_norm(&amplitudes);
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = l2_norm(&amplitudes);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized { norm });
        }
        for z in &mut amplitudes {
            *z /= norm;
        }
        Self::new(amplitudes)
    }

    pub(crate) fn from_unit_unchecked(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    /// Computational basis state `|i⟩` in `C^n`.
    pub fn basis(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::Dimension(format!("basis index {i} out of range for n = {n}")));
        }
        let mut a = vec![ZERO; n];
        a[i] = ONE;
        Ok(Self { amplitudes: a })
    }

    /// `(|i⟩ + s|j⟩)/√2` with `s = ±1`.
    pub fn plus_minus(n: usize, i: usize, j: usize, plus: bool) -> Result<Self> {
        if i >= n || j >= n || i == j {
            return Err(Error::Dimension(format!("need distinct indices below {n}, got ({i}, {j})")));
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut a = vec![ZERO; n];
        a[i] = Complex64::new(h, 0.0);
        a[j] = Complex64::new(if plus { h } else { -h }, 0.0);
        Ok(Self { amplitudes: a })
    }

    pub fn random_with(n: usize, rng: &mut SeededRng) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("pure state must have dimension at least 1".into()));
        }
        loop {
            let a: Vec<Complex64> = (0..n).map(|_| complex_normal(rng)).collect();
            if l2_norm(&a) > 1e-6 {
                return Self::normalized(a);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "inner product of {}-dim and {}-dim states",
                self.dim(),
                other.dim()
            )));
        }
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    /// `|α_i|²` for each basis index.
    pub fn moduli_squared(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm()).collect()
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            amplitudes: Vec<[f64; 2]>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let a = raw.amplitudes.into_iter().map(|[re, im]| Complex64::new(re, im)).collect();
        PureState::new(a).map_err(D::Error::custom)
    }
}

impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, z) in self.amplitudes.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{z}")?;
        }
        write!(f, "]")
    }
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn l2_norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Removes the components of `v` along each (unit) vector in `basis`.
pub(crate) fn project_out(v: &mut [Complex64], basis: &[&[Complex64]]) {
    for b in basis {
        let c = inner(b, v);
        for (x, y) in v.iter_mut().zip(b.iter()) {
            *x -= c * y;
        }
    }
}

/// `k` orthonormal states in `C^n`, from Gram–Schmidt on complex Gaussian
/// vectors (two projection passes per vector).
pub fn random_orthonormal_tuple(n: usize, k: usize, seed: u64) -> Result<Vec<PureState>> {
    random_orthonormal_tuple_with(n, k, &mut rng_from_seed(seed))
}

pub fn random_orthonormal_tuple_with(n: usize, k: usize, rng: &mut SeededRng) -> Result<Vec<PureState>> {
    if k == 0 {
        return Err(Error::Arity("need at least one state".into()));
    }
    if k > n {
        return Err(Error::Infeasible(format!("cannot fit {k} orthonormal states in dimension {n}")));
    }
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    while out.len() < k {
        let mut v: Vec<Complex64> = (0..n).map(|_| complex_normal(rng)).collect();
        let raw = l2_norm(&v);
        let refs: Vec<&[Complex64]> = out.iter().map(Vec::as_slice).collect();
        project_out(&mut v, &refs);
        project_out(&mut v, &refs);
        let norm = l2_norm(&v);
        if norm <= 1e-8 * raw.max(1.0) {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= norm);
        out.push(v);
    }
    out.into_iter().map(PureState::new).collect()
}
