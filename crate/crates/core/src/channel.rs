//! Classical–quantum channels `Φ(ρ) = Σ_i ⟨i|ρ|i⟩ σ_i` and their Gram matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{hs_overlap, random_density_with, ComplexMatrix, DensityMatrix, PureState};
use crate::seed::rng_from_seed;

/// Real symmetric matrix of pairwise output overlaps `M_ij = Tr(σ_i σ_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix(DMatrix<f64>);

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `pᵀ M q`.
    pub fn bilinear(&self, p: &[f64], q: &[f64]) -> f64 {
        let n = self.n();
        debug_assert!(p.len() == n && q.len() == n);
        let mut acc = 0.0;
        for i in 0..n {
            if p[i] == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for j in 0..n {
                row += self.0[(i, j)] * q[j];
            }
            acc += p[i] * row;
        }
        acc
    }

    /// `g(c) = cᵀ M c`, i.e. `Tr((Σ c_i σ_i)²)`.
    pub fn quadratic_form(&self, c: &[f64]) -> f64 {
        self.bilinear(c, c)
    }

    /// `M x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|i| (0..n).map(|j| self.0[(i, j)] * x[j]).sum()).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// A channel from `C^n` to `d`-dimensional states, given by its `n` outputs.
#[derive(Clone, Debug)]
pub struct CQChannel {
    sigmas: Vec<DensityMatrix>,
    gram: GramMatrix,
}

impl PartialEq for CQChannel {
    fn eq(&self, other: &Self) -> bool {
        self.sigmas == other.sigmas
    }
}

impl CQChannel {
    pub fn new(sigmas: Vec<DensityMatrix>) -> Result<Self> {
        if sigmas.len() < 2 {
            return Err(Error::Arity(format!(
                "a channel needs n >= 2 input basis states, got {}",
                sigmas.len()
            )));
        }
        let d = sigmas[0].dim();
        if let Some(bad) = sigmas.iter().position(|s| s.dim() != d) {
            return Err(Error::Dimension(format!(
                "sigma {bad} has dimension {}, expected {d}",
                sigmas[bad].dim()
            )));
        }
        let n = sigmas.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = hs_overlap(&sigmas[i], &sigmas[j])?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(Self { sigmas, gram: GramMatrix(m) })
    }

    /// `σ_i = |i⟩⟨i|` with `d = n`; all outputs perfectly distinguishable.
    pub fn basis(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| DensityMatrix::basis(n, i)).collect::<Result<_>>()?)
    }

    /// `n` copies of the same output state.
    pub fn constant(n: usize, sigma: DensityMatrix) -> Result<Self> {
        Self::new(vec![sigma; n])
    }

    /// Independent Ginibre outputs drawn from one seeded stream.
    pub fn random(n: usize, d: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        Self::new((0..n).map(|_| random_density_with(d, &mut rng)).collect::<Result<_>>()?)
    }

    /// Input dimension.
    pub fn n(&self) -> usize {
        self.sigmas.len()
    }

    /// Output dimension.
    pub fn d(&self) -> usize {
        self.sigmas[0].dim()
    }

    pub fn sigmas(&self) -> &[DensityMatrix] {
        &self.sigmas
    }

    pub fn sigma(&self, i: usize) -> &DensityMatrix {
        &self.sigmas[i]
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    fn check_input(&self, dim: usize) -> Result<()> {
        if dim != self.n() {
            return Err(Error::Dimension(format!(
                "input has dimension {dim}, channel expects {}",
                self.n()
            )));
        }
        Ok(())
    }

    /// `Φ(ρ) = Σ_i ρ_ii σ_i`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.check_input(rho.dim())?;
        let weights: Vec<f64> = (0..self.n()).map(|i| rho.get(i, i).re).collect();
        Ok(self.mix(&weights))
    }

    /// `Σ_i w_i σ_i` for a probability vector `w`.
    fn mix(&self, weights: &[f64]) -> DensityMatrix {
        let d = self.d();
        let mut out = DMatrix::<Complex64>::zeros(d, d);
        for (w, s) in weights.iter().zip(&self.sigmas) {
            if *w != 0.0 {
                out += s.matrix().as_matrix() * Complex64::new(*w, 0.0);
            }
        }
        DensityMatrix::new_unchecked(ComplexMatrix::new(out).expect("finite mixture"))
    }

    /// `Tr(Φ(uu†) Φ(vv†)) = pᵀ M q` with `p = |α|²`, `q = |β|²`.
    ///
    /// `u` and `v` need not be orthogonal.
    pub fn overlap(&self, u: &PureState, v: &PureState) -> Result<f64> {
        self.check_input(u.dim())?;
        self.check_input(v.dim())?;
        Ok(self.gram.bilinear(&u.moduli_squared(), &v.moduli_squared()))
    }

    /// Average pairwise output overlap `(1/k(k-1)) Σ_{r≠s} Tr(A_r A_s)` of `k`
    /// input states, where `A_r = Φ(|u_r⟩⟨u_r|)`.
    pub fn mixed_average(&self, states: &[PureState]) -> Result<f64> {
        let k = states.len();
        if k < 2 {
            return Err(Error::Arity(format!("mixed average needs at least 2 states, got {k}")));
        }
        for s in states {
            self.check_input(s.dim())?;
        }
        let profiles: Vec<Vec<f64>> = states.iter().map(PureState::moduli_squared).collect();
        let images: Vec<Vec<f64>> = profiles.iter().map(|p| self.gram.apply(p)).collect();
        let mut acc = 0.0;
        for r in 0..k {
            for s in 0..k {
                if r != s {
                    acc += dot(&profiles[r], &images[s]);
                }
            }
        }
        Ok(acc / (k * (k - 1)) as f64)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Serialize, Deserialize)]
struct ChannelRepr {
    n: usize,
    d: usize,
    sigmas: Vec<ComplexMatrix>,
}

impl Serialize for CQChannel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ChannelRepr {
            n: self.n(),
            d: self.d(),
            sigmas: self.sigmas.iter().map(|s| s.matrix().clone()).collect(),
        }
        .serialize(serializer)
    }
}

impl TryFrom<ChannelRepr> for CQChannel {
    type Error = Error;

    fn try_from(repr: ChannelRepr) -> Result<Self> {
        if repr.sigmas.len() != repr.n {
            return Err(Error::Arity(format!(
                "declared n = {} but {} sigmas given",
                repr.n,
                repr.sigmas.len()
            )));
        }
        let mut sigmas = Vec::with_capacity(repr.n);
        for (i, m) in repr.sigmas.into_iter().enumerate() {
            if m.nrows() != repr.d || m.ncols() != repr.d {
                return Err(Error::Dimension(format!(
                    "sigma {i} is {}x{}, declared d = {}",
                    m.nrows(),
                    m.ncols(),
                    repr.d
                )));
            }
            sigmas.push(crate::linalg::validate_density(m)?);
        }
        CQChannel::new(sigmas)
    }
}

impl<'de> Deserialize<'de> for CQChannel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = ChannelRepr::deserialize(deserializer)?;
        CQChannel::try_from(repr).map_err(D::Error::custom)
    }
}
