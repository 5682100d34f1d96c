//! Closed-form optima of the output overlap over orthogonal input pairs, the
//! lower bound for non-orthogonal pairs, and the k-state upper bound.
//!
//! For orthogonal `u, v` the overlap `Σ_ij |α_i|²|β_j|² M_ij` is bounded by
//!
//! * `min_{i≠j} M_ij`, attained by the basis pair `|i⟩, |j⟩`;
//! * `max_{i≠j} ¼ Tr((σ_i + σ_j)²)`, attained by `(|i⟩ ± |j⟩)/√2`.
//!
//! Both bounds are attained, so they are the optima. Ties between index
//! pairs (and subsets) resolve to the lexicographically smallest one.

use itertools::Itertools;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::channel::CQChannel;
use crate::error::{Error, Result};
use crate::linalg::{DensityMatrix, PureState};

/// `|⟨u|v⟩|` at or below this counts as orthogonal when evaluating `Δ`.
pub const ORTHOGONALITY_CUTOFF: f64 = 1e-12;

/// Largest number of k-subsets enumerated before giving up.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// An optimal value with the index pair `(i, j)` and witness states that
/// attain it.
#[derive(Clone, Debug, Serialize)]
pub struct PairOptimum {
    pub value: f64,
    pub i: usize,
    pub j: usize,
    pub witness_u: PureState,
    pub witness_v: PureState,
}

/// `θ(1 - Δ²)` together with its factors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NonOrthogonalBound {
    pub theta: f64,
    pub delta: f64,
    pub bound: f64,
}

/// Best k-subset `T` for `(1/k²) Tr((Σ_{i∈T} σ_i)²)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetOptimum {
    /// `(1/k²) g(v_T)`.
    pub value: f64,
    /// `g(v_T) = Σ_{i,j∈T} M_ij`, the unscaled vertex value.
    pub vertex_value: f64,
    pub subset: Vec<usize>,
}

fn require_pairs(ch: &CQChannel) -> Result<()> {
    if ch.n() < 2 {
        return Err(Error::Arity("need at least two input basis states".into()));
    }
    Ok(())
}

/// Lexicographically first `(i, j)`, `i < j`, optimizing `score`.
fn best_pair(n: usize, better: impl Fn(f64, f64) -> bool, score: impl Fn(usize, usize) -> f64) -> (f64, usize, usize) {
    let mut best = (score(0, 1), 0, 1);
    for i in 0..n {
        for j in (i + 1)..n {
            let s = score(i, j);
            if better(s, best.0) {
                best = (s, i, j);
            }
        }
    }
    best
}

/// `min { Tr(σ_i σ_j) : i ≠ j }`, witnessed by basis states.
pub fn min_overlap_closed_form(ch: &CQChannel) -> Result<PairOptimum> {
    require_pairs(ch)?;
    let m = ch.gram();
    let (value, i, j) = best_pair(ch.n(), |a, b| a < b, |i, j| m.get(i, j));
    Ok(PairOptimum {
        value,
        i,
        j,
        witness_u: PureState::basis(ch.n(), i)?,
        witness_v: PureState::basis(ch.n(), j)?,
    })
}

/// `max { ¼ Tr((σ_i + σ_j)²) : i ≠ j }`, witnessed by `(|i⟩ ± |j⟩)/√2`.
pub fn max_overlap_closed_form(ch: &CQChannel) -> Result<PairOptimum> {
    require_pairs(ch)?;
    let m = ch.gram();
    let (value, i, j) = best_pair(
        ch.n(),
        |a, b| a > b,
        |i, j| 0.25 * (m.get(i, i) + m.get(j, j) + 2.0 * m.get(i, j)),
    );
    Ok(PairOptimum {
        value,
        i,
        j,
        witness_u: PureState::plus_minus(ch.n(), i, j, true)?,
        witness_v: PureState::plus_minus(ch.n(), i, j, false)?,
    })
}

/// `θ = min_{i≠j} Tr(σ_i σ_j)`.
pub fn theta(ch: &CQChannel) -> Result<f64> {
    Ok(min_overlap_closed_form(ch)?.value)
}

/// The non-orthogonality slack
/// `Δ = max_j a_j b_j |⟨u|v⟩| / (Σ_{i≠j} a_i b_i + |⟨u|v⟩|)` with
/// `a = |α|`, `b = |β|`; zero when `|⟨u|v⟩|` is below
/// [`ORTHOGONALITY_CUTOFF`].
pub fn delta(u: &PureState, v: &PureState) -> Result<f64> {
    let ov = u.inner(v)?.norm();
    if ov <= ORTHOGONALITY_CUTOFF {
        return Ok(0.0);
    }
    let w: Vec<f64> = u.moduli().iter().zip(v.moduli()).map(|(a, b)| a * b).collect();
    let best = (0..w.len())
        .map(|j| {
            let others: f64 = w.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, x)| x).sum();
            w[j] * ov / (others + ov)
        })
        .fold(0.0, f64::max);
    Ok(best.clamp(0.0, 1.0))
}

/// Lower bound `θ(1 - Δ²)` on the output overlap of an arbitrary pair.
pub fn min_bound_nonorthogonal(ch: &CQChannel, u: &PureState, v: &PureState) -> Result<NonOrthogonalBound> {
    if u.dim() != ch.n() || v.dim() != ch.n() {
        return Err(Error::Dimension(format!(
            "states of dimension {} and {} for a channel with n = {}",
            u.dim(),
            v.dim(),
            ch.n()
        )));
    }
    let theta = theta(ch)?;
    let delta = delta(u, v)?;
    Ok(NonOrthogonalBound { theta, delta, bound: theta * (1.0 - delta * delta) })
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        acc = acc * (n - t) as u128 / (t + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn check_subset_request(ch: &CQChannel, k: usize, cap: u64) -> Result<()> {
    if k < 2 || k > ch.n() {
        return Err(Error::Arity(format!("subset size k = {k} outside [2, {}]", ch.n())));
    }
    let count = binomial(ch.n(), k);
    if count > cap {
        return Err(Error::Capacity(format!(
            "C({}, {k}) = {count} subsets exceeds the enumeration cap {cap}",
            ch.n()
        )));
    }
    Ok(())
}

fn subset_sum(ch: &CQChannel, subset: &[usize]) -> f64 {
    let m = ch.gram();
    subset.iter().map(|&i| subset.iter().map(|&j| m.get(i, j)).sum::<f64>()).sum()
}

/// Every vertex `v_T` of the polytope of rank-k projection diagonals,
/// paired with `g(v_T) = Σ_{i,j∈T} M_ij`, in lexicographic order of `T`.
pub fn vertex_scan(ch: &CQChannel, k: usize) -> Result<Vec<(Vec<usize>, f64)>> {
    vertex_scan_with_cap(ch, k, DEFAULT_ENUMERATION_CAP)
}

pub fn vertex_scan_with_cap(ch: &CQChannel, k: usize, cap: u64) -> Result<Vec<(Vec<usize>, f64)>> {
    check_subset_request(ch, k, cap)?;
    Ok((0..ch.n())
        .combinations(k)
        .map(|t| {
            let g = subset_sum(ch, &t);
            (t, g)
        })
        .collect())
}

/// `max_{|T|=k} (1/k²) Tr((Σ_{i∈T} σ_i)²)` by exhaustive enumeration.
pub fn k_max_bound(ch: &CQChannel, k: usize) -> Result<SubsetOptimum> {
    k_max_bound_with_cap(ch, k, DEFAULT_ENUMERATION_CAP)
}

pub fn k_max_bound_with_cap(ch: &CQChannel, k: usize, cap: u64) -> Result<SubsetOptimum> {
    check_subset_request(ch, k, cap)?;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for t in (0..ch.n()).combinations(k) {
        let g = subset_sum(ch, &t);
        if best.as_ref().is_none_or(|(b, _)| g > *b) {
            best = Some((g, t));
        }
    }
    let (vertex_value, subset) = best.expect("at least one subset");
    Ok(SubsetOptimum { value: vertex_value / (k * k) as f64, vertex_value, subset })
}

/// Both sides of the identity
/// `Tr(Σ a_i² σ_i Σ b_j² σ_j) - Tr((Σ a_i b_i σ_i)²) = ½ Σ_ij (a_i b_j - a_j b_i)² Tr(σ_i σ_j)`
/// with `a = |α|`, `b = |β|`, evaluated by explicit matrix products.
pub fn lemma_scs_sides(alphas: &[Complex64], betas: &[Complex64], sigmas: &[DensityMatrix]) -> Result<(f64, f64)> {
    let k = sigmas.len();
    if alphas.len() != k || betas.len() != k {
        return Err(Error::Arity(format!(
            "{} alphas, {} betas and {k} matrices",
            alphas.len(),
            betas.len()
        )));
    }
    if k == 0 {
        return Ok((0.0, 0.0));
    }
    let d = sigmas[0].dim();
    if sigmas.iter().any(|s| s.dim() != d) {
        return Err(Error::Dimension("matrices of unequal dimension".into()));
    }
    let a: Vec<f64> = alphas.iter().map(|z| z.norm()).collect();
    let b: Vec<f64> = betas.iter().map(|z| z.norm()).collect();
    let combo = |w: &dyn Fn(usize) -> f64| {
        let mut out = DMatrix::<Complex64>::zeros(d, d);
        for (i, s) in sigmas.iter().enumerate() {
            out += s.matrix().as_matrix() * Complex64::new(w(i), 0.0);
        }
        out
    };
    let x = combo(&|i| a[i] * a[i]);
    let y = combo(&|i| b[i] * b[i]);
    let z = combo(&|i| a[i] * b[i]);
    let lhs = (&x * &y).trace().re - (&z * &z).trace().re;

    let mut rhs = 0.0;
    for i in 0..k {
        for j in 0..k {
            let c = a[i] * b[j] - a[j] * b[i];
            if c != 0.0 {
                let t = (sigmas[i].matrix().as_matrix() * sigmas[j].matrix().as_matrix()).trace().re;
                rhs += c * c * t;
            }
        }
    }
    Ok((lhs, 0.5 * rhs))
}
