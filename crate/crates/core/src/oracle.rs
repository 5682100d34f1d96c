//! Numerical search over orthogonal input pairs, independent of the closed
//! forms in [`crate::characterization`].
//!
//! The continuous optimizer keeps every iterate exactly feasible: `u` is a
//! normalized free vector `x`, and `v` is a second free vector `y` projected
//! onto the orthogonal complement of `u` and normalized. The objective
//! `pᵀ M q` (with `p = |u|²`, `q = |v|²` entrywise) is differentiated
//! analytically through that parametrization and minimized by gradient
//! descent with Armijo backtracking, globalized by seeded restarts.
//!
//! The grid oracle works in moduli space instead. Orthogonal states with
//! moduli `a`, `b` exist exactly when the weights `w_i = a_i b_i` close a
//! polygon, i.e. `max_i w_i ≤ Σ_{j≠i} w_j`; the grid enumerates moduli
//! profiles on simplex lattices and keeps the feasible pairs.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{dot, CQChannel, GramMatrix};
use crate::error::{Error, Result};
use crate::linalg::{complex_normal, inner, l2_norm, project_out, PureState};
use crate::seed::{derive_seed, rng_from_seed, SeededRng};

/// A free vector is treated as parallel to `u` when its projection keeps
/// less than this fraction of its norm.
const DEGENERATE_PROJECTION: f64 = 1e-12;
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-18;
const MAX_STEP: f64 = 1e4;
const MAX_GRID_RESOLUTION: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[serde(alias = "min")]
    Minimize,
    #[serde(alias = "max")]
    Maximize,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Minimize => 1.0,
            Direction::Maximize => -1.0,
        }
    }

    /// Whether `a` is strictly better than `b`.
    pub fn improves(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Minimize => a < b,
            Direction::Maximize => a > b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub step_init: f64,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { restarts: 64, max_iters: 2000, step_init: 1.0, grad_tol: 1e-8, seed: 0 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.step_init.is_finite() && self.step_init > 0.0) {
            return Err(Error::Config(format!("step_init must be positive, got {}", self.step_init)));
        }
        if !(self.grad_tol.is_finite() && self.grad_tol >= 0.0) {
            return Err(Error::Config(format!("grad_tol must be nonnegative, got {}", self.grad_tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    pub value: f64,
    pub u: PureState,
    pub v: PureState,
    /// Whether the winning restart met the gradient tolerance (grid: always).
    pub converged: bool,
    /// Iterations of the winning restart, or grid points evaluated.
    pub iterations_used: usize,
    /// Free vectors redrawn because they were parallel to `u`.
    pub resamples: usize,
}

/// Unconstrained coordinates `(x, y)` of an orthogonal pair.
#[derive(Clone, Debug, PartialEq)]
pub struct FreePoint {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

impl FreePoint {
    pub fn random(n: usize, rng: &mut SeededRng) -> Self {
        Self {
            x: (0..n).map(|_| complex_normal(rng)).collect(),
            y: (0..n).map(|_| complex_normal(rng)).collect(),
        }
    }
}

/// The orthogonal pair a free point maps to, plus the intermediates the
/// gradient needs.
struct Pair {
    u: Vec<Complex64>,
    v: Vec<Complex64>,
    x_norm: f64,
    w_norm: f64,
    /// `⟨u|y⟩`.
    uy: Complex64,
}

fn pair_from_free(x: &[Complex64], y: &[Complex64]) -> Option<Pair> {
    let x_norm = l2_norm(x);
    if !(x_norm.is_finite() && x_norm > 0.0) {
        return None;
    }
    let u: Vec<Complex64> = x.iter().map(|z| z / x_norm).collect();
    let uy = inner(&u, y);
    let w: Vec<Complex64> = y.iter().zip(&u).map(|(yi, ui)| yi - ui * uy).collect();
    let w_norm = l2_norm(&w);
    if !(w_norm.is_finite() && w_norm > DEGENERATE_PROJECTION * l2_norm(y)) || w_norm == 0.0 {
        return None;
    }
    let v = w.iter().map(|z| z / w_norm).collect();
    Some(Pair { u, v, x_norm, w_norm, uy })
}

fn moduli_sq(a: &[Complex64]) -> Vec<f64> {
    a.iter().map(|z| z.norm_sqr()).collect()
}

fn objective(gram: &GramMatrix, x: &[Complex64], y: &[Complex64]) -> Option<f64> {
    let pair = pair_from_free(x, y)?;
    Some(gram.bilinear(&moduli_sq(&pair.u), &moduli_sq(&pair.v)))
}

/// Pulls a gradient back through `z = x/|x|`.
fn normalize_pullback(z: &[Complex64], g: &[Complex64], norm: f64) -> Vec<Complex64> {
    let radial = inner(z, g).re;
    z.iter().zip(g).map(|(zi, gi)| (gi - zi * radial) / norm).collect()
}

/// Value and gradient of `pᵀ M q` with respect to the real and imaginary
/// parts of `x` and `y`, packed as `∂/∂Re + i ∂/∂Im`.
fn value_and_gradient(gram: &GramMatrix, x: &[Complex64], y: &[Complex64]) -> Option<(f64, Vec<Complex64>, Vec<Complex64>)> {
    let pair = pair_from_free(x, y)?;
    let p = moduli_sq(&pair.u);
    let q = moduli_sq(&pair.v);
    let mq = gram.apply(&q);
    let mp = gram.apply(&p);
    let value = dot(&p, &mq);

    let mut g_u: Vec<Complex64> = pair.u.iter().zip(&mq).map(|(ui, s)| ui * (2.0 * s)).collect();
    let g_v: Vec<Complex64> = pair.v.iter().zip(&mp).map(|(vi, s)| vi * (2.0 * s)).collect();

    // v = w/|w|, w = y - u⟨u|y⟩
    let g_w = normalize_pullback(&pair.v, &g_v, pair.w_norm);
    let u_gw = inner(&pair.u, &g_w);
    let g_y: Vec<Complex64> = g_w.iter().zip(&pair.u).map(|(gw, ui)| gw - ui * u_gw).collect();
    for ((gu, gw), yi) in g_u.iter_mut().zip(&g_w).zip(y) {
        *gu -= pair.uy.conj() * gw + u_gw.conj() * yi;
    }
    let g_x = normalize_pullback(&pair.u, &g_u, pair.x_norm);
    Some((value, g_x, g_y))
}

fn sq_norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Largest absolute difference between the analytic gradient and a central
/// finite-difference gradient at `point`, over all `4n` real coordinates.
pub fn gradient_check(ch: &CQChannel, point: &FreePoint, eps: f64) -> Result<f64> {
    if !(1e-7..=1e-4).contains(&eps) {
        return Err(Error::Config(format!("finite-difference step {eps} outside [1e-7, 1e-4]")));
    }
    let n = ch.n();
    if point.x.len() != n || point.y.len() != n {
        return Err(Error::Dimension(format!("free point dimension differs from n = {n}")));
    }
    let gram = ch.gram();
    let degenerate = || Error::Optimizer("degenerate point: x vanishes or y is parallel to x".into());
    let (_, gx, gy) = value_and_gradient(gram, &point.x, &point.y).ok_or_else(degenerate)?;

    let mut worst: f64 = 0.0;
    for (block, analytic) in [(0usize, &gx), (1, &gy)] {
        for k in 0..n {
            for imag in [false, true] {
                let bump = if imag { Complex64::new(0.0, eps) } else { Complex64::new(eps, 0.0) };
                let eval = |sign: f64| {
                    let mut x = point.x.clone();
                    let mut y = point.y.clone();
                    let target = if block == 0 { &mut x } else { &mut y };
                    target[k] += bump * sign;
                    objective(gram, &x, &y)
                };
                let plus = eval(1.0).ok_or_else(degenerate)?;
                let minus = eval(-1.0).ok_or_else(degenerate)?;
                let numeric = (plus - minus) / (2.0 * eps);
                let exact = if imag { analytic[k].im } else { analytic[k].re };
                worst = worst.max((numeric - exact).abs());
            }
        }
    }
    Ok(worst)
}

struct LocalOutcome {
    value: f64,
    x: Vec<Complex64>,
    y: Vec<Complex64>,
    converged: bool,
    iterations: usize,
}

fn local_search(gram: &GramMatrix, direction: Direction, start: FreePoint, cfg: &OptimizerConfig) -> Result<LocalOutcome> {
    let sign = direction.sign();
    let non_finite = || Error::Optimizer("objective is not finite".into());
    let (mut x, mut y) = (start.x, start.y);
    let (f0, mut gx, mut gy) = value_and_gradient(gram, &x, &y).ok_or_else(non_finite)?;
    let mut f = sign * f0;
    let mut step = cfg.step_init;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        gx.iter_mut().chain(gy.iter_mut()).for_each(|g| *g *= sign);
        let g2 = sq_norm(&gx) + sq_norm(&gy);
        if !g2.is_finite() {
            return Err(non_finite());
        }
        if g2.sqrt() <= cfg.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut t = step;
        let mut accepted = None;
        while t >= MIN_STEP {
            let xt: Vec<Complex64> = x.iter().zip(&gx).map(|(a, g)| a - g * t).collect();
            let yt: Vec<Complex64> = y.iter().zip(&gy).map(|(a, g)| a - g * t).collect();
            if let Some(ft) = objective(gram, &xt, &yt) {
                let ft = sign * ft;
                if ft <= f - ARMIJO * t * g2 {
                    accepted = Some((xt, yt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xt, yt)) = accepted else {
            // No representable descent step left.
            break;
        };
        // Re-anchor at the unit pair (u, v); the map (x, y) -> (u, v) is
        // invariant under this substitution.
        let pair = pair_from_free(&xt, &yt).ok_or_else(non_finite)?;
        x = pair.u;
        y = pair.v;
        let (fv, ngx, ngy) = value_and_gradient(gram, &x, &y).ok_or_else(non_finite)?;
        f = sign * fv;
        gx = ngx;
        gy = ngy;
        step = (2.0 * t).min(MAX_STEP);
    }
    Ok(LocalOutcome { value: sign * f, x, y, converged, iterations })
}

fn draw_start(n: usize, rng: &mut SeededRng) -> (FreePoint, usize) {
    let mut resamples = 0;
    let x: Vec<Complex64> = loop {
        let x: Vec<Complex64> = (0..n).map(|_| complex_normal(rng)).collect();
        if l2_norm(&x) > 1e-8 {
            break x;
        }
        resamples += 1;
    };
    loop {
        let y: Vec<Complex64> = (0..n).map(|_| complex_normal(rng)).collect();
        if pair_from_free(&x, &y).is_some() {
            return (FreePoint { x, y }, resamples);
        }
        resamples += 1;
    }
}

/// Unit, exactly re-orthogonalized witness states from free coordinates.
fn witnesses(x: &[Complex64], y: &[Complex64]) -> Result<(PureState, PureState)> {
    let pair = pair_from_free(x, y).ok_or_else(|| Error::Optimizer("degenerate final point".into()))?;
    let mut v = pair.v;
    project_out(&mut v, &[&pair.u]);
    Ok((PureState::normalized(pair.u)?, PureState::normalized(v)?))
}

/// Best value of the output overlap over orthogonal pairs found by
/// multi-start local search.
///
/// Restart `r` draws its start from the stream `derive_seed(cfg.seed, r)`,
/// so the result for `R` restarts is never worse than for fewer.
pub fn continuous_extremum(ch: &CQChannel, direction: Direction, cfg: &OptimizerConfig) -> Result<OracleResult> {
    cfg.validate()?;
    let n = ch.n();
    if n < 2 {
        return Err(Error::Arity("need n >= 2".into()));
    }
    let gram = ch.gram();
    let runs: Vec<Result<(LocalOutcome, usize)>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, r as u64));
            let (start, resampled) = draw_start(n, &mut rng);
            Ok((local_search(gram, direction, start, cfg)?, resampled))
        })
        .collect();

    let mut resamples = 0;
    let mut best: Option<LocalOutcome> = None;
    for run in runs {
        let (outcome, resampled) = run?;
        resamples += resampled;
        if best.as_ref().is_none_or(|b| direction.improves(outcome.value, b.value)) {
            best = Some(outcome);
        }
    }
    let best = best.expect("restarts >= 1");
    let (u, v) = witnesses(&best.x, &best.y)?;
    let value = ch.overlap(&u, &v)?;
    Ok(OracleResult { value, u, v, converged: best.converged, iterations_used: best.iterations, resamples })
}

/// Whether orthogonal states with moduli-squared profiles `p` and `q` exist:
/// the weights `√(p_i q_i)` must close a polygon.
pub fn moduli_feasible(p: &[f64], q: &[f64], tol: f64) -> bool {
    let w: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a * b).max(0.0).sqrt()).collect();
    let total: f64 = w.iter().sum();
    let max = w.iter().copied().fold(0.0, f64::max);
    2.0 * max <= total + tol
}

/// Phases `φ` with `Σ_i w_i e^{iφ_i} = 0`, assuming the polygon inequality
/// holds. The largest weight is closed against two collinear groups of the
/// remaining ones, balanced greedily so the three sides form a triangle.
pub fn closing_phases(w: &[f64]) -> Vec<f64> {
    let n = w.len();
    let mut phases = vec![0.0; n];
    if n == 0 {
        return phases;
    }
    let lead = (0..n).max_by(|&a, &b| w[a].total_cmp(&w[b]).then(b.cmp(&a))).unwrap();
    let mut rest: Vec<usize> = (0..n).filter(|&i| i != lead).collect();
    rest.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    let (mut group_a, mut group_b) = (Vec::new(), Vec::new());
    let (mut sum_a, mut sum_b) = (0.0, 0.0);
    for i in rest {
        if sum_a <= sum_b {
            sum_a += w[i];
            group_a.push(i);
        } else {
            sum_b += w[i];
            group_b.push(i);
        }
    }
    let l = w[lead];
    if l <= 0.0 {
        return phases;
    }
    // Triangle with sides l (along +x), then A, then B back to the origin.
    let px = ((l * l + sum_b * sum_b - sum_a * sum_a) / (2.0 * l)).clamp(-sum_b, sum_b);
    let py = (sum_b * sum_b - px * px).max(0.0).sqrt();
    let angle_a = py.atan2(px - l);
    let angle_b = (-py).atan2(-px);
    for i in group_a {
        phases[i] = angle_a;
    }
    for i in group_b {
        phases[i] = angle_b;
    }
    phases
}

/// Orthogonal witnesses realizing moduli-squared profiles `p` and `q`.
pub fn witness_from_moduli(p: &[f64], q: &[f64]) -> Result<(PureState, PureState)> {
    if p.len() != q.len() {
        return Err(Error::Dimension("moduli profiles of different length".into()));
    }
    let a: Vec<f64> = p.iter().map(|x| x.max(0.0).sqrt()).collect();
    let b: Vec<f64> = q.iter().map(|x| x.max(0.0).sqrt()).collect();
    let w: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let phases = closing_phases(&w);
    let u: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut v: Vec<Complex64> = b.iter().zip(&phases).map(|(&y, &phi)| Complex64::from_polar(y, phi)).collect();
    let u = PureState::normalized(u)?;
    project_out(&mut v, &[u.amplitudes()]);
    let v = PureState::normalized(v)?;
    Ok((u, v))
}

fn simplex_lattice(res: usize) -> Vec<[f64; 3]> {
    let r = res as f64;
    let mut pts = Vec::with_capacity((res + 1) * (res + 2) / 2);
    for i in 0..=res {
        for j in 0..=(res - i) {
            let k = res - i - j;
            pts.push([i as f64 / r, j as f64 / r, k as f64 / r]);
        }
    }
    pts
}

/// Exhaustive moduli-space scan for `n ∈ {2, 3}`.
///
/// For `n = 2` orthogonality forces `q = (p_2, p_1)`, so the scan is over a
/// single segment; for `n = 3` it covers all pairs of points of the simplex
/// lattice with spacing `1/resolution` whose weights close a triangle. The
/// returned value is the overlap of exactly orthogonal witnesses.
pub fn grid_extremum(ch: &CQChannel, direction: Direction, resolution: usize) -> Result<OracleResult> {
    let n = ch.n();
    if n > 3 {
        return Err(Error::Capacity(format!("grid oracle supports n <= 3, got n = {n}")));
    }
    if resolution == 0 || resolution > MAX_GRID_RESOLUTION {
        return Err(Error::Config(format!(
            "grid resolution must be in [1, {MAX_GRID_RESOLUTION}], got {resolution}"
        )));
    }
    let gram = ch.gram();
    let (p, q, evaluated) = if n == 2 {
        let mut best: Option<(f64, [f64; 2])> = None;
        for t in 0..=resolution {
            let a = t as f64 / resolution as f64;
            let p = [a, 1.0 - a];
            let val = gram.bilinear(&p, &[p[1], p[0]]);
            if best.is_none_or(|(b, _)| direction.improves(val, b)) {
                best = Some((val, p));
            }
        }
        let (_, p) = best.expect("nonempty grid");
        (p.to_vec(), vec![p[1], p[0]], resolution + 1)
    } else {
        let pts = simplex_lattice(resolution);
        let images: Vec<Vec<f64>> = pts.iter().map(|q| gram.apply(q)).collect();
        let roots: Vec<[f64; 3]> = pts.iter().map(|p| p.map(f64::sqrt)).collect();
        let per_p: Vec<Option<(f64, usize, usize)>> = (0..pts.len())
            .into_par_iter()
            .map(|ip| {
                let (p, ra) = (&pts[ip], &roots[ip]);
                let mut best: Option<(f64, usize, usize)> = None;
                for (iq, rb) in roots.iter().enumerate() {
                    let w = [ra[0] * rb[0], ra[1] * rb[1], ra[2] * rb[2]];
                    let max = w[0].max(w[1]).max(w[2]);
                    if 2.0 * max > w[0] + w[1] + w[2] + 1e-12 {
                        continue;
                    }
                    let mq = &images[iq];
                    let val = p[0] * mq[0] + p[1] * mq[1] + p[2] * mq[2];
                    if best.is_none_or(|(b, _, _)| direction.improves(val, b)) {
                        best = Some((val, ip, iq));
                    }
                }
                best
            })
            .collect();
        let mut best: Option<(f64, usize, usize)> = None;
        for cand in per_p.into_iter().flatten() {
            if best.is_none_or(|(b, _, _)| direction.improves(cand.0, b)) {
                best = Some(cand);
            }
        }
        let (_, ip, iq) = best.expect("basis pairs are always feasible");
        (pts[ip].to_vec(), pts[iq].to_vec(), pts.len() * pts.len())
    };
    let (u, v) = witness_from_moduli(&p, &q)?;
    let value = ch.overlap(&u, &v)?;
    Ok(OracleResult { value, u, v, converged: true, iterations_used: evaluated, resamples: 0 })
}

/// Gram–Schmidt on the columns of `free`, or `None` if they are (nearly)
/// linearly dependent.
fn orthonormalize(free: &[Vec<Complex64>]) -> Option<Vec<Vec<Complex64>>> {
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(free.len());
    for f in free {
        let mut v = f.clone();
        let raw = l2_norm(&v);
        let refs: Vec<&[Complex64]> = out.iter().map(Vec::as_slice).collect();
        project_out(&mut v, &refs);
        project_out(&mut v, &refs);
        let norm = l2_norm(&v);
        if !(norm.is_finite() && norm > DEGENERATE_PROJECTION * raw) || norm == 0.0 {
            return None;
        }
        v.iter_mut().for_each(|z| *z /= norm);
        out.push(v);
    }
    Some(out)
}

fn tuple_average(gram: &GramMatrix, states: &[Vec<Complex64>]) -> f64 {
    let k = states.len();
    let profiles: Vec<Vec<f64>> = states.iter().map(|s| moduli_sq(s)).collect();
    let images: Vec<Vec<f64>> = profiles.iter().map(|p| gram.apply(p)).collect();
    let mut acc = 0.0;
    for r in 0..k {
        for s in 0..k {
            if r != s {
                acc += dot(&profiles[r], &images[s]);
            }
        }
    }
    acc / (k * (k - 1)) as f64
}

/// Local descent on the average pairwise output overlap of `k` orthonormal
/// states, starting from `start`.
///
/// The states are the Gram–Schmidt orthonormalization of `k` free vectors;
/// the gradient is a central finite difference with step `1e-6`. Used to
/// polish sampled tuples, not as a global optimizer.
pub fn polish_tuple(
    ch: &CQChannel,
    direction: Direction,
    start: &[PureState],
    cfg: &OptimizerConfig,
) -> Result<(f64, Vec<PureState>)> {
    cfg.validate()?;
    let k = start.len();
    if k < 2 {
        return Err(Error::Arity(format!("need at least 2 states, got {k}")));
    }
    if start.iter().any(|s| s.dim() != ch.n()) {
        return Err(Error::Dimension("tuple dimension differs from channel input".into()));
    }
    let gram = ch.gram();
    let sign = direction.sign();
    let eval = |free: &[Vec<Complex64>]| orthonormalize(free).map(|s| sign * tuple_average(gram, &s));
    let mut free: Vec<Vec<Complex64>> = start.iter().map(|s| s.amplitudes().to_vec()).collect();
    let mut f = eval(&free).ok_or_else(|| Error::Optimizer("starting tuple is not independent".into()))?;
    let h = 1e-6;
    let mut step = cfg.step_init;
    for _ in 0..cfg.max_iters {
        let mut grad = vec![vec![Complex64::new(0.0, 0.0); ch.n()]; k];
        for r in 0..k {
            for i in 0..ch.n() {
                for unit in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                    let mut plus = free.clone();
                    let mut minus = free.clone();
                    plus[r][i] += unit * h;
                    minus[r][i] -= unit * h;
                    let (Some(fp), Some(fm)) = (eval(&plus), eval(&minus)) else {
                        return Err(Error::Optimizer("degenerate tuple during polish".into()));
                    };
                    grad[r][i] += unit * ((fp - fm) / (2.0 * h));
                }
            }
        }
        let g2: f64 = grad.iter().map(|g| sq_norm(g)).sum();
        if !g2.is_finite() {
            return Err(Error::Optimizer("objective is not finite".into()));
        }
        if g2.sqrt() <= cfg.grad_tol.max(1e-8) {
            break;
        }
        let mut t = step;
        let mut accepted = None;
        while t >= MIN_STEP {
            let trial: Vec<Vec<Complex64>> =
                free.iter().zip(&grad).map(|(v, g)| v.iter().zip(g).map(|(a, b)| a - b * t).collect()).collect();
            if let Some(ft) = eval(&trial) {
                if ft <= f - ARMIJO * t * g2 {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((trial, ft)) = accepted else { break };
        free = orthonormalize(&trial).expect("accepted trial is independent");
        f = ft;
        step = (2.0 * t).min(MAX_STEP);
    }
    let states = orthonormalize(&free)
        .expect("iterate is independent")
        .into_iter()
        .map(PureState::from_unit_unchecked)
        .collect::<Vec<_>>();
    let value = ch.mixed_average(&states)?;
    Ok((value, states))
}
