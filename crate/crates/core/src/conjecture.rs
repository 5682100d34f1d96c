//! Counterexample scanner for the k-state minimum-overlap conjecture:
//! for orthonormal `u_1 … u_k`, the average pairwise output overlap is at
//! least the smallest average pairwise Gram entry over k distinct indices.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::CQChannel;
use crate::characterization::{binomial, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::linalg::{hs_overlap, random_orthonormal_tuple, PureState};
use crate::oracle::{polish_tuple, Direction, OptimizerConfig};
use crate::seed::derive_seed;

/// Margins below this flag an instance as a counterexample candidate.
pub const CANDIDATE_THRESHOLD: f64 = -1e-7;

/// Largest disagreement tolerated between a record and its recomputation.
pub const REVERIFY_TOL: f64 = 1e-9;

/// Settings for the local descent applied to suspicious tuples. Fixed so
/// that polished records can be regenerated from seeds.
pub fn polish_config() -> OptimizerConfig {
    OptimizerConfig { restarts: 1, max_iters: 200, step_init: 1.0, grad_tol: 1e-8, seed: 0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjectureRecord {
    pub instance_seed: u64,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Seed of the sampled tuple attaining `lhs`.
    pub states_seed: u64,
    /// Whether `lhs` comes from polishing that tuple.
    #[serde(default)]
    pub polished: bool,
}

impl ConjectureRecord {
    pub fn is_candidate(&self) -> bool {
        self.margin < CANDIDATE_THRESHOLD
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub instances: usize,
    pub tuples: usize,
    pub seed: u64,
    /// Polish the best sampled tuple when its margin falls below this value.
    pub polish_below: Option<f64>,
}

impl ScanParams {
    pub fn new(n: usize, d: usize, k: usize, instances: usize, tuples: usize, seed: u64) -> Self {
        Self { n, d, k, instances, tuples, seed, polish_below: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances == 0 || self.tuples == 0 {
            return Err(Error::Arity("instances and tuples must be at least 1".into()));
        }
        if self.n < 2 || self.d == 0 {
            return Err(Error::Arity(format!("need n >= 2 and d >= 1, got n = {}, d = {}", self.n, self.d)));
        }
        check_k(self.n, self.k, DEFAULT_ENUMERATION_CAP)
    }
}

/// A candidate that survived reverification, with its full instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub record: ConjectureRecord,
    pub channel: CQChannel,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub records: Vec<ConjectureRecord>,
    pub candidates: Vec<Candidate>,
    /// Flagged records whose recomputation disagreed or no longer crossed
    /// the threshold.
    pub rejected: Vec<ConjectureRecord>,
}

impl ScanReport {
    pub fn min_margin(&self) -> f64 {
        self.records.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }
}

fn check_k(n: usize, k: usize, cap: u64) -> Result<()> {
    if k < 2 || k > n {
        return Err(Error::Arity(format!("k = {k} outside [2, {n}]")));
    }
    let count = binomial(n, k);
    if count > cap {
        return Err(Error::Capacity(format!("C({n}, {k}) = {count} subsets exceeds the enumeration cap {cap}")));
    }
    Ok(())
}

/// `min_{|T|=k} (1/k(k-1)) Σ_{r≠s ∈ T} M_rs` over unordered k-subsets.
pub fn conjecture_rhs(ch: &CQChannel, k: usize) -> Result<f64> {
    conjecture_rhs_with_cap(ch, k, DEFAULT_ENUMERATION_CAP)
}

pub fn conjecture_rhs_with_cap(ch: &CQChannel, k: usize, cap: u64) -> Result<f64> {
    check_k(ch.n(), k, cap)?;
    let m = ch.gram();
    let norm = (k * (k - 1)) as f64;
    Ok((0..ch.n())
        .combinations(k)
        .map(|t| {
            let mut acc = 0.0;
            for (a, &i) in t.iter().enumerate() {
                for &j in &t[a + 1..] {
                    acc += m.get(i, j);
                }
            }
            2.0 * acc / norm
        })
        .fold(f64::INFINITY, f64::min))
}

fn tuple_lhs(ch: &CQChannel, k: usize, states_seed: u64, polish: bool) -> Result<(f64, Vec<PureState>)> {
    let tuple = random_orthonormal_tuple(ch.n(), k, states_seed)?;
    if !polish {
        return Ok((ch.mixed_average(&tuple)?, tuple));
    }
    let sampled = ch.mixed_average(&tuple)?;
    let (value, states) = polish_tuple(ch, Direction::Minimize, &tuple, &polish_config())?;
    if value < sampled {
        Ok((value, states))
    } else {
        Ok((sampled, tuple))
    }
}

/// Samples `tuples` orthonormal k-tuples for one channel and records the
/// smallest margin found.
pub fn scan_channel(
    ch: &CQChannel,
    k: usize,
    tuples: usize,
    instance_seed: u64,
    polish_below: Option<f64>,
) -> Result<ConjectureRecord> {
    if tuples == 0 {
        return Err(Error::Arity("tuples must be at least 1".into()));
    }
    let rhs = conjecture_rhs(ch, k)?;
    let mut best: Option<(f64, u64)> = None;
    for t in 0..tuples {
        let states_seed = derive_seed(instance_seed, t as u64);
        let (lhs, _) = tuple_lhs(ch, k, states_seed, false)?;
        if best.is_none_or(|(b, _)| lhs < b) {
            best = Some((lhs, states_seed));
        }
    }
    let (mut lhs, states_seed) = best.expect("at least one tuple");
    let mut polished = false;
    if polish_below.is_some_and(|t| lhs - rhs < t) {
        let (value, _) = tuple_lhs(ch, k, states_seed, true)?;
        polished = value < lhs;
        lhs = lhs.min(value);
    }
    Ok(ConjectureRecord { instance_seed, n: ch.n(), d: ch.d(), k, lhs, rhs, margin: lhs - rhs, states_seed, polished })
}

/// Runs the scan over `instances` random channels in parallel. Records are
/// returned in instance order; flagged records are reverified before being
/// reported as candidates.
pub fn scan(params: &ScanParams) -> Result<ScanReport> {
    params.validate()?;
    let records = (0..params.instances)
        .into_par_iter()
        .map(|i| {
            let instance_seed = derive_seed(params.seed, i as u64);
            let ch = CQChannel::random(params.n, params.d, instance_seed)?;
            scan_channel(&ch, params.k, params.tuples, instance_seed, params.polish_below)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut candidates = Vec::new();
    let mut rejected = Vec::new();
    for record in records.iter().filter(|r| r.is_candidate()) {
        match reverify(record) {
            Ok(fresh) if fresh.is_candidate() => {
                let channel = CQChannel::random(record.n, record.d, record.instance_seed)?;
                candidates.push(Candidate { record: fresh, channel });
            }
            _ => rejected.push(record.clone()),
        }
    }
    Ok(ScanReport { records, candidates, rejected })
}

/// Neumaier-compensated sum.
fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Recomputes a record from its seeds, regenerating the channel as
/// `CQChannel::random(n, d, instance_seed)`.
pub fn reverify(record: &ConjectureRecord) -> Result<ConjectureRecord> {
    let ch = CQChannel::random(record.n, record.d, record.instance_seed)?;
    reverify_with(record, &ch)
}

/// Recomputes `record` on a known channel with Gram entries taken directly
/// from `Tr(σ_i σ_j)` and compensated sums throughout.
pub fn reverify_with(record: &ConjectureRecord, ch: &CQChannel) -> Result<ConjectureRecord> {
    if ch.n() != record.n || ch.d() != record.d {
        return Err(Error::Reproducibility(format!(
            "record describes n = {}, d = {} but the channel has n = {}, d = {}",
            record.n,
            record.d,
            ch.n(),
            ch.d()
        )));
    }
    let k = record.k;
    check_k(ch.n(), k, DEFAULT_ENUMERATION_CAP)?;
    let n = ch.n();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = hs_overlap(ch.sigma(i), ch.sigma(j))?;
        }
    }

    let (_, states) = tuple_lhs(ch, k, record.states_seed, record.polished)?;
    let profiles: Vec<Vec<f64>> = states.iter().map(PureState::moduli_squared).collect();
    let pair_terms = (0..k).flat_map(|r| (0..k).filter(move |&s| s != r).map(move |s| (r, s)));
    let lhs = compensated_sum(pair_terms.flat_map(|(r, s)| {
        let (p, q, m) = (&profiles[r], &profiles[s], &m);
        (0..n).flat_map(move |i| (0..n).map(move |j| p[i] * m[i][j] * q[j]))
    })) / (k * (k - 1)) as f64;

    let rhs = (0..n)
        .combinations(k)
        .map(|t| {
            let m = &m;
            compensated_sum(t.iter().flat_map(|&i| t.iter().filter(move |&&j| j != i).map(move |&j| m[i][j])))
        })
        .fold(f64::INFINITY, f64::min)
        / (k * (k - 1)) as f64;

    let lhs_gap = (lhs - record.lhs).abs();
    let rhs_gap = (rhs - record.rhs).abs();
    if !(lhs_gap <= REVERIFY_TOL && rhs_gap <= REVERIFY_TOL) {
        return Err(Error::Reproducibility(format!(
            "recomputed lhs {lhs} and rhs {rhs} differ from recorded {} and {} by {lhs_gap:.3e} and {rhs_gap:.3e}",
            record.lhs, record.rhs
        )));
    }
    Ok(ConjectureRecord { lhs, rhs, margin: lhs - rhs, ..record.clone() })
}
