//! SWAP-test statistics, the pair-witness verifiers for the small- and
//! large-overlap problems, and the reduction channels built from
//! acceptance-probability tables.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::CQChannel;
use crate::characterization::{max_overlap_closed_form, min_overlap_closed_form};
use crate::error::{Error, Result};
use crate::linalg::{hs_overlap, DensityMatrix, PureState};
use crate::seed::rng_from_seed;

/// Tables wider than this many bits would need more than 4096 inputs.
pub const MAX_TABLE_BITS: usize = 12;

/// Slack used when comparing an extremum against the promise thresholds.
pub const CLASSIFY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SwapTestResult {
    pub exact_accept: f64,
    pub empirical_accept: f64,
    pub shots: u64,
}

impl SwapTestResult {
    /// Standard deviation of the empirical frequency.
    pub fn sigma(&self) -> f64 {
        (self.exact_accept * (1.0 - self.exact_accept) / self.shots as f64).sqrt()
    }
}

/// Accept probability `½ + ½ Tr(ρσ)` of the SWAP test.
pub fn swap_accept_prob(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(0.5 + 0.5 * hs_overlap(rho, sigma)?)
}

/// Draws `shots` independent SWAP-test outcomes.
pub fn simulate_swap(rho: &DensityMatrix, sigma: &DensityMatrix, shots: u64, seed: u64) -> Result<SwapTestResult> {
    let exact = swap_accept_prob(rho, sigma)?;
    simulate_bernoulli(exact, shots, seed)
}

/// Empirical frequency of `shots` Bernoulli(`exact`) draws.
pub fn simulate_bernoulli(exact: f64, shots: u64, seed: u64) -> Result<SwapTestResult> {
    if shots == 0 {
        return Err(Error::Arity("shots must be at least 1".into()));
    }
    let p = exact.clamp(0.0, 1.0);
    let mut rng = rng_from_seed(seed);
    let accepted = (0..shots).filter(|_| rng.random_bool(p)).count() as u64;
    Ok(SwapTestResult { exact_accept: exact, empirical_accept: accepted as f64 / shots as f64, shots })
}

fn check_witness_pair(ch: &CQChannel, i: usize, j: usize) -> Result<()> {
    if i >= ch.n() || j >= ch.n() {
        return Err(Error::Witness(format!("indices ({i}, {j}) out of range for n = {}", ch.n())));
    }
    if i == j {
        return Err(Error::Witness(format!("witness indices must differ, got ({i}, {j})")));
    }
    Ok(())
}

/// Small-overlap verifier on classical witness `(i, j)`: accepts when the
/// SWAP test on `σ_i ⊗ σ_j` fails, i.e. with probability `½ - ½ Tr(σ_i σ_j)`.
pub fn so_verifier_accept(ch: &CQChannel, i: usize, j: usize) -> Result<f64> {
    check_witness_pair(ch, i, j)?;
    Ok(0.5 - 0.5 * ch.gram().get(i, j))
}

/// Large-overlap verifier on classical witness `(i, j)`: feeds
/// `(|i⟩ ± |j⟩)/√2` through the channel and accepts when the SWAP test
/// passes, with probability `½ + ⅛ Tr((σ_i + σ_j)²)`.
pub fn lo_verifier_accept(ch: &CQChannel, i: usize, j: usize) -> Result<f64> {
    check_witness_pair(ch, i, j)?;
    let u = PureState::plus_minus(ch.n(), i, j, true)?;
    let v = PureState::plus_minus(ch.n(), i, j, false)?;
    Ok(0.5 + 0.5 * ch.overlap(&u, &v)?)
}

/// Acceptance probabilities `p_y` of a verifier on classical witnesses `y`.
///
/// Keys are bitstrings of length `bits`; the first character is the first
/// bit `y₁` and the most significant bit of the input index. Strings that
/// are absent have `p_y = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceTable {
    pub bits: usize,
    pub probs: BTreeMap<String, f64>,
}

impl AcceptanceTable {
    pub fn new(bits: usize, probs: BTreeMap<String, f64>) -> Result<Self> {
        let table = Self { bits, probs };
        table.validate()?;
        Ok(table)
    }

    /// A complete table listing `p_y` for `y = 0 … 2^bits - 1` in order.
    pub fn from_dense(bits: usize, probs: &[f64]) -> Result<Self> {
        if bits > MAX_TABLE_BITS {
            return Err(Error::Table(format!("{bits} bits exceeds the limit of {MAX_TABLE_BITS}")));
        }
        if probs.len() != 1 << bits {
            return Err(Error::Table(format!("{} entries for {bits} bits", probs.len())));
        }
        let map = probs.iter().enumerate().map(|(y, &p)| (bitstring(y, bits), p)).collect();
        Self::new(bits, map)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bits == 0 || self.bits > MAX_TABLE_BITS {
            return Err(Error::Table(format!("bits must be in [1, {MAX_TABLE_BITS}], got {}", self.bits)));
        }
        for (key, &p) in &self.probs {
            if key.len() != self.bits || !key.chars().all(|c| c == '0' || c == '1') {
                return Err(Error::Table(format!("key {key:?} is not a {}-bit string", self.bits)));
            }
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                return Err(Error::Table(format!("p[{key}] = {p} is not a probability")));
            }
        }
        Ok(())
    }

    pub fn inputs(&self) -> usize {
        1 << self.bits
    }

    /// `p_y` for input index `y`.
    pub fn prob(&self, y: usize) -> f64 {
        self.probs.get(&bitstring(y, self.bits)).copied().unwrap_or(0.0)
    }

    /// Number of strings completed with `p = 0`.
    pub fn implicit_zeros(&self) -> usize {
        self.inputs() - self.probs.len()
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.values().copied().fold(0.0, f64::max)
    }
}

/// `y` written as a `bits`-character binary string, most significant first.
pub fn bitstring(y: usize, bits: usize) -> String {
    (0..bits).rev().map(|b| if (y >> b) & 1 == 1 { '1' } else { '0' }).collect()
}

/// First bit `y₁` of input `y`.
pub fn first_bit(y: usize, bits: usize) -> usize {
    (y >> (bits - 1)) & 1
}

/// Two-qubit computational basis state `|b₁ b₂⟩` as an index in `0..4`.
pub fn two_qubit_index(b1: usize, b2: usize) -> usize {
    2 * b1 + b2
}

/// Small-overlap reduction: `σ_y = p_y |y₁,¬y₁⟩⟨y₁,¬y₁| + (1 - p_y) |00⟩⟨00|`
/// on two qubits.
pub fn build_so_channel(table: &AcceptanceTable) -> Result<CQChannel> {
    table.validate()?;
    let sigmas = (0..table.inputs())
        .map(|y| {
            let p = table.prob(y);
            let b1 = first_bit(y, table.bits);
            let mut diag = [0.0; 4];
            diag[two_qubit_index(0, 0)] += 1.0 - p;
            diag[two_qubit_index(b1, 1 - b1)] += p;
            DensityMatrix::diagonal(&diag)
        })
        .collect::<Result<_>>()?;
    CQChannel::new(sigmas)
}

/// Large-overlap reduction: `σ_y = p_y |0⟩⟨0| + (1 - p_y) I/2` on one qubit.
pub fn build_lo_channel(table: &AcceptanceTable) -> Result<CQChannel> {
    table.validate()?;
    let sigmas = (0..table.inputs())
        .map(|y| {
            let p = table.prob(y);
            DensityMatrix::diagonal(&[p + 0.5 * (1.0 - p), 0.5 * (1.0 - p)])
        })
        .collect::<Result<_>>()?;
    CQChannel::new(sigmas)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProblemKind {
    #[serde(rename = "SO", alias = "so")]
    SmallOverlap,
    #[serde(rename = "LO", alias = "lo")]
    LargeOverlap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    YesLike,
    NoLike,
    Ambiguous,
}

/// Where a channel's exact extremum falls relative to a promise gap.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub kind: ProblemKind,
    pub c: f64,
    pub s: f64,
    /// The exact extremum: minimum overlap for SO, maximum for LO.
    pub yes_value: f64,
    /// Extremum needed for a yes-instance (`1 - c` for SO, `c` for LO).
    pub yes_threshold: f64,
    /// Extremum that certifies a no-instance (`1 - s` for SO, `s` for LO).
    pub no_threshold: f64,
    pub verdict: Verdict,
    /// Witness index pair attaining `yes_value`.
    pub pair: (usize, usize),
    pub tolerance: f64,
    /// Table strings completed with `p = 0`, when built from a table.
    pub implicit_zeros: Option<usize>,
}

/// Classifies a channel against `SO_{c,s}` or `LO_{c,s}` using the exact
/// extremum over orthogonal pairs.
pub fn classify_instance(ch: &CQChannel, kind: ProblemKind, c: f64, s: f64) -> Result<GapReport> {
    classify_instance_with_tol(ch, kind, c, s, CLASSIFY_TOL)
}

pub fn classify_instance_with_tol(ch: &CQChannel, kind: ProblemKind, c: f64, s: f64, tol: f64) -> Result<GapReport> {
    if !(c.is_finite() && s.is_finite()) || c <= s {
        return Err(Error::Config(format!("need c > s, got c = {c}, s = {s}")));
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::Config(format!("tolerance must be finite and non-negative, got {tol}")));
    }
    let (opt, yes_threshold, no_threshold, verdict) = match kind {
        ProblemKind::SmallOverlap => {
            let opt = min_overlap_closed_form(ch)?;
            let (yes, no) = (1.0 - c, 1.0 - s);
            let verdict = if opt.value <= yes + tol {
                Verdict::YesLike
            } else if opt.value >= no - tol {
                Verdict::NoLike
            } else {
                Verdict::Ambiguous
            };
            (opt, yes, no, verdict)
        }
        ProblemKind::LargeOverlap => {
            let opt = max_overlap_closed_form(ch)?;
            let verdict = if opt.value >= c - tol {
                Verdict::YesLike
            } else if opt.value <= s + tol {
                Verdict::NoLike
            } else {
                Verdict::Ambiguous
            };
            (opt, c, s, verdict)
        }
    };
    Ok(GapReport {
        kind,
        c,
        s,
        yes_value: opt.value,
        yes_threshold,
        no_threshold,
        verdict,
        pair: (opt.i, opt.j),
        tolerance: tol,
        implicit_zeros: None,
    })
}

/// Builds the reduction channel for `kind` from `table` and classifies it.
pub fn reduce_table(table: &AcceptanceTable, kind: ProblemKind, c: f64, s: f64) -> Result<(CQChannel, GapReport)> {
    let ch = match kind {
        ProblemKind::SmallOverlap => build_so_channel(table)?,
        ProblemKind::LargeOverlap => build_lo_channel(table)?,
    };
    let mut report = classify_instance(&ch, kind, c, s)?;
    report.implicit_zeros = Some(table.implicit_zeros());
    Ok((ch, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_density;

    fn table(bits: usize, entries: &[(&str, f64)]) -> AcceptanceTable {
        AcceptanceTable::new(bits, entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()).unwrap()
    }

    #[test]
    fn swap_accept_examples() {
        let z0 = DensityMatrix::basis(2, 0).unwrap();
        let z1 = DensityMatrix::basis(2, 1).unwrap();
        let mu = DensityMatrix::maximally_mixed(2).unwrap();
        assert_eq!(swap_accept_prob(&z0, &z0).unwrap(), 1.0);
        assert_eq!(swap_accept_prob(&z0, &z1).unwrap(), 0.5);
        assert_eq!(swap_accept_prob(&mu, &mu).unwrap(), 0.75);
        assert!(matches!(
            swap_accept_prob(&z0, &DensityMatrix::basis(3, 0).unwrap()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn simulate_swap_examples() {
        let z0 = DensityMatrix::basis(2, 0).unwrap();
        let z1 = DensityMatrix::basis(2, 1).unwrap();
        let r = simulate_swap(&z0, &z0, 1000, 1).unwrap();
        assert_eq!(r.empirical_accept, 1.0);

        let r = simulate_swap(&z0, &z1, 100_000, 4).unwrap();
        assert!((r.empirical_accept - 0.5).abs() <= 0.008);
        assert_eq!(r, simulate_swap(&z0, &z1, 100_000, 4).unwrap());

        assert!(matches!(simulate_swap(&z0, &z1, 0, 4), Err(Error::Arity(_))));
    }

    #[test]
    fn so_verifier_examples() {
        let basis = CQChannel::basis(3).unwrap();
        assert_eq!(so_verifier_accept(&basis, 0, 1).unwrap(), 0.5);
        let sigma = DensityMatrix::basis(2, 0).unwrap();
        let constant = CQChannel::constant(3, sigma).unwrap();
        assert_eq!(so_verifier_accept(&constant, 0, 2).unwrap(), 0.0);

        let ch = CQChannel::random(4, 3, 12).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    let expect = 0.5 - 0.5 * ch.gram().get(i, j);
                    assert!((so_verifier_accept(&ch, i, j).unwrap() - expect).abs() <= 1e-12);
                }
            }
        }
        assert!(matches!(so_verifier_accept(&ch, 1, 1), Err(Error::Witness(_))));
        assert!(matches!(so_verifier_accept(&ch, 0, 9), Err(Error::Witness(_))));
    }

    #[test]
    fn lo_verifier_examples() {
        let basis = CQChannel::basis(3).unwrap();
        assert!((lo_verifier_accept(&basis, 0, 2).unwrap() - 0.75).abs() < 1e-15);
        let sigma = DensityMatrix::basis(2, 1).unwrap();
        let constant = CQChannel::constant(3, sigma).unwrap();
        assert!((lo_verifier_accept(&constant, 0, 1).unwrap() - 1.0).abs() < 1e-15);

        let ch = CQChannel::random(5, 2, 40).unwrap();
        let best = max_overlap_closed_form(&ch).unwrap();
        let expect = 0.5 + 0.5 * ch.overlap(&best.witness_u, &best.witness_v).unwrap();
        assert!((lo_verifier_accept(&ch, best.i, best.j).unwrap() - expect).abs() <= 1e-15);
        assert!(matches!(lo_verifier_accept(&ch, 2, 2), Err(Error::Witness(_))));
    }

    #[test]
    fn table_validation() {
        assert!(AcceptanceTable::new(2, [("011".to_string(), 0.5)].into()).is_err());
        assert!(AcceptanceTable::new(2, [("0a".to_string(), 0.5)].into()).is_err());
        assert!(AcceptanceTable::new(2, [("01".to_string(), 1.5)].into()).is_err());
        assert!(AcceptanceTable::new(2, [("01".to_string(), f64::NAN)].into()).is_err());
        assert!(AcceptanceTable::new(0, BTreeMap::new()).is_err());
        let t = table(3, &[("101", 0.25)]);
        assert_eq!(t.prob(5), 0.25);
        assert_eq!(t.prob(4), 0.0);
        assert_eq!(t.implicit_zeros(), 7);
        assert_eq!(bitstring(5, 3), "101");
        assert_eq!(first_bit(5, 3), 1);
        assert_eq!(first_bit(3, 3), 0);
    }

    #[test]
    fn so_channel_examples() {
        // p_y = 1 for y = "01"; z = "10" has the other first bit.
        let t = table(2, &[("01", 1.0), ("10", 0.3), ("11", 0.8)]);
        let ch = build_so_channel(&t).unwrap();
        assert_eq!((ch.n(), ch.d()), (4, 4));
        assert_eq!(ch.gram().get(1, 2), 0.0);
        assert_eq!(ch.gram().get(1, 3), 0.0);

        let eps = 0.01;
        let t = AcceptanceTable::from_dense(3, &[eps; 8]).unwrap();
        let ch = build_so_channel(&t).unwrap();
        assert!(min_overlap_closed_form(&ch).unwrap().value >= (1.0 - eps) * (1.0 - eps) - 1e-12);

        let t = table(2, &[("10", 0.0), ("11", 0.0)]);
        let ch = build_so_channel(&t).unwrap();
        assert_eq!(ch.gram().get(2, 3), 1.0);
    }

    #[test]
    fn lo_channel_examples() {
        let t = table(2, &[("00", 1.0), ("11", 0.4)]);
        let ch = build_lo_channel(&t).unwrap();
        assert_eq!((ch.n(), ch.d()), (4, 2));
        let m = ch.gram();
        for z in 1..4 {
            let v = 0.25 * (m.get(0, 0) + m.get(z, z) + 2.0 * m.get(0, z));
            assert!(v >= 0.625 - 1e-15);
        }

        let eps = 0.01;
        let t = AcceptanceTable::from_dense(2, &[0.0, eps, eps / 2.0, eps]).unwrap();
        let ch = build_lo_channel(&t).unwrap();
        assert!(max_overlap_closed_form(&ch).unwrap().value <= 0.5 * (1.0 + eps * eps) + 1e-15);

        let t = table(1, &[]);
        let ch = build_lo_channel(&t).unwrap();
        assert!((max_overlap_closed_form(&ch).unwrap().value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn classify_examples() {
        let t = table(2, &[("00", 1.0), ("10", 0.2)]);
        let (_, r) = reduce_table(&t, ProblemKind::SmallOverlap, 1.0, 0.5).unwrap();
        assert_eq!(r.verdict, Verdict::YesLike);
        assert_eq!(r.yes_value, 0.0);
        assert_eq!(r.implicit_zeros, Some(2));

        let t = AcceptanceTable::from_dense(3, &[0.01, 0.0, 0.005, 0.01, 0.0, 0.0, 0.01, 0.002]).unwrap();
        let (_, r) = reduce_table(&t, ProblemKind::LargeOverlap, 0.625, 9.0 / 16.0).unwrap();
        assert_eq!(r.verdict, Verdict::NoLike);

        let basis = CQChannel::basis(3).unwrap();
        let r = classify_instance(&basis, ProblemKind::SmallOverlap, 1.0, 0.5).unwrap();
        assert_eq!(r.verdict, Verdict::YesLike);

        // Random two-dimensional outputs overlap by roughly a half.
        let ch = CQChannel::new((0..3).map(|s| random_density(2, s).unwrap()).collect()).unwrap();
        let r = classify_instance(&ch, ProblemKind::SmallOverlap, 0.99, 0.01).unwrap();
        assert_eq!(r.verdict, Verdict::Ambiguous);

        assert!(matches!(classify_instance(&basis, ProblemKind::LargeOverlap, 0.5, 0.5), Err(Error::Config(_))));
    }
}
