use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cqoverlap::characterization::{max_overlap_closed_form, min_overlap_closed_form, PairOptimum};
use cqoverlap::conjecture::{ScanParams, CANDIDATE_THRESHOLD, REVERIFY_TOL};
use cqoverlap::linalg::{DensityMatrix, PureState, STATE_TOL};
use cqoverlap::oracle::{continuous_extremum, grid_extremum, Direction, OptimizerConfig, OracleResult};
use cqoverlap::protocol::{
    build_lo_channel, build_so_channel, classify_instance_with_tol, lo_verifier_accept, simulate_swap,
    so_verifier_accept, ProblemKind, SwapTestResult, CLASSIFY_TOL,
};
use cqoverlap::seed::derive_seed;
use cqoverlap::CQChannel;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{input, usage, CliError, CliResult};
use crate::files::{check_out_path, load_table, write_out, InstanceFile, Provenance};
use crate::{
    Cli, Command, ConjectureArgs, DirectionArg, GenArgs, KindArg, Method, ReduceArgs, SolveArgs, SwaptestArgs,
    ValidateArgs, VerifierArg,
};

pub const CLOSED_FORM_TOL: f64 = 1e-12;
pub const ORACLE_TOL: f64 = 1e-6;
pub const GRID_TOL: f64 = 5e-3;
/// SWAP-test deviations are judged against this many standard deviations.
pub const SWAP_SIGMAS: f64 = 5.0;

#[derive(Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub wall_time: f64,
    pub tool_version: String,
}

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    if let Some(path) = &cli.json_out {
        check_out_path(path)?;
    }
    if let Some(tol) = cli.tol {
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(usage(format!("--tol must be finite and non-negative, got {tol}")));
        }
    }
    let start = Instant::now();
    let (name, inputs, results, outcome) = match &cli.command {
        Command::Gen(a) => {
            reject_tol(cli, "gen")?;
            ("gen", json!({ "n": a.n, "d": a.d, "out": a.out, "seed": seed(cli) }), gen(cli, a)?, Ok(()))
        }
        Command::Solve(a) => (
            "solve",
            json!({
                "instance": a.instance, "direction": direction(a.direction), "method": format!("{:?}", a.method).to_lowercase(),
                "config": a.config, "restarts": a.restarts, "max_iters": a.max_iters, "resolution": a.resolution,
                "seed": cli.seed, "tol": cli.tol,
            }),
            solve(cli, a)?,
            Ok(()),
        ),
        Command::Reduce(a) => (
            "reduce",
            json!({ "kind": kind(a.kind), "table": a.table, "out": a.out, "c": a.c, "s": a.s, "tol": cli.tol }),
            reduce(cli, a)?,
            Ok(()),
        ),
        Command::Conjecture(a) => {
            reject_tol(cli, "conjecture")?;
            let inputs = json!({
                "n": a.n, "d": a.d, "k": a.k, "instances": a.instances, "tuples": a.tuples,
                "out_csv": a.out_csv, "polish_below": a.polish_below, "candidates_dir": a.candidates_dir,
                "seed": seed(cli),
            });
            let (results, candidates) = conjecture(cli, a)?;
            let outcome = if candidates > 0 { Err(CliError::Candidate(candidates)) } else { Ok(()) };
            ("conjecture", inputs, results, outcome)
        }
        Command::Swaptest(a) => (
            "swaptest",
            json!({
                "instance": a.instance, "i": a.i, "j": a.j, "shots": a.shots,
                "verifier": format!("{:?}", a.verifier).to_lowercase(), "seed": seed(cli), "tol": cli.tol,
            }),
            swaptest(cli, a)?,
            Ok(()),
        ),
        Command::Validate(a) => {
            reject_tol(cli, "validate")?;
            ("validate", json!({ "instance": a.instance, "table": a.table }), validate(a)?, Ok(()))
        }
    };
    let report = RunReport {
        command: name.to_string(),
        inputs,
        results,
        wall_time: start.elapsed().as_secs_f64(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    print!("{text}");
    if let Some(path) = &cli.json_out {
        write_out(path, &text)?;
    }
    outcome
}

fn seed(cli: &Cli) -> u64 {
    cli.seed.unwrap_or(0)
}

fn reject_tol(cli: &Cli, command: &str) -> CliResult<()> {
    match cli.tol {
        Some(_) => Err(usage(format!("--tol does not apply to {command}; its tolerances are fixed"))),
        None => Ok(()),
    }
}

fn direction(d: DirectionArg) -> Direction {
    match d {
        DirectionArg::Min => Direction::Minimize,
        DirectionArg::Max => Direction::Maximize,
    }
}

fn kind(k: KindArg) -> ProblemKind {
    match k {
        KindArg::So => ProblemKind::SmallOverlap,
        KindArg::Lo => ProblemKind::LargeOverlap,
    }
}

fn gen(cli: &Cli, a: &GenArgs) -> CliResult<Value> {
    if a.n < 2 {
        return Err(usage(format!("n must be at least 2 (n >= 2 is required for an orthogonal pair), got {}", a.n)));
    }
    if a.d < 1 {
        return Err(usage("d must be at least 1"));
    }
    check_out_path(&a.out)?;
    let seed = seed(cli);
    let channel = CQChannel::random(a.n, a.d, seed)?;
    let provenance = Provenance {
        generator: "cqoverlap gen (Ginibre)".into(),
        seed: Some(seed),
        params: json!({ "n": a.n, "d": a.d }),
    };
    write_out(&a.out, &InstanceFile::new(channel, Some(provenance)).to_json())?;
    Ok(json!({ "out": a.out, "n": a.n, "d": a.d }))
}

fn closed_form(ch: &CQChannel, dir: Direction) -> CliResult<PairOptimum> {
    Ok(match dir {
        Direction::Minimize => min_overlap_closed_form(ch)?,
        Direction::Maximize => max_overlap_closed_form(ch)?,
    })
}

fn load_config(a: &SolveArgs, cli: &Cli) -> CliResult<OptimizerConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => OptimizerConfig::default(),
    };
    if let Some(r) = a.restarts {
        cfg.restarts = r;
    }
    if let Some(m) = a.max_iters {
        cfg.max_iters = m;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn oracle_results(found: &OracleResult, closed: &PairOptimum, tol: f64) -> Value {
    let gap = found.value - closed.value;
    json!({
        "value": found.value,
        "closed_form_value": closed.value,
        "gap": gap,
        "tolerance": tol,
        "agrees": gap.abs() <= tol,
        "converged": found.converged,
        "iterations_used": found.iterations_used,
        "resamples": found.resamples,
        "u": found.u,
        "v": found.v,
    })
}

fn solve(cli: &Cli, a: &SolveArgs) -> CliResult<Value> {
    let file = InstanceFile::load(&a.instance)?;
    let ch = &file.channel;
    let dir = direction(a.direction);
    let closed = closed_form(ch, dir)?;
    Ok(match a.method {
        Method::Closed => {
            let tol = cli.tol.unwrap_or(CLOSED_FORM_TOL);
            let attained = ch.overlap(&closed.witness_u, &closed.witness_v)?;
            json!({
                "value": closed.value,
                "tolerance": tol,
                "pair": [closed.i + 1, closed.j + 1],
                "witness_u": closed.witness_u,
                "witness_v": closed.witness_v,
                "witness_value": attained,
                "witness_attains": (attained - closed.value).abs() <= tol,
            })
        }
        Method::Oracle => {
            let cfg = load_config(a, cli)?;
            let found = continuous_extremum(ch, dir, &cfg)?;
            let mut out = oracle_results(&found, &closed, cli.tol.unwrap_or(ORACLE_TOL));
            out["config"] = json!(cfg);
            out
        }
        Method::Grid => {
            let found = grid_extremum(ch, dir, a.resolution)?;
            let mut out = oracle_results(&found, &closed, cli.tol.unwrap_or(GRID_TOL));
            out["resolution"] = json!(a.resolution);
            out
        }
    })
}

fn reduce(cli: &Cli, a: &ReduceArgs) -> CliResult<Value> {
    check_out_path(&a.out)?;
    let table = load_table(&a.table)?;
    let kind = kind(a.kind);
    let (c, s) = match kind {
        ProblemKind::SmallOverlap => (a.c.unwrap_or(1.0), a.s.unwrap_or(0.5)),
        ProblemKind::LargeOverlap => (a.c.unwrap_or(0.625), a.s.unwrap_or(9.0 / 16.0)),
    };
    let ch = match kind {
        ProblemKind::SmallOverlap => build_so_channel(&table)?,
        ProblemKind::LargeOverlap => build_lo_channel(&table)?,
    };
    let mut report = classify_instance_with_tol(&ch, kind, c, s, cli.tol.unwrap_or(CLASSIFY_TOL))?;
    report.implicit_zeros = Some(table.implicit_zeros());
    let provenance = Provenance {
        generator: format!("cqoverlap reduce ({})", if kind == ProblemKind::SmallOverlap { "so" } else { "lo" }),
        seed: None,
        params: json!({ "bits": table.bits, "probs": table.probs }),
    };
    let (n, d) = (ch.n(), ch.d());
    write_out(&a.out, &InstanceFile::new(ch, Some(provenance)).to_json())?;
    let mut gap = serde_json::to_value(&report).expect("report serializes");
    gap["pair"] = json!([report.pair.0 + 1, report.pair.1 + 1]);
    Ok(json!({ "out": a.out, "n": n, "d": d, "gap_report": gap }))
}

#[derive(Serialize)]
struct CsvRow {
    instance_seed: u64,
    n: usize,
    d: usize,
    k: usize,
    lhs: f64,
    rhs: f64,
    margin: f64,
}

fn conjecture(cli: &Cli, a: &ConjectureArgs) -> CliResult<(Value, usize)> {
    check_out_path(&a.out_csv)?;
    let candidates_dir: PathBuf = match &a.candidates_dir {
        Some(dir) => dir.clone(),
        None => a.out_csv.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_path_buf(),
    };
    if !candidates_dir.is_dir() {
        return Err(usage(format!("candidate directory {} does not exist", candidates_dir.display())));
    }
    if a.polish_below.is_some_and(|t| t.is_nan()) {
        return Err(usage("--polish-below must be a number"));
    }
    let params = ScanParams {
        n: a.n,
        d: a.d,
        k: a.k,
        instances: a.instances,
        tuples: a.tuples,
        seed: seed(cli),
        polish_below: a.polish_below,
    };
    params.validate().map_err(|e| usage(e.to_string()))?;
    let report = cqoverlap::conjecture::scan(&params)?;

    let mut writer =
        csv::Writer::from_path(&a.out_csv).map_err(|e| usage(format!("cannot write {}: {e}", a.out_csv.display())))?;
    for r in &report.records {
        writer
            .serialize(CsvRow { instance_seed: r.instance_seed, n: r.n, d: r.d, k: r.k, lhs: r.lhs, rhs: r.rhs, margin: r.margin })
            .map_err(|e| usage(format!("cannot write {}: {e}", a.out_csv.display())))?;
    }
    writer.flush().map_err(|e| usage(format!("cannot write {}: {e}", a.out_csv.display())))?;

    let mut dumped = Vec::new();
    for cand in &report.candidates {
        let path = candidates_dir.join(format!("candidate-{}.json", cand.record.instance_seed));
        let provenance = Provenance {
            generator: "cqoverlap conjecture (Ginibre)".into(),
            seed: Some(cand.record.instance_seed),
            params: json!(cand.record),
        };
        write_out(&path, &InstanceFile::new(cand.channel.clone(), Some(provenance)).to_json())?;
        dumped.push(path);
    }
    let results = json!({
        "out_csv": a.out_csv,
        "rows": report.records.len(),
        "min_margin": report.min_margin(),
        "polished": report.records.iter().filter(|r| r.polished).count(),
        "flagged": report.candidates.len() + report.rejected.len(),
        "rejected_by_reverify": report.rejected.len(),
        "candidates": dumped,
        "candidate_threshold": CANDIDATE_THRESHOLD,
        "reverify_tolerance": REVERIFY_TOL,
    });
    Ok((results, report.candidates.len()))
}

fn swap_entry(exact: f64, sim: &SwapTestResult, empirical: f64, tol: Option<f64>) -> Value {
    let sigma = sim.sigma();
    let tolerance = tol.unwrap_or(SWAP_SIGMAS * sigma);
    json!({
        "exact_accept": exact,
        "empirical_accept": empirical,
        "shots": sim.shots,
        "sigma": sigma,
        "tolerance": tolerance,
        "within_tolerance": (empirical - exact).abs() <= tolerance,
    })
}

fn swaptest(cli: &Cli, a: &SwaptestArgs) -> CliResult<Value> {
    if a.i == 0 || a.j == 0 {
        return Err(usage("witness indices are counted from 1"));
    }
    if a.i == a.j {
        return Err(usage(format!("witness indices must differ, got i = j = {}", a.i)));
    }
    if a.shots == 0 {
        return Err(usage("shots must be at least 1"));
    }
    let file = InstanceFile::load(&a.instance)?;
    let ch = &file.channel;
    if a.i > ch.n() || a.j > ch.n() {
        return Err(usage(format!("witness indices ({}, {}) out of range for n = {}", a.i, a.j, ch.n())));
    }
    let (i, j) = (a.i - 1, a.j - 1);
    let base = seed(cli);
    let mut out = json!({});
    if matches!(a.verifier, VerifierArg::So | VerifierArg::Both) {
        // Accepts when the SWAP test on σ_i ⊗ σ_j rejects.
        let exact = so_verifier_accept(ch, i, j)?;
        let sim = simulate_swap(ch.sigma(i), ch.sigma(j), a.shots, derive_seed(base, 0))?;
        out["so"] = swap_entry(exact, &sim, 1.0 - sim.empirical_accept, cli.tol);
    }
    if matches!(a.verifier, VerifierArg::Lo | VerifierArg::Both) {
        let exact = lo_verifier_accept(ch, i, j)?;
        let u = DensityMatrix::projector(&PureState::plus_minus(ch.n(), i, j, true)?);
        let v = DensityMatrix::projector(&PureState::plus_minus(ch.n(), i, j, false)?);
        let sim = simulate_swap(&ch.apply(&u)?, &ch.apply(&v)?, a.shots, derive_seed(base, 1))?;
        out["lo"] = swap_entry(exact, &sim, sim.empirical_accept, cli.tol);
    }
    Ok(out)
}

fn validate(a: &ValidateArgs) -> CliResult<Value> {
    if let Some(path) = &a.instance {
        let file = InstanceFile::load(path)?;
        let ch = &file.channel;
        let sigmas: Vec<Value> = ch
            .sigmas()
            .iter()
            .map(|s| {
                let m = s.matrix();
                json!({
                    "trace": m.trace().re,
                    "hermitian_deviation": m.hermitian_deviation(),
                    "min_eigenvalue": m.min_hermitian_eigenvalue(),
                })
            })
            .collect();
        return Ok(json!({
            "kind": "instance",
            "valid": true,
            "n": ch.n(),
            "d": ch.d(),
            "tolerance": STATE_TOL,
            "sigmas": sigmas,
            "gram_min_eigenvalue": ch.gram().min_eigenvalue(),
        }));
    }
    let path = a.table.as_ref().expect("clap requires one input");
    let table = load_table(path)?;
    Ok(json!({
        "kind": "table",
        "valid": true,
        "bits": table.bits,
        "entries": table.probs.len(),
        "implicit_zeros": table.implicit_zeros(),
        "max_prob": table.max_prob(),
    }))
}
