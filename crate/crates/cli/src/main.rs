//! Batch experiment runner: seeds a grid of trials, fans them out to
//! a worker pool, and emits JSON + CSV reports. Exit code 0 iff every
//! trial passed.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use qicsep_core::qic_algorithms::{
    estimate_norm_squared, exact_sample, proposal_probability, rejection_bound, ComplexityParams,
};
use qicsep_core::simon::{
    block_probability, exact_solution, make_oracle, recover_secret, sample_solution, Decision,
    SimonMode,
};
use qicsep_core::spectra::{eigen_gap_check, odd_cycle_checks, Precision};
use qicsep_core::sq_core::{new_ledger, MaterializedSqMatrix, MaterializedSqVector};
use qicsep_core::welded_trees::{
    dense_b, expand_solution, generate_instance, layered_solve, mass_ratio, play_game,
    HardMatrixParams, RowSampleWalk, Strategy, TreeOracle,
};

#[derive(Parser)]
#[command(name = "qicsep", version, about = "quantum-inspired separation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dense eigenvalue-gap verification on seeded welded-trees graphs.
    ///
    /// CSV columns: check,n,seed,pass,lambda1,gap_violations,lambda1_slack,tolerance
    GapCheck(CommonArgs),
    /// Solution-mass table: mass_ratio(n), ratio * n^5, dense cross-check.
    ///
    /// CSV columns: n,seed,mass_ratio,scaled_n5,dense_rel_err,dense_ratio_err,pass
    SolutionMass(CommonArgs),
    /// Root-finding game win rates per strategy and budget.
    ///
    /// CSV columns: n,strategy,budget,trials,wins,win_rate,mean_queries,bound,pass
    GameRun(CommonArgs),
    /// End-to-end Simon recovery trials.
    ///
    /// CSV columns: n,mode,seed,decision,s_hex,samples_used,f_calls,block_probability,residual,pass
    SimonRun(CommonArgs),
    /// Norm-estimator coverage and rejection-sampler statistics on
    /// random sparse instances.
    ///
    /// CSV columns: instance,seed,k,coverage,tv_distance,acceptance_rate,acceptance_floor,pass
    QicBench(CommonArgs),
    /// Odd-cycle observation suite.
    ///
    /// CSV columns: check,n,seed,pass,worst_slack,tolerance
    CycleCheck(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum PrecisionArg {
    Double,
    Extended,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::Extended => Precision::Extended,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct NRange {
    lo: usize,
    hi: usize,
}

fn parse_range(s: &str) -> Result<NRange, String> {
    let parse_one = |t: &str| t.trim().parse::<usize>().map_err(|e| e.to_string());
    let r = match s.split_once("..") {
        Some((a, b)) => NRange {
            lo: parse_one(a)?,
            hi: parse_one(b)?,
        },
        None => {
            let v = parse_one(s)?;
            NRange { lo: v, hi: v }
        }
    };
    if r.lo > r.hi {
        return Err(format!("empty range {}..{}", r.lo, r.hi));
    }
    Ok(r)
}

impl NRange {
    fn iter(&self) -> impl Iterator<Item = usize> {
        self.lo..=self.hi
    }
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Size parameter, a single value or an inclusive range A..B.
    #[arg(long, value_parser = parse_range)]
    n: Option<NRange>,
    /// Trials per grid point.
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; trial seeds derive from it by index. QICSEP_SEED
    /// overrides.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Oracle-query budget (game-run).
    #[arg(long)]
    budget: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Report path; writes <out> as JSON and the same stem as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    precision: PrecisionArg,
}

impl CommonArgs {
    fn base_seed(&self) -> u64 {
        match std::env::var("QICSEP_SEED") {
            Ok(v) => v.parse().unwrap_or(self.seed),
            Err(_) => self.seed,
        }
    }

    fn range_or(&self, lo: usize, hi: usize) -> NRange {
        self.n.unwrap_or(NRange { lo, hi })
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn trial_seed(base: u64, index: u64) -> u64 {
    base ^ splitmix64(index)
}

#[derive(Serialize)]
struct ConfigEcho {
    n: NRange,
    trials: usize,
    seed: u64,
    epsilon: Option<f64>,
    budget: Option<u64>,
    tolerance: f64,
    precision: PrecisionArg,
}

#[derive(Serialize)]
struct Timing {
    started_unix_ms: u128,
    wall_clock_ms: u128,
}

#[derive(Serialize)]
struct RunReport<R: Serialize> {
    command: String,
    config: ConfigEcho,
    aggregate_pass: bool,
    worst_slack: f64,
    rows: Vec<R>,
    /// Non-deterministic fields live here; everything else is
    /// byte-identical for identical (command, config, seed).
    timing: Timing,
}

fn emit<R: Serialize>(report: &RunReport<R>, out: &Option<PathBuf>) -> Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    match out {
        None => println!("{json}"),
        Some(path) => {
            std::fs::write(path, &json)
                .with_context(|| format!("writing {}", path.display()))?;
            let csv_path = csv_sibling(path);
            let mut w = csv::Writer::from_path(&csv_path)
                .with_context(|| format!("writing {}", csv_path.display()))?;
            for row in &report.rows {
                w.serialize(row)?;
            }
            w.flush()?;
            println!(
                "{}: {} rows, aggregate {} -> {} / {}",
                report.command,
                report.rows.len(),
                if report.aggregate_pass { "pass" } else { "FAIL" },
                path.display(),
                csv_path.display()
            );
        }
    }
    Ok(())
}

fn csv_sibling(path: &Path) -> PathBuf {
    path.with_extension("csv")
}

fn finish<R: Serialize>(
    command: &str,
    config: ConfigEcho,
    rows: Vec<R>,
    pass_of: impl Fn(&R) -> bool,
    slack_of: impl Fn(&R) -> f64,
    extra_pass: bool,
    started: std::time::Instant,
    started_unix_ms: u128,
    out: &Option<PathBuf>,
) -> Result<bool> {
    let aggregate_pass = extra_pass && rows.iter().all(&pass_of);
    let worst_slack = rows.iter().map(&slack_of).fold(f64::INFINITY, f64::min);
    let report = RunReport {
        command: command.to_string(),
        config,
        aggregate_pass,
        worst_slack,
        rows,
        timing: Timing {
            started_unix_ms,
            wall_clock_ms: started.elapsed().as_millis(),
        },
    };
    emit(&report, out)?;
    Ok(aggregate_pass)
}

fn now_unix_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

// ---------------------------------------------------------------- gap-check

#[derive(Serialize)]
struct GapRow {
    check: String,
    n: usize,
    seed: u64,
    pass: bool,
    lambda1: f64,
    gap_violations: usize,
    lambda1_slack: f64,
    tolerance: f64,
}

fn cmd_gap_check(args: &CommonArgs) -> Result<bool> {
    let started = std::time::Instant::now();
    let started_unix_ms = now_unix_ms();
    let range = args.range_or(2, 6);
    if range.hi > 9 {
        bail!("n = {} too large for dense mode (max 9)", range.hi);
    }
    let trials = args.trials.unwrap_or(20);
    let tol = args.tol.unwrap_or(1e-9);
    let base = args.base_seed();
    let grid: Vec<(usize, usize)> = range
        .iter()
        .flat_map(|n| (0..trials).map(move |t| (n, t)))
        .collect();
    let rows: Vec<GapRow> = grid
        .par_iter()
        .map(|&(n, t)| {
            let seed = trial_seed(base, (n * 1000 + t) as u64);
            let instance = generate_instance(n, seed).expect("instance");
            let report = eigen_gap_check(&instance, tol);
            let lambda1_slack = report.lambda1 - (3.0 - 2.0 / instance.num_nodes as f64);
            GapRow {
                check: "gap-check".into(),
                n,
                seed,
                pass: report.passes(instance.num_nodes),
                lambda1: report.lambda1,
                gap_violations: report.gap_violations.len(),
                lambda1_slack,
                tolerance: tol,
            }
        })
        .collect();
    finish(
        "gap-check",
        ConfigEcho {
            n: range,
            trials,
            seed: base,
            epsilon: None,
            budget: None,
            tolerance: tol,
            precision: args.precision,
        },
        rows,
        |r| r.pass,
        |r| r.lambda1_slack,
        true,
        started,
        started_unix_ms,
        &args.out,
    )
}

// ------------------------------------------------------------ solution-mass

#[derive(Serialize)]
struct MassRow {
    n: usize,
    seed: u64,
    mass_ratio: f64,
    scaled_n5: f64,
    dense_rel_err: Option<f64>,
    dense_ratio_err: Option<f64>,
    pass: bool,
}

fn cmd_solution_mass(args: &CommonArgs) -> Result<bool> {
    let started = std::time::Instant::now();
    let started_unix_ms = now_unix_ms();
    let range = args.range_or(1, 10);
    let tol = args.tol.unwrap_or(1e-8);
    let base = args.base_seed();
    let rows: Vec<MassRow> = range
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&n| {
            let seed = trial_seed(base, n as u64);
            let params = HardMatrixParams::new(n).expect("params");
            let solution = layered_solve(&params).expect("layered solve");
            let ratio = mass_ratio(&solution);
            let scaled = ratio * (n as f64).powi(5);
            // dense cross-checks stay affordable through n = 8 (1022 nodes)
            let (dense_rel_err, dense_ratio_err) = if n <= 8 {
                let instance = generate_instance(n, seed).expect("instance");
                let b = dense_b(&instance, &params);
                let mut e1 = vec![0.0; instance.num_nodes];
                e1[instance.root_t1] = 1.0;
                let x_dense = qicsep_core::linalg::solve_symmetric(&b, &e1);
                let x_layered = expand_solution(&instance, &solution);
                let num: f64 = x_dense
                    .iter()
                    .zip(x_layered.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let den: f64 = x_dense.iter().map(|v| v * v).sum::<f64>().sqrt();
                let norm_sq: f64 = x_dense.iter().map(|v| v * v).sum();
                let dense_ratio = x_dense[instance.root_t2].powi(2) / norm_sq;
                (Some(num / den), Some((dense_ratio - ratio).abs()))
            } else {
                (None, None)
            };
            let pass = ratio > 0.0
                && dense_rel_err.map_or(true, |e| e <= tol)
                && dense_ratio_err.map_or(true, |e| e <= 1e-10);
            MassRow {
                n,
                seed,
                mass_ratio: ratio,
                scaled_n5: scaled,
                dense_rel_err,
                dense_ratio_err,
                pass,
            }
        })
        .collect();
    // band check over the part of the range inside 4..10
    let band: Vec<f64> = rows
        .iter()
        .filter(|r| (4..=10).contains(&r.n))
        .map(|r| r.scaled_n5)
        .collect();
    let band_ok = match (
        band.iter().cloned().fold(f64::INFINITY, f64::min),
        band.iter().cloned().fold(0.0f64, f64::max),
    ) {
        (lo, hi) if lo.is_finite() && lo > 0.0 => hi / lo <= 100.0,
        _ => true,
    };
    finish(
        "solution-mass",
        ConfigEcho {
            n: range,
            trials: 1,
            seed: base,
            epsilon: None,
            budget: None,
            tolerance: tol,
            precision: args.precision,
        },
        rows,
        |r| r.pass,
        |r| r.mass_ratio,
        band_ok,
        started,
        started_unix_ms,
        &args.out,
    )
}

// ----------------------------------------------------------------- game-run

#[derive(Serialize)]
struct GameRow {
    n: usize,
    strategy: String,
    budget: u64,
    trials: usize,
    wins: usize,
    win_rate: f64,
    mean_queries: f64,
    bound: Option<f64>,
    pass: bool,
}

fn cmd_game_run(args: &CommonArgs) -> Result<bool> {
    let started = std::time::Instant::now();
    let started_unix_ms = now_unix_ms();
    let range = args.range_or(4, 8);
    let trials = args.trials.unwrap_or(200);
    let base = args.base_seed();
    let grid: Vec<(usize, &'static str)> = range
        .iter()
        .flat_map(|n| {
            ["uniform-random", "bfs-from-root", "qic-pipeline"]
                .into_iter()
                .map(move |s| (n, s))
        })
        .collect();
    let rows: Vec<GameRow> = grid
        .par_iter()
        .map(|&(n, name)| {
            let budget = args
                .budget
                .unwrap_or_else(|| 2f64.powf(n as f64 / 6.0).ceil() as u64);
            let num_nodes = (1usize << (n + 2)) - 2;
            let mut wins = 0usize;
            let mut queries = 0u64;
            let mut pass = true;
            for t in 0..trials {
                let seed = trial_seed(base, (n * 10_000 + t) as u64);
                let instance =
                    std::rc::Rc::new(generate_instance(n, seed).expect("instance"));
                let mut oracle = TreeOracle::new(instance);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9a7e);
                let mut walk = RowSampleWalk { steps: 2 };
                let strategy = match name {
                    "uniform-random" => Strategy::UniformRandom,
                    "bfs-from-root" => Strategy::BfsFromRoot,
                    _ => Strategy::QicPipeline(&mut walk),
                };
                let result =
                    play_game(strategy, &mut oracle, budget, seed, &mut rng).expect("game");
                if result.won {
                    wins += 1;
                }
                queries += result.oracle_queries;
                match name {
                    "bfs-from-root" => pass &= result.oracle_queries <= num_nodes as u64,
                    "qic-pipeline" => pass &= result.oracle_queries <= budget + 1,
                    _ => pass &= result.oracle_queries <= budget,
                }
            }
            let win_rate = wins as f64 / trials as f64;
            let bound = if name == "uniform-random" {
                let b = (4.0 * 2f64.powf(-(n as f64) / 6.0)).min(1.0);
                let sigma = (b * (1.0 - b) / trials as f64).sqrt();
                pass &= win_rate <= b + 3.0 * sigma;
                if budget == 0 {
                    pass &= wins == 0;
                }
                Some(b)
            } else {
                None
            };
            GameRow {
                n,
                strategy: name.into(),
                budget,
                trials,
                wins,
                win_rate,
                mean_queries: queries as f64 / trials as f64,
                bound,
                pass,
            }
        })
        .collect();
    finish(
        "game-run",
        ConfigEcho {
            n: range,
            trials,
            seed: base,
            epsilon: None,
            budget: args.budget,
            tolerance: args.tol.unwrap_or(0.0),
            precision: args.precision,
        },
        rows,
        |r| r.pass,
        |r| r.bound.map_or(f64::INFINITY, |b| b - r.win_rate),
        true,
        started,
        started_unix_ms,
        &args.out,
    )
}

// ---------------------------------------------------------------- simon-run

#[derive(Serialize)]
struct SimonRow {
    n: usize,
    mode: String,
    seed: u64,
    decision: String,
    s_hex: Option<String>,
    samples_used: u64,
    f_calls: u64,
    block_probability: f64,
    residual: f64,
    pass: bool,
}

fn cmd_simon_run(args: &CommonArgs) -> Result<bool> {
    let started = std::time::Instant::now();
    let started_unix_ms = now_unix_ms();
    let range = args.range_or(2, 5);
    let trials = args.trials.unwrap_or(50);
    let base = args.base_seed();
    let grid: Vec<(usize, usize)> = range
        .iter()
        .flat_map(|n| (0..trials).map(move |t| (n, t)))
        .collect();
    let rows: Vec<SimonRow> = grid
        .par_iter()
        .map(|&(n, t)| {
            let seed = trial_seed(base, (n * 100_000 + t) as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            use rand::Rng;
            let mode = if t % 2 == 0 {
                SimonMode::TwoToOne(rng.gen_range(1..1u64 << n))
            } else {
                SimonMode::OneToOne
            };
            let oracle = make_oracle(n, mode, seed).expect("oracle");
            let solution = exact_solution(&oracle).expect("solution");
            let residual = solution.residual(&oracle);
            let block_prob = block_probability(&solution, false);
            // geometric cross-check: all blocks are unit vectors
            let tt = solution.t_steps;
            let w = |x: usize| (-2.0 * x as f64 / tt as f64).exp();
            let geo: f64 = (tt..2 * tt).map(w).sum::<f64>() / (0..3 * tt).map(w).sum::<f64>();
            let result = recover_secret(&oracle, |rr| sample_solution(&solution, rr), 4, &mut rng);
            let (decision, correct) = match (mode, result.decision) {
                (SimonMode::OneToOne, Decision::OneToOne) => ("one-to-one", true),
                (SimonMode::TwoToOne(s), Decision::TwoToOne) => {
                    ("two-to-one", result.recovered_s == Some(s))
                }
                (_, Decision::OneToOne) => ("one-to-one", false),
                (_, Decision::TwoToOne) => ("two-to-one", false),
                (_, Decision::Inconclusive) => ("inconclusive", false),
            };
            let pass = correct
                && residual <= 1e-10
                && block_prob >= 0.1
                && (block_prob - geo).abs() <= 1e-10;
            SimonRow {
                n,
                mode: match mode {
                    SimonMode::OneToOne => "one-to-one".into(),
                    SimonMode::TwoToOne(_) => "two-to-one".into(),
                },
                seed,
                decision: decision.into(),
                s_hex: result.recovered_s.map(|s| format!("{s:x}")),
                samples_used: result.samples_used,
                f_calls: result.f_calls,
                block_probability: block_prob,
                residual,
                pass,
            }
        })
        .collect();
    // aggregate: >= 90% per n
    let mut per_n_ok = true;
    for n in range.iter() {
        let slice: Vec<&SimonRow> = rows.iter().filter(|r| r.n == n).collect();
        let correct = slice.iter().filter(|r| r.pass).count();
        per_n_ok &= correct * 10 >= slice.len() * 9;
    }
    finish(
        "simon-run",
        ConfigEcho {
            n: range,
            trials,
            seed: base,
            epsilon: args.epsilon,
            budget: None,
            tolerance: args.tol.unwrap_or(1e-10),
            precision: args.precision,
        },
        rows,
        |_| true, // individual misses are tolerated up to the 90% aggregate
        |r| r.block_probability - 0.1,
        per_n_ok,
        started,
        started_unix_ms,
        &args.out,
    )
}

// ---------------------------------------------------------------- qic-bench

#[derive(Serialize)]
struct BenchRow {
    instance: usize,
    seed: u64,
    k: usize,
    coverage: f64,
    tv_distance: f64,
    acceptance_rate: f64,
    acceptance_floor: f64,
    pass: bool,
}

/// Random square matrix with `nnz` entries per row and a dense random y.
fn random_instance(
    dim: usize,
    nnz: usize,
    rng: &mut ChaCha8Rng,
) -> (MaterializedSqMatrix, MaterializedSqVector) {
    use rand::seq::SliceRandom;
    use rand::Rng;
    let ledger = new_ledger();
    let mut triplets = Vec::new();
    for i in 0..dim {
        let mut cols: Vec<usize> = (0..dim).collect();
        cols.shuffle(rng);
        for &j in cols.iter().take(nnz) {
            triplets.push((i, j, rng.gen_range(0.5..1.5) * if rng.gen() { 1.0 } else { -1.0 }));
        }
    }
    let a = MaterializedSqMatrix::from_triplets(dim, dim, &triplets, ledger.clone())
        .expect("matrix");
    let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y = MaterializedSqVector::new(y, ledger).expect("vector");
    (a, y)
}

/// Brute-force E[Z], Var(Z) of the norm-estimator variable.
fn z_moments(a: &MaterializedSqMatrix, y: &MaterializedSqVector) -> (f64, f64) {
    use qicsep_core::sq_core::{SqMatrix, SqVector};
    let dim = y.len();
    let y_norm_sq = y.norm().powi(2);
    let mut mean = 0.0;
    let mut second = 0.0;
    for j in 0..dim {
        let yj = y.raw_entry(j);
        if yj == 0.0 {
            continue;
        }
        let p = yj * yj / y_norm_sq;
        // Z = ||y||^2 / y_j * (A^T A y)_j
        let mut inner = 0.0;
        for i in 0..dim {
            let a_ij = a.entry(i, j);
            let mut ay_i = 0.0;
            for jj in 0..dim {
                ay_i += a.entry(i, jj) * y.raw_entry(jj);
            }
            inner += a_ij * ay_i;
        }
        let z = y_norm_sq / yj * inner;
        mean += p * z;
        second += p * z * z;
    }
    (mean, second - mean * mean)
}

fn cmd_qic_bench(args: &CommonArgs) -> Result<bool> {
    let started = std::time::Instant::now();
    let started_unix_ms = now_unix_ms();
    let instances = args.trials.unwrap_or(10);
    let epsilon = args.epsilon.unwrap_or(0.1);
    let base = args.base_seed();
    let rows: Vec<BenchRow> = (0..instances)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&idx| {
            use qicsep_core::sq_core::SqMatrix;
            let seed = trial_seed(base, idx as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // coverage on a 10-dim 3-sparse instance
            let (a, y) = random_instance(10, 3, &mut rng);
            let (mean, var) = z_moments(&a, &y);
            // Chebyshev: k = Var / (eps^2 E^2 delta), delta = 1/4
            let k = ((var / (epsilon * epsilon * mean.abs().powi(2) * 0.25)).ceil() as usize)
                .max(1);
            let mut hits = 0usize;
            let coverage_trials = 200;
            for _ in 0..coverage_trials {
                let est = estimate_norm_squared(&a, &y, k, 1, &mut rng).expect("estimate");
                if (est.value - mean).abs() <= epsilon * mean.abs() {
                    hits += 1;
                }
            }
            let coverage = hits as f64 / coverage_trials as f64;
            // rejection sampling on an 8-dim instance
            let (a8, y8) = random_instance(8, 3, &mut rng);
            let dim = 8;
            let mut ay = vec![0.0; dim];
            for i in 0..dim {
                for j in 0..dim {
                    ay[i] += a8.entry(i, j) * y8.raw_entry(j);
                }
            }
            let ay_norm_sq: f64 = ay.iter().map(|v| v * v).sum();
            // smallest valid M, then its matching complexity params
            let mut m_needed = 0f64;
            for i in 0..dim {
                let p_i = proposal_probability(&a8, &y8, i);
                if p_i > 0.0 {
                    m_needed = m_needed.max(ay[i] * ay[i] / ay_norm_sq / p_i);
                }
            }
            let t = 3;
            let gamma = (t as f64 / m_needed).sqrt().min(1.0);
            let params = ComplexityParams::new(gamma, 1.0, 1.0).expect("params");
            let m_bound = rejection_bound(&params, t);
            let draws = 20_000;
            let mut counts = vec![0usize; dim];
            let mut attempts = 0u64;
            let mut accepted = 0u64;
            while accepted < draws {
                let o = exact_sample(&a8, &y8, m_bound, ay_norm_sq, 10_000, &mut rng)
                    .expect("rejection");
                attempts += o.attempts as u64;
                if o.accepted {
                    accepted += 1;
                    counts[o.index] += 1;
                }
            }
            let mut tv = 0.0;
            for i in 0..dim {
                let target = ay[i] * ay[i] / ay_norm_sq;
                tv += (counts[i] as f64 / draws as f64 - target).abs();
            }
            tv /= 2.0;
            let acceptance_rate = draws as f64 / attempts as f64;
            let floor_p = 1.0 / (3.0 * m_bound);
            let sigma = (floor_p * (1.0 - floor_p) / attempts as f64).sqrt();
            let acceptance_floor = floor_p - 3.0 * sigma;
            let pass = coverage >= 0.70 && tv <= 0.02 && acceptance_rate >= acceptance_floor;
            BenchRow {
                instance: idx,
                seed,
                k,
                coverage,
                tv_distance: tv,
                acceptance_rate,
                acceptance_floor,
                pass,
            }
        })
        .collect();
    finish(
        "qic-bench",
        ConfigEcho {
            n: args.range_or(10, 10),
            trials: instances,
            seed: base,
            epsilon: Some(epsilon),
            budget: None,
            tolerance: args.tol.unwrap_or(0.02),
            precision: args.precision,
        },
        rows,
        |r| r.pass,
        |r| 0.02 - r.tv_distance,
        true,
        started,
        started_unix_ms,
        &args.out,
    )
}

// -------------------------------------------------------------- cycle-check

#[derive(Serialize)]
struct CycleRow {
    check: String,
    n: usize,
    seed: u64,
    pass: bool,
    worst_slack: f64,
    tolerance: f64,
}

fn cmd_cycle_check(args: &CommonArgs) -> Result<bool> {
    let started = std::time::Instant::now();
    let started_unix_ms = now_unix_ms();
    let range = args.range_or(3, 15);
    let tol = args.tol.unwrap_or(1e-10);
    let base = args.base_seed();
    let rows: Vec<CycleRow> = range
        .iter()
        .filter(|n| n % 2 == 1)
        .map(|n| {
            let r = odd_cycle_checks(n, tol).expect("cycle check");
            CycleRow {
                check: r.check,
                n: r.n,
                seed: base,
                pass: r.pass,
                worst_slack: r.worst_slack,
                tolerance: r.tolerance,
            }
        })
        .collect();
    if rows.is_empty() {
        bail!("no odd n in {}..{}", range.lo, range.hi);
    }
    finish(
        "cycle-check",
        ConfigEcho {
            n: range,
            trials: 1,
            seed: base,
            epsilon: None,
            budget: None,
            tolerance: tol,
            precision: args.precision,
        },
        rows,
        |r| r.pass,
        |r| r.worst_slack,
        true,
        started,
        started_unix_ms,
        &args.out,
    )
}

// ----------------------------------------------------------------- dispatch

fn common(cmd: &Command) -> &CommonArgs {
    match cmd {
        Command::GapCheck(a)
        | Command::SolutionMass(a)
        | Command::GameRun(a)
        | Command::SimonRun(a)
        | Command::QicBench(a)
        | Command::CycleCheck(a) => a,
    }
}

fn main() {
    let cli = Cli::parse();
    let args = common(&cli.command);
    if let Some(jobs) = args.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let result = match &cli.command {
        Command::GapCheck(a) => cmd_gap_check(a),
        Command::SolutionMass(a) => cmd_solution_mass(a),
        Command::GameRun(a) => cmd_game_run(a),
        Command::SimonRun(a) => cmd_simon_run(a),
        Command::QicBench(a) => cmd_qic_bench(a),
        Command::CycleCheck(a) => cmd_cycle_check(a),
    };
    match result {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e:#}");
            std::process::exit(2);
        }
    }
}
