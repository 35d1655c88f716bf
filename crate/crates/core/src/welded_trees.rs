//! The welded-trees hard instance: two perfect binary trees of height n
//! joined at the leaves by a random alternating cycle, the label oracle
//! with its win latch, the implicit matrix M with oracle-backed SQ
//! simulation, the closed-form layered solver for Bx = e1, and the
//! oracle query game.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::sq_core::{new_ledger, LedgerHandle, SqError};

/// Number of levels is 2n+2; level i holds 2^{min(i-1, 2n+2-i)} nodes.
pub fn level_size(n: usize, level: usize) -> usize {
    debug_assert!((1..=2 * n + 2).contains(&level));
    1usize << (level - 1).min(2 * n + 2 - level)
}

/// Bit width of node labels: 2n, widened only when 2^{2n} cannot hold
/// the N = 2^{n+2}-2 distinct labels (n = 1 needs 3 bits).
pub fn label_width(n: usize) -> usize {
    let num_nodes = (1usize << (n + 2)) - 2;
    let min_bits = usize::BITS as usize - num_nodes.leading_zeros() as usize;
    (2 * n).max(min_bits)
}

#[derive(Debug, Clone)]
pub struct WeldedTreesInstance {
    pub n: usize,
    pub seed: u64,
    pub num_nodes: usize,
    /// Node-id to label; node 0 is the root of T1 with the all-zero label.
    pub labels: Vec<u64>,
    pub adjacency: Vec<Vec<usize>>,
    pub root_t1: usize,
    pub root_t2: usize,
    pub level: Vec<usize>,
    label_to_node: HashMap<u64, usize>,
}

impl WeldedTreesInstance {
    pub fn root_t2_label(&self) -> u64 {
        self.labels[self.root_t2]
    }

    pub fn node_of_label(&self, label: u64) -> Option<usize> {
        self.label_to_node.get(&label).copied()
    }

    pub fn label_width(&self) -> usize {
        label_width(self.n)
    }

    fn hex_digits(&self) -> usize {
        self.label_width().div_ceil(4)
    }

    pub fn label_hex(&self, label: u64) -> String {
        format!("{:0width$x}", label, width = self.hex_digits())
    }

    pub fn to_json(&self) -> InstanceJson {
        let mut edges = Vec::new();
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            for &v in nbrs {
                if u < v {
                    edges.push([u, v]);
                }
            }
        }
        edges.sort_unstable();
        InstanceJson {
            n: self.n,
            seed: self.seed,
            labels: self.labels.iter().map(|&l| self.label_hex(l)).collect(),
            edges,
            root_t2_label: self.label_hex(self.root_t2_label()),
        }
    }
}

/// Serialized instance; deterministic given (n, seed).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceJson {
    pub n: usize,
    pub seed: u64,
    pub labels: Vec<String>,
    pub edges: Vec<[usize; 2]>,
    pub root_t2_label: String,
}

/// Builds G_n with a uniformly random alternating leaf cycle and
/// uniformly random distinct labels (root of T1 forced to all-zero).
pub fn generate_instance(n: usize, seed: u64) -> Result<WeldedTreesInstance, SqError> {
    if n == 0 {
        return Err(SqError::InvalidInput("tree height n must be >= 1".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let tree_nodes = (1usize << (n + 1)) - 1;
    let num_nodes = 2 * tree_nodes;
    let root_t1 = 0usize;
    let root_t2 = tree_nodes;
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
    // tree edges; local heap layout inside each tree
    for base in [0, tree_nodes] {
        for local in 0..(tree_nodes - (1 << n)) {
            for child in [2 * local + 1, 2 * local + 2] {
                adjacency[base + local].push(base + child);
                adjacency[base + child].push(base + local);
            }
        }
    }
    // alternating cycle through the leaves: random orders on both leaf
    // sets, then l1[k]-l2[k] and l2[k]-l1[k+1]
    let leaves = 1usize << n;
    let t1_leaf = |k: usize| (tree_nodes - leaves) + k;
    let t2_leaf = |k: usize| tree_nodes + (tree_nodes - leaves) + k;
    let mut order1: Vec<usize> = (0..leaves).collect();
    let mut order2: Vec<usize> = (0..leaves).collect();
    order1.shuffle(&mut rng);
    order2.shuffle(&mut rng);
    for k in 0..leaves {
        let a = t1_leaf(order1[k]);
        let b = t2_leaf(order2[k]);
        let c = t1_leaf(order1[(k + 1) % leaves]);
        adjacency[a].push(b);
        adjacency[b].push(a);
        adjacency[b].push(c);
        adjacency[c].push(b);
    }
    // levels: depth within each tree
    let mut level = vec![0usize; num_nodes];
    for local in 0..tree_nodes {
        let depth = (usize::BITS - 1 - (local + 1).leading_zeros()) as usize;
        level[local] = depth + 1;
        level[tree_nodes + local] = 2 * n + 2 - depth;
    }
    // distinct labels; root of T1 all-zero
    let width = label_width(n);
    let space = 1u64 << width;
    let mut used: std::collections::HashSet<u64> = std::collections::HashSet::new();
    used.insert(0);
    let mut labels = vec![0u64; num_nodes];
    for label in labels.iter_mut().skip(1) {
        loop {
            let cand = rng.gen_range(1..space);
            if used.insert(cand) {
                *label = cand;
                break;
            }
        }
    }
    let label_to_node = labels.iter().enumerate().map(|(v, &l)| (l, v)).collect();
    Ok(WeldedTreesInstance {
        n,
        seed,
        num_nodes,
        labels,
        adjacency,
        root_t1,
        root_t2,
        level,
        label_to_node,
    })
}

/// Response to a label query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleResponse {
    Invalid,
    Neighbors(Vec<u64>),
}

/// The neighborhood oracle; every query is ledgered and the win latch
/// is set iff some query equaled the root-of-T2 label.
pub struct TreeOracle {
    instance: std::rc::Rc<WeldedTreesInstance>,
    ledger: LedgerHandle,
    won: bool,
}

impl TreeOracle {
    pub fn new(instance: std::rc::Rc<WeldedTreesInstance>) -> Self {
        Self {
            instance,
            ledger: new_ledger(),
            won: false,
        }
    }

    pub fn instance(&self) -> &WeldedTreesInstance {
        &self.instance
    }

    pub fn ledger(&self) -> &LedgerHandle {
        &self.ledger
    }

    pub fn oracle_calls(&self) -> u64 {
        self.ledger.borrow().oracle_calls
    }

    pub fn won(&self) -> bool {
        self.won
    }

    pub fn query(&mut self, label: u64) -> Result<OracleResponse, SqError> {
        let width = self.instance.label_width();
        if width < 64 && label >> width != 0 {
            return Err(SqError::InvalidInput(format!(
                "label {label:#x} exceeds {width} bits"
            )));
        }
        self.ledger.borrow_mut().oracle_calls += 1;
        if label == self.instance.root_t2_label() {
            self.won = true;
        }
        match self.instance.node_of_label(label) {
            None => Ok(OracleResponse::Invalid),
            Some(v) => Ok(OracleResponse::Neighbors(
                self.instance.adjacency[v]
                    .iter()
                    .map(|&u| self.instance.labels[u])
                    .collect(),
            )),
        }
    }
}

/// Parameters of the implicit matrix M built on the label space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardMatrixParams {
    pub n: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Side length of M: the full label space 2^width.
    pub dim: u64,
    pub off_block_diag: f64,
}

impl HardMatrixParams {
    pub fn new(n: usize) -> Result<Self, SqError> {
        if n == 0 {
            return Err(SqError::InvalidInput("n must be >= 1".into()));
        }
        if label_width(n) >= 64 {
            return Err(SqError::InvalidInput(format!(
                "label space 2^{} exceeds u64 at n = {n}",
                label_width(n)
            )));
        }
        let gamma = 1.0 / (16.0 * (n as f64 + 2.0)).powi(2);
        let lambda = 8f64.sqrt() + gamma;
        let delta = (lambda * lambda - 8.0).sqrt();
        assert!((delta * delta - (lambda * lambda - 8.0)).abs() <= 1e-14);
        assert!(gamma <= 1.0 / 64.0);
        // Claim precondition n+2 <= gamma^{-1/2}/16, equality by construction
        assert!((n as f64 + 2.0) <= gamma.powf(-0.5) / 16.0 + 1e-9);
        Ok(Self {
            n,
            lambda,
            gamma,
            delta,
            dim: 1u64 << label_width(n),
            off_block_diag: (lambda * lambda + 3.0).sqrt(),
        })
    }

    /// Exact Frobenius norm of M: dim * (lambda^2 + 3) - 2, since the
    /// two roots are each short one neighbor.
    pub fn frobenius_norm(&self) -> f64 {
        (self.dim as f64 * (self.lambda * self.lambda + 3.0) - 2.0).sqrt()
    }
}

/// Entry M_{i,j}; exactly one oracle call.
pub fn simulate_sq_entry(
    oracle: &mut TreeOracle,
    params: &HardMatrixParams,
    i: u64,
    j: u64,
) -> Result<f64, SqError> {
    match oracle.query(i)? {
        OracleResponse::Invalid => Ok(if i == j { params.off_block_diag } else { 0.0 }),
        OracleResponse::Neighbors(nbrs) => {
            if i == j {
                Ok(params.lambda)
            } else if nbrs.contains(&j) {
                Ok(-1.0)
            } else {
                Ok(0.0)
            }
        }
    }
}

/// Length-squared sample from row i of M; exactly one oracle call.
pub fn simulate_sq_row_sample(
    oracle: &mut TreeOracle,
    params: &HardMatrixParams,
    i: u64,
    rng: &mut dyn RngCore,
) -> Result<u64, SqError> {
    match oracle.query(i)? {
        OracleResponse::Invalid => Ok(i),
        OracleResponse::Neighbors(nbrs) => {
            let lam_sq = params.lambda * params.lambda;
            let total = lam_sq + nbrs.len() as f64;
            let u: f64 = rng.gen_range(0.0..total);
            if u < lam_sq {
                Ok(i)
            } else {
                Ok(nbrs[((u - lam_sq) as usize).min(nbrs.len() - 1)])
            }
        }
    }
}

/// Row norm ||M_{i,*}||; one oracle call to learn the degree.
pub fn simulate_sq_row_norm(
    oracle: &mut TreeOracle,
    params: &HardMatrixParams,
    i: u64,
) -> Result<f64, SqError> {
    let lam_sq = params.lambda * params.lambda;
    match oracle.query(i)? {
        OracleResponse::Invalid => Ok(params.off_block_diag),
        OracleResponse::Neighbors(nbrs) => Ok((lam_sq + nbrs.len() as f64).sqrt()),
    }
}

/// Sample from the row-norm (or column-norm) vector of M: uniform over
/// the label space, zero oracle calls. Exact only conditioned on not
/// hitting a root; the two root rows have squared norm lambda^2 + 2.
pub fn simulate_sq_rowcol_norm_sample(params: &HardMatrixParams, rng: &mut dyn RngCore) -> u64 {
    rng.gen_range(0..params.dim)
}

/// Closed-form layered solution of Bx = e1.
#[derive(Debug, Clone)]
pub struct LayeredSolution {
    /// phi[i-1] is the common value on level i, for i in 1..=2n+2.
    pub phi: Vec<f64>,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub params: HardMatrixParams,
}

fn r_minus(p: &HardMatrixParams) -> f64 {
    (p.lambda - p.delta) / 4.0
}

fn r_plus(p: &HardMatrixParams) -> f64 {
    (p.lambda + p.delta) / 4.0
}

/// The T1 homogeneous basis value ((lambda-Delta)/4)^i (1 - q^i).
fn f_basis(p: &HardMatrixParams, i: i32) -> f64 {
    let q = (p.lambda + p.delta) / (p.lambda - p.delta);
    r_minus(p).powi(i) * (1.0 - q.powi(i))
}

/// Solves the 2x2 leaf-matching system for alpha, alpha' and assembles
/// phi_1..phi_{2n+2} from the two closed forms.
pub fn layered_solve(params: &HardMatrixParams) -> Result<LayeredSolution, SqError> {
    let n = params.n as i32;
    // alpha f(n+j) - alpha' f(n+3-j) = -g(n+j) for j = 1, 2
    let a11 = f_basis(params, n + 1);
    let a12 = -f_basis(params, n + 2);
    let a21 = f_basis(params, n + 2);
    let a22 = -f_basis(params, n + 1);
    let b1 = -r_plus(params).powi(n + 1);
    let b2 = -r_plus(params).powi(n + 2);
    let det = a11 * a22 - a12 * a21;
    if det.abs() <= 1e-300 {
        return Err(SqError::InvalidInput(
            "leaf-matching system numerically singular".into(),
        ));
    }
    let alpha = (b1 * a22 - a12 * b2) / det;
    let alpha_prime = (a11 * b2 - b1 * a21) / det;
    let levels = 2 * params.n + 2;
    let mut phi = vec![0.0; levels];
    for i in 1..=(params.n + 2) {
        phi[i - 1] = alpha * f_basis(params, i as i32) + r_plus(params).powi(i as i32);
        phi[levels - i] = alpha_prime * f_basis(params, i as i32);
    }
    let sol = LayeredSolution {
        phi,
        alpha,
        alpha_prime,
        params: *params,
    };
    sol.check_invariants()?;
    Ok(sol)
}

impl LayeredSolution {
    /// Initial conditions, the interior recurrence on both segments and
    /// the beta = -alpha + 1 identity, all to 1e-10 relative.
    fn check_invariants(&self) -> Result<(), SqError> {
        let p = &self.params;
        let phi = &self.phi;
        let levels = phi.len();
        let scale = phi.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let ok = |resid: f64, target: f64| (resid - target).abs() <= 1e-10 * scale;
        if !ok(p.lambda * phi[0] - 2.0 * phi[1], 1.0) {
            return Err(SqError::InvalidInput("T1 initial condition violated".into()));
        }
        if !ok(p.lambda * phi[levels - 1] - 2.0 * phi[levels - 2], 0.0) {
            return Err(SqError::InvalidInput("T2 initial condition violated".into()));
        }
        // T1 rows: parent one level up, two children one level down
        for l in 2..=(p.n + 1) {
            let resid = p.lambda * phi[l - 1] - phi[l - 2] - 2.0 * phi[l];
            if !ok(resid, 0.0) {
                return Err(SqError::InvalidInput(format!(
                    "T1 recurrence violated at level {l}"
                )));
            }
        }
        // T2 rows, orientation reversed toward the T2 root
        for l in (p.n + 2)..=(2 * p.n + 1) {
            let resid = p.lambda * phi[l - 1] - phi[l] - 2.0 * phi[l - 2];
            if !ok(resid, 0.0) {
                return Err(SqError::InvalidInput(format!(
                    "T2 recurrence violated at level {l}"
                )));
            }
        }
        // beta recovered from phi_1 = alpha r_- + beta r_+
        let beta = (phi[0] - self.alpha * r_minus(p)) / r_plus(p);
        if (beta - (1.0 - self.alpha)).abs() > 1e-10 * (1.0 + self.alpha.abs()) {
            return Err(SqError::InvalidInput("beta != -alpha + 1".into()));
        }
        Ok(())
    }

    /// ||x||^2 over the graph from the level multiplicities.
    pub fn norm_squared(&self) -> f64 {
        let n = self.params.n;
        (1..=2 * n + 2)
            .map(|i| level_size(n, i) as f64 * self.phi[i - 1] * self.phi[i - 1])
            .sum()
    }

    pub fn phi_root_t2(&self) -> f64 {
        self.phi[self.phi.len() - 1]
    }
}

/// x_v = phi_{level(v)} over the instance's nodes.
pub fn expand_solution(instance: &WeldedTreesInstance, solution: &LayeredSolution) -> Vec<f64> {
    assert_eq!(instance.n, solution.params.n);
    instance
        .level
        .iter()
        .map(|&l| solution.phi[l - 1])
        .collect()
}

/// x_{i*}^2 / ||x||^2 for the layered solution.
pub fn mass_ratio(solution: &LayeredSolution) -> f64 {
    let root = solution.phi_root_t2();
    root * root / solution.norm_squared()
}

/// Dense B = lambda I - A on the instance's nodes, for oracle checks.
pub fn dense_b(instance: &WeldedTreesInstance, params: &HardMatrixParams) -> ndarray::Array2<f64> {
    let n = instance.num_nodes;
    let mut b = ndarray::Array2::<f64>::zeros((n, n));
    for i in 0..n {
        b[[i, i]] = params.lambda;
        for &j in &instance.adjacency[i] {
            b[[i, j]] = -1.0;
        }
    }
    b
}

/// Dense spectrum of B, with the off-block singular values handled
/// analytically (all equal sqrt(lambda^2 + 3)).
pub fn condition_number_check(
    instance: &WeldedTreesInstance,
    params: &HardMatrixParams,
) -> (f64, f64, f64) {
    let b = dense_b(instance, params);
    let evals = linalg::symmetric_eigenvalues(&b);
    let mut sigma_max = params.off_block_diag;
    let mut sigma_min = params.off_block_diag;
    for &e in &evals {
        sigma_max = sigma_max.max(e.abs());
        sigma_min = sigma_min.min(e.abs());
    }
    (sigma_max, sigma_min, sigma_max / sigma_min)
}

/// A strategy for querying candidate labels inside the oracle game.
pub trait PipelineSampler {
    /// Draws one candidate label, spending exactly `cost_per_draw`
    /// oracle calls.
    fn draw(
        &mut self,
        oracle: &mut TreeOracle,
        params: &HardMatrixParams,
        rng: &mut dyn RngCore,
    ) -> Result<u64, SqError>;

    fn cost_per_draw(&self) -> u64;
}

/// Random walk over M's row supports: uniform (free) start, then a
/// fixed number of length-squared row samples at one oracle call each.
pub struct RowSampleWalk {
    pub steps: u64,
}

impl PipelineSampler for RowSampleWalk {
    fn draw(
        &mut self,
        oracle: &mut TreeOracle,
        params: &HardMatrixParams,
        rng: &mut dyn RngCore,
    ) -> Result<u64, SqError> {
        let mut at = simulate_sq_rowcol_norm_sample(params, rng);
        for _ in 0..self.steps {
            at = simulate_sq_row_sample(oracle, params, at, rng)?;
        }
        Ok(at)
    }

    fn cost_per_draw(&self) -> u64 {
        self.steps
    }
}

pub enum Strategy<'a> {
    UniformRandom,
    BfsFromRoot,
    QicPipeline(&'a mut dyn PipelineSampler),
}

impl Strategy<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::UniformRandom => "uniform-random",
            Strategy::BfsFromRoot => "bfs-from-root",
            Strategy::QicPipeline(_) => "qic-pipeline",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameResult {
    pub won: bool,
    pub oracle_queries: u64,
    pub strategy: String,
    pub seed: u64,
}

/// Plays the root-finding game within the query budget. The
/// qic-pipeline strategy may spend one extra query on its final
/// output candidate.
pub fn play_game(
    strategy: Strategy,
    oracle: &mut TreeOracle,
    budget: u64,
    seed: u64,
    rng: &mut dyn RngCore,
) -> Result<GameResult, SqError> {
    let name = strategy.name().to_string();
    let params = HardMatrixParams::new(oracle.instance().n)?;
    match strategy {
        Strategy::UniformRandom => {
            for _ in 0..budget {
                if oracle.won() {
                    break;
                }
                let label = rng.gen_range(0..params.dim);
                oracle.query(label)?;
            }
        }
        Strategy::BfsFromRoot => {
            let mut frontier = std::collections::VecDeque::from([0u64]);
            let mut seen = std::collections::HashSet::from([0u64]);
            while let Some(label) = frontier.pop_front() {
                if oracle.won() || oracle.oracle_calls() >= budget {
                    break;
                }
                if let OracleResponse::Neighbors(nbrs) = oracle.query(label)? {
                    for nb in nbrs {
                        if seen.insert(nb) {
                            frontier.push_back(nb);
                        }
                    }
                }
            }
        }
        Strategy::QicPipeline(sampler) => {
            let cost = sampler.cost_per_draw();
            let mut candidate = None;
            while oracle.oracle_calls() + cost <= budget && !oracle.won() {
                candidate = Some(sampler.draw(oracle, &params, rng)?);
            }
            // the one extra output query of Observation-2 accounting
            if let Some(c) = candidate {
                if !oracle.won() {
                    oracle.query(c)?;
                }
            }
        }
    }
    Ok(GameResult {
        won: oracle.won(),
        oracle_queries: oracle.oracle_calls(),
        strategy: name,
        seed,
    })
}
