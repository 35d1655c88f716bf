//! Numerical verification of the spectral machinery: the adjacency
//! eigenvalue gap, layered-eigenvector projection, second-degree
//! recurrence closed forms, the two approximation claims, the phi-ratio
//! sandwiches, the draft gap-equation scan and the odd-cycle facts.

use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::sq_core::SqError;
use crate::welded_trees::{LayeredSolution, WeldedTreesInstance};

/// Floating-point width for the claim checks. Extended runs the same
/// inequalities in double-double arithmetic (roughly 31 digits).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    Double,
    Extended,
}

/// One verification outcome; worst_slack is the smallest margin by
/// which any inequality in the check held (negative means violated).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub n: usize,
    pub seed: u64,
    pub pass: bool,
    pub worst_slack: f64,
    pub tolerance: f64,
}

impl CheckReport {
    fn from_slack(check: &str, n: usize, seed: u64, worst_slack: f64, tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            n,
            seed,
            pass: worst_slack >= -tolerance,
            worst_slack,
            tolerance,
        }
    }
}

/// Tracks the minimum slack across a sequence of inequality checks.
#[derive(Debug, Clone, Copy)]
struct SlackTracker(f64);

impl SlackTracker {
    fn new() -> Self {
        Self(f64::INFINITY)
    }

    /// Records the constraint value >= 0 with slack `value`.
    fn le(&mut self, lhs: f64, rhs: f64) {
        self.0 = self.0.min(rhs - lhs);
    }

    fn lt(&mut self, lhs: f64, rhs: f64) {
        self.le(lhs, rhs);
    }

    fn worst(&self) -> f64 {
        self.0
    }
}

/// Eigenvalue-gap verdict for the adjacency matrix of G_n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenReport {
    pub n: usize,
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    pub lambda1: f64,
    pub gap_violations: Vec<f64>,
    pub tol: f64,
}

/// Dense adjacency matrix of the instance graph.
pub fn adjacency_matrix(instance: &WeldedTreesInstance) -> ndarray::Array2<f64> {
    let n = instance.num_nodes;
    let mut a = ndarray::Array2::<f64>::zeros((n, n));
    for (i, nbrs) in instance.adjacency.iter().enumerate() {
        for &j in nbrs {
            a[[i, j]] = 1.0;
        }
    }
    a
}

/// Checks that A has no eigenvalues in (sqrt(8) + tol, 3 - 2^-n], that
/// lambda_1 >= 3 - 2/N, and that the spectrum lies in [-3, 3].
pub fn eigen_gap_check(instance: &WeldedTreesInstance, tol: f64) -> EigenReport {
    let n = instance.n;
    let mut eigenvalues = linalg::symmetric_eigenvalues(&adjacency_matrix(instance));
    eigenvalues.reverse();
    let lambda1 = eigenvalues[0];
    let lo = 8f64.sqrt() + tol;
    let hi = 3.0 - 2f64.powi(-(n as i32));
    let gap_violations = eigenvalues
        .iter()
        .copied()
        .filter(|&e| e > lo && e <= hi)
        .collect();
    EigenReport {
        n,
        eigenvalues,
        lambda1,
        gap_violations,
        tol,
    }
}

impl EigenReport {
    pub fn passes(&self, num_nodes: usize) -> bool {
        self.gap_violations.is_empty()
            && self.lambda1 >= 3.0 - 2.0 / num_nodes as f64
            && self
                .eigenvalues
                .iter()
                .all(|&e| (-3.0 - 1e-9..=3.0 + 1e-9).contains(&e))
    }
}

/// Averages v over each level: w_j = |S_i|^-1 sum_{k in S_i} v_k.
pub fn layer_project(v: &[f64], instance: &WeldedTreesInstance) -> Vec<f64> {
    let levels = 2 * instance.n + 2;
    let mut sums = vec![0.0; levels];
    let mut counts = vec![0usize; levels];
    for (k, &l) in instance.level.iter().enumerate() {
        sums[l - 1] += v[k];
        counts[l - 1] += 1;
    }
    instance
        .level
        .iter()
        .map(|&l| sums[l - 1] / counts[l - 1] as f64)
        .collect()
}

/// Closed form of a phi_{i+2} + b phi_{i+1} + c phi_i = 0 fitted to
/// phi_1, phi_2.
#[derive(Debug, Clone, Copy)]
pub struct RecurrenceSolution {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r_plus: f64,
    pub r_minus: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn recurrence_closed_form(
    a: f64,
    b: f64,
    c: f64,
    phi1: f64,
    phi2: f64,
) -> Result<RecurrenceSolution, SqError> {
    if a == 0.0 {
        return Err(SqError::InvalidInput("leading coefficient is zero".into()));
    }
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return Err(SqError::InvalidInput(
            "b^2 <= 4ac: complex roots out of scope".into(),
        ));
    }
    let r_plus = (-b + disc.sqrt()) / (2.0 * a);
    let r_minus = (-b - disc.sqrt()) / (2.0 * a);
    // fit alpha r^1 + beta s^1 = phi1, alpha r^2 + beta s^2 = phi2
    let det = r_plus * r_minus * r_minus - r_minus * r_plus * r_plus;
    if det == 0.0 {
        return Err(SqError::InvalidInput("degenerate characteristic roots".into()));
    }
    let alpha = (phi1 * r_minus * r_minus - r_minus * phi2) / det;
    let beta = (r_plus * phi2 - phi1 * r_plus * r_plus) / det;
    Ok(RecurrenceSolution {
        a,
        b,
        c,
        r_plus,
        r_minus,
        alpha,
        beta,
    })
}

impl RecurrenceSolution {
    pub fn eval(&self, i: i32) -> f64 {
        self.alpha * self.r_plus.powi(i) + self.beta * self.r_minus.powi(i)
    }
}

/// Double-double arithmetic (Dekker/Knuth), enough for the claim
/// inequalities: exact-error sums and FMA-based products.
mod dd {
    #[derive(Debug, Clone, Copy)]
    pub struct Dd {
        pub hi: f64,
        pub lo: f64,
    }

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        (s, b - (s - a))
    }

    fn two_prod(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    impl Dd {
        pub fn from(x: f64) -> Self {
            Self { hi: x, lo: 0.0 }
        }

        pub fn to_f64(self) -> f64 {
            self.hi + self.lo
        }

        pub fn add(self, o: Dd) -> Dd {
            let (s, e) = two_sum(self.hi, o.hi);
            let e = e + self.lo + o.lo;
            let (hi, lo) = quick_two_sum(s, e);
            Dd { hi, lo }
        }

        pub fn sub(self, o: Dd) -> Dd {
            self.add(Dd {
                hi: -o.hi,
                lo: -o.lo,
            })
        }

        pub fn mul(self, o: Dd) -> Dd {
            let (p, e) = two_prod(self.hi, o.hi);
            let e = e + self.hi * o.lo + self.lo * o.hi;
            let (hi, lo) = quick_two_sum(p, e);
            Dd { hi, lo }
        }

        pub fn div(self, o: Dd) -> Dd {
            let q1 = self.hi / o.hi;
            let r = self.sub(o.mul(Dd::from(q1)));
            let q2 = r.hi / o.hi;
            let r = r.sub(o.mul(Dd::from(q2)));
            let q3 = r.hi / o.hi;
            let (hi, lo) = quick_two_sum(q1, q2);
            Dd { hi, lo }.add(Dd::from(q3))
        }

        pub fn sqrt(self) -> Dd {
            // one Newton step on the double estimate doubles precision
            let x = self.hi.sqrt();
            let est = Dd::from(x);
            let r = self.sub(est.mul(est));
            est.add(Dd::from(r.hi / (2.0 * x)))
        }

        pub fn powi(self, mut e: u32) -> Dd {
            let mut base = self;
            let mut acc = Dd::from(1.0);
            while e > 0 {
                if e & 1 == 1 {
                    acc = acc.mul(base);
                }
                base = base.mul(base);
                e >>= 1;
            }
            acc
        }
    }
}

/// The derived quantities of Claim 1, in the requested precision.
struct ClaimQuantities {
    lambda: f64,
    delta: f64,
    /// q^i = ((lambda+delta)/(lambda-delta))^i for i = 0..=n+2
    q_pow: Vec<f64>,
    /// q^{-i}
    q_inv_pow: Vec<f64>,
}

fn claim_quantities(n: usize, gamma: f64, precision: Precision) -> ClaimQuantities {
    let top = n + 2;
    match precision {
        Precision::Double => {
            let lambda = 8f64.sqrt() + gamma;
            let delta = (lambda * lambda - 8.0).sqrt();
            let q = (lambda + delta) / (lambda - delta);
            let q_pow = (0..=top as i32).map(|i| q.powi(i)).collect();
            let q_inv_pow = (0..=top as i32).map(|i| q.powi(-i)).collect();
            ClaimQuantities {
                lambda,
                delta,
                q_pow,
                q_inv_pow,
            }
        }
        Precision::Extended => {
            use dd::Dd;
            let lambda = Dd::from(8.0).sqrt().add(Dd::from(gamma));
            let delta = lambda.mul(lambda).sub(Dd::from(8.0)).sqrt();
            let q = lambda.add(delta).div(lambda.sub(delta));
            let one = Dd::from(1.0);
            let q_pow = (0..=top as u32).map(|i| q.powi(i).to_f64()).collect();
            let q_inv_pow = (0..=top as u32)
                .map(|i| one.div(q.powi(i)).to_f64())
                .collect();
            ClaimQuantities {
                lambda: lambda.to_f64(),
                delta: delta.to_f64(),
                q_pow,
                q_inv_pow,
            }
        }
    }
}

/// Claim 1: sqrt(gamma) <= Delta <= 4 sqrt(gamma) and items 1-4, for
/// all i <= n+2. Pass iff worst slack >= -tolerance.
pub fn claim_approx_check(
    n: usize,
    gamma: f64,
    precision: Precision,
    tolerance: f64,
) -> Result<CheckReport, SqError> {
    if !(gamma > 0.0 && gamma <= 1.0 / 64.0) {
        return Err(SqError::InvalidInput(format!("gamma {gamma} out of range")));
    }
    if (n as f64 + 2.0) > gamma.powf(-0.5) / 16.0 + 1e-9 {
        return Err(SqError::InvalidInput(format!(
            "n + 2 exceeds gamma^-1/2 / 16 at n = {n}"
        )));
    }
    let q = claim_quantities(n, gamma, precision);
    let (lambda, delta) = (q.lambda, q.delta);
    let mut s = SlackTracker::new();
    s.le(gamma.sqrt(), delta);
    s.le(delta, 4.0 * gamma.sqrt());
    // item 1
    s.lt(0.0, 2.0 * delta / (lambda + delta));
    s.lt(2.0 * delta / (lambda + delta), 2.0 * delta / (lambda - delta));
    s.lt(
        2.0 * delta / (lambda - delta),
        1.0 / (2.0 * (n as f64 + 2.0)),
    );
    for i in 1..=(n + 2) {
        let fi = i as f64;
        // item 2
        s.le(1.0 + fi * delta / (lambda - delta), q.q_pow[i]);
        s.le(q.q_pow[i], 1.0 + 4.0 * fi * delta / (lambda - delta));
        // item 3
        s.le(1.0 - 4.0 * fi * delta / (lambda + delta), q.q_inv_pow[i]);
        s.le(q.q_inv_pow[i], 1.0 - fi * delta / (lambda + delta));
    }
    // item 4
    let ratio = (1.0 - q.q_pow[n + 2]) / (1.0 - q.q_pow[n + 1]);
    s.le(1.0 + 1.0 / (2.0 * (n as f64 + 1.0)), ratio);
    s.le(ratio, 1.0 + 4.0 / (n as f64 + 1.0));
    Ok(CheckReport::from_slack(
        "claim-approx",
        n,
        0,
        s.worst(),
        tolerance,
    ))
}

/// Alpha of the leaf-matching 2x2 solve in plain double precision,
/// directly from (n, gamma); no instance geometry needed.
fn alpha_closed_form(n: usize, gamma: f64) -> f64 {
    let lambda = 8f64.sqrt() + gamma;
    let delta = (lambda * lambda - 8.0).sqrt();
    let rm = (lambda - delta) / 4.0;
    let rp = (lambda + delta) / 4.0;
    let q = (lambda + delta) / (lambda - delta);
    let f = |i: i32| rm.powi(i) * (1.0 - q.powi(i));
    let m = n as i32;
    let a11 = f(m + 1);
    let a12 = -f(m + 2);
    let a21 = f(m + 2);
    let a22 = -f(m + 1);
    let b1 = -rp.powi(m + 1);
    let b2 = -rp.powi(m + 2);
    let det = a11 * a22 - a12 * a21;
    (b1 * a22 - a12 * b2) / det
}

/// Alpha of the leaf-matching solve recomputed in double-double, for
/// the extended-precision path of the Claim 2 check.
fn alpha_extended_for(n: usize, gamma: f64) -> f64 {
    use dd::Dd;
    let n = n as u32;
    let lambda = Dd::from(8.0).sqrt().add(Dd::from(gamma));
    let delta = lambda.mul(lambda).sub(Dd::from(8.0)).sqrt();
    let four = Dd::from(4.0);
    let rm = lambda.sub(delta).div(four);
    let rp = lambda.add(delta).div(four);
    let q = lambda.add(delta).div(lambda.sub(delta));
    let one = Dd::from(1.0);
    let f = |i: u32| rm.powi(i).mul(one.sub(q.powi(i)));
    let a11 = f(n + 1);
    let a12 = f(n + 2).mul(Dd::from(-1.0));
    let a21 = f(n + 2);
    let a22 = f(n + 1).mul(Dd::from(-1.0));
    let b1 = rp.powi(n + 1).mul(Dd::from(-1.0));
    let b2 = rp.powi(n + 2).mul(Dd::from(-1.0));
    let det = a11.mul(a22).sub(a12.mul(a21));
    b1.mul(a22).sub(a12.mul(b2)).div(det).to_f64()
}

/// Claim 2: -1 - 2/(n+1) <= alpha (((lambda-Delta)/(lambda+Delta))^{n+1} - 1)
/// <= -1 - 1/(4(n+1)).
pub fn claim_alpha_check(
    solution: &LayeredSolution,
    precision: Precision,
    tolerance: f64,
) -> CheckReport {
    let p = &solution.params;
    let n = p.n;
    let (alpha, factor) = match precision {
        Precision::Double => {
            let r = (p.lambda - p.delta) / (p.lambda + p.delta);
            (solution.alpha, r.powi(n as i32 + 1) - 1.0)
        }
        Precision::Extended => {
            use dd::Dd;
            let lambda = Dd::from(8.0).sqrt().add(Dd::from(p.gamma));
            let delta = lambda.mul(lambda).sub(Dd::from(8.0)).sqrt();
            let r = lambda.sub(delta).div(lambda.add(delta));
            (
                alpha_extended_for(p.n, p.gamma),
                r.powi(n as u32 + 1).sub(Dd::from(1.0)).to_f64(),
            )
        }
    };
    let value = alpha * factor;
    let mut s = SlackTracker::new();
    s.le(-1.0 - 2.0 / (n as f64 + 1.0), value);
    s.le(value, -1.0 - 1.0 / (4.0 * (n as f64 + 1.0)));
    CheckReport::from_slack("claim-alpha", n, 0, s.worst(), tolerance)
}

/// Claim 2 directly from (n, gamma), with alpha taken from the 2x2
/// closed form. Unlike the instance-backed variant this has no label
/// space to build, so it reaches arbitrarily large n.
pub fn claim_alpha_check_for(
    n: usize,
    gamma: f64,
    precision: Precision,
    tolerance: f64,
) -> CheckReport {
    let (alpha, factor) = match precision {
        Precision::Double => {
            let lambda = 8f64.sqrt() + gamma;
            let delta = (lambda * lambda - 8.0).sqrt();
            let r = (lambda - delta) / (lambda + delta);
            (alpha_closed_form(n, gamma), r.powi(n as i32 + 1) - 1.0)
        }
        Precision::Extended => {
            use dd::Dd;
            let lambda = Dd::from(8.0).sqrt().add(Dd::from(gamma));
            let delta = lambda.mul(lambda).sub(Dd::from(8.0)).sqrt();
            let r = lambda.sub(delta).div(lambda.add(delta));
            (
                alpha_extended_for(n, gamma),
                r.powi(n as u32 + 1).sub(Dd::from(1.0)).to_f64(),
            )
        }
    };
    let value = alpha * factor;
    let mut s = SlackTracker::new();
    s.le(-1.0 - 2.0 / (n as f64 + 1.0), value);
    s.le(value, -1.0 - 1.0 / (4.0 * (n as f64 + 1.0)));
    CheckReport::from_slack("claim-alpha", n, 0, s.worst(), tolerance)
}

/// The phi-ratio sandwiches. Returns the main report over the derived
/// index range i <= n+1 plus an informational boundary report for the
/// matching level i = n+2, which is flagged (never failed).
pub fn ratio_bounds_check(solution: &LayeredSolution, tolerance: f64) -> (CheckReport, CheckReport) {
    let p = &solution.params;
    let n = p.n;
    let fnn = n as f64;
    let r_minus = (p.lambda - p.delta) / 4.0;
    let r_plus = (p.lambda + p.delta) / 4.0;
    let phi = &solution.phi;
    let phi_leaf = phi[n].abs();
    let mut s = SlackTracker::new();
    for i in 1..=(n + 1) {
        let fi = i as f64;
        let scale = r_minus.powi(i as i32 - n as i32 - 2);
        // sandwichT2: |phi_{2n+3-i}| / |phi_{n+1}|
        let ratio = phi[2 * n + 2 - i].abs() / phi_leaf;
        s.le(scale * fi / (4.0 * (fnn + 2.0)), ratio);
        s.le(ratio, scale * 4.0 * fi / (fnn + 2.0));
        // upperT1: |phi_i| / |phi_{n+1}|
        let t1_ratio = phi[i - 1].abs() / phi_leaf;
        s.le(t1_ratio, 12.0 * (fnn + 1.0) * r_plus.powi(i as i32 - n as i32 - 1));
    }
    // relateroot via the sandwich at i = 1
    s.le(
        phi_leaf,
        phi[2 * n + 1].abs() * 4.0 * (fnn + 2.0) * r_minus.powi(n as i32 + 1),
    );
    let main = CheckReport::from_slack("ratio-bounds", n, 0, s.worst(), tolerance);
    // boundary index i = n+2: ratio is exactly 1; record the sandwich
    // slack there without letting it fail the check
    let mut b = SlackTracker::new();
    let i = n + 2;
    let fi = i as f64;
    let ratio = phi[2 * n + 2 - i].abs() / phi_leaf;
    b.le(fi / (4.0 * (fnn + 2.0)), ratio);
    b.le(ratio, 4.0 * fi / (fnn + 2.0));
    let boundary = CheckReport {
        check: "ratio-bounds-boundary".to_string(),
        n,
        seed: 0,
        pass: true,
        worst_slack: b.worst(),
        tolerance,
    };
    (main, boundary)
}

/// The draft's gap equation, lambda/2-normalized: Delta' = sqrt((lambda/2)^2 - 2),
/// LHS = (1 + 2 Delta'/(lambda/2 - Delta'))^{n+1}, RHS = 1 + 2 Delta'/(2 - lambda/2 - Delta').
fn gap_equation_sides(lambda: f64, n: usize) -> (f64, f64) {
    let half = lambda / 2.0;
    let dp = (half * half - 2.0).sqrt();
    let lhs = (1.0 + 2.0 * dp / (half - dp)).powi(n as i32 + 1);
    let rhs = 1.0 + 2.0 * dp / (2.0 - half - dp);
    (lhs, rhs)
}

/// Scans lambda in (sqrt(8), 3 - mu] for sign changes of LHS - RHS,
/// with logarithmic refinement near sqrt(8), and verifies the draft's
/// small-lambda inequality chain on (sqrt(8), sqrt(8) + 1e-4].
pub fn gap_equation_scan(
    n: usize,
    mu: f64,
    grid_points: usize,
    tolerance: f64,
) -> Result<CheckReport, SqError> {
    if grid_points < 1000 {
        return Err(SqError::InvalidInput("need at least 10^3 grid points".into()));
    }
    let lo = 8f64.sqrt();
    let hi = 3.0 - mu;
    if hi <= lo {
        return Err(SqError::InvalidInput(format!("mu {mu} empties the range")));
    }
    let width = hi - lo;
    let mut grid: Vec<f64> = (1..=grid_points)
        .map(|k| lo + width * k as f64 / grid_points as f64)
        .collect();
    // log-refined points hugging sqrt(8)
    let refinements = grid_points / 10;
    for k in 0..refinements {
        let exp = -12.0 + 12.0 * k as f64 / refinements as f64;
        let off = width * 10f64.powf(exp);
        grid.push(lo + off);
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut s = SlackTracker::new();
    for &lambda in &grid {
        let (lhs, rhs) = gap_equation_sides(lambda, n);
        // no root: the difference stays strictly positive
        s.lt(0.0, lhs - rhs);
    }
    // draft chain near sqrt(8): LHS >= 1 + (n+1) Delta', RHS <= 1 + 4 Delta'
    for k in 1..=100 {
        let lambda = lo + 1e-4 * k as f64 / 100.0;
        let half = lambda / 2.0;
        let dp = (half * half - 2.0).sqrt();
        let (lhs, rhs) = gap_equation_sides(lambda, n);
        s.le(1.0 + (n as f64 + 1.0) * dp, lhs);
        s.le(rhs, 1.0 + 4.0 * dp);
    }
    Ok(CheckReport::from_slack(
        "gap-equation",
        n,
        0,
        s.worst(),
        tolerance,
    ))
}

/// Adjacency of the n-cycle.
pub fn cycle_adjacency(n: usize) -> ndarray::Array2<f64> {
    let mut a = ndarray::Array2::<f64>::zeros((n, n));
    for i in 0..n {
        a[[i, (i + 1) % n]] = 1.0;
        a[[(i + 1) % n, i]] = 1.0;
    }
    a
}

/// Closed-form solution of (cycle adjacency) x = e_i for odd n.
pub fn cycle_solution(n: usize, i: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for k in 0..n {
        x[(i + 1 + 2 * k) % n] = if k % 2 == 0 { 0.5 } else { -0.5 };
    }
    x
}

/// Full rank, operator norm <= 2, Frobenius norm sqrt(2n), and the
/// closed-form solution against a dense solve.
pub fn odd_cycle_checks(n: usize, tolerance: f64) -> Result<CheckReport, SqError> {
    if n < 3 || n % 2 == 0 {
        return Err(SqError::InvalidInput(format!("n must be odd and >= 3, got {n}")));
    }
    let a = cycle_adjacency(n);
    let evals = linalg::symmetric_eigenvalues(&a);
    let mut s = SlackTracker::new();
    let min_abs = evals.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
    // full rank: eigenvalues are 2 cos(2 pi k / n), bounded away from 0
    s.lt(1e-6, min_abs);
    let max_abs = evals.iter().map(|e| e.abs()).fold(0.0f64, f64::max);
    s.le(max_abs, 2.0 + 1e-12);
    let frob_sq: f64 = a.iter().map(|v| v * v).sum();
    s.le((frob_sq - 2.0 * n as f64).abs(), 1e-12);
    for i in [0, n / 2] {
        let x = cycle_solution(n, i);
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let dense = linalg::solve_symmetric(&a, &e);
        let diff: f64 = x
            .iter()
            .zip(dense.iter())
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt();
        s.le(diff, 1e-10);
        // neighbors of i carry 1/2
        s.le((x[(i + 1) % n] - 0.5).abs(), 1e-15);
        s.le((x[(i + n - 1) % n] - 0.5).abs(), 1e-15);
    }
    Ok(CheckReport::from_slack("odd-cycle", n, 0, s.worst(), tolerance))
}
