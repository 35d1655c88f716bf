//! Quantum-inspired classical primitives over SQ access: estimating
//! `||Ay||^2`, approximate and exact (rejection) sampling from `Ay`,
//! the sample-complexity formulas behind them, and the randomized
//! coordinate-descent step.

use rand::RngCore;

use crate::sq_core::{SqError, SqMatrix, SqVector};

/// Maximum non-zeros per row and per column of the bound matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparsityProfile {
    pub t: usize,
}

impl SparsityProfile {
    pub fn new(t: usize) -> Result<Self, SqError> {
        if t == 0 {
            return Err(SqError::InvalidInput("sparsity t must be positive".into()));
        }
        Ok(Self { t })
    }
}

/// Condition-related parameters controlling sample complexity:
/// `gamma = ||A A^+ y|| / ||y||`, `kappa = sigma_max / sigma_min` and
/// `kappa_F = ||M||_F / sigma_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityParams {
    pub gamma: f64,
    pub kappa: f64,
    pub kappa_f: f64,
}

impl ComplexityParams {
    pub fn new(gamma: f64, kappa: f64, kappa_f: f64) -> Result<Self, SqError> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(SqError::InvalidInput(format!(
                "gamma must lie in (0, 1], got {gamma}"
            )));
        }
        if kappa < 1.0 {
            return Err(SqError::InvalidInput(format!(
                "kappa must be >= 1, got {kappa}"
            )));
        }
        if kappa_f < kappa {
            return Err(SqError::InvalidInput(format!(
                "kappa_F ({kappa_f}) must be >= kappa ({kappa})"
            )));
        }
        Ok(Self {
            gamma,
            kappa,
            kappa_f,
        })
    }
}

/// Outcome of an estimate of `||Ay||^2`.
#[derive(Debug, Clone, Copy)]
pub struct NormEstimate {
    pub value: f64,
    pub k: usize,
    pub epsilon: f64,
    pub repetitions: usize,
}

/// Outcome of one exact-sampling call.
#[derive(Debug, Clone, Copy)]
pub struct RejectionOutcome {
    pub index: usize,
    pub accepted: bool,
    pub attempts: usize,
    pub m_bound: f64,
    pub n_estimate: f64,
}

/// Current iterate of randomized coordinate descent on `Aw = y`.
#[derive(Debug, Clone)]
pub struct CoordinateDescentState {
    pub w: Vec<f64>,
    pub iteration: u64,
}

impl CoordinateDescentState {
    pub fn zeros(n: usize) -> Self {
        Self {
            w: vec![0.0; n],
            iteration: 0,
        }
    }

    pub fn from_vector(w: Vec<f64>) -> Self {
        Self { w, iteration: 0 }
    }
}

/// One unbiased sample Z with E[Z] = ||Ay||^2.
///
/// Samples j from y, extracts column j, the rows hitting it and the
/// columns hitting those rows, then evaluates the exact inner product
/// `y_j^{-1} ||y||^2 A_{:,j}^T A y` over the touched support.
fn norm_sample_z(a: &dyn SqMatrix, y: &dyn SqVector, rng: &mut dyn RngCore) -> Result<f64, SqError> {
    let j = y.sample(rng)?;
    let y_j = y.entry(j);
    let y_norm = y.norm();
    let col_j = a.col_nonzeros(j);
    // Columns with non-zero inner product against A_{:,j}, with the
    // accumulated value A_{:,j}^T A_{:,j'} per column j'.
    let mut acc: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    for &(i, a_ij) in &col_j {
        for (jp, a_ijp) in a.row_nonzeros(i) {
            *acc.entry(jp).or_insert(0.0) += a_ij * a_ijp;
        }
    }
    let mut inner = 0.0;
    for (&jp, &dot) in &acc {
        inner += dot * y.entry(jp);
    }
    Ok(y_norm * y_norm / y_j * inner)
}

/// Median-of-averages estimator for `||Ay||^2` using `k` samples per
/// average and `repetitions` independent averages.
pub fn estimate_norm_squared(
    a: &dyn SqMatrix,
    y: &dyn SqVector,
    k: usize,
    repetitions: usize,
    rng: &mut dyn RngCore,
) -> Result<NormEstimate, SqError> {
    if k == 0 || repetitions == 0 {
        return Err(SqError::InvalidInput(
            "k and repetitions must be positive".into(),
        ));
    }
    if y.norm() == 0.0 {
        return Err(SqError::NoDistribution);
    }
    let mut averages = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let mut sum = 0.0;
        for _ in 0..k {
            sum += norm_sample_z(a, y, rng)?;
        }
        averages.push(sum / k as f64);
    }
    averages.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let value = averages[averages.len() / 2];
    Ok(NormEstimate {
        value,
        k,
        epsilon: f64::NAN,
        repetitions,
    })
}

/// Sample count `ceil(4 eps^-2 gamma^-2 kappa^2)` sufficient for failure
/// probability 1/4 via Chebyshev.
pub fn required_samples(params: &ComplexityParams, epsilon: f64) -> Result<usize, SqError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SqError::InvalidInput(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let k = 4.0 * epsilon.powi(-2) * params.gamma.powi(-2) * params.kappa.powi(2);
    Ok(k.ceil() as usize)
}

/// Retries before a degenerate (all-zero) sampled column is an error.
const DEGENERATE_COLUMN_RETRIES: usize = 100;

/// Samples a row index i with probability
/// `p_i = sum_j (A_{i,j}^2 / ||A_{:,j}||^2) (y_j^2 / ||y||^2)`.
pub fn approx_sample(
    a: &dyn SqMatrix,
    y: &dyn SqVector,
    rng: &mut dyn RngCore,
) -> Result<usize, SqError> {
    let mut last_col = 0;
    for _ in 0..DEGENERATE_COLUMN_RETRIES {
        let j = y.sample(rng)?;
        last_col = j;
        match a.sample_in_col(j, rng) {
            Ok(i) => return Ok(i),
            Err(SqError::NoDistribution) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(SqError::DegenerateColumn(last_col, DEGENERATE_COLUMN_RETRIES))
}

/// The rejection bound `M = gamma^-2 kappa^2 t`; acceptance probability
/// is then at least `1/(3M)`.
pub fn rejection_bound(params: &ComplexityParams, t: usize) -> f64 {
    params.gamma.powi(-2) * params.kappa.powi(2) * t as f64
}

/// Exact proposal probability of row i under `approx_sample`, computed
/// by extracting row i and its intersecting columns.
pub fn proposal_probability(a: &dyn SqMatrix, y: &dyn SqVector, i: usize) -> f64 {
    let row = a.row_nonzeros(i);
    let y_norm_sq = y.norm().powi(2);
    let mut p = 0.0;
    for &(j, a_ij) in &row {
        let col_norm_sq: f64 = a.col_nonzeros(j).iter().map(|&(_, v)| v * v).sum();
        if col_norm_sq > 0.0 {
            let y_j = y.entry(j);
            p += a_ij * a_ij / col_norm_sq * y_j * y_j / y_norm_sq;
        }
    }
    p
}

/// Rejection sampler drawing exactly from `(Ay)_i^2 / ||Ay||^2`
/// conditioned on acceptance.
///
/// Requires `n_estimate` within a factor [1/2, 3/2] of `||Ay||^2` and
/// `(Ay)_i^2 / ||Ay||^2 <= m_bound * p_i` for all i.
pub fn exact_sample(
    a: &dyn SqMatrix,
    y: &dyn SqVector,
    m_bound: f64,
    n_estimate: f64,
    max_attempts: usize,
    rng: &mut dyn RngCore,
) -> Result<RejectionOutcome, SqError> {
    if m_bound <= 0.0 || n_estimate <= 0.0 || max_attempts == 0 {
        return Err(SqError::InvalidInput(
            "m_bound, n_estimate and max_attempts must be positive".into(),
        ));
    }
    for attempt in 1..=max_attempts {
        let i = approx_sample(a, y, rng)?;
        let p_i = proposal_probability(a, y, i);
        let row = a.row_nonzeros(i);
        let mut ay_i = 0.0;
        for &(j, a_ij) in &row {
            ay_i += a_ij * y.entry(j);
        }
        let accept_prob = ay_i * ay_i / (2.0 * n_estimate * m_bound * p_i);
        if accept_prob > 1.0 {
            return Err(SqError::BoundViolation(accept_prob));
        }
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        if u < accept_prob {
            return Ok(RejectionOutcome {
                index: i,
                accepted: true,
                attempts: attempt,
                m_bound,
                n_estimate,
            });
        }
    }
    Ok(RejectionOutcome {
        index: 0,
        accepted: false,
        attempts: max_attempts,
        m_bound,
        n_estimate,
    })
}

/// One randomized coordinate-descent step:
/// `w <- w - ((A_{i,:} w - y_i) / A_{i,i}) e_i`, zeroing row i's residual.
pub fn coordinate_descent_step(
    mut state: CoordinateDescentState,
    a: &dyn SqMatrix,
    y: &dyn SqVector,
    i_k: usize,
) -> Result<CoordinateDescentState, SqError> {
    let row = a.row_nonzeros(i_k);
    let diag = row
        .iter()
        .find(|&&(j, _)| j == i_k)
        .map(|&(_, v)| v)
        .unwrap_or(0.0);
    if diag == 0.0 {
        return Err(SqError::InvalidInput(format!(
            "zero diagonal at row {i_k}"
        )));
    }
    let mut residual = -y.entry(i_k);
    for &(j, a_ij) in &row {
        residual += a_ij * state.w[j];
    }
    state.w[i_k] -= residual / diag;
    state.iteration += 1;
    Ok(state)
}
