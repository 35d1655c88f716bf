//! Sampling-and-query (SQ) access: entry queries, length-squared index
//! sampling and norm queries, plus the query accounting shared by every
//! experiment in this crate.
//!
//! The sampling data structure is a complete binary tree over squared
//! magnitudes, the classical input format quantum-inspired algorithms
//! assume. Internal nodes hold subtree sums, leaves hold `v_i^2`, and a
//! draw is a single uniform real followed by a deterministic descent.

use std::cell::RefCell;
use std::rc::Rc;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SqError {
    #[error("empty value list")]
    Empty,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("all weights are zero; no sampling distribution exists")]
    NoDistribution,
    #[error("sampled column {0} is all-zero after {1} retries")]
    DegenerateColumn(usize, usize),
    #[error("rejection acceptance probability {0} exceeds 1; bound too small or norm estimate out of range")]
    BoundViolation(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Counters for every SQ primitive and every underlying oracle call.
///
/// A standalone vector records its index samples in `row_samples`.
/// Row/column extractions of a `t`-sparse matrix are charged as `t`
/// entry queries here; the extraction-count convention is tracked
/// separately by the matrix view.
#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub entry_queries: u64,
    pub row_samples: u64,
    pub col_samples: u64,
    pub row_norm_samples: u64,
    pub col_norm_samples: u64,
    pub norm_queries: u64,
    pub oracle_calls: u64,
    pub f_calls: u64,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total(&self) -> u64 {
        self.entry_queries
            + self.row_samples
            + self.col_samples
            + self.row_norm_samples
            + self.col_norm_samples
            + self.norm_queries
            + self.oracle_calls
            + self.f_calls
    }

    /// Merges counters from a parallel trial into this ledger.
    pub fn merge(&mut self, other: &QueryLedger) {
        self.entry_queries += other.entry_queries;
        self.row_samples += other.row_samples;
        self.col_samples += other.col_samples;
        self.row_norm_samples += other.row_norm_samples;
        self.col_norm_samples += other.col_norm_samples;
        self.norm_queries += other.norm_queries;
        self.oracle_calls += other.oracle_calls;
        self.f_calls += other.f_calls;
    }
}

/// Shared handle to a per-trial ledger.
pub type LedgerHandle = Rc<RefCell<QueryLedger>>;

pub fn new_ledger() -> LedgerHandle {
    Rc::new(RefCell::new(QueryLedger::new()))
}

/// Full rebuild cadence bounding floating-point accumulation drift.
const REBUILD_PERIOD: u64 = 1 << 20;

/// Complete binary tree over squared magnitudes supporting O(log n)
/// updates and length-squared proportional index sampling.
#[derive(Debug, Clone)]
pub struct WeightedIndexTree {
    size: usize,
    base: usize,
    /// node_sums[1] is the root; leaf i lives at base + i.
    node_sums: Vec<f64>,
    updates_since_rebuild: u64,
}

impl WeightedIndexTree {
    /// Builds the tree with `leaf_i = values_i^2`.
    pub fn build(values: &[f64]) -> Result<Self, SqError> {
        if values.is_empty() {
            return Err(SqError::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SqError::NonFinite(i));
        }
        let size = values.len();
        let base = size.next_power_of_two();
        let mut node_sums = vec![0.0; 2 * base];
        for (i, v) in values.iter().enumerate() {
            node_sums[base + i] = v * v;
        }
        let mut tree = Self {
            size,
            base,
            node_sums,
            updates_since_rebuild: 0,
        };
        tree.rebuild_internal();
        Ok(tree)
    }

    fn rebuild_internal(&mut self) {
        for i in (1..self.base).rev() {
            self.node_sums[i] = self.node_sums[2 * i] + self.node_sums[2 * i + 1];
        }
        self.updates_since_rebuild = 0;
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Sum of all leaf weights, i.e. the squared l2 norm of the backing vector.
    pub fn total(&self) -> f64 {
        self.node_sums[1]
    }

    pub fn leaf(&self, i: usize) -> f64 {
        self.node_sums[self.base + i]
    }

    /// Sets `leaf_i = new_value^2` and restores all ancestor sums.
    pub fn update(&mut self, i: usize, new_value: f64) -> Result<(), SqError> {
        if i >= self.size {
            return Err(SqError::IndexOutOfRange {
                index: i,
                size: self.size,
            });
        }
        if !new_value.is_finite() {
            return Err(SqError::NonFinite(i));
        }
        let mut node = self.base + i;
        self.node_sums[node] = new_value * new_value;
        while node > 1 {
            node /= 2;
            self.node_sums[node] = self.node_sums[2 * node] + self.node_sums[2 * node + 1];
        }
        self.updates_since_rebuild += 1;
        if self.updates_since_rebuild >= REBUILD_PERIOD {
            self.rebuild_internal();
        }
        Ok(())
    }

    /// Draws an index with probability `leaf_i / total`.
    ///
    /// One uniform real per draw, deterministic left-then-right descent,
    /// ties at internal nodes resolve left. Never lands on a zero leaf.
    pub fn sample(&self, rng: &mut dyn RngCore) -> Result<usize, SqError> {
        let total = self.total();
        if total <= 0.0 {
            return Err(SqError::NoDistribution);
        }
        let mut u = uniform_f64(rng) * total;
        let mut node = 1usize;
        while node < self.base {
            let left = 2 * node;
            let left_sum = self.node_sums[left];
            if left_sum > 0.0 && u <= left_sum {
                node = left;
            } else {
                u -= left_sum;
                node = left + 1;
            }
        }
        let i = node - self.base;
        debug_assert!(i < self.size && self.leaf(i) > 0.0);
        Ok(i)
    }

    /// Verifies internal-node consistency; used by tests and the periodic
    /// rebuild invariant.
    pub fn max_consistency_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 1..self.base {
            let err = (self.node_sums[i] - self.node_sums[2 * i] - self.node_sums[2 * i + 1]).abs();
            worst = worst.max(err);
        }
        worst
    }
}

fn uniform_f64(rng: &mut dyn RngCore) -> f64 {
    // 53 random bits into [0, 1).
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// SQ access to a vector: entry queries, length-squared index sampling
/// and norm queries, each charged to the ledger.
pub trait SqVector {
    fn len(&self) -> usize;
    fn entry(&self, i: usize) -> f64;
    fn sample(&self, rng: &mut dyn RngCore) -> Result<usize, SqError>;
    fn norm(&self) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Which ledger counter a view's index samples belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    Row,
    Col,
    RowNorm,
    ColNorm,
}

/// A materialized vector with SQ access.
pub struct MaterializedSqVector {
    values: Vec<f64>,
    tree: WeightedIndexTree,
    norm: f64,
    ledger: LedgerHandle,
    kind: SampleKind,
}

impl MaterializedSqVector {
    pub fn new(values: Vec<f64>, ledger: LedgerHandle) -> Result<Self, SqError> {
        Self::with_kind(values, ledger, SampleKind::Row)
    }

    pub fn with_kind(
        values: Vec<f64>,
        ledger: LedgerHandle,
        kind: SampleKind,
    ) -> Result<Self, SqError> {
        let tree = WeightedIndexTree::build(&values)?;
        let norm = tree.total().sqrt();
        Ok(Self {
            values,
            tree,
            norm,
            ledger,
            kind,
        })
    }

    pub fn ledger(&self) -> &LedgerHandle {
        &self.ledger
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entry access without ledger charge, for internal assembly.
    pub fn raw_entry(&self, i: usize) -> f64 {
        self.values[i]
    }
}

impl SqVector for MaterializedSqVector {
    fn len(&self) -> usize {
        self.values.len()
    }

    fn entry(&self, i: usize) -> f64 {
        self.ledger.borrow_mut().entry_queries += 1;
        self.values[i]
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Result<usize, SqError> {
        {
            let mut l = self.ledger.borrow_mut();
            match self.kind {
                SampleKind::Row => l.row_samples += 1,
                SampleKind::Col => l.col_samples += 1,
                SampleKind::RowNorm => l.row_norm_samples += 1,
                SampleKind::ColNorm => l.col_norm_samples += 1,
            }
        }
        self.tree.sample(rng)
    }

    fn norm(&self) -> f64 {
        self.ledger.borrow_mut().norm_queries += 1;
        self.norm
    }
}

/// SQ access to a matrix: entry queries, in-row/in-column sampling,
/// row/column-norm sampling and sparse row/column extraction.
pub trait SqMatrix {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn entry(&self, i: usize, j: usize) -> f64;
    /// Samples j with probability `M_{i,j}^2 / ||M_{i,*}||^2`.
    fn sample_in_row(&self, i: usize, rng: &mut dyn RngCore) -> Result<usize, SqError>;
    /// Samples i with probability `M_{i,j}^2 / ||M_{*,j}||^2`.
    fn sample_in_col(&self, j: usize, rng: &mut dyn RngCore) -> Result<usize, SqError>;
    /// Samples i with probability `||M_{i,*}||^2 / ||M||_F^2`.
    fn sample_row_norms(&self, rng: &mut dyn RngCore) -> Result<usize, SqError>;
    /// Samples j with probability `||M_{*,j}||^2 / ||M||_F^2`.
    fn sample_col_norms(&self, rng: &mut dyn RngCore) -> Result<usize, SqError>;
    fn row_norm(&self, i: usize) -> f64;
    fn col_norm(&self, j: usize) -> f64;
    fn frobenius_norm(&self) -> f64;
    /// Extracts the non-zeros of row i; charged as nnz entry queries.
    fn row_nonzeros(&self, i: usize) -> Vec<(usize, f64)>;
    /// Extracts the non-zeros of column j; charged as nnz entry queries.
    fn col_nonzeros(&self, j: usize) -> Vec<(usize, f64)>;
    fn ledger(&self) -> &LedgerHandle;
}

/// A materialized sparse matrix with SQ access backed by per-row and
/// per-column sampling trees.
pub struct MaterializedSqMatrix {
    nrows: usize,
    ncols: usize,
    row_nnz: Vec<Vec<(usize, f64)>>,
    col_nnz: Vec<Vec<(usize, f64)>>,
    row_trees: Vec<WeightedIndexTree>,
    col_trees: Vec<WeightedIndexTree>,
    row_norm_tree: WeightedIndexTree,
    col_norm_tree: WeightedIndexTree,
    frobenius: f64,
    ledger: LedgerHandle,
    extractions: std::cell::Cell<u64>,
}

impl MaterializedSqMatrix {
    /// Builds from (row, col, value) triplets; duplicate positions are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
        ledger: LedgerHandle,
    ) -> Result<Self, SqError> {
        let mut dense = vec![std::collections::BTreeMap::new(); nrows];
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(SqError::IndexOutOfRange {
                    index: i.max(j),
                    size: nrows.max(ncols),
                });
            }
            if !v.is_finite() {
                return Err(SqError::NonFinite(i));
            }
            *dense[i].entry(j).or_insert(0.0) += v;
        }
        let mut row_nnz: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        let mut col_nnz: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ncols];
        for (i, row) in dense.iter().enumerate() {
            for (&j, &v) in row {
                if v != 0.0 {
                    row_nnz[i].push((j, v));
                    col_nnz[j].push((i, v));
                }
            }
        }
        let mut row_vals = vec![vec![0.0; ncols]; nrows];
        let mut col_vals = vec![vec![0.0; nrows]; ncols];
        for (i, row) in row_nnz.iter().enumerate() {
            for &(j, v) in row {
                row_vals[i][j] = v;
                col_vals[j][i] = v;
            }
        }
        let row_trees = row_vals
            .iter()
            .map(|v| WeightedIndexTree::build(v))
            .collect::<Result<Vec<_>, _>>()?;
        let col_trees = col_vals
            .iter()
            .map(|v| WeightedIndexTree::build(v))
            .collect::<Result<Vec<_>, _>>()?;
        let row_norms: Vec<f64> = row_trees.iter().map(|t| t.total().sqrt()).collect();
        let col_norms: Vec<f64> = col_trees.iter().map(|t| t.total().sqrt()).collect();
        let row_norm_tree = WeightedIndexTree::build(&row_norms)?;
        let col_norm_tree = WeightedIndexTree::build(&col_norms)?;
        let frobenius = row_norm_tree.total().sqrt();
        Ok(Self {
            nrows,
            ncols,
            row_nnz,
            col_nnz,
            row_trees,
            col_trees,
            row_norm_tree,
            col_norm_tree,
            frobenius,
            ledger,
            extractions: std::cell::Cell::new(0),
        })
    }

    pub fn from_dense(m: &ndarray::Array2<f64>, ledger: LedgerHandle) -> Result<Self, SqError> {
        let mut triplets = Vec::new();
        for ((i, j), &v) in m.indexed_iter() {
            if v != 0.0 {
                triplets.push((i, j, v));
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &triplets, ledger)
    }

    /// Number of row/column extractions performed so far (the one-query
    /// cost convention; `entry_queries` carries the per-entry convention).
    pub fn extraction_count(&self) -> u64 {
        self.extractions.get()
    }

    /// Maximum non-zeros over rows and columns.
    pub fn sparsity(&self) -> usize {
        let r = self.row_nnz.iter().map(|v| v.len()).max().unwrap_or(0);
        let c = self.col_nnz.iter().map(|v| v.len()).max().unwrap_or(0);
        r.max(c)
    }
}

impl SqMatrix for MaterializedSqMatrix {
    fn rows(&self) -> usize {
        self.nrows
    }

    fn cols(&self) -> usize {
        self.ncols
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.ledger.borrow_mut().entry_queries += 1;
        self.row_nnz[i]
            .iter()
            .find(|&&(jj, _)| jj == j)
            .map(|&(_, v)| v)
            .unwrap_or(0.0)
    }

    fn sample_in_row(&self, i: usize, rng: &mut dyn RngCore) -> Result<usize, SqError> {
        self.ledger.borrow_mut().row_samples += 1;
        self.row_trees[i].sample(rng)
    }

    fn sample_in_col(&self, j: usize, rng: &mut dyn RngCore) -> Result<usize, SqError> {
        self.ledger.borrow_mut().col_samples += 1;
        self.col_trees[j].sample(rng)
    }

    fn sample_row_norms(&self, rng: &mut dyn RngCore) -> Result<usize, SqError> {
        self.ledger.borrow_mut().row_norm_samples += 1;
        self.row_norm_tree.sample(rng)
    }

    fn sample_col_norms(&self, rng: &mut dyn RngCore) -> Result<usize, SqError> {
        self.ledger.borrow_mut().col_norm_samples += 1;
        self.col_norm_tree.sample(rng)
    }

    fn row_norm(&self, i: usize) -> f64 {
        self.ledger.borrow_mut().norm_queries += 1;
        self.row_trees[i].total().sqrt()
    }

    fn col_norm(&self, j: usize) -> f64 {
        self.ledger.borrow_mut().norm_queries += 1;
        self.col_trees[j].total().sqrt()
    }

    fn frobenius_norm(&self) -> f64 {
        self.ledger.borrow_mut().norm_queries += 1;
        self.frobenius
    }

    fn row_nonzeros(&self, i: usize) -> Vec<(usize, f64)> {
        self.extractions.set(self.extractions.get() + 1);
        self.ledger.borrow_mut().entry_queries += self.row_nnz[i].len() as u64;
        self.row_nnz[i].clone()
    }

    fn col_nonzeros(&self, j: usize) -> Vec<(usize, f64)> {
        self.extractions.set(self.extractions.get() + 1);
        self.ledger.borrow_mut().entry_queries += self.col_nnz[j].len() as u64;
        self.col_nnz[j].clone()
    }

    fn ledger(&self) -> &LedgerHandle {
        &self.ledger
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn single_element_tree() {
        let t = WeightedIndexTree::build(&[1.0]).unwrap();
        assert!((t.total() - 1.0).abs() < 1e-15);
        let mut r = rng(0);
        for _ in 0..100 {
            assert_eq!(t.sample(&mut r).unwrap(), 0);
        }
    }

    #[test]
    fn pythagorean_weights() {
        let t = WeightedIndexTree::build(&[3.0, 4.0]).unwrap();
        assert!((t.total() - 25.0).abs() < 1e-12);
        let mut r = rng(1);
        let mut counts = [0usize; 2];
        let draws = 100_000;
        for _ in 0..draws {
            counts[t.sample(&mut r).unwrap()] += 1;
        }
        let p0 = counts[0] as f64 / draws as f64;
        // P(0) = 9/25 = 0.36, 3 sigma ~ 0.0046
        assert!((p0 - 0.36).abs() < 0.005, "p0 = {p0}");
    }

    #[test]
    fn empirical_frequencies_within_3_sigma() {
        let values = [0.3, -1.2, 2.5, 0.0, 0.7, -0.1, 1.9, -2.2];
        let t = WeightedIndexTree::build(&values).unwrap();
        let total = t.total();
        let mut r = rng(2);
        let draws = 100_000usize;
        let mut counts = [0usize; 8];
        for _ in 0..draws {
            counts[t.sample(&mut r).unwrap()] += 1;
        }
        for i in 0..8 {
            let p = t.leaf(i) / total;
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            let observed = counts[i] as f64 / draws as f64;
            assert!(
                (observed - p).abs() <= 3.0 * sigma + 1e-12,
                "index {i}: observed {observed}, expected {p}"
            );
        }
    }

    #[test]
    fn single_support_point() {
        let t = WeightedIndexTree::build(&[0.0, 5.0, 0.0]).unwrap();
        let mut r = rng(3);
        for _ in 0..1000 {
            assert_eq!(t.sample(&mut r).unwrap(), 1);
        }
    }

    #[test]
    fn uniform_four_chi_square() {
        let t = WeightedIndexTree::build(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        let mut r = rng(4);
        let draws = 100_000usize;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[t.sample(&mut r).unwrap()] += 1;
        }
        let expected = draws as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // chi-square(3 dof) critical value at p=0.01 is 11.345
        assert!(chi2 < 11.345, "chi2 = {chi2}");
    }

    #[test]
    fn renormalization_after_update() {
        let mut t = WeightedIndexTree::build(&[1.0, 2.0, 3.0]).unwrap();
        t.update(0, 0.0).unwrap();
        assert!((t.total() - 13.0).abs() < 1e-12);
        let mut r = rng(5);
        let draws = 100_000usize;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            counts[t.sample(&mut r).unwrap()] += 1;
        }
        assert_eq!(counts[0], 0);
        let p1 = counts[1] as f64 / draws as f64;
        assert!((p1 - 4.0 / 13.0).abs() < 0.006, "p1 = {p1}");
    }

    #[test]
    fn update_matches_rebuild() {
        let mut values: Vec<f64> = (0..17).map(|i| (i as f64) * 0.37 - 2.0).collect();
        let mut t = WeightedIndexTree::build(&values).unwrap();
        t.update(5, 9.25).unwrap();
        values[5] = 9.25;
        let fresh = WeightedIndexTree::build(&values).unwrap();
        assert!((t.total() - fresh.total()).abs() <= 1e-12 * fresh.total());
    }

    #[test]
    fn random_updates_keep_internal_consistency() {
        use rand::Rng;
        let mut r = rng(6);
        let values: Vec<f64> = (0..64).map(|_| r.gen_range(-1.0..1.0)).collect();
        let mut t = WeightedIndexTree::build(&values).unwrap();
        for _ in 0..1000 {
            let i = r.gen_range(0..64);
            let v: f64 = r.gen_range(-10.0..10.0);
            t.update(i, v).unwrap();
        }
        assert!(t.max_consistency_error() <= 1e-12 * t.total().max(1.0));
    }

    #[test]
    fn update_to_zero_on_singleton_support_errors() {
        let mut t = WeightedIndexTree::build(&[0.0, 2.0]).unwrap();
        t.update(1, 0.0).unwrap();
        let mut r = rng(7);
        assert!(matches!(t.sample(&mut r), Err(SqError::NoDistribution)));
    }

    #[test]
    fn build_errors() {
        assert!(matches!(
            WeightedIndexTree::build(&[]),
            Err(SqError::Empty)
        ));
        assert!(matches!(
            WeightedIndexTree::build(&[1.0, f64::NAN]),
            Err(SqError::NonFinite(1))
        ));
        let mut t = WeightedIndexTree::build(&[1.0]).unwrap();
        assert!(matches!(
            t.update(3, 1.0),
            Err(SqError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn sample_never_returns_zero_leaf() {
        let t = WeightedIndexTree::build(&[0.0, 1.0, 0.0, 2.0, 0.0]).unwrap();
        let mut r = rng(8);
        for _ in 0..10_000 {
            let i = t.sample(&mut r).unwrap();
            assert!(t.leaf(i) > 0.0);
        }
    }

    #[test]
    fn vector_view_chi_square_goodness_of_fit() {
        let values = vec![0.5, -1.5, 2.0, 0.25, -0.75];
        let ledger = new_ledger();
        let v = MaterializedSqVector::new(values.clone(), ledger).unwrap();
        let norm_sq: f64 = values.iter().map(|x| x * x).sum();
        let mut r = rng(9);
        let draws = 100_000usize;
        let mut counts = vec![0usize; values.len()];
        for _ in 0..draws {
            counts[v.sample(&mut r).unwrap()] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(values.iter())
            .map(|(&c, &x)| {
                let e = draws as f64 * x * x / norm_sq;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // chi-square(4 dof) critical value at p=0.01 is 13.277
        assert!(chi2 < 13.277, "chi2 = {chi2}");
    }

    #[test]
    fn vector_norm_matches_sum_of_squares() {
        let values = vec![1.0, -2.0, 3.5];
        let v = MaterializedSqVector::new(values.clone(), new_ledger()).unwrap();
        let norm_sq: f64 = values.iter().map(|x| x * x).sum();
        assert!((v.norm().powi(2) - norm_sq).abs() <= 1e-9 * norm_sq);
    }

    #[test]
    fn ledger_counts_scripted_sequence_exactly() {
        let ledger = new_ledger();
        let v = MaterializedSqVector::new(vec![1.0, 2.0], ledger.clone()).unwrap();
        let mut r = rng(10);
        let mut k = 0u64;
        for _ in 0..7 {
            v.entry(0);
            k += 1;
        }
        for _ in 0..5 {
            v.sample(&mut r).unwrap();
            k += 1;
        }
        for _ in 0..3 {
            v.norm();
            k += 1;
        }
        assert_eq!(ledger.borrow().total(), k);
        assert_eq!(ledger.borrow().entry_queries, 7);
        assert_eq!(ledger.borrow().row_samples, 5);
        assert_eq!(ledger.borrow().norm_queries, 3);
    }

    #[test]
    fn matrix_row_norms_match_row_views() {
        let m = ndarray::array![[1.0, 0.0, 2.0], [0.0, -3.0, 0.0], [4.0, 0.0, 1.0]];
        let mat = MaterializedSqMatrix::from_dense(&m, new_ledger()).unwrap();
        for i in 0..3 {
            let expect: f64 = m.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            let got = mat.row_norm(i);
            assert!((got - expect).abs() <= 1e-9 * expect.max(1.0));
        }
        assert_eq!(mat.sparsity(), 2);
    }

    #[test]
    fn matrix_ledger_one_increment_per_primitive() {
        let m = ndarray::array![[1.0, 2.0], [3.0, 4.0]];
        let ledger = new_ledger();
        let mat = MaterializedSqMatrix::from_dense(&m, ledger.clone()).unwrap();
        let mut r = rng(11);
        mat.entry(0, 1);
        mat.sample_in_row(0, &mut r).unwrap();
        mat.sample_in_col(1, &mut r).unwrap();
        mat.sample_row_norms(&mut r).unwrap();
        mat.sample_col_norms(&mut r).unwrap();
        mat.frobenius_norm();
        let l = ledger.borrow();
        assert_eq!(l.entry_queries, 1);
        assert_eq!(l.row_samples, 1);
        assert_eq!(l.col_samples, 1);
        assert_eq!(l.row_norm_samples, 1);
        assert_eq!(l.col_norm_samples, 1);
        assert_eq!(l.norm_queries, 1);
        assert_eq!(l.total(), 6);
    }
}
