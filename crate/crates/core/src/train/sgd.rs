//! Negative-sampling SGD primitives shared by every trainer: the loss and
//! its exact gradients, the context composition and softmax used by the
//! citation objective, and lock-free matrix views for hogwild workers.

use std::sync::atomic::{AtomicU32, Ordering};

use crate::model::EmbeddingMatrix;
use crate::par;
use crate::train::TrainError;

/// Sigmoid clamp applied before taking logs so the loss stays finite.
const SIGMA_FLOOR: f64 = 1e-7;

pub fn sigmoid(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

fn log_sigmoid(s: f64) -> f64 {
    sigmoid(s).clamp(SIGMA_FLOOR, 1.0 - SIGMA_FLOOR).ln()
}

/// Context composition for the citation objective: the source document's IN
/// vector averaged with the context words' IN vectors,
/// x = (d_s + Σ w) / (1 + |C|).
pub fn hd2v_context_vector(d_s_in: &[f32], context_in: &[&[f32]]) -> Vec<f32> {
    let dim = d_s_in.len();
    let mut acc: Vec<f64> = d_s_in.iter().map(|&v| v as f64).collect();
    for w in context_in {
        assert_eq!(w.len(), dim, "context vector dimension mismatch");
        for (a, &v) in acc.iter_mut().zip(*w) {
            *a += v as f64;
        }
    }
    let scale = 1.0 / (1.0 + context_in.len() as f64);
    acc.into_iter().map(|a| (a * scale) as f32).collect()
}

/// Numerically stable softmax (max-shifted).
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    assert!(!scores.is_empty(), "softmax over an empty score set");
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Softmax over all documents' OUT vectors for a composed context vector.
/// Diagnostic-grade: training itself uses the sampled loss below.
pub fn hd2v_softmax(x: &[f32], d_out: &EmbeddingMatrix) -> Vec<f64> {
    let scores = par::map_range(d_out.rows(), |i| crate::model::dot(x, d_out.row(i)));
    softmax(&scores)
}

/// Loss and exact gradients of the negative-sampling objective
/// L = −[log σ(x·t) + Σ_i log σ(−x·n_i)].
#[derive(Debug, Clone)]
pub struct NsGradients {
    pub loss: f64,
    pub grad_x: Vec<f64>,
    pub grad_target: Vec<f64>,
    pub grad_negatives: Vec<Vec<f64>>,
}

pub fn ns_loss_and_grads(
    x: &[f64],
    target: &[f64],
    negatives: &[&[f64]],
) -> Result<NsGradients, TrainError> {
    let dim = x.len();
    if target.len() != dim || negatives.iter().any(|n| n.len() != dim) {
        return Err(TrainError::DimensionMismatch(format!(
            "x has dim {dim} but a target/negative differs"
        )));
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();

    let s_t = dot(x, target);
    let g_t = sigmoid(s_t) - 1.0;
    let mut loss = -log_sigmoid(s_t);
    let mut grad_x: Vec<f64> = target.iter().map(|&v| g_t * v).collect();
    let grad_target: Vec<f64> = x.iter().map(|&v| g_t * v).collect();
    let mut grad_negatives = Vec::with_capacity(negatives.len());
    for n in negatives {
        let s_n = dot(x, n);
        let g_n = sigmoid(s_n);
        loss -= log_sigmoid(-s_n);
        for (g, &v) in grad_x.iter_mut().zip(*n) {
            *g += g_n * v;
        }
        grad_negatives.push(x.iter().map(|&v| g_n * v).collect());
    }
    Ok(NsGradients {
        loss,
        grad_x,
        grad_target,
        grad_negatives,
    })
}

/// A matrix view whose rows workers may read and update without locks.
/// Races between workers are benign (hogwild); with a single worker the
/// semantics are exactly sequential.
pub(crate) struct SharedMatrix<'a> {
    cells: &'a [AtomicU32],
    dim: usize,
}

impl<'a> SharedMatrix<'a> {
    pub fn new(matrix: &'a mut EmbeddingMatrix) -> Self {
        let dim = matrix.dim();
        let data = matrix.data_mut();
        // SAFETY: AtomicU32 has the same size, alignment, and bit validity
        // as u32 (and f32 round-trips through bits); the exclusive borrow of
        // the matrix rules out non-atomic access for the view's lifetime.
        let cells = unsafe {
            std::slice::from_raw_parts(data.as_mut_ptr().cast::<AtomicU32>(), data.len())
        };
        SharedMatrix { cells, dim }
    }

    fn cell(&self, row: usize, j: usize) -> &AtomicU32 {
        &self.cells[row * self.dim + j]
    }

    pub fn load_row(&self, row: usize, buf: &mut [f32]) {
        for (j, v) in buf.iter_mut().enumerate() {
            *v = f32::from_bits(self.cell(row, j).load(Ordering::Relaxed));
        }
    }

    /// Accumulates `factor ·` row into an f64 buffer.
    pub fn accumulate_row(&self, row: usize, factor: f64, acc: &mut [f64]) {
        for (j, a) in acc.iter_mut().enumerate() {
            *a += factor * f32::from_bits(self.cell(row, j).load(Ordering::Relaxed)) as f64;
        }
    }

    /// row += factor · g
    pub fn add_scaled(&self, row: usize, g: &[f64], factor: f64) {
        for (j, &gj) in g.iter().enumerate() {
            let cell = self.cell(row, j);
            let old = f32::from_bits(cell.load(Ordering::Relaxed));
            let new = (old as f64 + factor * gj) as f32;
            cell.store(new.to_bits(), Ordering::Relaxed);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.cells
            .iter()
            .all(|c| f32::from_bits(c.load(Ordering::Relaxed)).is_finite())
    }
}

/// One fused negative-sampling step against OUT rows: updates the target
/// and negative rows in place, accumulates the input gradient into
/// `grad_x`, and returns the step's loss. Row values are read before their
/// own update, matching the analytic gradients above.
pub(crate) fn ns_step(
    out: &SharedMatrix,
    target_row: usize,
    negative_rows: &[usize],
    x: &[f32],
    alpha: f64,
    grad_x: &mut [f64],
    row_buf: &mut [f32],
) -> f64 {
    grad_x.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for (pos, &row) in std::iter::once(&target_row)
        .chain(negative_rows)
        .enumerate()
    {
        out.load_row(row, row_buf);
        let s: f64 = x
            .iter()
            .zip(row_buf.iter())
            .map(|(&a, &b)| a as f64 * b as f64)
            .sum();
        let g = if pos == 0 {
            loss -= log_sigmoid(s);
            sigmoid(s) - 1.0
        } else {
            loss -= log_sigmoid(-s);
            sigmoid(s)
        };
        for j in 0..x.len() {
            let rv = row_buf[j] as f64;
            grad_x[j] += g * rv;
            let new = (rv - alpha * g * x[j] as f64) as f32;
            out.cell(row, j).store(new.to_bits(), Ordering::Relaxed);
        }
    }
    loss
}
