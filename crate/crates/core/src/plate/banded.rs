//! Banded LU factorization of the plate operator.
//!
//! Free nodes are numbered row-major, so the 13-point stencil couples
//! unknowns at most `2 * side` apart. Partial pivoting widens the upper
//! band to `lower + upper`, which the storage reserves up front.

use std::time::Instant;

use super::grid::{NodeField, CLAMPED_RINGS};
use super::jacobi::CancelToken;
use super::load::LoadField;
use super::rigidity::RigidityGrid;
use super::stencil::{PlateOperator, OFFSETS};
use super::{DeformationField, PlateError};

/// Column-major band storage in the LAPACK `gbtrf` layout.
#[derive(Debug, Clone)]
struct BandMatrix {
    size: usize,
    lower: usize,
    upper: usize,
    ld: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    fn zeros(size: usize, lower: usize, upper: usize) -> Self {
        let ld = 2 * lower + upper + 1;
        Self { size, lower, upper, ld, data: vec![0.0; ld * size] }
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        self.lower + self.upper + row - col + col * self.ld
    }

    #[inline]
    fn get(&self, row: usize, col: usize) -> f64 {
        self.data[self.slot(row, col)]
    }

    #[inline]
    fn set(&mut self, row: usize, col: usize, v: f64) {
        let s = self.slot(row, col);
        self.data[s] = v;
    }
}

/// LU factors of one plate operator, reusable across loads.
#[derive(Debug, Clone)]
pub struct PlateFactorization {
    op: PlateOperator,
    lu: BandMatrix,
    pivots: Vec<usize>,
}

impl PlateFactorization {
    pub fn factor(rig: &RigidityGrid) -> Result<Self, PlateError> {
        Self::factor_with_cancel(rig, &CancelToken::new())
    }

    pub fn factor_with_cancel(rig: &RigidityGrid, cancel: &CancelToken) -> Result<Self, PlateError> {
        let op = PlateOperator::assemble(rig);
        op.check_center_positive()?;
        let m = op.side();
        let size = op.unknowns();
        let band = 2 * m;
        let mut a = BandMatrix::zeros(size, band, band);
        for row in 0..size {
            let c = op.free_stencil(row);
            let (fi, fj) = ((row / m) as isize, (row % m) as isize);
            for (k, &(di, dj)) in OFFSETS.iter().enumerate() {
                let (ci, cj) = (fi + di, fj + dj);
                if ci < 0 || cj < 0 || ci >= m as isize || cj >= m as isize {
                    continue;
                }
                a.set(row, ci as usize * m + cj as usize, c[k]);
            }
        }

        let lower = a.lower;
        let full_upper = a.lower + a.upper;
        let mut pivots = vec![0; size];
        let mut reach = 0usize;
        for col in 0..size {
            if col % m == 0 && cancel.is_cancelled() {
                return Err(PlateError::Cancelled);
            }
            let below = lower.min(size - 1 - col);
            let mut p = 0;
            let mut best = a.get(col, col).abs();
            for r in 1..=below {
                let v = a.get(col + r, col).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            pivots[col] = col + p;
            if best == 0.0 {
                return Err(PlateError::SingularOperator);
            }
            reach = reach.max((col + a.upper + p).min(size - 1));
            if p != 0 {
                for c in col..=reach {
                    let (s1, s2) = (a.slot(col, c), a.slot(col + p, c));
                    a.data.swap(s1, s2);
                }
            }
            let pivot = a.get(col, col);
            let base = a.slot(col + 1, col);
            for v in &mut a.data[base..base + below] {
                *v /= pivot;
            }
            for c in col + 1..=reach {
                let top = a.get(col, c);
                if top == 0.0 {
                    continue;
                }
                let dst = a.slot(col + 1, c);
                let src = a.slot(col + 1, col);
                debug_assert!(c - col <= full_upper);
                for r in 0..below {
                    let l = a.data[src + r];
                    a.data[dst + r] -= l * top;
                }
            }
        }
        Ok(Self { op, lu: a, pivots })
    }

    pub fn operator(&self) -> &PlateOperator {
        &self.op
    }

    /// Solves for the deflection under `load`.
    pub fn solve(&self, load: &LoadField) -> Result<DeformationField, PlateError> {
        let spec = self.op.spec();
        if !spec.same_layout(&load.spec) {
            return Err(PlateError::ShapeMismatch("load grid differs from the factored grid".into()));
        }
        let m = self.op.side();
        let size = self.lu.size;
        let mut b: Vec<f64> = (0..size)
            .map(|k| load.q.get(k / m + CLAMPED_RINGS, k % m + CLAMPED_RINGS))
            .collect();

        let lower = self.lu.lower;
        for col in 0..size {
            let p = self.pivots[col];
            if p != col {
                b.swap(col, p);
            }
            let below = lower.min(size - 1 - col);
            let x = b[col];
            if x != 0.0 {
                let src = self.lu.slot(col + 1, col);
                for r in 0..below {
                    b[col + 1 + r] -= self.lu.data[src + r] * x;
                }
            }
        }
        let reach = self.lu.lower + self.lu.upper;
        for col in (0..size).rev() {
            b[col] /= self.lu.get(col, col);
            let x = b[col];
            if x != 0.0 {
                let first = col.saturating_sub(reach);
                for r in first..col {
                    b[r] -= self.lu.get(r, col) * x;
                }
            }
        }

        let mut w = NodeField::zeros(spec.n);
        for (k, v) in b.into_iter().enumerate() {
            w.set(k / m + CLAMPED_RINGS, k % m + CLAMPED_RINGS, v);
        }
        let residual = self.op.residual_max(&w, &load.q);
        Ok(DeformationField { spec, w, iterations: 1, residual })
    }
}

/// One-shot direct solve, also reporting elapsed time in milliseconds.
pub fn solve_direct(rig: &RigidityGrid, load: &LoadField) -> Result<(DeformationField, f64), PlateError> {
    let start = Instant::now();
    let field = PlateFactorization::factor(rig)?.solve(load)?;
    Ok((field, start.elapsed().as_secs_f64() * 1e3))
}
