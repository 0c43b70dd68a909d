//! Discrete variable-rigidity plate operator.
//!
//! Every term of
//!
//! ```text
//! D ∇⁴w + 2 D_x ∂x(∇²w) + 2 D_z ∂z(∇²w) + ∇²D ∇²w
//!     − (1 − ν)(D_xx w_zz − 2 D_xz w_xz + D_zz w_xx) = q
//! ```
//!
//! is discretized with central differences whose footprint fits inside the
//! 13-point biharmonic stencil, so the operator is stored as 13
//! coefficients per free node.

use super::grid::{GridSpec, NodeField, CLAMPED_RINGS};
use super::rigidity::RigidityGrid;
use super::PlateError;

/// Stencil offsets `(di, dj)`; the centre comes first.
pub const OFFSETS: [(isize, isize); 13] = [
    (0, 0),
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
    (2, 0),
    (-2, 0),
    (0, 2),
    (0, -2),
];

const C: usize = 0;
const E: usize = 1;
const W: usize = 2;
const N: usize = 3;
const S: usize = 4;
const NE: usize = 5;
const SE: usize = 6;
const NW: usize = 7;
const SW: usize = 8;
const EE: usize = 9;
const WW: usize = 10;
const NN: usize = 11;
const SS: usize = 12;

/// Assembled operator over the free nodes of one grid.
#[derive(Debug, Clone)]
pub struct PlateOperator {
    spec: GridSpec,
    /// `coeffs[k][f]` is stencil entry `k` of free node `f` (row-major free order).
    coeffs: Vec<Vec<f64>>,
}

impl PlateOperator {
    pub fn assemble(rig: &RigidityGrid) -> Self {
        let spec = rig.spec;
        let h = spec.spacing;
        let h2 = h * h;
        let h3 = h2 * h;
        let h4 = h2 * h2;
        let nu1 = 1.0 - rig.poisson;
        let m = spec.free_side();
        let mut coeffs: Vec<Vec<f64>> = (0..13).map(|_| Vec::with_capacity(m * m)).collect();
        for i in CLAMPED_RINGS..CLAMPED_RINGS + m {
            for j in CLAMPED_RINGS..CLAMPED_RINGS + m {
                let d = rig.d.get(i, j);
                let dx = rig.dx.get(i, j);
                let dz = rig.dz.get(i, j);
                let lap = rig.lap_d.get(i, j);
                let dxx = rig.dxx.get(i, j);
                let dzz = rig.dzz.get(i, j);
                let dxz = rig.dxz.get(i, j);
                let mut c = [0.0; 13];

                // D ∇⁴w
                let b = d / h4;
                c[C] += 20.0 * b;
                for k in [E, W, N, S] {
                    c[k] -= 8.0 * b;
                }
                for k in [NE, SE, NW, SW] {
                    c[k] += 2.0 * b;
                }
                for k in [EE, WW, NN, SS] {
                    c[k] += b;
                }

                // 2 D_x ∂x(∇²w)
                let gx = 2.0 * dx / (2.0 * h3);
                c[EE] += gx;
                c[WW] -= gx;
                c[NE] += gx;
                c[SE] += gx;
                c[NW] -= gx;
                c[SW] -= gx;
                c[E] -= 4.0 * gx;
                c[W] += 4.0 * gx;

                // 2 D_z ∂z(∇²w)
                let gz = 2.0 * dz / (2.0 * h3);
                c[NN] += gz;
                c[SS] -= gz;
                c[NE] += gz;
                c[NW] += gz;
                c[SE] -= gz;
                c[SW] -= gz;
                c[N] -= 4.0 * gz;
                c[S] += 4.0 * gz;

                // ∇²D ∇²w
                let l = lap / h2;
                c[C] -= 4.0 * l;
                for k in [E, W, N, S] {
                    c[k] += l;
                }

                // −(1−ν) D_xx w_zz
                let a = -nu1 * dxx / h2;
                c[N] += a;
                c[S] += a;
                c[C] -= 2.0 * a;

                // −(1−ν) D_zz w_xx
                let a = -nu1 * dzz / h2;
                c[E] += a;
                c[W] += a;
                c[C] -= 2.0 * a;

                // +2(1−ν) D_xz w_xz
                let a = 2.0 * nu1 * dxz / (4.0 * h2);
                c[NE] += a;
                c[SW] += a;
                c[SE] -= a;
                c[NW] -= a;

                for (k, v) in c.into_iter().enumerate() {
                    coeffs[k].push(v);
                }
            }
        }
        Self { spec, coeffs }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    /// Number of free nodes along one side.
    pub fn side(&self) -> usize {
        self.spec.free_side()
    }

    pub fn unknowns(&self) -> usize {
        self.coeffs[0].len()
    }

    /// Stencil of free node `(i, j)` given in full-grid indices.
    pub fn stencil(&self, i: usize, j: usize) -> [f64; 13] {
        let m = self.side();
        self.free_stencil((i - CLAMPED_RINGS) * m + (j - CLAMPED_RINGS))
    }

    /// Stencil of free node number `f`.
    pub fn free_stencil(&self, f: usize) -> [f64; 13] {
        std::array::from_fn(|k| self.coeffs[k][f])
    }

    pub fn check_center_positive(&self) -> Result<(), PlateError> {
        let m = self.side();
        for (f, &c) in self.coeffs[C].iter().enumerate() {
            if !(c > 0.0) {
                return Err(PlateError::IllConditioned {
                    i: f / m + CLAMPED_RINGS,
                    j: f % m + CLAMPED_RINGS,
                    coefficient: c,
                });
            }
        }
        Ok(())
    }

    /// Calls `visit(i, row_values)` with `(A w)` for each free row `i`.
    fn for_each_row(&self, w: &[f64], mut visit: impl FnMut(usize, &[f64])) {
        let n = self.spec.n;
        let m = self.side();
        let lo = CLAMPED_RINGS;
        let mut out = vec![0.0; m];
        for fi in 0..m {
            let i = fi + lo;
            let row = |r: usize, shift: isize| {
                let start = (r * n + lo) as isize + shift;
                &w[start as usize..start as usize + m]
            };
            let centre = row(i, 0);
            let (east, west) = (row(i + 1, 0), row(i - 1, 0));
            let (north, south) = (row(i, 1), row(i, -1));
            let (ne, se) = (row(i + 1, 1), row(i + 1, -1));
            let (nw, sw) = (row(i - 1, 1), row(i - 1, -1));
            let (ee, ww) = (row(i + 2, 0), row(i - 2, 0));
            let (nn, ss) = (row(i, 2), row(i, -2));
            let span = fi * m..fi * m + m;
            let c: [&[f64]; 13] = std::array::from_fn(|k| &self.coeffs[k][span.clone()]);
            // equal lengths up front let the loop run without bounds checks
            let out = &mut out[..m];
            let c: [&[f64]; 13] = c.map(|s| &s[..m]);
            for j in 0..m {
                out[j] = c[C][j] * centre[j]
                    + c[E][j] * east[j]
                    + c[W][j] * west[j]
                    + c[N][j] * north[j]
                    + c[S][j] * south[j]
                    + c[NE][j] * ne[j]
                    + c[SE][j] * se[j]
                    + c[NW][j] * nw[j]
                    + c[SW][j] * sw[j]
                    + c[EE][j] * ee[j]
                    + c[WW][j] * ww[j]
                    + c[NN][j] * nn[j]
                    + c[SS][j] * ss[j];
            }
            visit(i, out);
        }
    }

    /// `(A w)` at every free node; clamped nodes of the result are zero.
    pub fn apply(&self, w: &NodeField) -> NodeField {
        let n = self.spec.n;
        let mut out = NodeField::zeros(n);
        self.for_each_row(w.values(), |i, row| {
            out.values_mut()[i * n + CLAMPED_RINGS..i * n + CLAMPED_RINGS + row.len()].copy_from_slice(row);
        });
        out
    }

    /// Max-norm of `q − A w` over the free nodes.
    pub fn residual_max(&self, w: &NodeField, q: &NodeField) -> f64 {
        let n = self.spec.n;
        let mut worst = 0.0_f64;
        self.for_each_row(w.values(), |i, row| {
            let qrow = &q.values()[i * n + CLAMPED_RINGS..i * n + CLAMPED_RINGS + row.len()];
            for (a, b) in qrow.iter().zip(row) {
                worst = worst.max((a - b).abs());
            }
        });
        worst
    }

    /// One damped Jacobi sweep from `w` into `next`.
    ///
    /// Returns the squared l2 norms of the update and of the residual at `w`.
    pub(crate) fn jacobi_sweep(&self, w: &[f64], q: &[f64], omega: f64, next: &mut [f64]) -> (f64, f64) {
        let n = self.spec.n;
        let m = self.side();
        let mut change2 = 0.0;
        let mut residual2 = 0.0;
        self.for_each_row(w, |i, row| {
            let span = i * n + CLAMPED_RINGS..i * n + CLAMPED_RINGS + m;
            let diag = &self.coeffs[C][(i - CLAMPED_RINGS) * m..(i - CLAMPED_RINGS) * m + m];
            let (qrow, wrow) = (&q[span.clone()], &w[span.clone()]);
            let out = &mut next[span];
            for j in 0..m {
                let r = qrow[j] - row[j];
                let step = omega * r / diag[j];
                residual2 += r * r;
                change2 += step * step;
                out[j] = wrow[j] + step;
            }
        });
        (change2, residual2)
    }
}
