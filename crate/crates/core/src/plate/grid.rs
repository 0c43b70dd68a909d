use super::PlateError;

/// Number of node rings held at zero along every edge (value and slope).
pub const CLAMPED_RINGS: usize = 2;

/// Smallest supported grid.
pub const MIN_NODES: usize = 8;

/// Uniform square grid over the planar patch.
///
/// Node `(i, j)` sits at `origin + (i * spacing, j * spacing)`, with `i`
/// running along the planar x axis and `j` along the planar z axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub spacing: f64,
    pub origin: [f64; 2],
}

impl GridSpec {
    pub fn new(n: usize, spacing: f64, origin: [f64; 2]) -> Result<Self, PlateError> {
        if n < MIN_NODES {
            return Err(PlateError::InvalidGrid(format!("n = {n} is below the minimum of {MIN_NODES}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(PlateError::InvalidGrid(format!("spacing {spacing} must be positive")));
        }
        Ok(Self { n, spacing, origin })
    }

    /// Square grid covering the box `[min, max]` with two nodes of padding
    /// on every side, centred on the box.
    pub fn covering(min: [f64; 2], max: [f64; 2], n: usize) -> Result<Self, PlateError> {
        if n < MIN_NODES {
            return Err(PlateError::InvalidGrid(format!("n = {n} is below the minimum of {MIN_NODES}")));
        }
        let extent = (max[0] - min[0]).max(max[1] - min[1]);
        // a degenerate box (single point) still needs a usable cell size
        let extent = if extent > 0.0 { extent } else { 1.0 };
        let spacing = extent / (n - 1 - 2 * CLAMPED_RINGS) as f64;
        let half = 0.5 * (n - 1) as f64 * spacing;
        let center = [0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1])];
        Self::new(n, spacing, [center[0] - half, center[1] - half])
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn node_position(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.spacing,
            self.origin[1] + j as f64 * self.spacing,
        ]
    }

    /// Continuous node coordinates of a planar location.
    pub fn fractional(&self, x: f64, z: f64) -> [f64; 2] {
        [(x - self.origin[0]) / self.spacing, (z - self.origin[1]) / self.spacing]
    }

    /// True for nodes whose deflection is solved for.
    #[inline]
    pub fn is_free(&self, i: usize, j: usize) -> bool {
        let lo = CLAMPED_RINGS;
        let hi = self.n - 1 - CLAMPED_RINGS;
        (lo..=hi).contains(&i) && (lo..=hi).contains(&j)
    }

    /// Side length of the free block of nodes.
    pub fn free_side(&self) -> usize {
        self.n - 2 * CLAMPED_RINGS
    }

    /// Edge length of the equivalent clamped plate.
    ///
    /// Two zero rings pin value and slope at the midpoint between ring 0 and
    /// ring 1, so the effective edge sits half a cell outside ring 1.
    pub fn plate_side(&self) -> f64 {
        (self.n - 2) as f64 * self.spacing
    }

    pub fn same_layout(&self, other: &GridSpec) -> bool {
        self.n == other.n && self.spacing == other.spacing && self.origin == other.origin
    }
}

/// Dense scalar field on the grid nodes, stored row-major in `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField {
    n: usize,
    values: Vec<f64>,
}

impl NodeField {
    pub fn zeros(n: usize) -> Self {
        Self { n, values: vec![0.0; n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(i, j));
            }
        }
        Self { n, values }
    }

    pub fn from_vec(n: usize, values: Vec<f64>) -> Result<Self, PlateError> {
        if values.len() != n * n {
            return Err(PlateError::ShapeMismatch(format!(
                "expected {} values for an {n}x{n} grid, got {}",
                n * n,
                values.len()
            )));
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] += v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { n: self.n, values: self.values.iter().map(|v| v * k).collect() }
    }
}

/// Centred first difference along `i`, one-sided (second order) on the
/// first and last rows.
pub fn diff_i(f: &NodeField, spacing: f64) -> NodeField {
    let n = f.n();
    NodeField::from_fn(n, |i, j| {
        if i == 0 {
            (-3.0 * f.get(0, j) + 4.0 * f.get(1, j) - f.get(2, j)) / (2.0 * spacing)
        } else if i == n - 1 {
            (3.0 * f.get(n - 1, j) - 4.0 * f.get(n - 2, j) + f.get(n - 3, j)) / (2.0 * spacing)
        } else {
            (f.get(i + 1, j) - f.get(i - 1, j)) / (2.0 * spacing)
        }
    })
}

/// Centred first difference along `j`.
pub fn diff_j(f: &NodeField, spacing: f64) -> NodeField {
    let n = f.n();
    NodeField::from_fn(n, |i, j| {
        if j == 0 {
            (-3.0 * f.get(i, 0) + 4.0 * f.get(i, 1) - f.get(i, 2)) / (2.0 * spacing)
        } else if j == n - 1 {
            (3.0 * f.get(i, n - 1) - 4.0 * f.get(i, n - 2) + f.get(i, n - 3)) / (2.0 * spacing)
        } else {
            (f.get(i, j + 1) - f.get(i, j - 1)) / (2.0 * spacing)
        }
    })
}

/// Centred second difference along `i`; the boundary rows reuse the
/// three-point stencil of their inward neighbour.
pub fn diff2_i(f: &NodeField, spacing: f64) -> NodeField {
    let n = f.n();
    let h2 = spacing * spacing;
    NodeField::from_fn(n, |i, j| {
        let c = i.clamp(1, n - 2);
        (f.get(c + 1, j) - 2.0 * f.get(c, j) + f.get(c - 1, j)) / h2
    })
}

/// Centred second difference along `j`.
pub fn diff2_j(f: &NodeField, spacing: f64) -> NodeField {
    let n = f.n();
    let h2 = spacing * spacing;
    NodeField::from_fn(n, |i, j| {
        let c = j.clamp(1, n - 2);
        (f.get(i, c + 1) - 2.0 * f.get(i, c) + f.get(i, c - 1)) / h2
    })
}
