use std::collections::HashMap;

use crate::Vec3;

type Key = [i64; 3];

/// Uniform voxel hash over point ids.
#[derive(Debug, Clone)]
pub struct VoxelIndex {
    voxel: f64,
    cells: HashMap<Key, Vec<usize>>,
    count: usize,
}

impl VoxelIndex {
    /// Buckets positions by voxel; ids are the iteration order.
    pub fn build(positions: impl IntoIterator<Item = Vec3>, voxel: f64) -> Self {
        assert!(voxel > 0.0 && voxel.is_finite(), "voxel size must be positive");
        let mut cells: HashMap<Key, Vec<usize>> = HashMap::new();
        let mut count = 0;
        for (id, p) in positions.into_iter().enumerate() {
            cells.entry(key(&p, voxel)).or_default().push(id);
            count += 1;
        }
        Self { voxel, cells, count }
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel
    }

    /// Ids whose position lies within `radius` of `center`, ascending.
    ///
    /// `position` maps an id back to its coordinates.
    pub fn within(&self, center: &Vec3, radius: f64, position: impl Fn(usize) -> Vec3) -> Vec<usize> {
        let r2 = radius * radius;
        let lo = key(&(center - Vec3::repeat(radius)), self.voxel);
        let hi = key(&(center + Vec3::repeat(radius)), self.voxel);
        let span = |k: usize| (hi[k] - lo[k] + 1).max(0) as u128;
        let visits = span(0) * span(1) * span(2);

        let mut out = Vec::new();
        if visits > self.cells.len() as u128 {
            // a huge ball: walking the occupied cells is cheaper
            for (k, ids) in &self.cells {
                if (0..3).all(|a| k[a] >= lo[a] && k[a] <= hi[a]) {
                    out.extend(ids.iter().copied().filter(|&id| (position(id) - center).norm_squared() <= r2));
                }
            }
        } else {
            for x in lo[0]..=hi[0] {
                for y in lo[1]..=hi[1] {
                    for z in lo[2]..=hi[2] {
                        if let Some(ids) = self.cells.get(&[x, y, z]) {
                            out.extend(ids.iter().copied().filter(|&id| (position(id) - center).norm_squared() <= r2));
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        debug_assert!(out.len() <= self.count);
        out
    }
}

fn key(p: &Vec3, voxel: f64) -> Key {
    // saturating float-to-int casts keep far-away queries well defined
    [(p.x / voxel).floor() as i64, (p.y / voxel).floor() as i64, (p.z / voxel).floor() as i64]
}
