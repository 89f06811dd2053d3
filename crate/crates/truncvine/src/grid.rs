//! Deterministic uniform grids over [0, 1]^d standing in for an independent
//! reference sample, pre-indexed for k-NN queries.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::knn::{KdTree, PointSet};

/// Default cap on the number of grid points a run may allocate.
pub const DEFAULT_GRID_BUDGET: u64 = 50_000_000;

/// All `side^d` points with coordinates `k/(side-1)`, `k` in `0..side`,
/// where `side` is the smallest integer with `side^d >= m`.
#[derive(Debug, Clone)]
pub struct UniformGrid {
    dim: usize,
    side: usize,
    tree: KdTree,
}

impl UniformGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn n_points(&self) -> usize {
        self.tree.points().len()
    }

    pub fn tree(&self) -> &KdTree {
        &self.tree
    }

    pub fn points(&self) -> &PointSet {
        self.tree.points()
    }
}

/// `side^d` without overflow; saturates at u128::MAX.
fn pow_points(side: usize, d: usize) -> u128 {
    (side as u128)
        .checked_pow(d as u32)
        .unwrap_or(u128::MAX)
}

/// Smallest integer `s` with `s^d >= m`. Float guess, then exact integer
/// adjustment, so large `m` cannot round to a wrong side length.
fn grid_side(d: usize, m: usize) -> usize {
    let mut s = (m as f64).powf(1.0 / d as f64).ceil() as usize;
    s = s.max(1);
    while pow_points(s, d) < m as u128 {
        s += 1;
    }
    while s > 1 && pow_points(s - 1, d) >= m as u128 {
        s -= 1;
    }
    s
}

/// Build the dimension-`d` grid for a sample of `m` rows.
pub fn generate_grid(d: usize, m: usize, budget: u64) -> Result<UniformGrid> {
    if d < 1 {
        return Err(Error::InvalidInput("grid dimension must be >= 1".into()));
    }
    if m < 2 {
        return Err(Error::InvalidInput(format!(
            "grid needs a sample of at least 2 rows, got {m}"
        )));
    }
    let side = grid_side(d, m);
    debug_assert!(side >= 2, "m >= 2 forces side >= 2");
    let n_points = pow_points(side, d);
    if n_points > budget as u128 {
        return Err(Error::GridBudget {
            dim: d,
            side,
            points: n_points,
            budget,
        });
    }

    let n_points = n_points as usize;
    let denom = (side - 1) as f64;
    let mut data = Vec::with_capacity(n_points * d);
    // Odometer over d digits in base `side`; coordinate k/(side-1).
    let mut digits = vec![0usize; d];
    loop {
        for &k in digits.iter() {
            data.push(k as f64 / denom);
        }
        let mut pos = d;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < side {
                break;
            }
            digits[pos] = 0;
        }
        if digits.iter().all(|&k| k == 0) {
            break;
        }
    }
    debug_assert_eq!(data.len(), n_points * d);

    let tree = KdTree::build(PointSet::new(d, data)?)?;
    Ok(UniformGrid {
        dim: d,
        side,
        tree,
    })
}

/// One grid per dimension 2..=t, built once and reused for every estimate.
pub fn precompute_grids(m: usize, t: usize, budget: u64) -> Result<BTreeMap<usize, UniformGrid>> {
    if t < 2 {
        return Err(Error::InvalidInput(format!(
            "truncation level must be >= 2, got {t}"
        )));
    }
    let mut grids = BTreeMap::new();
    for d in 2..=t {
        grids.insert(d, generate_grid(d, m, budget)?);
    }
    Ok(grids)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn side_is_smallest_power_cover() {
        assert_eq!(grid_side(2, 9), 3);
        assert_eq!(grid_side(2, 5), 3);
        assert_eq!(grid_side(3, 8), 2);
        assert_eq!(grid_side(2, 100), 10);
        assert_eq!(grid_side(3, 100), 5, "4^3 = 64 < 100 <= 125 = 5^3");
        assert_eq!(grid_side(4, 100), 4, "3^4 = 81 < 100 <= 256 = 4^4");
        assert_eq!(grid_side(1, 17), 17);
    }

    #[test]
    fn grid_points_cover_unit_cube_corners() {
        let g = generate_grid(2, 9, DEFAULT_GRID_BUDGET).unwrap();
        assert_eq!(g.side(), 3);
        assert_eq!(g.n_points(), 9);
        let pts = g.points();
        let mut coords: Vec<Vec<f64>> = (0..pts.len()).map(|i| pts.point(i).to_vec()).collect();
        coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(coords[0], vec![0.0, 0.0]);
        assert_eq!(coords[8], vec![1.0, 1.0]);
        assert_eq!(coords[4], vec![0.5, 0.5]);
    }

    #[test]
    fn tiny_sample_still_gets_corner_grids() {
        let g2 = generate_grid(2, 2, DEFAULT_GRID_BUDGET).unwrap();
        assert_eq!(g2.n_points(), 4, "m=2 d=2 gives the four corners");
        let g3 = generate_grid(3, 2, DEFAULT_GRID_BUDGET).unwrap();
        assert_eq!(g3.n_points(), 8);
    }

    #[test]
    fn precompute_covers_each_dimension() {
        let grids = precompute_grids(100, 4, DEFAULT_GRID_BUDGET).unwrap();
        assert_eq!(grids.len(), 3);
        assert_eq!(grids[&2].n_points(), 100);
        assert_eq!(grids[&3].n_points(), 125);
        assert_eq!(grids[&4].n_points(), 256);
    }

    #[test]
    fn budget_overflow_is_a_resource_error() {
        let err = generate_grid(3, 1000, 100).unwrap_err();
        match err {
            Error::GridBudget { points, .. } => assert_eq!(points, 1000),
            other => panic!("expected a grid budget error, got {other}"),
        }
    }
}
