//! Exact k-nearest-neighbor queries over points in the unit hypercube.
//!
//! The tree is an implicit median-split layout over an index permutation:
//! each subtree occupies a contiguous slice with its root at the middle.
//! `naive_kth_nn_dist2` is the exhaustive reference both the tests and the
//! acceptance suite compare against; both paths share [`dist2`], so agreeing
//! answers are bitwise equal.

use crate::error::{Error, Result};

/// Fixed-dimension point collection with all coordinates in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    /// Row-major storage, `len == n_points * dim`.
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("point dimension must be >= 1".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::InvalidInput(format!(
                "{} coordinates do not divide into dimension-{dim} points",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput(format!(
                "coordinate {} at flat index {bad} is outside [0, 1]",
                data[bad]
            )));
        }
        Ok(PointSet { dim, data })
    }

    /// Gather the given rows of the given columns into points, one point per
    /// row, one coordinate per column.
    pub fn from_columns(columns: &[&[f64]], rows: &[usize]) -> Result<Self> {
        let dim = columns.len();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for &r in rows {
            for col in columns {
                data.push(col[r]);
            }
        }
        PointSet::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Squared Euclidean distance. Every query path uses this one function so
/// equal answers are equal to the last bit.
#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Sorted buffer of the `cap` smallest values seen so far.
struct KSmallest {
    cap: usize,
    vals: Vec<f64>,
}

impl KSmallest {
    fn new(cap: usize) -> Self {
        KSmallest {
            cap,
            vals: Vec::with_capacity(cap),
        }
    }

    fn insert(&mut self, v: f64) {
        if self.vals.len() == self.cap {
            if v >= *self.vals.last().unwrap() {
                return;
            }
            self.vals.pop();
        }
        let pos = self.vals.partition_point(|&x| x <= v);
        self.vals.insert(pos, v);
    }

    /// Prune threshold: anything at or above this cannot change the result.
    fn bound(&self) -> f64 {
        if self.vals.len() < self.cap {
            f64::INFINITY
        } else {
            *self.vals.last().unwrap()
        }
    }

    fn kth(&self) -> f64 {
        *self.vals.last().unwrap()
    }
}

/// Balanced k-d tree owning its points.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: PointSet,
    /// Permutation of point indices; subtree = contiguous range, root at mid.
    order: Vec<u32>,
}

impl KdTree {
    pub fn build(points: PointSet) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput(
                "cannot index an empty point set".into(),
            ));
        }
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        build_range(&points, &mut order, 0);
        Ok(KdTree { points, order })
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    /// Squared distance to the k-th nearest indexed point (1-based k).
    ///
    /// With `exclude_self` the query must be a member of the indexed set;
    /// exactly one zero-distance occurrence is skipped, which equals taking
    /// the (k+1)-th order statistic of the full distance multiset.
    pub fn kth_nn_dist2(&self, query: &[f64], k: usize, exclude_self: bool) -> Result<f64> {
        let effective_k = self.check_query(query, k, exclude_self)?;
        let mut heap = KSmallest::new(effective_k);
        self.search(query, 0, self.order.len(), 0, &mut heap);
        Ok(heap.kth())
    }

    /// Euclidean distance variant of [`KdTree::kth_nn_dist2`].
    pub fn kth_nn_distance(&self, query: &[f64], k: usize, exclude_self: bool) -> Result<f64> {
        Ok(self.kth_nn_dist2(query, k, exclude_self)?.sqrt())
    }

    fn check_query(&self, query: &[f64], k: usize, exclude_self: bool) -> Result<usize> {
        if query.len() != self.points.dim() {
            return Err(Error::InvalidInput(format!(
                "query has dimension {}, index has {}",
                query.len(),
                self.points.dim()
            )));
        }
        if k == 0 {
            return Err(Error::InvalidInput("k must be >= 1".into()));
        }
        let effective_k = k + usize::from(exclude_self);
        if effective_k > self.points.len() {
            return Err(Error::InvalidInput(format!(
                "k={k} too large: index holds {} points{}",
                self.points.len(),
                if exclude_self { " and one is the query itself" } else { "" }
            )));
        }
        Ok(effective_k)
    }

    fn search(&self, query: &[f64], lo: usize, hi: usize, depth: usize, heap: &mut KSmallest) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let node = self.order[mid] as usize;
        let point = self.points.point(node);
        heap.insert(dist2(query, point));

        let axis = depth % self.points.dim();
        let diff = query[axis] - point[axis];
        let (near_lo, near_hi, far_lo, far_hi) = if diff < 0.0 {
            (lo, mid, mid + 1, hi)
        } else {
            (mid + 1, hi, lo, mid)
        };
        self.search(query, near_lo, near_hi, depth + 1, heap);
        // The far half only holds points at axis distance >= |diff|; skip it
        // when that alone already exceeds the current k-th best.
        if diff * diff < heap.bound() {
            self.search(query, far_lo, far_hi, depth + 1, heap);
        }
    }
}

fn build_range(points: &PointSet, order: &mut [u32], depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let mid = order.len() / 2;
    let axis = depth % points.dim();
    order.select_nth_unstable_by(mid, |&a, &b| {
        let ca = points.point(a as usize)[axis];
        let cb = points.point(b as usize)[axis];
        ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
    });
    let (left, rest) = order.split_at_mut(mid);
    build_range(points, left, depth + 1);
    build_range(points, &mut rest[1..], depth + 1);
}

/// Exhaustive O(N) reference for the k-th NN squared distance.
pub fn naive_kth_nn_dist2(
    points: &PointSet,
    query: &[f64],
    k: usize,
    exclude_self: bool,
) -> Result<f64> {
    if query.len() != points.dim() {
        return Err(Error::InvalidInput(format!(
            "query has dimension {}, point set has {}",
            query.len(),
            points.dim()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    let effective_k = k + usize::from(exclude_self);
    if effective_k > points.len() {
        return Err(Error::InvalidInput(format!(
            "k={k} too large for {} points",
            points.len()
        )));
    }
    let mut d2: Vec<f64> = (0..points.len())
        .map(|i| dist2(query, points.point(i)))
        .collect();
    d2.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(d2[effective_k - 1])
}

/// Euclidean distance variant of [`naive_kth_nn_dist2`].
pub fn naive_kth_nn_distance(
    points: &PointSet,
    query: &[f64],
    k: usize,
    exclude_self: bool,
) -> Result<f64> {
    Ok(naive_kth_nn_dist2(points, query, k, exclude_self)?.sqrt())
}
