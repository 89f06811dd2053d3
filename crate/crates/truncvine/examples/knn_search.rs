//! Build a kd-tree over random points and ask for k-th neighbor distances,
//! both for points in the set and for fresh query locations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use truncvine::knn::{self, KdTree, PointSet};

fn main() -> truncvine::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let dim = 3;
    let n = 2000;
    let data: Vec<f64> = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
    let tree = KdTree::build(PointSet::new(dim, data)?)?;

    // Members exclude themselves, so k=1 is the nearest other point.
    let member = tree.points().point(17).to_vec();
    for k in [1, 5, 25] {
        let d = tree.kth_nn_distance(&member, k, true)?;
        println!("member point, k={k:>2}: distance {d:.5}");
    }

    let fresh = [0.5, 0.5, 0.5];
    for k in [1, 5, 25] {
        let d = tree.kth_nn_distance(&fresh, k, false)?;
        println!("fresh query,  k={k:>2}: distance {d:.5}");
    }

    // The tree answers match a linear scan bit for bit.
    let brute = knn::naive_kth_nn_distance(tree.points(), &fresh, 5, false)?;
    assert_eq!(tree.kth_nn_distance(&fresh, 5, false)?, brute);
    println!("verified against the naive scan");
    Ok(())
}
