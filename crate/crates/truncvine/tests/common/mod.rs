//! Shared oracles for the integration suites: independent brute-force
//! references, a structure-only random cherry-sequence generator, and
//! closed-form Gaussian information helpers.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use truncvine::builder::{one_step_neighborhood, CherrySequence, WeightedGraph};
use truncvine::cherry::CherryTree;
use truncvine::dataset::{pobs, PobsDivisor, RawDataset};
use truncvine::estimator::{EstimatorConfig, InfoEngine};
use truncvine::synth;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Write a raw dataset as the CSV dialect `load_csv` reads back.
pub fn write_raw_csv(path: &Path, data: &RawDataset) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str(&data.column_names().join(","));
    out.push('\n');
    for r in 0..data.n_rows() {
        for (c, col) in data.columns().iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            // 17 significant digits round-trip any f64 exactly.
            let _ = write!(out, "{:.17e}", col[r]);
        }
        out.push('\n');
    }
    std::fs::write(path, out)
}

/// Random correlation matrix with unit diagonal, shrunk toward the
/// identity so Cholesky stays comfortably positive definite.
pub fn random_correlation(rng: &mut ChaCha20Rng, n: usize) -> Vec<Vec<f64>> {
    let a: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| synth::standard_normal(rng)).collect())
        .collect();
    let mut s = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            s[i][j] = (0..n).map(|k| a[i][k] * a[j][k]).sum();
        }
    }
    let mut corr = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let scaled = s[i][j] / (s[i][i] * s[j][j]).sqrt();
            corr[i][j] = if i == j { 1.0 } else { 0.7 * scaled };
        }
    }
    corr
}

/// Correlation matrix with entries rho^|i-j| (always positive definite
/// for |rho| < 1); adjacent variables are the strongest pairs.
pub fn ar1_correlation(n: usize, rho: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| rho.powi((i as i32 - j as i32).abs()))
                .collect()
        })
        .collect()
}

/// Gaussian-copula pseudo-observations with a fresh estimator engine.
pub fn gaussian_engine(
    corr: &[Vec<f64>],
    m: usize,
    data_seed: u64,
    trunc_level: usize,
    estimator_seed: u64,
) -> InfoEngine {
    let mut rng = ChaCha20Rng::seed_from_u64(data_seed);
    let data = synth::gaussian_sample(&mut rng, corr, m).expect("valid correlation matrix");
    let po = pobs(&data, PobsDivisor::M);
    InfoEngine::new(po, EstimatorConfig::new(trunc_level, estimator_seed))
        .expect("engine fits the default grid budget")
}

/// Maximum spanning tree weight by exhaustive enumeration of all edge
/// subsets of size n-1; only feasible for small n.
pub fn brute_force_mst_weight(w: &[Vec<f64>]) -> f64 {
    let n = w.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j));
        }
    }
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << edges.len()) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let root = find(parent, parent[x]);
                parent[x] = root;
            }
            parent[x]
        }
        let mut weight = 0.0;
        let mut acyclic = true;
        for (b, &(i, j)) in edges.iter().enumerate() {
            if mask & (1 << b) == 0 {
                continue;
            }
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri == rj {
                acyclic = false;
                break;
            }
            parent[ri] = rj;
            weight += w[i][j];
        }
        // n-1 acyclic edges span the graph.
        if acyclic && weight > best {
            best = weight;
        }
    }
    best
}

/// Uniform random labelled tree on n vertices via a random Prufer code.
pub fn random_tree_edges(rng: &mut ChaCha20Rng, n: usize) -> Vec<(usize, usize)> {
    assert!(n >= 2, "a tree needs at least two vertices");
    if n == 2 {
        return vec![(0, 1)];
    }
    let code: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &v in &code {
        degree[v] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut leaves: BTreeSet<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    for &v in &code {
        let leaf = *leaves.iter().next().unwrap();
        leaves.remove(&leaf);
        edges.push((leaf.min(v), leaf.max(v)));
        degree[v] -= 1;
        if degree[v] == 1 {
            leaves.insert(v);
        }
    }
    let mut rest = leaves.into_iter();
    let (a, b) = (rest.next().unwrap(), rest.next().unwrap());
    edges.push((a.min(b), a.max(b)));
    edges
}

fn is_subset(small: &[usize], big: &BTreeSet<usize>) -> bool {
    small.iter().all(|v| big.contains(v))
}

/// Grow one level with the builder's candidate rules but uniformly random
/// selection instead of the greedy argmax. Returns the new graph and the
/// chosen clusters, or None if some step ran out of candidates.
fn grow_level_randomly(
    rng: &mut ChaCha20Rng,
    g_prev: &WeightedGraph,
    prev: &CherryTree,
    level: usize,
) -> Option<(WeightedGraph, Vec<Vec<usize>>)> {
    let n = g_prev.n();
    let a = one_step_neighborhood(g_prev, level).ok()?;
    let mut chosen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut clusters = Vec::new();
    let mut found: BTreeSet<usize> = BTreeSet::new();
    let mut new_edges = Vec::new();

    for step in 0..n - level + 1 {
        // Keyed by cluster so symmetric (i, j)/(j, i) pairs collapse and
        // iteration order is stable for a given rng seed.
        let mut cands: BTreeMap<Vec<usize>, (usize, usize)> = BTreeMap::new();
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        if step == 0 {
            for i in 0..n {
                for j in i + 1..n {
                    pairs.push((i, j));
                }
            }
        } else {
            for &i in &found {
                for j in (0..n).filter(|j| !found.contains(j)) {
                    pairs.push((i, j));
                }
            }
        }
        for (i, j) in pairs {
            let Some(shared) = &a[i][j] else { continue };
            if step > 0 && !is_subset(shared, &found) {
                continue;
            }
            let mut covered = shared.clone();
            covered.push(i);
            covered.sort_unstable();
            let mut fresh = shared.clone();
            fresh.push(j);
            fresh.sort_unstable();
            if !prev.contains_cluster(&covered) || !prev.contains_cluster(&fresh) {
                continue;
            }
            let mut cluster = covered;
            cluster.push(j);
            cluster.sort_unstable();
            if !chosen.contains(&cluster) {
                cands.entry(cluster).or_insert((i, j));
            }
        }
        if cands.is_empty() {
            return None;
        }
        let pick = rng.gen_range(0..cands.len());
        let (cluster, edge) = cands.into_iter().nth(pick).unwrap();
        found.extend(cluster.iter().copied());
        chosen.insert(cluster.clone());
        clusters.push(cluster);
        new_edges.push(edge);
    }

    let mut g = g_prev.clone();
    for (i, j) in new_edges {
        g.add_edge(i, j, 0.0).ok()?;
    }
    Some((g, clusters))
}

/// Random regular cherry sequence built without any data: a random
/// spanning tree, then random (instead of greedy) candidate choices level
/// by level. The weights carried along are zero; only the structure
/// matters to the codec.
pub fn random_cherry_sequence(rng: &mut ChaCha20Rng, n: usize, t: usize) -> CherrySequence {
    assert!((2..=n).contains(&t), "need 2 <= t <= n");
    'attempt: for _ in 0..100 {
        let mut g = WeightedGraph::new(n);
        for (i, j) in random_tree_edges(rng, n) {
            g.add_edge(i, j, 0.0).unwrap();
        }
        let pairs = g.edges().iter().map(|&(i, j, _)| vec![i, j]).collect();
        let mut trees = vec![CherryTree::from_clusters(n, pairs).unwrap()];
        for level in 3..=t {
            match grow_level_randomly(rng, &g, trees.last().unwrap(), level) {
                Some((g_next, clusters)) => {
                    g = g_next;
                    trees.push(CherryTree::from_clusters(n, clusters).unwrap());
                }
                None => continue 'attempt,
            }
        }
        let weights = vec![0.0; trees.len()];
        return CherrySequence::from_parts(trees, weights).unwrap();
    }
    panic!("no valid cherry sequence after 100 attempts (n={n}, t={t})");
}

pub fn submatrix(corr: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter()
        .map(|&i| idx.iter().map(|&j| corr[i][j]).collect())
        .collect()
}

/// Exact information content of a Gaussian-copula margin subset, bits.
pub fn gaussian_subset_info(corr: &[Vec<f64>], idx: &[usize]) -> f64 {
    if idx.len() < 2 {
        return 0.0;
    }
    synth::gaussian_info_bits(&submatrix(corr, idx)).expect("submatrix of a PD matrix is PD")
}

/// Closed-form truncated-vine weight of a cherry tree under a Gaussian
/// copula: sum of cluster infos minus multiplicity-weighted separator
/// infos.
pub fn gaussian_tree_weight(corr: &[Vec<f64>], tree: &CherryTree) -> f64 {
    let clusters: f64 = tree
        .clusters()
        .iter()
        .map(|k| gaussian_subset_info(corr, k))
        .sum();
    let seps: f64 = tree
        .separators()
        .iter()
        .map(|(s, nu)| (*nu as f64 - 1.0) * gaussian_subset_info(corr, s))
        .sum();
    clusters - seps
}

/// Every distinct cluster set reachable by cherry growth at order 3:
/// start from any triangle, repeatedly glue a new vertex onto a 2-subset
/// of an existing cluster. Non-regular results are dropped.
pub fn all_order3_cherry_trees(n: usize) -> Vec<CherryTree> {
    assert!(n >= 3);
    let mut frontier: BTreeSet<Vec<Vec<usize>>> = BTreeSet::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                frontier.insert(vec![vec![a, b, c]]);
            }
        }
    }
    for _ in 3..n {
        let mut next: BTreeSet<Vec<Vec<usize>>> = BTreeSet::new();
        for state in &frontier {
            let used: BTreeSet<usize> = state.iter().flatten().copied().collect();
            for cluster in state {
                for drop in 0..3 {
                    let pair: Vec<usize> = cluster
                        .iter()
                        .enumerate()
                        .filter(|(p, _)| *p != drop)
                        .map(|(_, &v)| v)
                        .collect();
                    for v in (0..n).filter(|v| !used.contains(v)) {
                        let mut k = pair.clone();
                        k.push(v);
                        k.sort_unstable();
                        let mut grown = state.clone();
                        grown.push(k);
                        grown.sort();
                        next.insert(grown);
                    }
                }
            }
        }
        frontier = next;
    }
    frontier
        .into_iter()
        .filter_map(|clusters| CherryTree::from_clusters(n, clusters).ok())
        .filter(|tree| truncvine::cherry::validate_tree(tree).is_ok())
        .collect()
}

/// Apply a variable relabeling to a dataset: new column sigma[v] is old
/// column v.
pub fn permute_columns(data: &RawDataset, sigma: &[usize]) -> RawDataset {
    let n = data.n_cols();
    let mut names = vec![String::new(); n];
    let mut cols = vec![Vec::new(); n];
    for v in 0..n {
        names[sigma[v]] = data.column_names()[v].clone();
        cols[sigma[v]] = data.columns()[v].clone();
    }
    RawDataset::new(names, cols).unwrap()
}

/// Shuffle helper for property tests that need a derangement-free random
/// order from a plain u64 seed.
pub fn shuffled<T>(mut items: Vec<T>, seed: u64) -> Vec<T> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    items.shuffle(&mut rng);
    items
}
