//! Cherry trees: junction trees whose clusters all share one order L, plus
//! the validators the structure search and its tests lean on.
//!
//! A tree is stored as its cluster list; separators and their
//! multiplicities are derived by containment counting. Vertices are
//! 0-based here; conversion to the 1-based matrix convention happens at
//! the serialization boundary.

use std::collections::BTreeMap;

use crate::disjoint::UnionFind;
use crate::error::{Error, Result};

/// Intersection of two sorted index slices.
fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// True when sorted slice `a` is a subset of sorted slice `b`.
pub(crate) fn is_subset(a: &[usize], b: &[usize]) -> bool {
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

/// One junction tree of uniform cluster order over vertices 0..n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CherryTree {
    n_vars: usize,
    order: usize,
    clusters: Vec<Vec<usize>>,
    /// Separator -> multiplicity: the number of clusters containing it.
    separators: Vec<(Vec<usize>, usize)>,
}

impl CherryTree {
    /// Builds a tree from its cluster list, deriving the separators. Only
    /// shape errors (sizes, ranges, duplicates) are rejected here; the
    /// structural properties have dedicated validators below.
    pub fn from_clusters(n_vars: usize, clusters: Vec<Vec<usize>>) -> Result<Self> {
        if n_vars < 2 {
            return Err(Error::InvalidStructure(
                "a cherry tree needs at least 2 vertices".into(),
            ));
        }
        if clusters.is_empty() {
            return Err(Error::InvalidStructure("cluster list is empty".into()));
        }
        let order = clusters[0].len();
        if order < 2 || order > n_vars {
            return Err(Error::InvalidStructure(format!(
                "cluster order {order} outside 2..={n_vars}"
            )));
        }
        let mut sorted: Vec<Vec<usize>> = Vec::with_capacity(clusters.len());
        for mut k in clusters {
            k.sort_unstable();
            if k.len() != order {
                return Err(Error::InvalidStructure(format!(
                    "cluster {k:?} has {} vertices, expected {order}",
                    k.len()
                )));
            }
            if k.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidStructure(format!(
                    "cluster {k:?} repeats a vertex"
                )));
            }
            if *k.last().unwrap() >= n_vars {
                return Err(Error::InvalidStructure(format!(
                    "cluster {k:?} exceeds vertex range 0..{n_vars}"
                )));
            }
            sorted.push(k);
        }
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidStructure("duplicate cluster".into()));
        }

        // Separator candidates are the full-rank pairwise intersections;
        // the multiplicity of each is how many clusters contain it.
        let mut seen: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for (i, a) in sorted.iter().enumerate() {
            for b in sorted.iter().skip(i + 1) {
                let s = intersect(a, b);
                if s.len() == order - 1 {
                    seen.entry(s).or_insert(0);
                }
            }
        }
        for (s, nu) in seen.iter_mut() {
            *nu = sorted.iter().filter(|k| is_subset(s, k)).count();
        }
        let separators: Vec<(Vec<usize>, usize)> =
            seen.into_iter().filter(|&(_, nu)| nu >= 2).collect();

        Ok(CherryTree {
            n_vars,
            order,
            clusters: sorted,
            separators,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Clusters, each sorted, listed lexicographically.
    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    /// Separators with their multiplicities, listed lexicographically.
    pub fn separators(&self) -> &[(Vec<usize>, usize)] {
        &self.separators
    }

    pub fn contains_cluster(&self, cluster: &[usize]) -> bool {
        self.clusters
            .binary_search_by(|k| k.as_slice().cmp(cluster))
            .is_ok()
    }

    /// Total separator instances, counting each separator nu - 1 times.
    pub fn separator_instances(&self) -> usize {
        self.separators.iter().map(|&(_, nu)| nu - 1).sum()
    }
}

/// An order-L tree on n vertices has exactly n-L+1 clusters and n-L
/// separator instances.
pub fn check_counts(tree: &CherryTree) -> Result<()> {
    let expect = tree.n_vars - tree.order + 1;
    if tree.clusters.len() != expect {
        return Err(Error::InvalidStructure(format!(
            "order-{} tree on {} vertices has {} clusters, expected {expect}",
            tree.order,
            tree.n_vars,
            tree.clusters.len()
        )));
    }
    let instances = tree.separator_instances();
    let expect = tree.n_vars - tree.order;
    if instances != expect {
        return Err(Error::InvalidStructure(format!(
            "{instances} separator instances, expected {expect}"
        )));
    }
    Ok(())
}

/// Every vertex must appear in at least one cluster.
pub fn check_coverage(tree: &CherryTree) -> Result<()> {
    let mut hit = vec![false; tree.n_vars];
    for k in &tree.clusters {
        for &v in k {
            hit[v] = true;
        }
    }
    if let Some(v) = hit.iter().position(|&h| !h) {
        return Err(Error::InvalidStructure(format!(
            "vertex {v} appears in no cluster"
        )));
    }
    Ok(())
}

/// Each cluster may contain at most two distinct separators.
pub fn check_regularity(tree: &CherryTree) -> Result<()> {
    for k in &tree.clusters {
        let inside = tree
            .separators
            .iter()
            .filter(|(s, _)| is_subset(s, k))
            .count();
        if inside > 2 {
            return Err(Error::InvalidStructure(format!(
                "cluster {k:?} contains {inside} separators, a regular tree allows 2"
            )));
        }
    }
    Ok(())
}

/// Running intersection: a maximum-weight spanning tree over the clusters
/// (weight = intersection size, ties broken lexicographically) must use
/// only full-rank separators, keep each vertex's clusters connected, and
/// reproduce the derived separator multiset. A junction tree exists for
/// the cluster family if and only if such a spanning tree is one.
pub fn check_running_intersection(tree: &CherryTree) -> Result<()> {
    let c = tree.clusters.len();
    if c == 1 {
        return Ok(());
    }
    let mut edges = Vec::with_capacity(c * (c - 1) / 2);
    for i in 0..c {
        for j in i + 1..c {
            let w = intersect(&tree.clusters[i], &tree.clusters[j]).len();
            edges.push((w, i, j));
        }
    }
    edges.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut uf = UnionFind::new(c);
    let mut picked = Vec::with_capacity(c - 1);
    for &(w, i, j) in &edges {
        if uf.union(i, j) {
            picked.push((w, i, j));
        }
    }

    let mut labels: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for &(w, i, j) in &picked {
        if w != tree.order - 1 {
            return Err(Error::InvalidStructure(format!(
                "junction tree joins {:?} and {:?} over {w} shared vertices, expected {}",
                tree.clusters[i],
                tree.clusters[j],
                tree.order - 1
            )));
        }
        let s = intersect(&tree.clusters[i], &tree.clusters[j]);
        *labels.entry(s).or_insert(0) += 1;
    }

    for v in 0..tree.n_vars {
        let members: Vec<usize> = (0..c)
            .filter(|&i| tree.clusters[i].binary_search(&v).is_ok())
            .collect();
        if members.is_empty() {
            continue;
        }
        let inner = picked
            .iter()
            .filter(|&&(_, i, j)| {
                members.binary_search(&i).is_ok() && members.binary_search(&j).is_ok()
            })
            .count();
        if inner != members.len() - 1 {
            return Err(Error::InvalidStructure(format!(
                "clusters containing vertex {v} do not form a connected subtree"
            )));
        }
    }

    let derived: BTreeMap<Vec<usize>, usize> = tree
        .separators
        .iter()
        .map(|(s, nu)| (s.clone(), nu - 1))
        .collect();
    if labels != derived {
        return Err(Error::InvalidStructure(format!(
            "junction tree separator multiset {labels:?} disagrees with containment counts {derived:?}"
        )));
    }
    Ok(())
}

/// The union graph of the clusters must be chordal with maximum clique
/// size equal to the cluster order. Checked by maximum-cardinality search
/// followed by perfect-elimination verification.
pub fn check_chordality(tree: &CherryTree) -> Result<()> {
    let n = tree.n_vars;
    let mut adj = vec![vec![false; n]; n];
    for k in &tree.clusters {
        for (idx, &a) in k.iter().enumerate() {
            for &b in k.iter().skip(idx + 1) {
                adj[a][b] = true;
                adj[b][a] = true;
            }
        }
    }

    let mut weight = vec![0usize; n];
    let mut pos = vec![usize::MAX; n];
    let mut pick = Vec::with_capacity(n);
    for step in 0..n {
        let v = (0..n)
            .filter(|&v| pos[v] == usize::MAX)
            .max_by_key(|&v| (weight[v], std::cmp::Reverse(v)))
            .unwrap();
        pos[v] = step;
        pick.push(v);
        for u in 0..n {
            if adj[v][u] && pos[u] == usize::MAX {
                weight[u] += 1;
            }
        }
    }

    // Eliminate in reverse visit order; each vertex's still-present
    // neighborhood must be a clique.
    let mut max_clique = 1;
    for i in (0..n).rev() {
        let v = pick[i];
        let back: Vec<usize> = (0..n).filter(|&u| adj[v][u] && pos[u] < i).collect();
        for (bi, &a) in back.iter().enumerate() {
            for &b in back.iter().skip(bi + 1) {
                if !adj[a][b] {
                    return Err(Error::InvalidStructure(format!(
                        "level graph is not chordal: {a} and {b} are non-adjacent neighbors of {v}"
                    )));
                }
            }
        }
        max_clique = max_clique.max(back.len() + 1);
    }
    if max_clique != tree.order {
        return Err(Error::InvalidStructure(format!(
            "level graph has maximum clique size {max_clique}, expected the cluster order {}",
            tree.order
        )));
    }
    Ok(())
}

/// Every cluster of the higher tree must be the union of two clusters of
/// the lower one; two distinct subsets of full rank necessarily share
/// order-2 vertices, so containment of two halves is the whole condition.
pub fn check_nesting(lower: &CherryTree, higher: &CherryTree) -> Result<()> {
    if higher.order != lower.order + 1 {
        return Err(Error::InvalidStructure(format!(
            "nesting requires consecutive orders, got {} and {}",
            lower.order, higher.order
        )));
    }
    if higher.n_vars != lower.n_vars {
        return Err(Error::InvalidStructure(
            "trees in one sequence must share the vertex set".into(),
        ));
    }
    for k in &higher.clusters {
        let halves = lower.clusters.iter().filter(|c| is_subset(c, k)).count();
        if halves < 2 {
            return Err(Error::InvalidStructure(format!(
                "cluster {k:?} is not the union of two order-{} clusters",
                lower.order
            )));
        }
    }
    Ok(())
}

/// All single-tree validators in one call.
pub fn validate_tree(tree: &CherryTree) -> Result<()> {
    check_counts(tree)?;
    check_coverage(tree)?;
    check_regularity(tree)?;
    check_running_intersection(tree)?;
    check_chordality(tree)?;
    Ok(())
}
