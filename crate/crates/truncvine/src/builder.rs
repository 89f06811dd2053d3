//! Greedy construction of the cherry-tree sequence behind a truncated
//! vine. A maximum spanning tree over pairwise information seeds the
//! order-2 tree; each later level repeatedly merges two neighboring
//! clusters of the previous level, picking the merge with the largest
//! information increment until the level has its n-L+1 clusters.

use std::collections::{BTreeMap, BTreeSet};

use crate::cherry::{self, CherryTree};
use crate::disjoint::UnionFind;
use crate::error::{Error, Result};
use crate::estimator::InfoEngine;

/// Undirected graph on 0..n with optional edge weights. Weights only
/// carry meaning for the complete pairwise-information graph; the level
/// graphs use them as placeholders.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    adjacency: Vec<Vec<bool>>,
    weights: Vec<Vec<f64>>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        WeightedGraph {
            n,
            adjacency: vec![vec![false; n]; n],
            weights: vec![vec![0.0; n]; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_edge(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        if i == j {
            return Err(Error::InvalidInput(format!("self-loop at vertex {i}")));
        }
        if i >= self.n || j >= self.n {
            return Err(Error::InvalidInput(format!(
                "edge ({i},{j}) outside vertex range 0..{}",
                self.n
            )));
        }
        if self.adjacency[i][j] {
            return Err(Error::InvalidInput(format!("edge ({i},{j}) already present")));
        }
        self.adjacency[i][j] = true;
        self.adjacency[j][i] = true;
        self.weights[i][j] = w;
        self.weights[j][i] = w;
        Ok(())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i][j]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i][j]
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.n).filter(|&u| self.adjacency[v][u]).collect()
    }

    /// Edges as (i, j, weight) with i < j, ordered lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.adjacency[i][j] {
                    out.push((i, j, self.weights[i][j]));
                }
            }
        }
        out
    }
}

/// Pairwise information matrix: entry (i, j) is the engine's estimate for
/// the column pair, one estimate per unordered pair, zero diagonal.
pub fn mutual_information_matrix(engine: &mut InfoEngine) -> Result<Vec<Vec<f64>>> {
    let n = engine.n_vars();
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 variables".into()));
    }
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = engine.info(&[i, j])?;
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    Ok(m)
}

/// Maximum-weight spanning tree of the complete graph described by a
/// symmetric weight matrix, plus its total weight. Equal weights fall
/// back to lexicographic edge order, so the output is deterministic.
pub fn max_spanning_tree(m: &[Vec<f64>]) -> Result<(WeightedGraph, f64)> {
    let n = m.len();
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 vertices".into()));
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidInput(format!(
                "weight matrix row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        for j in i + 1..n {
            if !row[j].is_finite() {
                return Err(Error::InvalidInput(format!(
                    "weight ({i},{j}) is not finite"
                )));
            }
            edges.push((row[j], i, j));
        }
    }
    edges.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut uf = UnionFind::new(n);
    let mut tree = WeightedGraph::new(n);
    let mut total = 0.0;
    for &(w, i, j) in &edges {
        if uf.union(i, j) {
            tree.add_edge(i, j, w)?;
            total += w;
        }
    }
    Ok((tree, total))
}

/// Entry (s, t) holds the common neighborhood of s and t (minus the two
/// vertices themselves) exactly when that neighborhood has level-2
/// vertices; pairs with any other overlap stay empty.
pub type NeighborhoodMatrix = Vec<Vec<Option<Vec<usize>>>>;

/// Common-neighborhood matrix of the level graph, filtered to the size
/// required at `level`.
pub fn one_step_neighborhood(g: &WeightedGraph, level: usize) -> Result<NeighborhoodMatrix> {
    if level < 3 {
        return Err(Error::InvalidInput(format!(
            "neighborhood matrix needs level >= 3, got {level}"
        )));
    }
    let n = g.n();
    let nbrs: Vec<Vec<usize>> = (0..n).map(|v| g.neighbors(v)).collect();
    let mut a: NeighborhoodMatrix = vec![vec![None; n]; n];
    for s in 0..n {
        for t in s + 1..n {
            let mut w: Vec<usize> = nbrs[s]
                .iter()
                .filter(|v| nbrs[t].binary_search(v).is_ok())
                .copied()
                .collect();
            w.retain(|&v| v != s && v != t);
            if w.len() == level - 2 {
                a[s][t] = Some(w.clone());
                a[t][s] = Some(w);
            }
        }
    }
    Ok(a)
}

/// One candidate considered during a greedy step: the cluster it would
/// add, the separator it attaches through (absent for a level's first
/// cluster), and the weight increment it offers.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRecord {
    pub cluster: Vec<usize>,
    pub separator: Option<Vec<usize>>,
    pub value: f64,
}

/// Everything one greedy step looked at, plus what it took.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub chosen: Vec<usize>,
    pub candidates: Vec<CandidateRecord>,
}

/// Full decision log of one level's growth, for audit tests.
#[derive(Debug, Clone)]
pub struct LevelAudit {
    pub level: usize,
    pub steps: Vec<StepRecord>,
}

#[derive(Clone)]
struct Candidate {
    cluster: Vec<usize>,
    separator: Option<Vec<usize>>,
    value: f64,
    edge: (usize, usize),
}

/// Enumerate the clusters reachable in one merge. A pair (i, j) of the
/// neighborhood matrix qualifies only if both halves of the would-be
/// cluster are clusters of the previous level: anything else would break
/// the nesting invariant (and an adjacent pair cannot qualify, since its
/// two halves plus the edge would form a clique one order too large).
/// After the first step, i must be a found vertex, j a fresh one, and the
/// shared neighborhood already found, so each merge adds exactly one
/// vertex through the separator (i, A_ij).
fn enumerate_candidates(
    a: &NeighborhoodMatrix,
    prev: &CherryTree,
    found: Option<&BTreeSet<usize>>,
    chosen: &BTreeSet<Vec<usize>>,
    engine: &mut InfoEngine,
) -> Result<Vec<Candidate>> {
    let n = a.len();
    let mut pairs = Vec::new();
    match found {
        None => {
            for i in 0..n {
                for j in i + 1..n {
                    pairs.push((i, j));
                }
            }
        }
        Some(f) => {
            for &i in f {
                for j in 0..n {
                    if !f.contains(&j) {
                        pairs.push((i, j));
                    }
                }
            }
        }
    }

    let mut out: BTreeMap<Vec<usize>, Candidate> = BTreeMap::new();
    for (i, j) in pairs {
        let Some(shared) = &a[i][j] else { continue };
        if let Some(f) = found {
            if !shared.iter().all(|v| f.contains(v)) {
                continue;
            }
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
        let mut cluster = covered.clone();
        cluster.push(j);
        cluster.sort_unstable();
        if chosen.contains(&cluster) || out.contains_key(&cluster) {
            continue;
        }
        let value = match found {
            None => engine.info(&cluster)?,
            Some(_) => engine.info(&cluster)? - engine.info(&covered)?,
        };
        out.insert(
            cluster.clone(),
            Candidate {
                cluster,
                separator: found.map(|_| covered),
                value,
                edge: (i, j),
            },
        );
    }
    Ok(out.into_values().collect())
}

/// Largest value wins; on ties the lexicographically smallest cluster
/// (the earliest in the already-sorted candidate list) is kept.
fn select_best(cands: &[Candidate]) -> Candidate {
    let mut best = &cands[0];
    for c in &cands[1..] {
        if c.value > best.value {
            best = c;
        }
    }
    best.clone()
}

/// Grow the order-`level` tree from the previous level's graph and tree,
/// recording every candidate each step weighed.
pub fn grow_level_audited(
    engine: &mut InfoEngine,
    g_prev: &WeightedGraph,
    prev: &CherryTree,
    level: usize,
) -> Result<(WeightedGraph, CherryTree, f64, LevelAudit)> {
    let n = g_prev.n();
    if level < 3 || level > n {
        return Err(Error::InvalidInput(format!(
            "level {level} outside 3..={n}"
        )));
    }
    if prev.order() + 1 != level {
        return Err(Error::InvalidInput(format!(
            "previous tree has order {}, expected {}",
            prev.order(),
            level - 1
        )));
    }

    // The neighborhood matrix is computed once per level; the edges the
    // merges introduce join the graph only after the level is complete.
    let a = one_step_neighborhood(g_prev, level)?;
    let steps_total = n - level + 1;
    let mut chosen_set: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut clusters: Vec<Vec<usize>> = Vec::with_capacity(steps_total);
    let mut found: BTreeSet<usize> = BTreeSet::new();
    let mut new_edges: Vec<(usize, usize)> = Vec::with_capacity(steps_total);
    let mut weight = 0.0;
    let mut steps = Vec::with_capacity(steps_total);

    for step in 0..steps_total {
        let found_ref = if step == 0 { None } else { Some(&found) };
        let cands = enumerate_candidates(&a, prev, found_ref, &chosen_set, engine)?;
        if cands.is_empty() {
            return Err(Error::InvalidStructure(format!(
                "no candidate cluster available at level {level} step {}",
                step + 1
            )));
        }
        let best = select_best(&cands);
        steps.push(StepRecord {
            chosen: best.cluster.clone(),
            candidates: cands
                .into_iter()
                .map(|c| CandidateRecord {
                    cluster: c.cluster,
                    separator: c.separator,
                    value: c.value,
                })
                .collect(),
        });
        weight += best.value;
        found.extend(best.cluster.iter().copied());
        chosen_set.insert(best.cluster.clone());
        clusters.push(best.cluster);
        new_edges.push(best.edge);
    }

    let mut g = g_prev.clone();
    for (i, j) in new_edges {
        g.add_edge(i, j, 0.0)?;
    }
    let tree = CherryTree::from_clusters(n, clusters)?;
    Ok((g, tree, weight, LevelAudit { level, steps }))
}

/// [`grow_level_audited`] without the decision log.
pub fn grow_level(
    engine: &mut InfoEngine,
    g_prev: &WeightedGraph,
    prev: &CherryTree,
    level: usize,
) -> Result<(WeightedGraph, CherryTree, f64)> {
    grow_level_audited(engine, g_prev, prev, level).map(|(g, t, w, _)| (g, t, w))
}

/// The trees of orders 2..=t with their weights in bits.
#[derive(Debug, Clone)]
pub struct CherrySequence {
    trees: Vec<CherryTree>,
    weights: Vec<f64>,
}

impl CherrySequence {
    /// Assemble a sequence from externally built trees. Orders must run
    /// 2..=t consecutively over a single vertex set, one weight per tree.
    pub fn from_parts(trees: Vec<CherryTree>, weights: Vec<f64>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidInput(
                "cherry sequence needs at least the order-2 tree".into(),
            ));
        }
        if trees.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "got {} trees but {} weights",
                trees.len(),
                weights.len()
            )));
        }
        let n = trees[0].n_vars();
        for (idx, tree) in trees.iter().enumerate() {
            if tree.order() != idx + 2 {
                return Err(Error::InvalidInput(format!(
                    "tree at position {idx} has order {} where {} is required",
                    tree.order(),
                    idx + 2
                )));
            }
            if tree.n_vars() != n {
                return Err(Error::InvalidInput(format!(
                    "tree of order {} is over {} variables, not {n}",
                    tree.order(),
                    tree.n_vars()
                )));
            }
        }
        Ok(CherrySequence { trees, weights })
    }

    pub fn n_vars(&self) -> usize {
        self.trees[0].n_vars()
    }

    pub fn trunc_level(&self) -> usize {
        self.trees.len() + 1
    }

    /// Trees of orders 2..=t in order.
    pub fn trees(&self) -> &[CherryTree] {
        &self.trees
    }

    /// Weights w_2..w_t matching [`Self::trees`].
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tree(&self, order: usize) -> Option<&CherryTree> {
        order.checked_sub(2).and_then(|i| self.trees.get(i))
    }

    /// The order-t tree the truncated vine is read from.
    pub fn top(&self) -> &CherryTree {
        self.trees.last().unwrap()
    }

    pub fn top_weight(&self) -> f64 {
        *self.weights.last().unwrap()
    }
}

/// Build the full sequence up to the engine's truncation level, keeping
/// each level's decision log.
pub fn build_cherry_sequence_audited(
    engine: &mut InfoEngine,
) -> Result<(CherrySequence, Vec<LevelAudit>)> {
    let n = engine.n_vars();
    let t = engine.config().trunc_level;
    if t > n {
        return Err(Error::InvalidInput(format!(
            "truncation level {t} exceeds the {n} variables"
        )));
    }
    let m = mutual_information_matrix(engine)?;
    let (mut g, w2) = max_spanning_tree(&m)?;
    let clusters: Vec<Vec<usize>> = g.edges().iter().map(|&(i, j, _)| vec![i, j]).collect();
    let mut trees = vec![CherryTree::from_clusters(n, clusters)?];
    let mut weights = vec![w2];
    let mut audits = Vec::new();
    for level in 3..=t {
        let (g_next, tree, w, audit) =
            grow_level_audited(engine, &g, trees.last().unwrap(), level)?;
        g = g_next;
        trees.push(tree);
        weights.push(w);
        audits.push(audit);
    }
    Ok((CherrySequence { trees, weights }, audits))
}

/// [`build_cherry_sequence_audited`] without the logs.
pub fn build_cherry_sequence(engine: &mut InfoEngine) -> Result<CherrySequence> {
    build_cherry_sequence_audited(engine).map(|(s, _)| s)
}

/// Every tree individually valid, plus consecutive orders nested.
pub fn validate_sequence(seq: &CherrySequence) -> Result<()> {
    for tree in seq.trees() {
        cherry::validate_tree(tree)?;
    }
    for pair in seq.trees().windows(2) {
        cherry::check_nesting(&pair[0], &pair[1])?;
    }
    Ok(())
}
