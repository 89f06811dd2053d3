//! Weight of a truncated vine: the sum of the information contents of its
//! clusters minus the multiplicity-discounted contents of its separators,
//! in bits. The same routine scores trees built here and structures decoded
//! from third-party matrices, sharing one estimator cache so identical
//! subsets never cost twice.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cherry::{self, CherryTree};
use crate::error::{Error, Result};
use crate::estimator::InfoEngine;
use crate::vine::{self, VineMatrix};

/// Weight of one cherry tree with its per-subset breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedVineScore {
    pub trunc_level: usize,
    /// Sum over clusters of I minus sum over separators of (nu - 1) * I.
    pub weight: f64,
    pub per_cluster: BTreeMap<Vec<usize>, f64>,
    /// Separator -> (multiplicity nu, information content).
    pub per_separator: BTreeMap<Vec<usize>, (usize, f64)>,
}

/// Score a cherry tree. Separator multiplicities come from the tree itself
/// (recomputed from the cluster list when it was constructed), never from
/// caller-supplied counts. A single-variable separator carries no
/// information by definition, so the estimator is not consulted for it.
pub fn weight_of_tree(engine: &mut InfoEngine, tree: &CherryTree) -> Result<TruncatedVineScore> {
    if tree.n_vars() != engine.n_vars() {
        return Err(Error::InvalidInput(format!(
            "tree is over {} variables but the data has {}",
            tree.n_vars(),
            engine.n_vars()
        )));
    }
    cherry::validate_tree(tree)?;
    let mut per_cluster = BTreeMap::new();
    for k in tree.clusters() {
        per_cluster.insert(k.clone(), engine.info(k)?);
    }
    let mut per_separator = BTreeMap::new();
    for (s, nu) in tree.separators() {
        let info = if s.len() == 1 { 0.0 } else { engine.info(s)? };
        per_separator.insert(s.clone(), (*nu, info));
    }
    let cluster_sum: f64 = per_cluster.values().sum();
    let separator_sum: f64 = per_separator
        .values()
        .map(|&(nu, info)| (nu as f64 - 1.0) * info)
        .sum();
    Ok(TruncatedVineScore {
        trunc_level: tree.order(),
        weight: cluster_sum - separator_sum,
        per_cluster,
        per_separator,
    })
}

/// Decode a matrix at the given level and score the cherry tree it holds.
/// Scoring a matrix this crate encoded reproduces the builder tree's score
/// exactly, since decoding is the encoder's inverse and the cache is shared.
pub fn score_external_matrix(
    engine: &mut InfoEngine,
    matrix: &VineMatrix,
    level: usize,
) -> Result<TruncatedVineScore> {
    let decoded = vine::decode(matrix, level)?;
    let tree = CherryTree::from_clusters(matrix.n(), decoded.clusters)?;
    weight_of_tree(engine, &tree)
}

#[derive(Serialize)]
struct ClusterJson {
    indices: Vec<usize>,
    info: f64,
}

#[derive(Serialize)]
struct SeparatorScoreJson {
    indices: Vec<usize>,
    multiplicity: usize,
    info: f64,
}

#[derive(Serialize)]
struct ScoreJson {
    trunc_level: usize,
    weight_bits: f64,
    clusters: Vec<ClusterJson>,
    separators: Vec<SeparatorScoreJson>,
}

/// Render a score as JSON with 1-based variable ids.
pub fn score_json(score: &TruncatedVineScore) -> Result<String> {
    let doc = ScoreJson {
        trunc_level: score.trunc_level,
        weight_bits: score.weight,
        clusters: score
            .per_cluster
            .iter()
            .map(|(k, info)| ClusterJson {
                indices: k.iter().map(|v| v + 1).collect(),
                info: *info,
            })
            .collect(),
        separators: score
            .per_separator
            .iter()
            .map(|(s, &(nu, info))| SeparatorScoreJson {
                indices: s.iter().map(|v| v + 1).collect(),
                multiplicity: nu,
                info,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::InvalidInput(format!("score serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}
