//! Matrix codec for truncated vines. A cherry sequence is packed into a
//! lower-triangular integer matrix column by column; decoding reads the
//! pair-copula factors, clusters, and separators back out, and validation
//! checks an arbitrary integer matrix against the structural rules without
//! assuming it came from this encoder.
//!
//! Cell conventions (paper orientation): the matrix is lower triangular
//! with the variable ordering on the diagonal from the top left to the
//! bottom right. The factor at row r, column c (r > c, both 1-based) has
//! conditioned pair {M[c][c], M[r][c]} and conditioning set {M[r+1][c],
//! ..., M[n][c]}; it belongs to the cherry tree of order n - r + 2. A
//! truncation level t leaves rows 2..n-t+1 of the strict lower triangle
//! empty. Matrices also travel in a rotated orientation used by vine
//! copula packages; [`VineMatrix::reorient`] flips between the two.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::builder::CherrySequence;
use crate::cherry::{self, CherryTree};
use crate::disjoint::UnionFind;
use crate::error::{Error, Result};

/// Which corner the variable ordering runs from.
///
/// `Paper` is the native layout described in the module docs. `RPackage`
/// stores the same information rotated by 180 degrees (rows and columns
/// both reversed), the layout common in vine copula packages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    #[serde(rename = "paper")]
    Paper,
    #[serde(rename = "r-package")]
    RPackage,
}

impl Orientation {
    fn flipped(self) -> Self {
        match self {
            Orientation::Paper => Orientation::RPackage,
            Orientation::RPackage => Orientation::Paper,
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Orientation::Paper => write!(f, "paper"),
            Orientation::RPackage => write!(f, "r-package"),
        }
    }
}

impl std::str::FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Orientation::Paper),
            "r-package" => Ok(Orientation::RPackage),
            other => Err(Error::Usage(format!(
                "unknown orientation '{other}' (expected 'paper' or 'r-package')"
            ))),
        }
    }
}

/// An n-by-n integer matrix holding a truncated vine. Entries are 1-based
/// variable ids; 0 marks an unused cell. Construction checks only the
/// container shape, so arbitrary integer matrices can be loaded and then
/// inspected with [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VineMatrix {
    n: usize,
    trunc_level: usize,
    orientation: Orientation,
    entries: Vec<u32>,
}

impl VineMatrix {
    pub fn from_entries(
        n: usize,
        trunc_level: usize,
        orientation: Orientation,
        entries: Vec<u32>,
    ) -> Result<Self> {
        if trunc_level < 2 || trunc_level > n {
            return Err(Error::InvalidInput(format!(
                "truncation level {trunc_level} outside 2..={n}"
            )));
        }
        if entries.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "matrix of size {n} needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        Ok(VineMatrix {
            n,
            trunc_level,
            orientation,
            entries,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn trunc_level(&self) -> usize {
        self.trunc_level
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Cell at 0-based row r, column c.
    pub fn entry(&self, r: usize, c: usize) -> u32 {
        self.entries[r * self.n + c]
    }

    pub fn diag(&self, c: usize) -> u32 {
        self.entry(c, c)
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        (0..self.n)
            .map(|r| self.entries[r * self.n..(r + 1) * self.n].to_vec())
            .collect()
    }

    /// Rotate the matrix by 180 degrees and flip the orientation tag.
    /// Applying it twice returns the original matrix.
    pub fn reorient(&self) -> VineMatrix {
        let n = self.n;
        let mut rotated = vec![0u32; n * n];
        for r in 0..n {
            for c in 0..n {
                rotated[r * n + c] = self.entries[(n - 1 - r) * n + (n - 1 - c)];
            }
        }
        VineMatrix {
            n,
            trunc_level: self.trunc_level,
            orientation: self.orientation.flipped(),
            entries: rotated,
        }
    }

    /// The matrix in paper orientation, rotating if needed.
    pub fn to_paper(&self) -> VineMatrix {
        match self.orientation {
            Orientation::Paper => self.clone(),
            Orientation::RPackage => self.reorient(),
        }
    }
}

/// One conditional pair density `c(a,b | S)`. Variables are 0-based in
/// memory; [`fmt::Display`] prints them 1-based to match matrix entries.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PairCopulaFactor {
    pub conditioned: (usize, usize),
    pub conditioning: Vec<usize>,
}

impl fmt::Display for PairCopulaFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c({},{}", self.conditioned.0 + 1, self.conditioned.1 + 1)?;
        if !self.conditioning.is_empty() {
            let given: Vec<String> = self.conditioning.iter().map(|v| (v + 1).to_string()).collect();
            write!(f, "|{}", given.join(","))?;
        }
        write!(f, ")")
    }
}

/// Everything read back from a matrix at one truncation level.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedVine {
    pub trunc_level: usize,
    /// Factors for orders 2..=trunc_level, lowest order first, then by
    /// column left to right.
    pub factors: Vec<PairCopulaFactor>,
    /// Clusters of the order-trunc_level cherry tree, lex sorted.
    pub clusters: Vec<Vec<usize>>,
    /// Separators of that tree with their multiplicities.
    pub separators: Vec<(Vec<usize>, usize)>,
}

/// A structural defect found by [`validate`]. Violations are reported as
/// data, not errors: an invalid matrix is a legitimate input to inspect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EntryOutOfRange { row: usize, col: usize, value: u32 },
    UpperTriangleEntry { row: usize, col: usize },
    DiagonalZero { position: usize },
    DiagonalNotInjective,
    TruncationPattern { row: usize, col: usize, expected_zero: bool },
    ColumnEntryNotLaterDiagonal { row: usize, col: usize, value: u32 },
    ColumnDuplicate { col: usize, value: u32 },
    LevelTwoNotTree,
    Structure { level: usize, message: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EntryOutOfRange { row, col, value } => write!(
                f,
                "entry {value} at row {}, column {} exceeds the variable count",
                row + 1,
                col + 1
            ),
            Violation::UpperTriangleEntry { row, col } => write!(
                f,
                "nonzero entry above the diagonal at row {}, column {}",
                row + 1,
                col + 1
            ),
            Violation::DiagonalZero { position } => {
                write!(f, "zero diagonal entry at position {}", position + 1)
            }
            Violation::DiagonalNotInjective => write!(f, "diagonal not injective"),
            Violation::TruncationPattern {
                row,
                col,
                expected_zero: true,
            } => write!(
                f,
                "nonzero entry at row {}, column {} outside the truncation band",
                row + 1,
                col + 1
            ),
            Violation::TruncationPattern { row, col, .. } => write!(
                f,
                "missing entry at row {}, column {} inside the truncation band",
                row + 1,
                col + 1
            ),
            Violation::ColumnEntryNotLaterDiagonal { row, col, value } => write!(
                f,
                "entry {value} at row {}, column {} is not the diagonal of a later column",
                row + 1,
                col + 1
            ),
            Violation::ColumnDuplicate { col, value } => {
                write!(f, "variable {value} repeats within column {}", col + 1)
            }
            Violation::LevelTwoNotTree => write!(f, "level-2 graph not a tree"),
            Violation::Structure { level, message } => write!(f, "level {level}: {message}"),
        }
    }
}

fn fmt_vars(vars: &BTreeSet<usize>) -> String {
    let inner: Vec<String> = vars.iter().map(|v| (v + 1).to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

/// The single variable by which chain link `a` exceeds its refinement `b`.
fn single_difference(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> Result<usize> {
    let mut extra = a.difference(b);
    match (extra.next(), extra.next()) {
        (Some(&v), None) => Ok(v),
        _ => Err(Error::InvalidStructure(
            "encoding step: chain refinement does not strip exactly one variable".into(),
        )),
    }
}

/// Extend a strictly nested chain down to the singleton {x}: for each order
/// from `top_order` down to 2, append the lex-first cluster through `x`
/// strictly inside the previous link.
fn extend_chain(
    seq: &CherrySequence,
    x: usize,
    chain: &mut Vec<BTreeSet<usize>>,
    top_order: usize,
    column: usize,
) -> Result<()> {
    for order in (2..=top_order).rev() {
        let sup = chain.last().unwrap().clone();
        let tree = seq.tree(order).expect("orders 2..=t are present");
        let found = tree.clusters().iter().find(|k| {
            k.binary_search(&x).is_ok() && k.len() < sup.len() && k.iter().all(|v| sup.contains(v))
        });
        match found {
            Some(k) => chain.push(k.iter().copied().collect()),
            None => {
                return Err(Error::InvalidStructure(format!(
                    "encoding step: no order-{order} cluster through variable {} strictly inside {} (column {})",
                    x + 1,
                    fmt_vars(&sup),
                    column + 1
                )))
            }
        }
    }
    chain.push(BTreeSet::from([x]));
    Ok(())
}

/// Pack a cherry sequence into its matrix form. Only the truncated layout
/// is produced (`trunc` must be true); completing the strict lower triangle
/// into a full vine is deliberately out of scope.
///
/// The input is expected to be a valid regular cherry sequence. Structural
/// defects surface as errors naming the encoding step that got stuck.
pub fn encode(seq: &CherrySequence, trunc: bool) -> Result<VineMatrix> {
    if !trunc {
        return Err(Error::Unsupported(
            "only the truncated matrix layout is implemented; a full vine completion is not"
                .into(),
        ));
    }
    let n = seq.n_vars();
    let t = seq.trunc_level();
    let top = seq.top();

    // Seed vertex: the smallest variable confined to a single top cluster.
    // Regular cherry trees always have one (a leaf cluster's private vertex).
    let mut count = vec![0usize; n];
    for k in top.clusters() {
        for &v in k {
            count[v] += 1;
        }
    }
    let v = count.iter().position(|&c| c == 1).ok_or_else(|| {
        Error::InvalidStructure(
            "encoding step: no variable appears in exactly one top-level cluster".into(),
        )
    })?;

    // Diagonal prefix: grow v into a chain of clusters, one order at a
    // time, recording the vertex each extension adds.
    let mut p: Vec<usize> = vec![v];
    for order in 2..=t {
        let mut key = p.clone();
        key.sort_unstable();
        let tree = seq.tree(order).expect("orders 2..=t are present");
        let k = tree
            .clusters()
            .iter()
            .find(|k| cherry::is_subset(&key, k))
            .ok_or_else(|| {
                Error::InvalidStructure(format!(
                    "encoding step: no order-{order} cluster extends the diagonal prefix {}",
                    fmt_vars(&key.iter().copied().collect())
                ))
            })?;
        let added = k
            .iter()
            .copied()
            .find(|x| !p.contains(x))
            .expect("a strict superset adds a vertex");
        p.push(added);
    }

    let ob = |v: usize| (v + 1) as u32;
    let mut m = vec![0u32; n * n];
    for (idx, &pv) in p.iter().enumerate() {
        let d = n - 1 - idx;
        m[d * n + d] = ob(pv);
    }
    m[(n - 1) * n + (n - 2)] = ob(p[0]);
    let mut s: BTreeSet<usize> = [p[0], p[1]].into_iter().collect();

    // Columns n-2 down to n-t+1 (0-based indexing) hold the factors of the
    // diagonal-prefix variables: column n-i-2 unwinds the chain under
    // p[i+1] inside the prefix set.
    for i in 1..(t - 1) {
        let c = n - i - 2;
        let x = p[i + 1];
        let mut chain: Vec<BTreeSet<usize>> = vec![p[..i + 2].iter().copied().collect()];
        extend_chain(seq, x, &mut chain, i + 1, c)?;
        for r in 1..=i + 1 {
            let var = single_difference(&chain[r - 1], &chain[r])?;
            m[(c + r) * n + c] = ob(var);
        }
        s.insert(x);
    }

    // Remaining columns right to left: each picks the top cluster meeting
    // the processed set in all but one variable, eliminates the new
    // variable, and unwinds its chain.
    for c in (0..n - t).rev() {
        let k = top
            .clusters()
            .iter()
            .find(|k| k.iter().filter(|v| s.contains(v)).count() == t - 1)
            .ok_or_else(|| {
                Error::InvalidStructure(format!(
                    "encoding step: no top-level cluster meets the processed set {} in {} variables (column {})",
                    fmt_vars(&s),
                    t - 1,
                    c + 1
                ))
            })?;
        let x = k
            .iter()
            .copied()
            .find(|v| !s.contains(v))
            .expect("one cluster variable is unprocessed");
        m[c * n + c] = ob(x);
        let mut chain: Vec<BTreeSet<usize>> = vec![k.iter().copied().collect()];
        extend_chain(seq, x, &mut chain, t - 1, c)?;
        for r in 1..=t - 1 {
            let var = single_difference(&chain[r - 1], &chain[r])?;
            m[(n - t + r) * n + c] = ob(var);
        }
        s.insert(x);
    }

    VineMatrix::from_entries(n, t, Orientation::Paper, m)
}

/// The factor stored at 0-based row r, column c of a paper-oriented matrix.
/// Caller guarantees the cells in that column from row r down are filled.
fn factor_at(paper: &VineMatrix, r: usize, c: usize) -> PairCopulaFactor {
    let n = paper.n();
    let a = paper.diag(c) as usize - 1;
    let b = paper.entry(r, c) as usize - 1;
    let mut conditioning: Vec<usize> = ((r + 1)..n).map(|q| paper.entry(q, c) as usize - 1).collect();
    conditioning.sort_unstable();
    PairCopulaFactor {
        conditioned: (a.min(b), a.max(b)),
        conditioning,
    }
}

/// Clusters of the order-`level` cherry tree read from a paper-oriented
/// matrix: row n-level+2 (1-based) joined with everything below it, one
/// cluster per column. Caller guarantees phase-1 shape validity.
fn read_level_clusters(paper: &VineMatrix, level: usize) -> Vec<Vec<usize>> {
    let n = paper.n();
    let r = n - level + 1;
    (0..r)
        .map(|c| {
            let mut k: Vec<usize> = vec![paper.diag(c) as usize - 1];
            k.extend((r..n).map(|q| paper.entry(q, c) as usize - 1));
            k
        })
        .collect()
}

/// Check an arbitrary matrix against the structural rules and report every
/// defect found. An empty result means the matrix is a well-formed
/// truncated vine at its declared truncation level.
///
/// Cell-level shape (triangularity, diagonal, value range, truncation
/// band) is checked first; the tree-level checks only run once the shape
/// is clean, since they need the cells to be readable.
pub fn validate(matrix: &VineMatrix) -> Vec<Violation> {
    let paper = matrix.to_paper();
    let n = paper.n();
    let t = paper.trunc_level();
    let mut violations = Vec::new();

    for r in 0..n {
        for c in 0..n {
            let v = paper.entry(r, c);
            if v > n as u32 {
                violations.push(Violation::EntryOutOfRange { row: r, col: c, value: v });
            }
            if c > r && v != 0 {
                violations.push(Violation::UpperTriangleEntry { row: r, col: c });
            }
        }
    }
    let mut seen = vec![false; n + 1];
    let mut repeated = false;
    for c in 0..n {
        let v = paper.diag(c);
        if v == 0 {
            violations.push(Violation::DiagonalZero { position: c });
        } else if v <= n as u32 {
            if seen[v as usize] {
                repeated = true;
            }
            seen[v as usize] = true;
        }
    }
    if repeated {
        violations.push(Violation::DiagonalNotInjective);
    }
    // Truncation band: strict-lower cells are filled exactly in the bottom
    // t-1 rows.
    for c in 0..n {
        for r in (c + 1)..n {
            let filled = paper.entry(r, c) != 0;
            let in_band = r >= n - t + 1;
            if in_band && !filled {
                violations.push(Violation::TruncationPattern {
                    row: r,
                    col: c,
                    expected_zero: false,
                });
            }
            if !in_band && filled {
                violations.push(Violation::TruncationPattern {
                    row: r,
                    col: c,
                    expected_zero: true,
                });
            }
        }
    }
    if !violations.is_empty() {
        return violations;
    }

    // Column membership: every filled cell below the diagonal must name a
    // variable eliminated later, and a column may not repeat a variable.
    let later_diags: Vec<BTreeSet<u32>> = (0..n)
        .map(|c| ((c + 1)..n).map(|q| paper.diag(q)).collect())
        .collect();
    for c in 0..n {
        let mut seen_in_col = BTreeSet::from([paper.diag(c)]);
        for r in (c + 1)..n {
            let v = paper.entry(r, c);
            if v == 0 {
                continue;
            }
            if !later_diags[c].contains(&v) {
                violations.push(Violation::ColumnEntryNotLaterDiagonal { row: r, col: c, value: v });
            }
            if !seen_in_col.insert(v) {
                violations.push(Violation::ColumnDuplicate { col: c, value: v });
            }
        }
    }

    // The bottom row must pair each column's diagonal into a spanning tree.
    let mut uf = UnionFind::new(n);
    let mut is_tree = true;
    for c in 0..n - 1 {
        let a = paper.diag(c) as usize - 1;
        let b = paper.entry(n - 1, c) as usize - 1;
        if a == b || !uf.union(a, b) {
            is_tree = false;
        }
    }
    if !is_tree {
        violations.push(Violation::LevelTwoNotTree);
    }

    // Each level must read back as a valid cherry tree, nested in the one
    // below it.
    let mut prev: Option<CherryTree> = None;
    for level in 2..=t {
        let built = CherryTree::from_clusters(n, read_level_clusters(&paper, level))
            .and_then(|tree| {
                cherry::validate_tree(&tree)?;
                Ok(tree)
            });
        match built {
            Ok(tree) => {
                if let Some(lower) = &prev {
                    if let Err(e) = cherry::check_nesting(lower, &tree) {
                        violations.push(Violation::Structure {
                            level,
                            message: e.to_string(),
                        });
                    }
                }
                prev = Some(tree);
            }
            Err(e) => {
                violations.push(Violation::Structure {
                    level,
                    message: e.to_string(),
                });
                prev = None;
            }
        }
    }
    violations
}

/// Read the factors, clusters, and separators back out of a matrix at the
/// given level (2..=trunc_level). The matrix must validate cleanly first.
pub fn decode(matrix: &VineMatrix, level: usize) -> Result<DecodedVine> {
    let violations = validate(matrix);
    if let Some(first) = violations.first() {
        return Err(Error::InvalidStructure(format!(
            "matrix fails validation with {} violation(s); first: {first}",
            violations.len()
        )));
    }
    if level < 2 || level > matrix.trunc_level() {
        return Err(Error::InvalidInput(format!(
            "decode level {level} outside 2..={}",
            matrix.trunc_level()
        )));
    }
    let paper = matrix.to_paper();
    let n = paper.n();
    let mut factors = Vec::new();
    for l in 2..=level {
        let r = n - l + 1;
        for c in 0..r {
            factors.push(factor_at(&paper, r, c));
        }
    }
    let tree = CherryTree::from_clusters(n, read_level_clusters(&paper, level))?;
    Ok(DecodedVine {
        trunc_level: level,
        factors,
        clusters: tree.clusters().to_vec(),
        separators: tree.separators().to_vec(),
    })
}

/// Sidecar describing how a matrix CSV is to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub n: usize,
    pub trunc_level: usize,
    pub orientation: Orientation,
}

impl MatrixMeta {
    pub fn of(matrix: &VineMatrix) -> Self {
        MatrixMeta {
            n: matrix.n(),
            trunc_level: matrix.trunc_level(),
            orientation: matrix.orientation(),
        }
    }
}

/// Write the raw integer grid, one comma-separated row per line.
pub fn write_matrix_csv(matrix: &VineMatrix, path: &Path) -> Result<()> {
    let mut out = String::new();
    for row in matrix.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_matrix_meta(matrix: &VineMatrix, path: &Path) -> Result<()> {
    let meta = MatrixMeta::of(matrix);
    let mut text = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::InvalidInput(format!("meta serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_meta(path: &Path) -> Result<MatrixMeta> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("{}: bad meta json: {e}", path.display())))
}

/// Load a matrix CSV. With a meta sidecar the declared size is checked and
/// its truncation level and orientation are adopted; without one the file
/// is assumed paper-oriented and the truncation level is inferred from the
/// first row holding a strict-lower entry.
pub fn read_matrix_csv(path: &Path, meta: Option<&MatrixMeta>) -> Result<VineMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<u32>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<u32>().map_err(|_| {
                    Error::Csv(format!(
                        "cell '{}' on line {} is not a nonnegative integer",
                        cell.trim(),
                        line_no + 1
                    ))
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::Csv(format!("{}: matrix file is empty", path.display())));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Csv(format!(
                "row {} has {} cells where {} are required",
                i + 1,
                row.len(),
                n
            )));
        }
    }
    let entries: Vec<u32> = rows.concat();
    match meta {
        Some(meta) => {
            if meta.n != n {
                return Err(Error::InvalidInput(format!(
                    "meta declares n={} but the matrix has {n} rows",
                    meta.n
                )));
            }
            VineMatrix::from_entries(n, meta.trunc_level, meta.orientation, entries)
        }
        None => {
            let t = infer_trunc_level(n, &entries);
            VineMatrix::from_entries(n, t, Orientation::Paper, entries)
        }
    }
}

/// Truncation level implied by the zero pattern of a paper-oriented grid:
/// strict-lower fills start at row n-t+2 (1-based).
fn infer_trunc_level(n: usize, entries: &[u32]) -> usize {
    for r in 1..n {
        for c in 0..r {
            if entries[r * n + c] != 0 {
                return n - r + 1;
            }
        }
    }
    2
}

#[derive(Serialize)]
struct SeparatorJson {
    indices: Vec<usize>,
    multiplicity: usize,
}

#[derive(Serialize)]
struct StructureJson {
    n: usize,
    trunc_level: usize,
    orientation: Orientation,
    diagonal: Vec<u32>,
    columns: Vec<Vec<u32>>,
    clusters_by_level: BTreeMap<String, Vec<Vec<usize>>>,
    separators_by_level: BTreeMap<String, Vec<SeparatorJson>>,
}

/// Render a validated matrix as a self-describing JSON document: the
/// diagonal and filled column tails (paper orientation), plus the clusters
/// and separators of every level. Variable ids are 1-based throughout.
pub fn structure_json(matrix: &VineMatrix) -> Result<String> {
    let violations = validate(matrix);
    if let Some(first) = violations.first() {
        return Err(Error::InvalidStructure(format!(
            "matrix fails validation with {} violation(s); first: {first}",
            violations.len()
        )));
    }
    let paper = matrix.to_paper();
    let n = paper.n();
    let t = paper.trunc_level();
    let diagonal: Vec<u32> = (0..n).map(|c| paper.diag(c)).collect();
    let columns: Vec<Vec<u32>> = (0..n)
        .map(|c| {
            let start = (c + 1).max(n - t + 1);
            (start..n).map(|r| paper.entry(r, c)).collect()
        })
        .collect();
    let mut clusters_by_level = BTreeMap::new();
    let mut separators_by_level = BTreeMap::new();
    for level in 2..=t {
        let tree = CherryTree::from_clusters(n, read_level_clusters(&paper, level))?;
        clusters_by_level.insert(
            level.to_string(),
            tree.clusters()
                .iter()
                .map(|k| k.iter().map(|v| v + 1).collect::<Vec<usize>>())
                .collect::<Vec<_>>(),
        );
        separators_by_level.insert(
            level.to_string(),
            tree.separators()
                .iter()
                .map(|(sep, nu)| SeparatorJson {
                    indices: sep.iter().map(|v| v + 1).collect(),
                    multiplicity: *nu,
                })
                .collect::<Vec<_>>(),
        );
    }
    let doc = StructureJson {
        n,
        trunc_level: t,
        orientation: Orientation::Paper,
        diagonal,
        columns,
        clusters_by_level,
        separators_by_level,
    };
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::InvalidInput(format!("structure serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(n: usize, clusters: &[&[usize]]) -> CherryTree {
        CherryTree::from_clusters(n, clusters.iter().map(|k| k.to_vec()).collect())
            .expect("test cluster lists are valid")
    }

    fn sequence(n: usize, levels: &[&[&[usize]]]) -> CherrySequence {
        let trees: Vec<CherryTree> = levels.iter().map(|ks| tree(n, ks)).collect();
        let weights = vec![0.0; trees.len()];
        CherrySequence::from_parts(trees, weights).expect("test sequences are valid")
    }

    /// Chain structure on eight variables, truncated at order 5. Variables
    /// here are 0-based; the expected matrices hold 1-based ids.
    fn eight_var_sequence() -> CherrySequence {
        sequence(
            8,
            &[
                &[
                    &[0, 1],
                    &[1, 2],
                    &[2, 3],
                    &[3, 4],
                    &[4, 5],
                    &[4, 6],
                    &[6, 7],
                ],
                &[
                    &[0, 1, 2],
                    &[1, 2, 3],
                    &[2, 3, 4],
                    &[3, 4, 5],
                    &[3, 4, 6],
                    &[4, 6, 7],
                ],
                &[
                    &[0, 1, 2, 3],
                    &[1, 2, 3, 4],
                    &[2, 3, 4, 5],
                    &[2, 3, 4, 6],
                    &[3, 4, 6, 7],
                ],
                &[
                    &[0, 1, 2, 3, 4],
                    &[1, 2, 3, 4, 5],
                    &[1, 2, 3, 4, 6],
                    &[2, 3, 4, 6, 7],
                ],
            ],
        )
    }

    fn four_var_path_sequence() -> CherrySequence {
        sequence(
            4,
            &[&[&[0, 1], &[1, 2], &[2, 3]], &[&[0, 1, 2], &[1, 2, 3]]],
        )
    }

    #[test]
    fn eight_variable_sequence_encodes_to_known_matrix() {
        let m = encode(&eight_var_sequence(), true).expect("sequence encodes");
        let expected: Vec<Vec<u32>> = vec![
            vec![8, 0, 0, 0, 0, 0, 0, 0],
            vec![0, 7, 0, 0, 0, 0, 0, 0],
            vec![0, 0, 6, 0, 0, 0, 0, 0],
            vec![0, 0, 0, 5, 0, 0, 0, 0],
            vec![3, 2, 2, 1, 4, 0, 0, 0],
            vec![4, 3, 3, 2, 1, 3, 0, 0],
            vec![5, 4, 4, 3, 2, 1, 2, 0],
            vec![7, 5, 5, 4, 3, 2, 1, 1],
        ];
        assert_eq!(m.rows(), expected, "matrix cells disagree");
        assert_eq!(m.trunc_level(), 5);
        assert_eq!(m.orientation(), Orientation::Paper);
    }

    #[test]
    fn four_variable_path_encodes_to_known_matrix() {
        let m = encode(&four_var_path_sequence(), true).expect("sequence encodes");
        let expected: Vec<Vec<u32>> = vec![
            vec![4, 0, 0, 0],
            vec![0, 3, 0, 0],
            vec![2, 1, 2, 0],
            vec![3, 2, 1, 1],
        ];
        assert_eq!(m.rows(), expected, "matrix cells disagree");
    }

    #[test]
    fn three_variable_order_two_encodes_and_decodes() {
        let seq = sequence(3, &[&[&[0, 1], &[1, 2]]]);
        let m = encode(&seq, true).expect("sequence encodes");
        let expected: Vec<Vec<u32>> = vec![vec![3, 0, 0], vec![0, 2, 0], vec![2, 1, 1]];
        assert_eq!(m.rows(), expected, "matrix cells disagree");

        let decoded = decode(&m, 2).expect("matrix decodes");
        let factors: BTreeSet<(Vec<usize>, Vec<usize>)> = decoded
            .factors
            .iter()
            .map(|f| (vec![f.conditioned.0, f.conditioned.1], f.conditioning.clone()))
            .collect();
        let expected_factors: BTreeSet<(Vec<usize>, Vec<usize>)> =
            [(vec![1, 2], vec![]), (vec![0, 1], vec![])].into_iter().collect();
        assert_eq!(factors, expected_factors, "decoded pairs disagree");
    }

    #[test]
    fn untruncated_output_is_not_supported() {
        let err = encode(&four_var_path_sequence(), false).expect_err("must refuse");
        assert!(
            matches!(err, Error::Unsupported(_)),
            "expected Unsupported, got {err:?}"
        );
    }

    #[test]
    fn decoding_recovers_all_factors_of_the_eight_variable_matrix() {
        let m = encode(&eight_var_sequence(), true).expect("sequence encodes");
        let decoded = decode(&m, 5).expect("matrix decodes");
        assert_eq!(decoded.factors.len(), 22, "factor count");

        // (conditioned pair, conditioning), 1-based.
        let expected_one_based: Vec<(Vec<usize>, Vec<usize>)> = vec![
            (vec![1, 2], vec![]),
            (vec![2, 3], vec![]),
            (vec![3, 4], vec![]),
            (vec![4, 5], vec![]),
            (vec![5, 6], vec![]),
            (vec![5, 7], vec![]),
            (vec![7, 8], vec![]),
            (vec![1, 3], vec![2]),
            (vec![2, 4], vec![3]),
            (vec![3, 5], vec![4]),
            (vec![4, 6], vec![5]),
            (vec![4, 7], vec![5]),
            (vec![5, 8], vec![7]),
            (vec![1, 4], vec![2, 3]),
            (vec![2, 5], vec![3, 4]),
            (vec![3, 6], vec![4, 5]),
            (vec![3, 7], vec![4, 5]),
            (vec![4, 8], vec![5, 7]),
            (vec![1, 5], vec![2, 3, 4]),
            (vec![2, 6], vec![3, 4, 5]),
            (vec![2, 7], vec![3, 4, 5]),
            (vec![3, 8], vec![4, 5, 7]),
        ];
        let got: Vec<(Vec<usize>, Vec<usize>)> = decoded
            .factors
            .iter()
            .map(|f| {
                (
                    vec![f.conditioned.0 + 1, f.conditioned.1 + 1],
                    f.conditioning.iter().map(|v| v + 1).collect(),
                )
            })
            .collect();
        let mut got_sorted = got.clone();
        got_sorted.sort();
        let mut expected_sorted = expected_one_based.clone();
        expected_sorted.sort();
        assert_eq!(got_sorted, expected_sorted, "factor multiset disagrees");

        let clusters: Vec<Vec<usize>> = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 2, 3, 4, 5],
            vec![1, 2, 3, 4, 6],
            vec![2, 3, 4, 6, 7],
        ];
        assert_eq!(decoded.clusters, clusters, "top clusters");
        let separators: Vec<(Vec<usize>, usize)> =
            vec![(vec![1, 2, 3, 4], 3), (vec![2, 3, 4, 6], 2)];
        assert_eq!(decoded.separators, separators, "top separators");
    }

    #[test]
    fn decoding_the_path_matrix_finds_its_separator() {
        let m = encode(&four_var_path_sequence(), true).expect("sequence encodes");
        let decoded = decode(&m, 3).expect("matrix decodes");
        assert_eq!(decoded.clusters, vec![vec![0, 1, 2], vec![1, 2, 3]]);
        assert_eq!(decoded.separators, vec![(vec![1, 2], 2)]);
        // Decoding one level down reads the order-2 tree instead.
        let lower = decode(&m, 2).expect("matrix decodes at level 2");
        assert_eq!(
            lower.clusters,
            vec![vec![0, 1], vec![1, 2], vec![2, 3]],
            "level-2 clusters are the tree edges"
        );
    }

    #[test]
    fn two_variable_matrix_decodes_to_a_single_pair() {
        let m = VineMatrix::from_entries(2, 2, Orientation::Paper, vec![2, 0, 1, 1])
            .expect("shape is fine");
        let decoded = decode(&m, 2).expect("matrix decodes");
        assert_eq!(decoded.factors.len(), 1);
        assert_eq!(decoded.factors[0].conditioned, (0, 1));
        assert!(decoded.factors[0].conditioning.is_empty());
    }

    #[test]
    fn factor_display_is_one_based() {
        let f = PairCopulaFactor {
            conditioned: (2, 7),
            conditioning: vec![3, 4, 6],
        };
        assert_eq!(f.to_string(), "c(3,8|4,5,7)");
        let bare = PairCopulaFactor {
            conditioned: (0, 1),
            conditioning: vec![],
        };
        assert_eq!(bare.to_string(), "c(1,2)");
    }

    #[test]
    fn encoder_output_validates_cleanly() {
        for m in [
            encode(&eight_var_sequence(), true).unwrap(),
            encode(&four_var_path_sequence(), true).unwrap(),
        ] {
            assert!(
                validate(&m).is_empty(),
                "expected no violations for {:?}",
                m.rows()
            );
        }
    }

    #[test]
    fn repeated_diagonal_entry_is_reported() {
        let m = encode(&four_var_path_sequence(), true).unwrap();
        let mut entries = m.rows().concat();
        entries[0] = 3; // diagonal now 3,3,2,1
        let bad = VineMatrix::from_entries(4, 3, Orientation::Paper, entries).unwrap();
        let violations = validate(&bad);
        assert!(
            violations.contains(&Violation::DiagonalNotInjective),
            "got {violations:?}"
        );
        assert!(
            violations.iter().any(|v| v.to_string() == "diagonal not injective"),
            "display text missing"
        );
    }

    #[test]
    fn cyclic_bottom_row_is_reported_as_not_a_tree() {
        let m = encode(&four_var_path_sequence(), true).unwrap();
        let mut entries = m.rows().concat();
        // Bottom row pairs become (4,3), (3,2), (2,4): a cycle missing 1.
        entries[3 * 4 + 2] = 4;
        let bad = VineMatrix::from_entries(4, 3, Orientation::Paper, entries).unwrap();
        let violations = validate(&bad);
        assert!(
            violations.contains(&Violation::LevelTwoNotTree),
            "got {violations:?}"
        );
        assert!(
            violations
                .iter()
                .any(|v| v.to_string() == "level-2 graph not a tree"),
            "display text missing"
        );
    }

    #[test]
    fn truncation_band_holes_and_spills_are_reported() {
        let m = encode(&eight_var_sequence(), true).unwrap();
        let mut entries = m.rows().concat();
        entries[4 * 8] = 0; // hole inside the band
        entries[2 * 8] = 5; // spill above the band
        let bad = VineMatrix::from_entries(8, 5, Orientation::Paper, entries).unwrap();
        let violations = validate(&bad);
        assert!(violations.contains(&Violation::TruncationPattern {
            row: 4,
            col: 0,
            expected_zero: false
        }));
        assert!(violations.contains(&Violation::TruncationPattern {
            row: 2,
            col: 0,
            expected_zero: true
        }));
    }

    #[test]
    fn foreign_column_entry_is_reported() {
        let m = encode(&four_var_path_sequence(), true).unwrap();
        let mut entries = m.rows().concat();
        // Column 2's bottom cell points at variable 4, the diagonal of an
        // earlier column.
        entries[3 * 4 + 1] = 4;
        let bad = VineMatrix::from_entries(4, 3, Orientation::Paper, entries).unwrap();
        let violations = validate(&bad);
        assert!(
            violations.contains(&Violation::ColumnEntryNotLaterDiagonal {
                row: 3,
                col: 1,
                value: 4
            }),
            "got {violations:?}"
        );
    }

    #[test]
    fn reorientation_rotates_and_is_an_involution() {
        let seq = sequence(3, &[&[&[0, 1], &[1, 2]]]);
        let m = encode(&seq, true).unwrap();
        let rotated = m.reorient();
        assert_eq!(rotated.orientation(), Orientation::RPackage);
        let expected: Vec<Vec<u32>> = vec![vec![1, 1, 2], vec![0, 2, 0], vec![0, 0, 3]];
        assert_eq!(rotated.rows(), expected, "rotated cells disagree");
        assert_eq!(rotated.reorient(), m, "double rotation must round-trip");
    }

    #[test]
    fn decoding_is_orientation_invariant() {
        let m = encode(&eight_var_sequence(), true).unwrap();
        let a = decode(&m, 5).expect("paper decodes");
        let b = decode(&m.reorient(), 5).expect("rotated decodes");
        assert_eq!(a, b, "orientation must not change the decoded structure");
    }

    #[test]
    fn matrix_csv_round_trips_with_and_without_meta() {
        let dir = tempfile::tempdir().expect("tempdir");
        let m = encode(&eight_var_sequence(), true).unwrap();
        let csv_path = dir.path().join("matrix.csv");
        let meta_path = dir.path().join("matrix.meta.json");
        write_matrix_csv(&m, &csv_path).expect("write csv");
        write_matrix_meta(&m, &meta_path).expect("write meta");

        let meta = read_matrix_meta(&meta_path).expect("read meta");
        assert_eq!(meta, MatrixMeta::of(&m));
        let back = read_matrix_csv(&csv_path, Some(&meta)).expect("read with meta");
        assert_eq!(back, m, "round trip with meta");

        let inferred = read_matrix_csv(&csv_path, None).expect("read without meta");
        assert_eq!(inferred, m, "truncation level must be inferred from the zeros");
    }

    #[test]
    fn rotated_matrix_round_trips_through_its_meta() {
        let dir = tempfile::tempdir().expect("tempdir");
        let m = encode(&four_var_path_sequence(), true).unwrap().reorient();
        let csv_path = dir.path().join("rotated.csv");
        write_matrix_csv(&m, &csv_path).expect("write csv");
        let meta = MatrixMeta::of(&m);
        let back = read_matrix_csv(&csv_path, Some(&meta)).expect("read with meta");
        assert_eq!(back, m);
        assert_eq!(back.to_paper(), m.to_paper());
    }

    #[test]
    fn structure_json_lists_every_level() {
        let m = encode(&eight_var_sequence(), true).unwrap();
        let text = structure_json(&m).expect("serializes");
        let doc: serde_json::Value = serde_json::from_str(&text).expect("parses back");
        assert_eq!(doc["n"], 8);
        assert_eq!(doc["trunc_level"], 5);
        assert_eq!(doc["orientation"], "paper");
        assert_eq!(doc["diagonal"].as_array().unwrap().len(), 8);
        for level in 2..=5 {
            let key = level.to_string();
            let clusters = doc["clusters_by_level"][&key].as_array().unwrap();
            assert_eq!(clusters.len(), 8 - level + 1, "cluster count at {level}");
        }
        let top_seps = doc["separators_by_level"]["5"].as_array().unwrap();
        assert_eq!(top_seps.len(), 2);
        assert_eq!(top_seps[0]["indices"], serde_json::json!([2, 3, 4, 5]));
        assert_eq!(top_seps[0]["multiplicity"], 3);
    }

    #[test]
    fn decode_rejects_levels_outside_the_matrix() {
        let m = encode(&four_var_path_sequence(), true).unwrap();
        assert!(decode(&m, 1).is_err(), "level 1 has no pairs");
        assert!(decode(&m, 4).is_err(), "matrix is truncated at 3");
    }
}
