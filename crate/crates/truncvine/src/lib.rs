//! Fit truncated vine copula structures to multivariate data.
//!
//! The toolkit rank-transforms a numeric table into pseudo-observations,
//! estimates information content of variable subsets with a k-NN divergence
//! estimator against a uniform reference grid, greedily grows a sequence of
//! regular cherry trees maximizing the truncated-vine weight, and encodes
//! the result as a lower-triangular vine matrix that other vine-copula
//! software can consume.
//!
//! Each major capability has a runnable example (`cargo run --example <name>`):
//!
//! - `rank_transform`: pseudo-observations and the two divisor conventions
//! - `knn_search`: kd-tree k-th neighbor queries, checked against a scan
//! - `info_convergence`: the information estimate approaching a closed form
//! - `fit_structure`: greedy cherry tree growth with its decision log
//! - `vine_matrix`: encoding, decoding, and reading off pair-copula factors
//! - `score_matrix`: pricing an existing matrix against a dataset
//! - `sweep_report`: the whole pipeline across truncation levels
//!
//! The `truncvine` binary wraps the same pipeline as `fit`, `score`,
//! `pobs`, and `validate` subcommands.

pub mod builder;
pub mod cherry;
pub mod dataset;
mod disjoint;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod knn;
pub mod pipeline;
pub mod scoring;
pub mod synth;
pub mod vine;

pub use error::{Error, Result};
