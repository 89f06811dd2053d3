//! Seeded synthetic data generators backing the examples and the test
//! suites: correlated Gaussian samples with a known copula, independent
//! uniforms, and the matching closed-form information content.

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::dataset::RawDataset;
use crate::error::{Error, Result};

/// One standard normal draw (Box-Muller).
pub fn standard_normal(rng: &mut ChaCha20Rng) -> f64 {
    // 1 - u keeps the argument of ln strictly positive.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(matrix: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = matrix.len();
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidInput(format!(
                "correlation matrix row {i} has length {}, expected {n}",
                row.len()
            )));
        }
    }
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = matrix[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not positive definite (pivot {i} is {sum})"
                    )));
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Sample `m` rows from a zero-mean Gaussian with the given correlation
/// matrix. Margins stay normal; the rank transform downstream only sees the
/// copula, which is the Gaussian copula of `corr`.
pub fn gaussian_sample(rng: &mut ChaCha20Rng, corr: &[Vec<f64>], m: usize) -> Result<RawDataset> {
    let n = corr.len();
    let l = cholesky(corr)?;
    let mut columns = vec![Vec::with_capacity(m); n];
    let mut z = vec![0.0; n];
    for _ in 0..m {
        for zi in z.iter_mut() {
            *zi = standard_normal(rng);
        }
        for i in 0..n {
            let mut x = 0.0;
            for k in 0..=i {
                x += l[i][k] * z[k];
            }
            columns[i].push(x);
        }
    }
    let names = (0..n).map(|i| format!("x{}", i + 1)).collect();
    RawDataset::new(names, columns)
}

/// `m` rows of `n` independent uniform columns.
pub fn independent_uniform(rng: &mut ChaCha20Rng, m: usize, n: usize) -> Result<RawDataset> {
    let columns = (0..n)
        .map(|_| (0..m).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let names = (0..n).map(|i| format!("u{}", i + 1)).collect();
    RawDataset::new(names, columns)
}

/// Exact information content of a Gaussian copula, in bits:
/// -(1/2) log2 det(corr). For a pair this is -(1/2) log2 (1 - rho^2).
pub fn gaussian_info_bits(corr: &[Vec<f64>]) -> Result<f64> {
    let l = cholesky(corr)?;
    let log_det: f64 = (0..corr.len()).map(|i| l[i][i].ln() * 2.0).sum();
    Ok(-0.5 * log_det / std::f64::consts::LN_2)
}

/// Correlation matrix that is `rho` inside each listed block of 0-based
/// variable indices and 0 elsewhere.
pub fn block_correlation(n: usize, blocks: &[(Vec<usize>, f64)]) -> Vec<Vec<f64>> {
    let mut corr = vec![vec![0.0; n]; n];
    for (i, row) in corr.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for (members, rho) in blocks {
        for &a in members {
            for &b in members {
                if a != b {
                    corr[a][b] = *rho;
                }
            }
        }
    }
    corr
}
