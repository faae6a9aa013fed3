//! Ordinary least squares with an intercept.
//!
//! Feature columns are centred and scaled to unit population standard
//! deviation before factorisation; the intercept column is left as ones.
//! The scaled design matrix is reduced with Householder QR and the
//! triangular system solved by back substitution. Singular values of `R`
//! (identical to those of the scaled design) come from a one-sided Jacobi
//! sweep and decide the numerical rank. Coefficients are mapped back to the
//! natural feature units before returning.

use super::RegressionError;

/// Singular values below `RANK_TOLERANCE * max_singular` count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Components of a null-space vector above this magnitude mark the
/// corresponding column as part of the dependency.
const NULL_COMPONENT_TOLERANCE: f64 = 1e-6;

const MAX_JACOBI_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub feature_means: Vec<f64>,
    /// Population standard deviations of the feature columns.
    pub feature_stds: Vec<f64>,
    /// Singular values of the standardised design matrix, descending.
    pub singular_values: Vec<f64>,
}

impl OlsFit {
    pub fn predict(&self, features: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(features)
                .map(|(b, x)| b * x)
                .sum::<f64>()
    }
}

/// Fits `speed ≈ β0 + Σ βj xj` over `(features, target)` rows.
pub fn fit_least_squares(rows: &[(Vec<f64>, f64)]) -> Result<OlsFit, RegressionError> {
    let p = rows.first().map_or(0, |(x, _)| x.len());
    let labels: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
    let features: Vec<&[f64]> = rows.iter().map(|(x, _)| x.as_slice()).collect();
    let targets: Vec<f64> = rows.iter().map(|(_, y)| *y).collect();
    fit_columns(&features, &targets, &labels)
}

/// Same as [`fit_least_squares`] with named columns for diagnostics.
pub fn fit_columns(
    features: &[&[f64]],
    targets: &[f64],
    labels: &[String],
) -> Result<OlsFit, RegressionError> {
    let n = features.len();
    let p = labels.len();
    if n != targets.len() {
        return Err(RegressionError::LengthMismatch {
            left: n,
            right: targets.len(),
        });
    }
    if n < p + 1 {
        return Err(RegressionError::TooFewSamples { n, required: p + 1 });
    }
    for (i, (row, y)) in features.iter().zip(targets).enumerate() {
        if row.len() != p {
            return Err(RegressionError::LengthMismatch {
                left: row.len(),
                right: p,
            });
        }
        if !y.is_finite() || row.iter().any(|v| !v.is_finite()) {
            return Err(RegressionError::NonFinite { row: i });
        }
    }

    let nf = n as f64;
    let means: Vec<f64> = (0..p)
        .map(|j| features.iter().map(|r| r[j]).sum::<f64>() / nf)
        .collect();
    let stds: Vec<f64> = (0..p)
        .map(|j| {
            let var = features
                .iter()
                .map(|r| (r[j] - means[j]).powi(2))
                .sum::<f64>()
                / nf;
            var.sqrt()
        })
        .collect();

    // column-major scaled design, intercept first
    let cols = p + 1;
    let mut a = vec![0.0; n * cols];
    a[..n].fill(1.0);
    for j in 0..p {
        let col = &mut a[(j + 1) * n..(j + 2) * n];
        if stds[j] > 0.0 {
            for (dst, row) in col.iter_mut().zip(features) {
                *dst = (row[j] - means[j]) / stds[j];
            }
        }
    }
    let mut qty = targets.to_vec();
    householder_qr(&mut a, n, cols, &mut qty);

    let r = upper_triangle(&a, n, cols);
    let (sigma, v) = jacobi_svd(&r, cols);
    let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
    let null: Vec<usize> = (0..cols)
        .filter(|&k| sigma[k] <= RANK_TOLERANCE * sigma_max)
        .collect();
    if !null.is_empty() {
        let offending: Vec<usize> = (0..cols)
            .filter(|&i| {
                null.iter()
                    .any(|&k| v[k * cols + i].abs() > NULL_COMPONENT_TOLERANCE)
            })
            .collect();
        let name = |i: usize| {
            if i == 0 {
                "intercept".to_owned()
            } else {
                labels[i - 1].clone()
            }
        };
        return Err(RegressionError::RankDeficient {
            rank: cols - null.len(),
            required: cols,
            columns: offending.into_iter().map(name).collect(),
        });
    }

    let gamma = back_substitute(&r, cols, &qty[..cols]);
    let coefficients: Vec<f64> = (0..p).map(|j| gamma[j + 1] / stds[j]).collect();
    let intercept = gamma[0]
        - coefficients
            .iter()
            .zip(&means)
            .map(|(b, m)| b * m)
            .sum::<f64>();
    let mut singular_values = sigma;
    singular_values.sort_by(|x, y| y.total_cmp(x));
    Ok(OlsFit {
        intercept,
        coefficients,
        feature_means: means,
        feature_stds: stds,
        singular_values,
    })
}

/// In-place Householder triangularisation of the column-major `rows x cols`
/// matrix `a`, applying the same reflections to `rhs`.
fn householder_qr(a: &mut [f64], rows: usize, cols: usize, rhs: &mut [f64]) {
    let mut v = vec![0.0; rows];
    for k in 0..cols.min(rows) {
        let col_k = &a[k * rows..(k + 1) * rows];
        let norm = col_k[k..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if col_k[k] > 0.0 { -norm } else { norm };
        let tail = &mut v[k..];
        tail.copy_from_slice(&col_k[k..]);
        tail[0] -= alpha;
        let v_norm2: f64 = tail.iter().map(|x| x * x).sum();
        if v_norm2 == 0.0 {
            continue;
        }
        let reflect = |x: &mut [f64]| {
            let dot: f64 = tail.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            let scale = 2.0 * dot / v_norm2;
            for (xi, vi) in x.iter_mut().zip(tail.iter()) {
                *xi -= scale * vi;
            }
        };
        for j in k..cols {
            reflect(&mut a[j * rows + k..(j + 1) * rows]);
        }
        reflect(&mut rhs[k..]);
        a[k * rows + k] = alpha;
        a[k * rows + k + 1..(k + 1) * rows].fill(0.0);
    }
}

/// Leading `cols x cols` block of the factorised matrix, column-major.
fn upper_triangle(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut r = vec![0.0; cols * cols];
    for j in 0..cols {
        for i in 0..=j {
            r[j * cols + i] = a[j * rows + i];
        }
    }
    r
}

/// One-sided Jacobi SVD of a square column-major matrix.
///
/// Returns the singular values (unsorted, aligned with the columns of `V`)
/// and `V` in column-major order.
fn jacobi_svd(m: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut w = m.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let rotate = |x: &mut [f64], p: usize, q: usize, c: f64, s: f64| {
        for i in 0..n {
            let xp = x[p * n + i];
            let xq = x[q * n + i];
            x[p * n + i] = c * xp - s * xq;
            x[q * n + i] = s * xp + c * xq;
        }
    };
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    let (xp, xq) = (w[p * n + i], w[q * n + i]);
                    alpha += xp * xp;
                    beta += xq * xq;
                    gamma += xp * xq;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma = (0..n)
        .map(|j| {
            w[j * n..(j + 1) * n]
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    (sigma, v)
}

fn back_substitute(r: &[f64], n: usize, rhs: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let tail: f64 = (i + 1..n).map(|j| r[j * n + i] * x[j]).sum();
        x[i] = (rhs[i] - tail) / r[i * n + i];
    }
    x
}
