use serde::{Deserialize, Serialize};

use super::RegressionError;

fn check_lengths(actual: &[f64], predicted: &[f64]) -> Result<(), RegressionError> {
    if actual.len() != predicted.len() {
        return Err(RegressionError::LengthMismatch {
            left: actual.len(),
            right: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(RegressionError::Empty);
    }
    Ok(())
}

/// Coefficient of determination, `1 - SS_res / SS_tot`.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<f64, RegressionError> {
    check_lengths(actual, predicted)?;
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(RegressionError::ZeroVariance);
    }
    let ss_res: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(y, f)| (y - f).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// `1 - (1 - r2)(n - 1)/(n - p - 1)` for `p` predictors besides the intercept.
pub fn adjusted_r_squared(r2: f64, n: usize, p: usize) -> Result<f64, RegressionError> {
    if n <= p + 1 {
        return Err(RegressionError::DegenerateDof { n, p });
    }
    Ok(1.0 - (1.0 - r2) * (n - 1) as f64 / (n - p - 1) as f64)
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64, RegressionError> {
    check_lengths(actual, predicted)?;
    let mse = actual
        .iter()
        .zip(predicted)
        .map(|(y, f)| (y - f).powi(2))
        .sum::<f64>()
        / actual.len() as f64;
    Ok(mse.sqrt())
}

/// Summary metrics for one evaluation set, as stored in model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBlock {
    pub n: usize,
    pub p: usize,
    pub r2: f64,
    /// Absent when `n <= p + 1`.
    pub adj_r2: Option<f64>,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub r2: f64,
    pub adj_r2: Option<f64>,
    pub rmse: f64,
    pub n: usize,
    pub p: usize,
    pub predictions: Vec<f64>,
    /// `actual - predicted` per sample.
    pub residuals: Vec<f64>,
}

impl EvaluationReport {
    pub fn new(actual: &[f64], predicted: Vec<f64>, p: usize) -> Result<Self, RegressionError> {
        let r2 = r_squared(actual, &predicted)?;
        let rmse = rmse(actual, &predicted)?;
        let n = actual.len();
        Ok(Self {
            r2,
            adj_r2: adjusted_r_squared(r2, n, p).ok(),
            rmse,
            n,
            p,
            residuals: actual.iter().zip(&predicted).map(|(y, f)| y - f).collect(),
            predictions: predicted,
        })
    }

    pub fn block(&self) -> MetricBlock {
        MetricBlock {
            n: self.n,
            p: self.p,
            r2: self.r2,
            adj_r2: self.adj_r2,
            rmse: self.rmse,
        }
    }
}
