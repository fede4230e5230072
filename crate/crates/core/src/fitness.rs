//! Linear scaling with a ridge-regularized two-column design and the
//! closed-form leave-one-out error.
//!
//! For a tree output `z` the design is `Z = [z 1]` and the coefficients solve
//! `(Z'Z + lambda I) [alpha beta]' = Z'y`. Everything is expressed in centered
//! sums so large tree outputs do not lose precision through cancellation.

use crate::dataio::DatasetSplit;
use crate::exprtree::{ExpressionTree, TreeError};
use ndarray::ArrayView2;
use std::sync::Arc;

pub const DEFAULT_LAMBDA: f64 = 1e-6;

/// Lower bound on `1 - H_jj` in the leave-one-out correction.
const MIN_LOO_DENOMINATOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct RidgeFit {
    pub alpha: f64,
    pub beta: f64,
    /// Diagonal of the hat matrix.
    pub leverage: Vec<f64>,
    pub residuals: Vec<f64>,
    pub lambda: f64,
}

/// Fits `y ~ alpha * z + beta` minimizing `|y - alpha z - beta|^2 + lambda (alpha^2 + beta^2)`.
///
/// A (numerically) constant `z` falls back to `alpha = 0, beta = mean(y)`.
pub fn fit_linear_scaling(z: &[f64], y: &[f64], lambda: f64) -> RidgeFit {
    assert_eq!(z.len(), y.len(), "z and y must have equal length");
    assert!(z.len() >= 2, "linear scaling needs at least two samples");
    let n = z.len() as f64;
    let z_mean = z.iter().sum::<f64>() / n;
    let y_mean = y.iter().sum::<f64>() / n;
    let szz_c: f64 = z.iter().map(|v| (v - z_mean).powi(2)).sum();
    let szy_c: f64 = z.iter().zip(y).map(|(a, b)| (a - z_mean) * (b - y_mean)).sum();
    let szz = szz_c + n * z_mean * z_mean;
    let sy = n * y_mean;
    let szy = szy_c + n * z_mean * y_mean;

    // det(Z'Z + lambda I) = n * SS_c + lambda * (Szz + n + lambda)
    let det = n * szz_c + lambda * (szz + n + lambda);
    let degenerate = szz_c <= f64::EPSILON * szz.max(f64::MIN_POSITIVE) || !det.is_finite() || det <= 0.0;

    if degenerate {
        let residuals: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
        // Intercept-only design: H = 11'/(n + lambda).
        let h = 1.0 / (n + lambda);
        return RidgeFit {
            alpha: 0.0,
            beta: y_mean,
            leverage: vec![h; z.len()],
            residuals,
            lambda,
        };
    }

    // Cramer's rule, numerators rewritten in centered sums.
    let alpha = (n * szy_c + lambda * szy) / det;
    let beta = (n * (y_mean * szz_c - z_mean * szy_c) + lambda * sy) / det;
    // h_j = (n (z_j - z_mean)^2 + SS_c + lambda (z_j^2 + 1)) / det
    let leverage = z
        .iter()
        .map(|&zj| (n * (zj - z_mean).powi(2) + szz_c + lambda * (zj * zj + 1.0)) / det)
        .collect();
    let residuals = z
        .iter()
        .zip(y)
        .map(|(&zj, &yj)| yj - (alpha * zj + beta))
        .collect();
    RidgeFit {
        alpha,
        beta,
        leverage,
        residuals,
        lambda,
    }
}

/// Per-case leave-one-out squared errors `(r_j / (1 - H_jj))^2`.
pub fn loocv_case_errors(fit: &RidgeFit) -> Vec<f64> {
    fit.residuals
        .iter()
        .zip(&fit.leverage)
        .map(|(r, h)| (r / (1.0 - h).max(MIN_LOO_DENOMINATOR)).powi(2))
        .collect()
}

/// `1 - SSE/SST`; a constant target scores 1 when matched exactly and 0 otherwise.
pub fn r2_score(pred: &[f64], y: &[f64]) -> f64 {
    assert_eq!(pred.len(), y.len());
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sse: f64 = pred.iter().zip(y).map(|(p, t)| (t - p).powi(2)).sum();
    let sst: f64 = y.iter().map(|t| (t - mean).powi(2)).sum();
    if sst == 0.0 {
        return if sse > 0.0 { 0.0 } else { 1.0 };
    }
    1.0 - sse / sst
}

/// A linearly scaled expression tree with its per-case training errors.
#[derive(Clone, Debug)]
pub struct Individual {
    pub genome: ExpressionTree,
    pub alpha: f64,
    pub beta: f64,
    pub predicted_values: Vec<f64>,
    /// Leave-one-out squared error per training case.
    pub case_values: Vec<f64>,
    pub y: Arc<[f64]>,
    pub loocv_total: f64,
}

impl Individual {
    pub fn node_count(&self) -> usize {
        self.genome.node_count()
    }

    pub fn height(&self) -> usize {
        self.genome.height()
    }

    pub fn mean_case_error(&self) -> f64 {
        self.loocv_total / self.case_values.len() as f64
    }

    /// Scaled predictions on new inputs.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>, TreeError> {
        let z = self.genome.evaluate(x)?;
        Ok(z.iter().map(|v| self.alpha * v + self.beta).collect())
    }

    pub fn train_r2(&self) -> f64 {
        r2_score(&self.predicted_values, &self.y)
    }
}

/// Evaluates `tree` on the training partition of `split`.
pub fn evaluate_individual(
    tree: ExpressionTree,
    split: &DatasetSplit,
    lambda: f64,
) -> Result<Individual, TreeError> {
    evaluate_on(tree, split.x_train.view(), &split.y_train, lambda)
}

pub fn evaluate_on(
    tree: ExpressionTree,
    x: ArrayView2<'_, f64>,
    y: &Arc<[f64]>,
    lambda: f64,
) -> Result<Individual, TreeError> {
    let z = tree.evaluate(x)?;
    let fit = fit_linear_scaling(&z, y, lambda);
    let case_values = loocv_case_errors(&fit);
    let loocv_total = case_values.iter().sum();
    let predicted_values = z.iter().map(|v| fit.alpha * v + fit.beta).collect();
    Ok(Individual {
        genome: tree,
        alpha: fit.alpha,
        beta: fit.beta,
        predicted_values,
        case_values,
        y: Arc::clone(y),
        loocv_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn perfect_predictor() {
        let y = [1.0, -2.0, 3.5, 0.25, 7.0];
        let fit = fit_linear_scaling(&y, &y, 1e-12);
        assert!((fit.alpha - 1.0).abs() < 1e-9);
        assert!(fit.beta.abs() < 1e-9);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-9));
    }

    #[test]
    fn constant_column_falls_back_to_mean() {
        let z = [2.0; 6];
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let fit = fit_linear_scaling(&z, &y, 1e-6);
        assert_eq!(fit.alpha, 0.0);
        assert!((fit.beta - 3.5).abs() < 1e-12);
    }

    #[test]
    fn loo_formula_arithmetic() {
        let fit = RidgeFit {
            alpha: 0.0,
            beta: 0.0,
            leverage: vec![0.5],
            residuals: vec![1.0],
            lambda: 0.0,
        };
        assert_eq!(loocv_case_errors(&fit), vec![4.0]);
    }

    #[test]
    fn zero_residuals_give_zero_errors() {
        let fit = RidgeFit {
            alpha: 1.0,
            beta: 0.0,
            leverage: vec![0.3, 0.2, 0.9],
            residuals: vec![0.0; 3],
            lambda: 0.0,
        };
        assert!(loocv_case_errors(&fit).iter().all(|&e| e == 0.0));
    }

    #[test]
    fn leverage_near_one_is_clamped() {
        let fit = RidgeFit {
            alpha: 0.0,
            beta: 0.0,
            leverage: vec![1.0],
            residuals: vec![1e-6],
            lambda: 0.0,
        };
        assert!(loocv_case_errors(&fit)[0].is_finite());
    }

    #[test]
    fn r2_examples() {
        let y = [1.0, 2.0, 4.0];
        assert_eq!(r2_score(&y, &y), 1.0);
        let mean = 7.0 / 3.0;
        assert!(r2_score(&[mean; 3], &y).abs() < 1e-15);
        assert!((r2_score(&[1.0, 2.0, 3.0], &y) - (1.0 - 3.0 / 14.0)).abs() < 1e-15);
        assert!((r2_score(&[1.0, 2.0, 3.0], &y) - 0.785_714_285_714).abs() < 1e-12);
    }

    #[test]
    fn r2_constant_target() {
        assert_eq!(r2_score(&[2.0, 2.0], &[2.0, 2.0]), 1.0);
        assert_eq!(r2_score(&[2.0, 3.0], &[2.0, 2.0]), 0.0);
    }

    #[test]
    fn individual_recovers_line() {
        let x = Array2::from_shape_fn((20, 1), |(i, _)| i as f64 / 10.0 - 1.0);
        let y: Arc<[f64]> = x.column(0).iter().map(|v| 2.0 * v + 1.0).collect();
        let ind = evaluate_on("x0".parse().unwrap(), x.view(), &y, DEFAULT_LAMBDA).unwrap();
        assert!((ind.alpha - 2.0).abs() < 1e-6);
        assert!((ind.beta - 1.0).abs() < 1e-6);
        assert!(ind.loocv_total <= 1e-8);
        assert_eq!(ind.node_count(), 1);
        assert_eq!(ind.height(), 0);
    }

    #[test]
    fn constant_tree_predicts_offset() {
        let x = Array2::from_shape_fn((8, 2), |(i, j)| (i * 3 + j) as f64);
        let y: Arc<[f64]> = (0..8).map(|i| (i * i) as f64).collect();
        let ind = evaluate_on("0.5".parse().unwrap(), x.view(), &y, DEFAULT_LAMBDA).unwrap();
        assert!(ind.predicted_values.iter().all(|&p| p == ind.beta));
    }
}
