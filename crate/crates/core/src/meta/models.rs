//! Candidate model families and their fitting routines: a constant predictor,
//! ridge regression solved by normal equations, and a CART regression tree.

use serde::{Deserialize, Serialize};

use super::tree::{fit_tree, TreeNode};
use crate::error::{Error, Result};

pub const RIDGE_LAMBDAS: [f64; 4] = [0.01, 0.1, 1.0, 10.0];
pub const TREE_MAX_DEPTHS: [usize; 4] = [2, 4, 6, 8];
pub const TREE_MIN_LEAVES: [usize; 2] = [5, 20];

/// One point in the hyper-parameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CandidateSpec {
    Constant,
    Ridge { lambda: f64 },
    Tree { max_depth: usize, min_leaf: usize },
}

/// The full candidate grid in canonical order: constant, then ridge by
/// ascending lambda, then trees by (max_depth, min_leaf). The position in
/// this list is the ranking tie-break.
pub fn candidate_grid() -> Vec<CandidateSpec> {
    let mut grid = vec![CandidateSpec::Constant];
    for lambda in RIDGE_LAMBDAS {
        grid.push(CandidateSpec::Ridge { lambda });
    }
    for max_depth in TREE_MAX_DEPTHS {
        for min_leaf in TREE_MIN_LEAVES {
            grid.push(CandidateSpec::Tree {
                max_depth,
                min_leaf,
            });
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedModel {
    Constant { value: f64 },
    Ridge { weights: Vec<f64>, intercept: f64 },
    Tree { root: TreeNode },
}

impl FittedModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            FittedModel::Constant { value } => *value,
            FittedModel::Ridge { weights, intercept } => {
                intercept + weights.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()
            }
            FittedModel::Tree { root } => root.predict(x),
        }
    }
}

/// A fitted candidate together with its cross-validated MAE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub candidate: CandidateSpec,
    pub model: FittedModel,
    pub cv_mae: f64,
}

/// Fits one candidate on the full design matrix. Degenerate designs (all rows
/// identical, or centered columns all zero) fall back to the mean predictor
/// without error: ridge weights solve to zero and trees find no split.
pub fn fit_candidate(candidate: CandidateSpec, x: &[Vec<f64>], y: &[f64]) -> Result<FittedModel> {
    if x.len() != y.len() || y.is_empty() {
        return Err(Error::Data(format!(
            "design matrix has {} rows for {} targets",
            x.len(),
            y.len()
        )));
    }
    Ok(match candidate {
        CandidateSpec::Constant => FittedModel::Constant {
            value: y.iter().sum::<f64>() / y.len() as f64,
        },
        CandidateSpec::Ridge { lambda } => {
            let (weights, intercept) = fit_ridge(x, y, lambda);
            FittedModel::Ridge { weights, intercept }
        }
        CandidateSpec::Tree {
            max_depth,
            min_leaf,
        } => FittedModel::Tree {
            root: fit_tree(x, y, max_depth, min_leaf),
        },
    })
}

/// Ridge regression with an unpenalized intercept: center the columns and the
/// target, solve `(Xc'Xc + lambda I) w = Xc' yc` by Gaussian elimination, and
/// recover the intercept from the means.
fn fit_ridge(x: &[Vec<f64>], y: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let n = x.len();
    let p = x[0].len();
    let nf = n as f64;

    let mut col_mean = vec![0.0; p];
    for row in x {
        for (m, v) in col_mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut col_mean {
        *m /= nf;
    }
    let y_mean = y.iter().sum::<f64>() / nf;

    // gram = Xc'Xc + lambda I, rhs = Xc'yc
    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    let mut centered_row = vec![0.0; p];
    for (row, &yi) in x.iter().zip(y) {
        for (c, (v, m)) in row.iter().zip(&col_mean).enumerate() {
            centered_row[c] = v - m;
        }
        let yc = yi - y_mean;
        for i in 0..p {
            rhs[i] += centered_row[i] * yc;
            for j in i..p {
                gram[i][j] += centered_row[i] * centered_row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            gram[i][j] = gram[j][i];
        }
        gram[i][i] += lambda;
    }

    let weights = solve_linear(gram, rhs);
    let intercept = y_mean
        - weights
            .iter()
            .zip(&col_mean)
            .map(|(w, m)| w * m)
            .sum::<f64>();
    (weights, intercept)
}

/// Gaussian elimination with partial pivoting on a symmetric positive-definite
/// system. The ridge diagonal keeps it nonsingular.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_has_thirteen_candidates() {
        assert_eq!(candidate_grid().len(), 13);
        assert_eq!(candidate_grid()[0], CandidateSpec::Constant);
    }

    #[test]
    fn constant_fit_is_mean() {
        let model =
            fit_candidate(CandidateSpec::Constant, &[vec![0.0], vec![1.0]], &[0.2, 0.4]).unwrap();
        assert_abs_diff_eq!(model.predict(&[9.9]), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn ridge_recovers_linear_relation() {
        // y = 2x exactly; lambda -> 0 should recover w ~ 2
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 20.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0]).collect();
        // independent oracle: closed-form least squares on the tiny system
        let sxx: f64 = x.iter().map(|r| r[0] * r[0]).sum::<f64>()
            - x.iter().map(|r| r[0]).sum::<f64>().powi(2) / 20.0;
        let sxy: f64 = x.iter().zip(&y).map(|(r, yi)| r[0] * yi).sum::<f64>()
            - x.iter().map(|r| r[0]).sum::<f64>() * y.iter().sum::<f64>() / 20.0;
        let ols_slope = sxy / sxx;

        let model = fit_candidate(CandidateSpec::Ridge { lambda: 1e-9 }, &x, &y).unwrap();
        match &model {
            FittedModel::Ridge { weights, intercept } => {
                assert_abs_diff_eq!(weights[0], ols_slope, epsilon = 1e-6);
                assert_abs_diff_eq!(weights[0], 2.0, epsilon = 1e-6);
                assert_abs_diff_eq!(*intercept, 0.0, epsilon = 1e-6);
            }
            other => panic!("expected ridge, got {other:?}"),
        }
    }

    #[test]
    fn ridge_intercept_is_unpenalized() {
        // constant shift should land entirely in the intercept even at high lambda
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![(i % 7) as f64]).collect();
        let y: Vec<f64> = vec![0.9; 50];
        let model = fit_candidate(CandidateSpec::Ridge { lambda: 10.0 }, &x, &y).unwrap();
        assert_abs_diff_eq!(model.predict(&[3.0]), 0.9, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_design_behaves_like_constant() {
        let x = vec![vec![1.0, 1.0]; 6];
        let y = vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let ridge = fit_candidate(CandidateSpec::Ridge { lambda: 0.1 }, &x, &y).unwrap();
        assert_abs_diff_eq!(ridge.predict(&[1.0, 1.0]), 0.5, epsilon = 1e-12);
        let tree = fit_candidate(
            CandidateSpec::Tree {
                max_depth: 4,
                min_leaf: 1,
            },
            &x,
            &y,
        )
        .unwrap();
        assert_abs_diff_eq!(tree.predict(&[1.0, 1.0]), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn solver_matches_known_system() {
        // 2x + y = 5, x + 3y = 10 -> x = 1, y = 3
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let sol = solve_linear(a, vec![5.0, 10.0]);
        assert_abs_diff_eq!(sol[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol[1], 3.0, epsilon = 1e-12);
    }
}
