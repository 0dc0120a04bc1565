//! Linear models: ridge- and lasso-penalized logistic regression and a
//! soft-margin linear SVM, all trained on internally standardized
//! features.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{validate_training_set, DecisionModel, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinearKind {
    Svm,
    Ridge,
    Lasso,
}

/// Per-feature (mean, std) captured from training data. Constant features
/// are flagged and map to 0 after standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub constant: Vec<bool>,
}

impl Scaler {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let m = x.len() as f64;
        let dim = x[0].len();
        let mut means = vec![0.0; dim];
        for row in x {
            for (mu, v) in means.iter_mut().zip(row) {
                *mu += v;
            }
        }
        for mu in means.iter_mut() {
            *mu /= m;
        }
        let mut stds = vec![0.0; dim];
        for row in x {
            for j in 0..dim {
                stds[j] += (row[j] - means[j]).powi(2);
            }
        }
        let mut constant = vec![false; dim];
        for j in 0..dim {
            stds[j] = (stds[j] / m).sqrt();
            if stds[j] < 1e-12 {
                constant[j] = true;
                stds[j] = 1.0;
            }
        }
        Self {
            means,
            stds,
            constant,
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, v)| {
                if self.constant[j] {
                    0.0
                } else {
                    (v - self.means[j]) / self.stds[j]
                }
            })
            .collect()
    }
}

/// A trained linear decision function w . x_std + b.
#[derive(Debug, Clone)]
pub struct LinearModel {
    /// Weights in the standardized feature space.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub scaler: Scaler,
    pub kind: LinearKind,
    /// SVM box multipliers, kept for duality-gap diagnostics.
    pub dual_coefficients: Option<Vec<f64>>,
}

impl LinearModel {
    /// Map a raw input into the standardized training space.
    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        self.scaler.transform(x)
    }
}

impl DecisionModel for LinearModel {
    fn decision_score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.scaler.dim() {
            return Err(Error::DimensionMismatch {
                got: x.len(),
                expected: self.scaler.dim(),
            });
        }
        let xs = self.scaler.transform(x);
        let score = self
            .weights
            .iter()
            .zip(&xs)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.intercept;
        Ok(score)
    }
}

fn standardized_rows(x: &[Vec<f64>], scaler: &Scaler) -> Vec<Vec<f64>> {
    x.iter().map(|row| scaler.transform(row)).collect()
}

/// log(1 + exp(-t)) without overflow.
fn log1p_exp_neg(t: f64) -> f64 {
    if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// L2-penalized logistic regression:
/// minimize (1/m) sum log(1 + exp(-y (w.x + b))) + lambda ||w||^2,
/// intercept unpenalized, solved by damped Newton / IRLS in the span of
/// the training rows (exact for lambda > 0). Converged when the gradient
/// norm drops to `tol`.
pub fn train_ridge(x: &[Vec<f64>], y: &[f64], cfg: &TrainConfig) -> Result<LinearModel> {
    validate_training_set(x, y)?;
    cfg.validate_common()?;
    if !(cfg.lambda > 0.0) {
        return Err(Error::InvalidConfig("ridge lambda must be > 0".into()));
    }
    let scaler = Scaler::fit(x);
    let xs = standardized_rows(x, &scaler);
    let m = xs.len();
    let lambda = cfg.lambda;

    let kernel = DMatrix::from_fn(m, m, |i, j| dot(&xs[i], &xs[j]));

    let mut beta = DVector::zeros(m);
    let mut intercept = 0.0f64;
    let mut z = DVector::zeros(m);

    let objective = |beta: &DVector<f64>, z: &DVector<f64>| -> f64 {
        let loss: f64 = (0..m).map(|i| log1p_exp_neg(y[i] * z[i])).sum::<f64>() / m as f64;
        loss + lambda * beta.dot(&(&kernel * beta))
    };

    let mut f_cur = objective(&beta, &z);
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iter {
        // Per-sample loss gradient and curvature.
        let mut s = DVector::zeros(m);
        let mut d = DVector::zeros(m);
        for i in 0..m {
            let p = sigmoid(-y[i] * z[i]);
            s[i] = -y[i] * p / m as f64;
            d[i] = (p * (1.0 - p)).max(1e-12) / m as f64;
        }

        // Primal gradient norm (in w, b coordinates) is the stop rule.
        let mut grad_sq = 0.0;
        for j in 0..scaler.dim() {
            let mut g = 0.0;
            for i in 0..m {
                g += xs[i][j] * (s[i] + 2.0 * lambda * beta[i]);
            }
            grad_sq += g * g;
        }
        let g_b: f64 = s.sum();
        grad_sq += g_b * g_b;
        residual = grad_sq.sqrt();
        if residual <= cfg.tol {
            let mut weights = vec![0.0; scaler.dim()];
            for j in 0..scaler.dim() {
                for i in 0..m {
                    weights[j] += xs[i][j] * beta[i];
                }
            }
            return Ok(LinearModel {
                weights,
                intercept,
                scaler,
                kind: LinearKind::Ridge,
                dual_coefficients: None,
            });
        }

        // Newton system over (beta, b), damped because K may be singular.
        let dim = m + 1;
        let mut h = DMatrix::zeros(dim, dim);
        let kd = {
            let mut kd = kernel.clone();
            for j in 0..m {
                for i in 0..m {
                    kd[(i, j)] *= d[j];
                }
            }
            kd // K * D
        };
        let kdk = &kd * &kernel;
        for i in 0..m {
            for j in 0..m {
                h[(i, j)] = kdk[(i, j)] + 2.0 * lambda * kernel[(i, j)];
            }
        }
        let kd1 = kd.column_sum();
        for i in 0..m {
            h[(i, m)] = kd1[i];
            h[(m, i)] = kd1[i];
        }
        h[(m, m)] = d.sum();
        let damping = 1e-10 * (h.trace() / dim as f64).max(1e-30);
        for i in 0..dim {
            h[(i, i)] += damping;
        }

        let mut grad = DVector::zeros(dim);
        let kg = &kernel * (&s + 2.0 * lambda * &beta);
        for i in 0..m {
            grad[i] = kg[i];
        }
        grad[m] = g_b;

        let step = match Cholesky::new(h) {
            Some(chol) => chol.solve(&(-&grad)),
            None => -&grad, // fall back to gradient direction
        };

        // Backtracking line search (Armijo).
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let beta_new = &beta + step.rows(0, m) * t;
            let b_new = intercept + t * step[m];
            let z_new = &kernel * &beta_new + DVector::from_element(m, b_new);
            let f_new = objective(&beta_new, &z_new);
            if f_new <= f_cur + 1e-4 * t * slope {
                debug_assert!(f_new <= f_cur + 1e-12);
                beta = beta_new;
                intercept = b_new;
                z = z_new;
                f_cur = f_new;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::NonConvergence {
        max_iter: cfg.max_iter,
        residual,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smallest lambda for which the lasso solution has all weights zero:
/// max_j |(1/m) sum_i x_ij (y01_i - mean(y01))| on standardized features.
pub fn lasso_lambda_max(x: &[Vec<f64>], y: &[f64]) -> f64 {
    let scaler = Scaler::fit(x);
    let xs = standardized_rows(x, &scaler);
    let m = xs.len();
    let p_bar = y.iter().filter(|&&v| v > 0.0).count() as f64 / m as f64;
    (0..scaler.dim())
        .map(|j| {
            let g: f64 = (0..m)
                .map(|i| xs[i][j] * ((y[i] > 0.0) as u8 as f64 - p_bar))
                .sum::<f64>()
                / m as f64;
            g.abs()
        })
        .fold(0.0, f64::max)
}

/// L1-penalized logistic regression:
/// minimize (1/m) sum log(1 + exp(-y (w.x + b))) + lambda ||w||_1,
/// by cyclic coordinate descent with soft-thresholding over a local
/// quadratic approximation. Converged when the largest parameter update
/// in an outer cycle drops to `tol`.
pub fn train_lasso(x: &[Vec<f64>], y: &[f64], cfg: &TrainConfig) -> Result<LinearModel> {
    validate_training_set(x, y)?;
    cfg.validate_common()?;
    if !(cfg.lambda > 0.0) {
        return Err(Error::InvalidConfig("lasso lambda must be > 0".into()));
    }
    let scaler = Scaler::fit(x);
    let xs = standardized_rows(x, &scaler);
    let m = xs.len();
    let dim = scaler.dim();
    let lambda = cfg.lambda;
    let y01: Vec<f64> = y.iter().map(|&v| (v > 0.0) as u8 as f64).collect();

    let mut weights = vec![0.0f64; dim];
    // Intercept-only optimum is the empirical log-odds; starting there
    // makes lambda >= lambda_max return exact zeros immediately.
    let p_bar = y01.iter().sum::<f64>() / m as f64;
    let mut intercept = (p_bar / (1.0 - p_bar)).ln();
    let mut z: Vec<f64> = vec![intercept; m];

    for _ in 0..cfg.max_iter {
        // Quadratic approximation at the current iterate.
        let mut omega = vec![0.0f64; m];
        let mut work = vec![0.0f64; m]; // working response
        for i in 0..m {
            let p = sigmoid(z[i]);
            let w = (p * (1.0 - p)).max(1e-5);
            omega[i] = w;
            work[i] = z[i] + (y01[i] - p) / w;
        }

        // Inner coordinate-descent sweeps on the weighted least squares
        // problem, soft-thresholding each weight.
        let mut outer_delta = 0.0f64;
        for _sweep in 0..100 {
            let mut sweep_delta = 0.0f64;
            for j in 0..dim {
                if scaler.constant[j] {
                    continue;
                }
                let mut rho = 0.0;
                let mut denom = 0.0;
                for i in 0..m {
                    let partial = work[i] - z[i] + weights[j] * xs[i][j];
                    rho += omega[i] * xs[i][j] * partial;
                    denom += omega[i] * xs[i][j] * xs[i][j];
                }
                rho /= m as f64;
                denom /= m as f64;
                let new_w = soft_threshold(rho, lambda) / denom;
                let delta = new_w - weights[j];
                if delta != 0.0 {
                    for i in 0..m {
                        z[i] += delta * xs[i][j];
                    }
                    weights[j] = new_w;
                    sweep_delta = sweep_delta.max(delta.abs());
                }
            }
            // Intercept (unpenalized).
            let num: f64 = (0..m).map(|i| omega[i] * (work[i] - z[i])).sum();
            let den: f64 = omega.iter().sum();
            let delta_b = num / den;
            if delta_b != 0.0 {
                for zi in z.iter_mut() {
                    *zi += delta_b;
                }
                intercept += delta_b;
                sweep_delta = sweep_delta.max(delta_b.abs());
            }
            outer_delta = outer_delta.max(sweep_delta);
            if sweep_delta <= cfg.tol * 0.1 {
                break;
            }
        }
        if outer_delta <= cfg.tol {
            return Ok(LinearModel {
                weights,
                intercept,
                scaler,
                kind: LinearKind::Lasso,
                dual_coefficients: None,
            });
        }
    }
    Err(Error::NonConvergence {
        max_iter: cfg.max_iter,
        residual: f64::NAN,
    })
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Linear soft-margin SVM:
/// minimize (1/2) ||w_aug||^2 + C sum max(0, 1 - y (w.x + b)),
/// solved by dual coordinate descent with the bias folded into an
/// augmented constant feature. Dual feasibility 0 <= alpha_i <= C holds
/// at exit; converged when the largest projected gradient drops to `tol`.
pub fn train_svm(x: &[Vec<f64>], y: &[f64], cfg: &TrainConfig) -> Result<LinearModel> {
    validate_training_set(x, y)?;
    cfg.validate_common()?;
    if !(cfg.c > 0.0) {
        return Err(Error::InvalidConfig("svm cost c must be > 0".into()));
    }
    let scaler = Scaler::fit(x);
    let m = x.len();
    let dim = scaler.dim();
    // Augmented rows: standardized features plus a constant 1 for the bias.
    let xa: Vec<Vec<f64>> = x
        .iter()
        .map(|row| {
            let mut r = scaler.transform(row);
            r.push(1.0);
            r
        })
        .collect();
    let q_diag: Vec<f64> = xa.iter().map(|r| dot(r, r)).collect();

    let mut alpha = vec![0.0f64; m];
    let mut w_aug = vec![0.0f64; dim + 1];
    let c = cfg.c;

    let mut max_pg = f64::INFINITY;
    for _ in 0..cfg.max_iter {
        max_pg = 0.0f64;
        for i in 0..m {
            let g = y[i] * dot(&w_aug, &xa[i]) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            max_pg = max_pg.max(pg.abs());
            if pg != 0.0 {
                let new_alpha = (alpha[i] - g / q_diag[i]).clamp(0.0, c);
                let delta = new_alpha - alpha[i];
                if delta != 0.0 {
                    for (w, v) in w_aug.iter_mut().zip(&xa[i]) {
                        *w += delta * y[i] * v;
                    }
                    alpha[i] = new_alpha;
                }
            }
        }
        if max_pg <= cfg.tol {
            let intercept = w_aug[dim];
            let weights = w_aug[..dim].to_vec();
            return Ok(LinearModel {
                weights,
                intercept,
                scaler,
                kind: LinearKind::Svm,
                dual_coefficients: Some(alpha),
            });
        }
    }
    Err(Error::NonConvergence {
        max_iter: cfg.max_iter,
        residual: max_pg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TrainConfig {
        TrainConfig::default()
    }

    fn separable_1d() -> (Vec<Vec<f64>>, Vec<f64>) {
        let x = vec![vec![-1.0], vec![-0.8], vec![1.0], vec![0.9]];
        let y = vec![-1.0, -1.0, 1.0, 1.0];
        (x, y)
    }

    #[test]
    fn huge_ridge_penalty_crushes_weights() {
        let x = vec![
            vec![-1.0, 0.2],
            vec![-0.5, -0.3],
            vec![0.7, 0.8],
            vec![1.2, -0.1],
            vec![0.9, 0.4],
        ];
        let y = vec![-1.0, -1.0, 1.0, 1.0, 1.0];
        let model = train_ridge(&x, &y, &TrainConfig { lambda: 1e6, ..cfg() }).unwrap();
        let norm: f64 = model.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(norm <= 1e-3, "||w|| = {norm}");
        // Intercept fits the class prior (3 of 5 positive).
        let prior = (0.6f64 / 0.4).ln();
        assert!((model.intercept - prior).abs() < 1e-2, "b = {}", model.intercept);
    }

    #[test]
    fn ridge_discriminant_sign() {
        let (x, y) = separable_1d();
        let model = train_ridge(&x, &y, &cfg()).unwrap();
        assert!(model.weights[0] > 0.0);
    }

    #[test]
    fn ridge_prediction_invariant_to_feature_rescaling() {
        let x = vec![
            vec![-1.0, 3.0],
            vec![-0.5, 1.0],
            vec![0.7, -2.0],
            vec![1.2, 4.0],
        ];
        let y = vec![-1.0, -1.0, 1.0, 1.0];
        let model_a = train_ridge(&x, &y, &cfg()).unwrap();
        // Affine rescaling of column 1 at train and predict time.
        let rescale = |row: &[f64]| vec![row[0], 5.0 * row[1] - 2.0];
        let x2: Vec<Vec<f64>> = x.iter().map(|r| rescale(r)).collect();
        let model_b = train_ridge(&x2, &y, &cfg()).unwrap();
        for probe in &x {
            let a = model_a.decision_score(probe).unwrap();
            let b = model_b.decision_score(&rescale(probe)).unwrap();
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn lasso_lambda_max_kills_all_weights() {
        let x = vec![
            vec![-1.0, 0.4, 2.0],
            vec![-0.5, -0.2, 1.0],
            vec![0.7, 0.9, -1.0],
            vec![1.2, 0.1, 0.5],
        ];
        let y = vec![-1.0, -1.0, 1.0, 1.0];
        let lmax = lasso_lambda_max(&x, &y);
        let model = train_lasso(&x, &y, &TrainConfig { lambda: lmax * 1.0001, ..cfg() }).unwrap();
        assert!(model.weights.iter().all(|&w| w == 0.0), "{:?}", model.weights);
        // Just below lambda_max at least one weight activates.
        let model = train_lasso(&x, &y, &TrainConfig { lambda: lmax * 0.9, ..cfg() }).unwrap();
        assert!(model.weights.iter().any(|&w| w != 0.0));
    }

    #[test]
    fn lasso_rejects_zero_lambda() {
        let (x, y) = separable_1d();
        assert!(matches!(
            train_lasso(&x, &y, &TrainConfig { lambda: 0.0, ..cfg() }),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn svm_hard_margin_two_points() {
        let x = vec![vec![-1.0], vec![1.0]];
        let y = vec![-1.0, 1.0];
        let model = train_svm(&x, &y, &TrainConfig { c: 1000.0, ..cfg() }).unwrap();
        // Standardization maps the points to -1/+1 themselves, so the
        // closed-form hard-margin solution is w = 1, b = 0.
        assert!((model.weights[0] - 1.0).abs() < 1e-3, "w = {}", model.weights[0]);
        assert!(model.intercept.abs() < 1e-3, "b = {}", model.intercept);
        assert!((model.decision_score(&[1.0]).unwrap() - 1.0).abs() < 1e-3);
        assert!((model.decision_score(&[-1.0]).unwrap() + 1.0).abs() < 1e-3);
    }

    #[test]
    fn svm_duplicating_samples_changes_nothing() {
        let x = vec![vec![-1.3, 0.2], vec![-0.4, 1.0], vec![0.8, -0.5], vec![1.1, 0.6]];
        let y = vec![-1.0, -1.0, 1.0, 1.0];
        let model_a = train_svm(&x, &y, &cfg()).unwrap();
        let mut x2 = x.clone();
        x2.extend(x.iter().cloned());
        let mut y2 = y.clone();
        y2.extend(y.iter().cloned());
        let model_b = train_svm(&x2, &y2, &cfg()).unwrap();
        for probe in &x {
            let a = model_a.decision_score(probe).unwrap();
            let b = model_b.decision_score(probe).unwrap();
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn linear_score_is_monotone_in_a_positive_weight() {
        let (x, y) = separable_1d();
        let model = train_ridge(&x, &y, &cfg()).unwrap();
        let lo = model.decision_score(&[0.0]).unwrap();
        let hi = model.decision_score(&[0.5]).unwrap();
        assert!(hi > lo);
    }

    #[test]
    fn centered_probe_scores_zero_when_intercept_zero() {
        let mut model = {
            let (x, y) = separable_1d();
            train_ridge(&x, &y, &cfg()).unwrap()
        };
        model.intercept = 0.0;
        let mean: Vec<f64> = model.scaler.means.clone();
        assert!(model.decision_score(&mean).unwrap().abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let (x, y) = separable_1d();
        let model = train_ridge(&x, &y, &cfg()).unwrap();
        assert!(matches!(
            model.decision_score(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
