//! L2-regularized logistic regression, trained deterministically by Newton
//! iteration from a zero start. Scores (log-loss, accuracy) follow the usual
//! conventions: mean cross-entropy with probability clipping, ties at
//! p = 0.5 classified as class 1.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Probability clip applied before taking logs in [`log_loss`].
pub const PROB_CLIP: f64 = 1e-15;

#[derive(Debug, Error, PartialEq)]
pub enum LogRegError {
    #[error("design matrix has {x_rows} rows but {y_rows} labels")]
    RowMismatch { x_rows: usize, y_rows: usize },
    #[error("model has {model} weights but the matrix has {data} columns")]
    ColumnMismatch { model: usize, data: usize },
    #[error("non-finite value in the training input")]
    NonFiniteInput,
    #[error("labels must be 0 or 1")]
    BadLabel,
    #[error("training needs at least one row")]
    Empty,
}

#[derive(Debug, Clone, Copy)]
pub struct LogRegConfig {
    /// Inverse regularization strength; the penalty is ‖w‖²/(2C) with the
    /// intercept unregularized.
    pub c: f64,
    /// Gradient-norm convergence target.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self { c: 1.0, tol: 1e-6, max_iter: 1000 }
    }
}

/// A fitted model plus its convergence report.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: DVector<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub grad_norm: f64,
    pub iterations: usize,
}

impl LogRegModel {
    pub fn predict_proba(&self, x: &DMatrix<f64>) -> Result<DVector<f64>, LogRegError> {
        if x.ncols() != self.weights.len() {
            return Err(LogRegError::ColumnMismatch { model: self.weights.len(), data: x.ncols() });
        }
        let mut z = x * &self.weights;
        z.add_scalar_mut(self.intercept);
        Ok(z.map(sigmoid))
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Sum of cross-entropies plus the ridge penalty — the quantity Newton
/// minimizes (the reported score in [`log_loss`] is the *mean* without
/// penalty).
fn penalized_objective(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
    c: f64,
) -> f64 {
    let k = x.ncols();
    let mut total = 0.0;
    for i in 0..x.nrows() {
        let mut z = beta[k];
        for j in 0..k {
            z += x[(i, j)] * beta[j];
        }
        total += softplus(z) - y[i] * z;
    }
    let ridge: f64 = (0..k).map(|j| beta[j] * beta[j]).sum();
    total + ridge / (2.0 * c)
}

/// Fits by damped Newton iteration. Deterministic: starts at zero, no
/// randomness anywhere. Zero-column inputs produce an intercept-only model.
pub fn train_logreg(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    config: &LogRegConfig,
) -> Result<LogRegModel, LogRegError> {
    let (m, k) = (x.nrows(), x.ncols());
    if m == 0 {
        return Err(LogRegError::Empty);
    }
    if y.len() != m {
        return Err(LogRegError::RowMismatch { x_rows: m, y_rows: y.len() });
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(LogRegError::NonFiniteInput);
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(LogRegError::BadLabel);
    }

    // beta = [w; b]
    let mut beta = DVector::<f64>::zeros(k + 1);
    let mut objective = penalized_objective(x, y, &beta, config.c);
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;

    for iter in 0..config.max_iter {
        iterations = iter + 1;
        let mut z = DVector::<f64>::from_element(m, beta[k]);
        for j in 0..k {
            let col = x.column(j);
            let w = beta[j];
            for i in 0..m {
                z[i] += col[i] * w;
            }
        }
        let p = z.map(sigmoid);
        let residual = &p - y;

        let mut grad = DVector::<f64>::zeros(k + 1);
        for j in 0..k {
            grad[j] = x.column(j).dot(&residual) + beta[j] / config.c;
        }
        grad[k] = residual.sum();
        grad_norm = grad.norm();
        if grad_norm <= config.tol {
            break;
        }

        // Hessian: [XᵀWX + I/C, XᵀW1; (XᵀW1)ᵀ, ΣW]
        let wdiag = p.map(|pi| pi * (1.0 - pi));
        let mut hessian = DMatrix::<f64>::zeros(k + 1, k + 1);
        for a in 0..k {
            for b in a..k {
                let mut sum = 0.0;
                for i in 0..m {
                    sum += x[(i, a)] * wdiag[i] * x[(i, b)];
                }
                hessian[(a, b)] = sum;
                hessian[(b, a)] = sum;
            }
            let mut sum = 0.0;
            for i in 0..m {
                sum += x[(i, a)] * wdiag[i];
            }
            hessian[(a, k)] = sum;
            hessian[(k, a)] = sum;
            hessian[(a, a)] += 1.0 / config.c;
        }
        hessian[(k, k)] = wdiag.sum().max(f64::MIN_POSITIVE);

        let step = match hessian.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            // W can underflow to zero on perfectly separated points; fall
            // back to a gradient step scaled to unit norm.
            None => &grad / grad_norm.max(1.0),
        };

        // Damped update: halve until the penalized objective stops rising.
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate = &beta - scale * &step;
            let cand_obj = penalized_objective(x, y, &candidate, config.c);
            if cand_obj <= objective + 1e-12 {
                beta = candidate;
                objective = cand_obj;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break; // stuck at numerical precision
        }
    }

    Ok(LogRegModel {
        weights: beta.rows(0, k).into_owned(),
        intercept: beta[k],
        converged: grad_norm <= config.tol,
        grad_norm,
        iterations,
    })
}

/// Mean binary cross-entropy with probabilities clipped to
/// [PROB_CLIP, 1 − PROB_CLIP].
pub fn log_loss(model: &LogRegModel, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64, LogRegError> {
    if x.nrows() != y.len() {
        return Err(LogRegError::RowMismatch { x_rows: x.nrows(), y_rows: y.len() });
    }
    let p = model.predict_proba(x)?;
    let mut total = 0.0;
    for i in 0..y.len() {
        let pi = p[i].clamp(PROB_CLIP, 1.0 - PROB_CLIP);
        total -= y[i] * pi.ln() + (1.0 - y[i]) * (1.0 - pi).ln();
    }
    Ok(total / y.len() as f64)
}

/// Fraction of rows classified correctly; p = 0.5 counts as class 1.
pub fn accuracy(model: &LogRegModel, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64, LogRegError> {
    if x.nrows() != y.len() {
        return Err(LogRegError::RowMismatch { x_rows: x.nrows(), y_rows: y.len() });
    }
    let p = model.predict_proba(x)?;
    let correct = (0..y.len())
        .filter(|&i| {
            let predicted = if p[i] >= 0.5 { 1.0 } else { 0.0 };
            predicted == y[i]
        })
        .count();
    Ok(correct as f64 / y.len() as f64)
}
