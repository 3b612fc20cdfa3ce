//! Restarted, left-preconditioned GMRES on dense systems.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresSettings {
    /// Relative tolerance on the preconditioned residual.
    pub tol: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for GmresSettings {
    fn default() -> Self {
        GmresSettings {
            tol: 1e-8,
            restart: 200,
            max_iterations: 5000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// Final preconditioned residual relative to `‖P⁻¹ b‖`.
    pub relative_residual: f64,
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum GmresError {
    #[error("gmres did not converge in {iterations} iterations (best relative residual {best_residual:.3e})")]
    NotConverged {
        iterations: usize,
        best_residual: f64,
        best: DVector<f64>,
    },
    #[error("system is {rows}x{cols}, right-hand side has length {rhs}")]
    Dimension { rows: usize, cols: usize, rhs: usize },
    #[error("non-finite value in the krylov iteration")]
    NonFinite,
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

/// Solve `A x = b` from the initial guess `x0`, minimising `‖P⁻¹(b - A x)‖`
/// over Krylov spaces of `P⁻¹ A`.
pub fn gmres<F>(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x0: DVector<f64>,
    precondition: F,
    settings: &GmresSettings,
) -> Result<GmresOutcome, GmresError>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = b.len();
    if a.nrows() != n || a.ncols() != n || x0.len() != n {
        return Err(GmresError::Dimension {
            rows: a.nrows(),
            cols: a.ncols(),
            rhs: n,
        });
    }
    let b_norm = precondition(b).norm();
    if b_norm == 0.0 {
        return Ok(GmresOutcome {
            x: DVector::zeros(n),
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    if !b_norm.is_finite() {
        return Err(GmresError::NonFinite);
    }
    let m = settings.restart.max(1).min(n.max(1));
    let mut x = x0;
    let mut iterations = 0;
    let mut r = precondition(&(b - a * &x));
    let mut beta = r.norm();
    let mut best = (beta / b_norm, x.clone());
    loop {
        let rel = beta / b_norm;
        if !rel.is_finite() {
            return Err(GmresError::NonFinite);
        }
        if rel < best.0 {
            best = (rel, x.clone());
        }
        if rel <= settings.tol {
            return Ok(GmresOutcome {
                x,
                iterations,
                relative_residual: rel,
            });
        }
        if iterations >= settings.max_iterations {
            return Err(GmresError::NotConverged {
                iterations,
                best_residual: best.0,
                best: best.1,
            });
        }
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m + 1);
        basis.push(&r / beta);
        let mut h = DMatrix::<f64>::zeros(m + 1, m);
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = DVector::<f64>::zeros(m + 1);
        g[0] = beta;
        let mut k = 0;
        while k < m && iterations < settings.max_iterations {
            let mut w = precondition(&(a * &basis[k]));
            for (j, v) in basis.iter().enumerate() {
                let hj = w.dot(v);
                h[(j, k)] = hj;
                w.axpy(-hj, v, 1.0);
            }
            let norm = w.norm();
            h[(k + 1, k)] = norm;
            for j in 0..k {
                let (t0, t1) = (h[(j, k)], h[(j + 1, k)]);
                h[(j, k)] = cs[j] * t0 + sn[j] * t1;
                h[(j + 1, k)] = -sn[j] * t0 + cs[j] * t1;
            }
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            cs[k] = c;
            sn[k] = s;
            h[(k, k)] = c * h[(k, k)] + s * h[(k + 1, k)];
            h[(k + 1, k)] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            iterations += 1;
            k += 1;
            let breakdown = norm <= 1e-14 * b_norm;
            if g[k].abs() / b_norm <= settings.tol || breakdown {
                break;
            }
            basis.push(w / norm);
        }
        // back substitution for the k x k triangular system
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[(i, j)] * y[j];
            }
            y[i] = s / h[(i, i)];
        }
        for (yi, v) in y.iter().zip(&basis) {
            x.axpy(*yi, v, 1.0);
        }
        r = precondition(&(b - a * &x));
        beta = r.norm();
        if beta == 0.0 {
            return Ok(GmresOutcome {
                x,
                iterations,
                relative_residual: 0.0,
            });
        }
    }
}
