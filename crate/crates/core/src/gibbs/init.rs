//! Data-informed starting values.

use crate::basis::BasisSet;
use crate::model::{log_ratios, FunctionalPanel, ModelParams, PriorHyperparams};
use crate::scalar::{lit, Real};

/// Floor applied to initial weights before taking log ratios.
pub const WEIGHT_FLOOR: f64 = 1e-6;

/// Share of the uniform weights mixed into the NNLS start. A basis that NNLS
/// drops entirely would otherwise start deep in the region where the data
/// no longer inform its state, and the chain can spend thousands of sweeps
/// drifting back.
pub const INIT_SHRINK: f64 = 0.1;

/// Solves the symmetric system `m x = r` by Gaussian elimination with partial
/// pivoting; `m` is row-major `n × n`.
fn solve_dense(mut m: Vec<f64>, mut r: Vec<f64>, n: usize) -> Vec<f64> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap_or(col);
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            r.swap(col, pivot);
        }
        let diag = m[col * n + col];
        if diag.abs() < f64::MIN_POSITIVE {
            continue;
        }
        for row in col + 1..n {
            let f = m[row * n + col] / diag;
            if f != 0.0 {
                for k in col..n {
                    m[row * n + k] -= f * m[col * n + k];
                }
                r[row] -= f * r[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| m[row * n + k] * x[k]).sum();
        let diag = m[row * n + row];
        x[row] = if diag.abs() < f64::MIN_POSITIVE { 0.0 } else { (r[row] - tail) / diag };
    }
    x
}

/// Unconstrained least squares restricted to the columns in `active`.
fn restricted_lstsq(a: &[Vec<f64>], b: &[f64], active: &[usize]) -> Vec<f64> {
    let n = active.len();
    let mut gram = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    for (row, &y) in a.iter().zip(b) {
        for (i, &ci) in active.iter().enumerate() {
            rhs[i] += row[ci] * y;
            for (j, &cj) in active.iter().enumerate() {
                gram[i * n + j] += row[ci] * row[cj];
            }
        }
    }
    let ridge = 1e-12 * (0..n).map(|i| gram[i * n + i]).sum::<f64>().max(1e-300);
    for i in 0..n {
        gram[i * n + i] += ridge;
    }
    solve_dense(gram, rhs, n)
}

/// Nonnegative least squares `min ‖A x − b‖, x ≥ 0` (Lawson and Hanson).
/// `a` lists the rows of `A`.
pub fn nnls(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = a.first().map_or(0, Vec::len);
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let tol = 1e-12 * (1.0 + b.iter().map(|v| v.abs()).sum::<f64>());
    let gradient = |x: &[f64]| -> Vec<f64> {
        let mut w = vec![0.0; n];
        for (row, &y) in a.iter().zip(b) {
            let resid = y - row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
            for (wj, &aj) in w.iter_mut().zip(row) {
                *wj += aj * resid;
            }
        }
        w
    };
    for _ in 0..3 * n + 3 {
        let w = gradient(&x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        for _ in 0..3 * n + 3 {
            let active: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let s = restricted_lstsq(a, b, &active);
            if s.iter().all(|&v| v > 0.0) {
                x.iter_mut().for_each(|v| *v = 0.0);
                for (&i, &v) in active.iter().zip(&s) {
                    x[i] = v;
                }
                break;
            }
            let alpha = active
                .iter()
                .zip(&s)
                .filter(|&(_, &si)| si <= 0.0)
                .map(|(&i, &si)| x[i] / (x[i] - si))
                .fold(f64::INFINITY, f64::min);
            let mut full = vec![0.0; n];
            for (&i, &v) in active.iter().zip(&s) {
                full[i] = v;
            }
            for i in 0..n {
                x[i] += alpha * (full[i] - x[i]);
                if passive[i] && x[i] <= tol {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    x
}

/// Static weights from the time-averaged curve: NNLS of `ȳ` on the basis
/// columns, normalised, shrunk toward uniform by [`INIT_SHRINK`], floored at
/// [`WEIGHT_FLOOR`] and renormalised.
/// Returns uniform weights when there are no observations.
pub fn static_weights<T: Real>(panel: &FunctionalPanel<T>, basis: &BasisSet<T>) -> Vec<f64> {
    let l_len = basis.n_bases();
    let uniform = vec![1.0 / l_len as f64; l_len];
    if panel.n_args() == 0 {
        return uniform;
    }
    let h = basis.matrix();
    let rows: Vec<Vec<f64>> = h.rows().into_iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect();
    let ybar: Vec<f64> = panel
        .y()
        .columns()
        .into_iter()
        .map(|c| c.iter().map(|v| v.as_f64()).sum::<f64>() / panel.n_times() as f64)
        .collect();
    let w = nnls(&rows, &ybar);
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return uniform;
    }
    let share = INIT_SHRINK / l_len as f64;
    let floored: Vec<f64> = w.iter().map(|v| ((1.0 - INIT_SHRINK) * v / total + share).max(WEIGHT_FLOOR)).collect();
    let total: f64 = floored.iter().sum();
    floored.into_iter().map(|v| v / total).collect()
}

/// Mean squared residual of the static fit, floored at `1e-8`.
pub fn static_residual_variance<T: Real>(panel: &FunctionalPanel<T>, basis: &BasisSet<T>, w: &[f64]) -> Option<f64> {
    if panel.n_args() == 0 {
        return None;
    }
    let h = basis.matrix();
    let mut ss = 0.0;
    for row in panel.y().rows() {
        for (k, &y) in row.iter().enumerate() {
            let m: f64 = (0..w.len()).map(|l| h[[k, l]].as_f64() * w[l]).sum();
            ss += (y.as_f64() - m).powi(2);
        }
    }
    Some((ss / (panel.n_times() * panel.n_args()) as f64).max(1e-8))
}

/// Starting `u` row and parameters.
///
/// `μ` starts at its prior mean, `φ` at its prior mean clamped to
/// `[−0.8, 0.8]`, `σ²` at its prior mean when finite (else 0.1), and `ν²` at the
/// static-fit residual variance.
pub fn initial_values<T: Real>(
    panel: &FunctionalPanel<T>,
    basis: &BasisSet<T>,
    prior: &PriorHyperparams<T>,
) -> crate::Result<(Vec<T>, ModelParams<T>)> {
    let w = static_weights(panel, basis);
    let u_row: Vec<T> = log_ratios(&w)?.into_iter().map(lit).collect();
    let n_free = basis.n_bases() - 1;
    let ig_mean = |n0: T, d0: T, fallback: f64| {
        let (n0, d0) = (n0.as_f64(), d0.as_f64());
        if n0 > 2.0 {
            d0 / (n0 - 2.0)
        } else {
            fallback
        }
    };
    let params = ModelParams {
        mu: prior.mu_mean.clone(),
        phi: prior.phi_mean.iter().map(|&p| p.max(lit(-0.8)).min(lit(0.8))).collect(),
        sigma2: (0..n_free).map(|l| lit(ig_mean(prior.sigma2_n0[l], prior.sigma2_d0[l], 0.1))).collect(),
        nu2: lit(static_residual_variance(panel, basis, &w).unwrap_or_else(|| ig_mean(prior.nu2_n0, prior.nu2_d0, 1.0))),
    };
    Ok((u_row, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(a: &[Vec<f64>], b: &[f64]) -> f64 {
        let n = a[0].len();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            let active: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let s = if active.is_empty() { vec![] } else { restricted_lstsq(a, b, &active) };
            if s.iter().any(|&v| v < 0.0) {
                continue;
            }
            let mut x = vec![0.0; n];
            for (&i, &v) in active.iter().zip(&s) {
                x[i] = v;
            }
            best = best.min(objective(a, b, &x));
        }
        best
    }

    fn objective(a: &[Vec<f64>], b: &[f64], x: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(r, y)| (y - r.iter().zip(x).map(|(p, q)| p * q).sum::<f64>()).powi(2))
            .sum()
    }

    #[test]
    fn nnls_matches_subset_search() {
        let a = vec![
            vec![0.2, 0.008, 0.064],
            vec![0.4, 0.064, 0.142],
            vec![0.6, 0.216, 0.240],
            vec![0.8, 0.512, 0.383],
        ];
        for b in [vec![0.1, 0.2, 0.4, 0.7], vec![0.5, 0.1, 0.3, 0.0], vec![-1.0, -2.0, 0.1, 0.0]] {
            let x = nnls(&a, &b);
            assert!(x.iter().all(|&v| v >= 0.0));
            assert!((objective(&a, &b, &x) - brute_force(&a, &b)).abs() < 1e-10, "{b:?} {x:?}");
        }
    }

    #[test]
    fn nnls_recovers_exact_combination() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let x = nnls(&a, &[0.3, 0.7, 1.0]);
        assert!((x[0] - 0.3).abs() < 1e-10 && (x[1] - 0.7).abs() < 1e-10);
    }
}
