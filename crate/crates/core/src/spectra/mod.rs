//! Symmetric generalized eigensolvers: safeguarded shifted inverse iteration
//! for the extremal eigenpair, plus an independent cyclic-Jacobi oracle used
//! for verification.

mod constants;

pub use constants::{
    infsup_constant, korn_first_constant, korn_nobc_constant, korn_second_constant,
    poincare_elasticity_constant, poincare_mixed_constant, ConstantReport, EstimatorOptions,
};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Which end of the spectrum to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremal {
    Smallest,
    Largest,
}

/// Extremal eigenpair of a symmetric pencil `A x = λ B x`.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub lambda: f64,
    /// Eigenvector in the (reduced) coordinates of the pencil, B-normalized,
    /// sign fixed by its largest component.
    pub vector: DVector<f64>,
    /// Derived inequality constant; equals `lambda` for a bare eigensolve and
    /// is overwritten by the estimators.
    pub constant: f64,
    /// `‖A x − λ B x‖ / ‖A x‖`.
    pub residual: f64,
    pub iterations: usize,
}

const RESIDUAL_TARGET: f64 = 1e-9;
const RESIDUAL_CONTRACT: f64 = 1e-8;

/// Extremal eigenpair of `A x = λ B x` for symmetric `A` and positive
/// definite `B`, by safeguarded shifted inverse iteration on the whitened
/// matrix. Deterministic for a fixed `seed`.
pub fn extremal_eig(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    which: Extremal,
    seed: u64,
) -> Result<SpectralResult> {
    let n = a.nrows();
    if n == 0 {
        return Err(Error::EmptyConstrainedSpace);
    }
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::DimensionMismatch("pencil matrices must be square".into()));
    }
    let chol_b = b.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;

    // whiten: C = L⁻¹ A L⁻ᵀ
    let l = chol_b.l();
    let y = l
        .clone()
        .solve_lower_triangular(a)
        .ok_or(Error::NotPositiveDefinite)?;
    let c = l
        .clone()
        .solve_lower_triangular(&y.transpose())
        .ok_or(Error::NotPositiveDefinite)?;
    let c = crate::fem::constraints_symmetrize(c);
    let flip = matches!(which, Extremal::Largest);
    let c = if flip { -c } else { c };

    // convergence is judged on the generalized residual in the original metric
    let accept = |x_w: &DVector<f64>, rho: f64| -> Option<(DVector<f64>, f64, f64)> {
        let v = l.transpose().solve_upper_triangular(x_w)?;
        let lambda = if flip { -rho } else { rho };
        let av = a * &v;
        let bv = b * &v;
        let denom = av.norm().max(1e-300);
        let residual = (&av - &bv * lambda).norm() / denom;
        Some((v, lambda, residual))
    };

    let n = c.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    x /= x.norm();

    let (lo, hi) = gershgorin(&c);
    let span = (hi - lo).max(1e-300);
    let mut mu = lo - 1e-3 * span;
    let mut mu_safe = lo - 1.001 * span;
    let mut iterations = 0;
    let mut best: Option<(DVector<f64>, f64, f64)> = None;

    'outer: for _round in 0..80 {
        let mut shifted = c.clone();
        for i in 0..n {
            shifted[(i, i)] -= mu;
        }
        let chol = match shifted.cholesky() {
            Some(f) => f,
            None => {
                // overshot the smallest eigenvalue; bisect back
                mu = 0.5 * (mu + mu_safe);
                continue;
            }
        };
        mu_safe = mu;

        let mut rho = x.dot(&(&c * &x));
        let mut res_w = f64::INFINITY;
        for _inner in 0..8 {
            iterations += 1;
            let mut y = chol.solve(&x);
            let norm = y.norm();
            if !norm.is_finite() || norm == 0.0 {
                break;
            }
            y /= norm;
            x = y;
            rho = x.dot(&(&c * &x));
            let res = (&c * &x - &x * rho).norm();
            let progressing = res < 0.3 * res_w;
            res_w = res;
            match accept(&x, rho) {
                Some(candidate) => {
                    let better = best.as_ref().is_none_or(|b| candidate.2 < b.2);
                    if better {
                        best = Some(candidate.clone());
                    }
                    if candidate.2 <= RESIDUAL_TARGET {
                        break 'outer;
                    }
                }
                None => break,
            }
            if !progressing {
                break;
            }
        }
        // Rayleigh-quotient shift, kept strictly below the current estimate;
        // a Cholesky failure next round walks it back.
        let mut mu_new = rho - res_w.max(1e-15 * span);
        if mu_new <= mu {
            mu_new = 0.5 * (mu + rho);
        }
        mu = mu_new;
    }

    let (mut v, lambda, residual) = best.ok_or(Error::NoConvergence {
        residual: f64::NAN,
        iterations,
    })?;
    if residual > RESIDUAL_CONTRACT {
        return Err(Error::NoConvergence {
            residual,
            iterations,
        });
    }
    // B-normalize and fix the sign deterministically
    let bnorm = (v.dot(&(b * &v))).sqrt();
    if bnorm > 0.0 {
        v /= bnorm;
    }
    if v[v.imax()] < 0.0 {
        v = -v;
    }
    Ok(SpectralResult {
        lambda,
        vector: v,
        constant: lambda,
        residual,
        iterations,
    })
}

fn gershgorin(c: &DMatrix<f64>) -> (f64, f64) {
    let n = c.nrows();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut radius = 0.0;
        for j in 0..n {
            if i != j {
                radius += c[(i, j)].abs();
            }
        }
        lo = lo.min(c[(i, i)] - radius);
        hi = hi.max(c[(i, i)] + radius);
    }
    (lo, hi)
}

/// Full spectrum of the pencil `A x = λ B x` (ascending) by cyclic Jacobi on
/// the symmetrically whitened matrix `B^{-1/2} A B^{-1/2}`. Independent of the
/// inverse-iteration path; intended for verification.
pub fn eig_oracle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    const LIMIT: usize = 500;
    if n > LIMIT {
        return Err(Error::SizeExceeded { size: n, limit: LIMIT });
    }
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::DimensionMismatch("pencil matrices must be square".into()));
    }
    let (b_eigs, b_vecs) = jacobi_eigen(b);
    let bmax = b_eigs.iter().cloned().fold(0.0_f64, f64::max);
    if b_eigs.iter().any(|&e| e <= 1e-14 * bmax) {
        return Err(Error::NotPositiveDefinite);
    }
    // W = Q Λ^{-1/2} Qᵀ
    let mut w = DMatrix::zeros(n, n);
    for k in 0..n {
        let col = b_vecs.column(k);
        let scale = 1.0 / b_eigs[k].sqrt();
        for i in 0..n {
            for j in 0..n {
                w[(i, j)] += scale * col[i] * col[j];
            }
        }
    }
    let c = &w * a * &w;
    let (mut eigs, _) = jacobi_eigen(&crate::fem::constraints_symmetrize(c));
    eigs.sort_by(f64::total_cmp);
    Ok(eigs)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
fn jacobi_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = m.norm().max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = cos * akp - sin * akq;
                    a[(k, q)] = sin * akp + cos * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = cos * apk - sin * aqk;
                    a[(q, k)] = sin * apk + cos * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = cos * vkp - sin * vkq;
                    v[(k, q)] = sin * vkp + cos * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}
