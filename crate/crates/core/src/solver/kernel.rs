use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SolverOptions;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::models::clip_gap;

/// Dual solution of the kernelized hinge-loss model.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSolution {
    pub alpha: Vec<f64>,
    /// `X̌ᵢ:β = (1/λ) Σⱼ wⱼ αⱼ Ǩᵢⱼ`.
    pub margins: Vec<f64>,
    pub gap: f64,
    pub weights: Vec<f64>,
    pub lambda: f64,
    pub epochs: usize,
}

fn margins_of(kcheck: &DenseMatrix, w: &[f64], alpha: &[f64], lambda: f64) -> Vec<f64> {
    let wa: Vec<f64> = w.iter().zip(alpha).map(|(a, b)| a * b).collect();
    kcheck.matvec(&wa).into_iter().map(|v| v / lambda).collect()
}

/// Duality gap of `α` for the kernel model; `kcheck` is the sign-folded
/// Gram matrix `Ǩᵢⱼ = yᵢ yⱼ K(xᵢ, xⱼ)`.
pub fn kernel_duality_gap(kcheck: &DenseMatrix, w: &[f64], alpha: &[f64], lambda: f64) -> Result<f64> {
    let f = margins_of(kcheck, w, alpha, lambda);
    gap_from_margins(&f, w, alpha)
}

fn gap_from_margins(f: &[f64], w: &[f64], alpha: &[f64]) -> Result<f64> {
    let mut loss = 0.0;
    let mut quad = 0.0;
    let mut lin = 0.0;
    for ((&fi, &wi), &ai) in f.iter().zip(w).zip(alpha) {
        loss += wi * (1.0 - fi).max(0.0);
        quad += wi * ai * fi;
        lin += wi * ai;
    }
    let p = loss + 0.5 * quad;
    clip_gap(loss + quad - lin, p)
}

/// Dual coordinate ascent on the kernelized hinge-loss, L2-regularized
/// model.
pub fn train_l1l2_kernel(
    kcheck: &DenseMatrix,
    w: &[f64],
    lambda: f64,
    opts: &SolverOptions,
) -> Result<KernelSolution> {
    let n = kcheck.rows();
    kcheck.check_symmetric(crate::linalg::SYMMETRY_TOL)?;
    if w.len() != n {
        return Err(Error::dims("weights", n, w.len()));
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidModel("weights must be finite and nonnegative".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidModel(format!("lambda must be positive, got {lambda}")));
    }
    let mut alpha = match &opts.warm_start {
        Some(a) if a.len() == n => a.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        Some(a) => return Err(Error::dims("warm start alpha", n, a.len())),
        None => vec![0.0; n],
    };
    for (a, &wi) in alpha.iter_mut().zip(w) {
        if wi == 0.0 {
            *a = 0.0;
        }
    }
    let tol = opts.gap_tol.resolve(w.iter().sum());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
    let mut best_gap = f64::INFINITY;

    for epoch in 0..=opts.max_epochs {
        let mut f = margins_of(kcheck, w, &alpha, lambda);
        let gap = gap_from_margins(&f, w, &alpha)?;
        if gap <= tol {
            return Ok(KernelSolution {
                alpha,
                margins: f,
                gap,
                weights: w.to_vec(),
                lambda,
                epochs: epoch,
            });
        }
        best_gap = best_gap.min(gap);
        if epoch == opts.max_epochs {
            break;
        }
        order.shuffle(&mut rng);
        for &i in &order {
            let kii = kcheck.get(i, i);
            let old = alpha[i];
            let new = if kii <= 0.0 {
                1.0
            } else {
                (old + (1.0 - f[i]) * lambda / (w[i] * kii)).clamp(0.0, 1.0)
            };
            if new != old {
                alpha[i] = new;
                let s = w[i] * (new - old) / lambda;
                for (k, fk) in f.iter_mut().enumerate() {
                    *fk += s * kcheck.get(k, i);
                }
            }
        }
    }
    Err(Error::KernelCapExceeded {
        epochs: opts.max_epochs,
        gap: best_gap,
        tol,
    })
}
