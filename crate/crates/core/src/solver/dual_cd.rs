use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_weights, PrimalDualSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};
use crate::models::{dual_value_unchecked, primal_objective, Dataset, ModelSpec, clip_gap};

/// Dual coordinate ascent for the hinge-loss, L2-regularized model.
///
/// Each coordinate is maximized exactly and clipped to `[0, 1]`; coordinates
/// are visited in a fresh seeded permutation every epoch.
pub fn train_l1l2(
    data: &Dataset,
    w: &[f64],
    lambda: f64,
    opts: &SolverOptions,
) -> Result<PrimalDualSolution> {
    check_weights(data, w)?;
    let spec = ModelSpec::l1l2(lambda, data.n())?;
    let n = data.n();
    let xc = data.xcheck();

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
    let sq: Vec<f64> = (0..n).map(|i| dot(xc.row(i), xc.row(i))).collect();
    let tol = opts.gap_tol.resolve(w.iter().sum());

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
    let mut best: Option<PrimalDualSolution> = None;

    for epoch in 0..=opts.max_epochs {
        // exact recomputation guards against drift in the running β
        let mut beta = beta_of(data, w, &alpha, lambda);
        let p = primal_objective(&spec, data, w, &beta)?;
        let dval = dual_value_unchecked(&spec, data, w, &alpha);
        let gap = clip_gap(p - dval, p)?;
        let sol = PrimalDualSolution {
            beta: beta.clone(),
            alpha: alpha.clone(),
            gap,
            weights: w.to_vec(),
            spec: spec.clone(),
            epochs: epoch,
        };
        if gap <= tol {
            return Ok(sol);
        }
        if best.as_ref().map_or(true, |b| gap < b.gap) {
            best = Some(sol);
        }
        if epoch == opts.max_epochs {
            break;
        }

        order.shuffle(&mut rng);
        sweep(data, w, lambda, &sq, &order, &mut alpha, &mut beta);
    }
    let best = best.expect("at least one epoch evaluated");
    Err(Error::SolverCapExceeded {
        epochs: opts.max_epochs,
        gap: best.gap,
        tol,
        best: Box::new(best),
    })
}

/// One pass of exact coordinate maximization over `order`, keeping
/// `β = (1/λ)(w⋄X̌)ᵀα` in step.
fn sweep(
    data: &Dataset,
    w: &[f64],
    lambda: f64,
    sq: &[f64],
    order: &[usize],
    alpha: &mut [f64],
    beta: &mut [f64],
) {
    let xc = data.xcheck();
    for &i in order {
        let row = xc.row(i);
        let old = alpha[i];
        let new = if sq[i] == 0.0 {
            1.0
        } else {
            let g = 1.0 - dot(row, beta);
            (old + g * lambda / (w[i] * sq[i])).clamp(0.0, 1.0)
        };
        if new != old {
            alpha[i] = new;
            axpy(w[i] * (new - old) / lambda, row, beta);
        }
    }
}

fn beta_of(data: &Dataset, w: &[f64], alpha: &[f64], lambda: f64) -> Vec<f64> {
    let mut b = crate::models::weighted_dual_combination(data, w, alpha);
    for v in &mut b {
        *v /= lambda;
    }
    b
}
