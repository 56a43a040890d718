use super::{check_weights, scale_l2l1_dual, PrimalDualSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::models::{clip_gap, dual_value_unchecked, primal_objective, Dataset, ModelSpec};

/// Cyclic exact coordinate descent on the primal of the squared-hinge,
/// L1-regularized model. The intercept (last coordinate) is unpenalized and
/// visited last so the dual equality constraint holds at every check.
pub fn train_l2l1(
    data: &Dataset,
    w: &[f64],
    lambda: f64,
    opts: &SolverOptions,
) -> Result<PrimalDualSolution> {
    check_weights(data, w)?;
    let spec = ModelSpec::l2l1(lambda, data.n())?;
    let d = data.d();
    let xc = data.xcheck();
    let cols: Vec<Vec<f64>> = (0..d).map(|j| xc.col(j)).collect();

    let mut beta = match &opts.warm_start {
        Some(b) if b.len() == d => b.clone(),
        Some(b) => return Err(Error::dims("warm start beta", d, b.len())),
        None => vec![0.0; d],
    };
    let mut margins = data.margins(&beta);
    let tol = opts.gap_tol.resolve(w.iter().sum());

    // an optimal intercept makes the recovered dual satisfy (w⊗y)ᵀα = 0,
    // which a warm start from other weights does not
    update_coordinate(&cols[d - 1], w, &mut margins, &mut beta[d - 1], 0.0);

    let mut best: Option<PrimalDualSolution> = None;
    for epoch in 0..=opts.max_epochs {
        margins = data.margins(&beta);
        let mut alpha: Vec<f64> = margins
            .iter()
            .zip(w)
            .map(|(&t, &wi)| if wi == 0.0 { 0.0 } else { 2.0 / lambda * (1.0 - t).max(0.0) })
            .collect();
        scale_l2l1_dual(data, w, &mut alpha);
        let p = primal_objective(&spec, data, w, &beta)?;
        let gap = clip_gap(p - dual_value_unchecked(&spec, data, w, &alpha), p)?;
        let sol = PrimalDualSolution {
            beta: beta.clone(),
            alpha,
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
        sweep(&cols, w, lambda, &mut margins, &mut beta);
    }
    let best = best.expect("at least one epoch evaluated");
    Err(Error::SolverCapExceeded {
        epochs: opts.max_epochs,
        gap: best.gap,
        tol,
        best: Box::new(best),
    })
}

/// One cyclic pass over all coordinates, intercept last.
fn sweep(cols: &[Vec<f64>], w: &[f64], lambda: f64, margins: &mut [f64], beta: &mut [f64]) {
    let d = beta.len();
    for j in 0..d {
        let pen = if j + 1 == d { 0.0 } else { lambda };
        update_coordinate(&cols[j], w, margins, &mut beta[j], pen);
    }
}

/// Derivative of `Σ wᵢ max(0, rᵢ − b cᵢ)²` in `b`, with its slope.
fn smooth_derivative(c: &[f64], w: &[f64], r: &[f64], b: f64) -> (f64, f64) {
    let mut g = 0.0;
    let mut h = 0.0;
    for ((&ci, &wi), &ri) in c.iter().zip(w).zip(r) {
        if wi == 0.0 || ci == 0.0 {
            continue;
        }
        let s = ri - b * ci;
        if s > 0.0 {
            g -= 2.0 * wi * ci * s;
            h += 2.0 * wi * ci * ci;
        }
    }
    (g, h)
}

/// Exactly minimizes `Σ wᵢ max(0, 1 − mᵢ − δ cᵢ)² + pen·|βⱼ + δ|` over the
/// coordinate and applies the step to `margins`.
fn update_coordinate(c: &[f64], w: &[f64], margins: &mut [f64], bj: &mut f64, pen: f64) {
    let old = *bj;
    // residual with coordinate j removed: 1 − m + old·c
    let r: Vec<f64> = margins
        .iter()
        .zip(c)
        .map(|(&m, &ci)| 1.0 - m + old * ci)
        .collect();
    let new = if pen > 0.0 {
        let (g0, _) = smooth_derivative(c, w, &r, 0.0);
        if g0.abs() <= pen {
            0.0
        } else if g0 < -pen {
            solve_monotone(c, w, &r, pen, old.max(0.0))
        } else {
            solve_monotone(c, w, &r, -pen, old.min(0.0))
        }
    } else {
        solve_monotone(c, w, &r, 0.0, old)
    };
    if new != old {
        let delta = new - old;
        for (m, &ci) in margins.iter_mut().zip(c) {
            *m += delta * ci;
        }
        *bj = new;
    }
}

/// Root of the nondecreasing piecewise-linear `h(b) = g'(b) + shift` by
/// safeguarded Newton with bisection fallback.
fn solve_monotone(c: &[f64], w: &[f64], r: &[f64], shift: f64, start: f64) -> f64 {
    let h = |b: f64| {
        let (g, s) = smooth_derivative(c, w, r, b);
        (g + shift, s)
    };
    let (h0, _) = h(start);
    if h0 == 0.0 {
        return start;
    }
    // bracket [lo, hi] with h(lo) < 0 ≤ h(hi)
    let mut step = start.abs().max(1.0);
    let (mut lo, mut hi);
    if h0 < 0.0 {
        lo = start;
        hi = start + step;
        let mut k = 0;
        while h(hi).0 < 0.0 {
            lo = hi;
            step *= 2.0;
            hi += step;
            k += 1;
            if k > 2000 {
                return hi;
            }
        }
    } else {
        hi = start;
        lo = start - step;
        let mut k = 0;
        while h(lo).0 >= 0.0 {
            hi = lo;
            step *= 2.0;
            lo -= step;
            k += 1;
            if k > 2000 {
                return lo;
            }
        }
    }
    let mut b = if h0 < 0.0 { lo } else { hi };
    for _ in 0..200 {
        let (hb, slope) = h(b);
        if hb == 0.0 {
            return b;
        }
        if hb < 0.0 {
            lo = lo.max(b);
        } else {
            hi = hi.min(b);
        }
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + b.abs()) {
            break;
        }
        let newton = if slope > 0.0 { b - hb / slope } else { f64::NAN };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - b).abs() <= f64::EPSILON * (1.0 + b.abs()) {
            return next;
        }
        b = next;
    }
    // the root sits in [lo, hi]; hi keeps h ≥ 0
    if h(b).0.abs() <= h(hi).0.abs() {
        b
    } else {
        hi
    }
}
