//! Gap safe screening at fixed weights (WCSS) and over an L2 ball of
//! weights (DRSS), for samples of the L1L2 model and features of the L2L1
//! model.

use rayon::prelude::*;

use crate::ballmax::{max_quad_ball, min_weight_over_ball, QuadBallProblem, QuadMatrix};
use crate::error::{Error, Result};
use crate::linalg::{ball_linear_extrema, dot, DenseMatrix};
use crate::models::{duality_gap, Dataset, ModelSpec, GAP_ROUNDOFF};
use crate::solver::PrimalDualSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScreeningMode {
    Sample,
    Feature,
}

/// The uncertainty set `{w : ‖w − w̃‖₂ ≤ S}` kept inside the nonnegative
/// orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightBall {
    center: Vec<f64>,
    radius: f64,
}

impl WeightBall {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidBall("empty center".into()));
        }
        if center.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidBall("center weights must be finite and nonnegative".into()));
        }
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidBall(format!("radius {radius} must be nonnegative")));
        }
        let wmin = center.iter().cloned().fold(f64::INFINITY, f64::min);
        if radius > wmin {
            return Err(Error::InvalidBall(format!(
                "radius {radius} exceeds the smallest center weight {wmin}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        w.len() == self.center.len() && {
            let d: f64 = w.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
            d.sqrt() <= self.radius * (1.0 + 1e-12) + 1e-15
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningReport {
    pub mode: ScreeningMode,
    /// Length `n` for samples, `d − 1` for features.
    pub screened: Vec<bool>,
    /// `r`/`R` for samples, `r̄`/`R̄` for features.
    pub radius: f64,
    /// The interval tested against the zero set, per index.
    pub bounds: Vec<(f64, f64)>,
    /// The gap (or its maximum over the ball) the radius was derived from,
    /// including the allowance of [`gap_roundoff`].
    pub reference_gap: f64,
}

impl ScreeningReport {
    pub fn count(&self) -> usize {
        self.screened.iter().filter(|&&s| s).count()
    }

    pub fn total(&self) -> usize {
        self.screened.len()
    }

    pub fn rate(&self) -> f64 {
        if self.screened.is_empty() {
            0.0
        } else {
            self.count() as f64 / self.total() as f64
        }
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.screened.len()).filter(|&i| self.screened[i]).collect()
    }
}

/// `r = √(2·gap/κ)`.
pub fn gap_radius_sample(kappa: f64, gap: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidModel(format!("kappa {kappa} must be positive")));
    }
    Ok((2.0 * check_gap(gap)? / kappa).sqrt())
}

/// `r̄ = √(2μ·gap / min_i wᵢγᵢ²)`.
pub fn gap_radius_feature(mu: f64, min_w_gamma2: f64, gap: f64) -> Result<f64> {
    if !(mu > 0.0) || !(min_w_gamma2 > 0.0) {
        return Err(Error::InvalidModel(format!(
            "mu {mu} and min wγ² {min_w_gamma2} must be positive"
        )));
    }
    Ok((2.0 * mu * check_gap(gap)? / min_w_gamma2).sqrt())
}

/// Bound on the floating-point error of a duality gap evaluated as a sum of
/// `n` weighted terms whose weights add up to at most `weight_sum`.
pub fn gap_roundoff(n: usize, weight_sum: f64) -> f64 {
    4.0 * n as f64 * f64::EPSILON * weight_sum.max(1.0)
}

/// A computed gap turned into one that is safe to derive a radius from: a
/// gap of zero is never trusted.
fn certified_gap(gap: f64, n: usize, weight_sum: f64) -> Result<f64> {
    Ok(check_gap(gap)? + gap_roundoff(n, weight_sum))
}

fn ball_weight_sum(ball: &WeightBall) -> f64 {
    ball.center().iter().sum::<f64>() + ball.radius() * (ball.center().len() as f64).sqrt()
}

fn check_gap(gap: f64) -> Result<f64> {
    if gap.is_nan() {
        return Err(Error::NonFinite("gap"));
    }
    if gap < -GAP_ROUNDOFF {
        return Err(Error::NegativeGap(gap));
    }
    Ok(gap.max(0.0))
}

fn require_model(sol: &PrimalDualSolution, mode: ScreeningMode) -> Result<()> {
    let ok = match mode {
        ScreeningMode::Sample => sol.spec.is_l1l2(),
        ScreeningMode::Feature => !sol.spec.is_l1l2(),
    };
    if !ok {
        return Err(Error::InvalidModel(format!(
            "{mode:?} screening does not apply to this model"
        )));
    }
    Ok(())
}

fn check_solution_shape(sol: &PrimalDualSolution, data: &Dataset) -> Result<()> {
    if sol.alpha.len() != data.n() || sol.weights.len() != data.n() {
        return Err(Error::dims("solution vs dataset samples", data.n(), sol.alpha.len()));
    }
    if sol.beta.len() != data.d() {
        return Err(Error::dims("solution vs dataset features", data.d(), sol.beta.len()));
    }
    Ok(())
}

fn sample_mask(data: &Dataset, beta: &[f64], radius: f64) -> (Vec<bool>, Vec<(f64, f64)>) {
    let zero = crate::models::LossKind::Hinge.zero_set();
    let m = data.margins(beta);
    let norms = data.row_norms();
    let bounds: Vec<(f64, f64)> = m
        .iter()
        .zip(&norms)
        .map(|(&t, &nr)| (t - nr * radius, t + nr * radius))
        .collect();
    let mask = bounds.iter().map(|&(lo, hi)| zero.contains_interval(lo, hi)).collect();
    (mask, bounds)
}

fn feature_mask(spec: &ModelSpec, d: usize, bounds: &[(f64, f64)]) -> Vec<bool> {
    bounds
        .iter()
        .enumerate()
        .map(|(j, &(lo, hi))| {
            spec.reg_zero_set(j, d)
                .is_some_and(|z| z.contains_interval(lo, hi))
        })
        .collect()
}

/// Screening at `w_new` from a reference solution trained at other weights.
pub fn wcss(
    sol: &PrimalDualSolution,
    data: &Dataset,
    w_new: &[f64],
    mode: ScreeningMode,
) -> Result<ScreeningReport> {
    require_model(sol, mode)?;
    check_solution_shape(sol, data)?;
    if w_new.len() != data.n() {
        return Err(Error::dims("w_new", data.n(), w_new.len()));
    }
    if w_new.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidModel("new weights must be finite and nonnegative".into()));
    }
    let spec = ModelSpec::new(sol.spec.loss(), sol.spec.reg(), sol.spec.lambda(), data.n())?;
    match mode {
        ScreeningMode::Sample => {
            let gap = duality_gap(&spec, data, w_new, &sol.beta, &sol.alpha)?;
            let gap = certified_gap(gap, data.n(), w_new.iter().sum())?;
            let r = gap_radius_sample(spec.kappa().expect("L2 model"), gap)?;
            let (screened, bounds) = sample_mask(data, &sol.beta, r);
            Ok(ScreeningReport {
                mode,
                screened,
                radius: r,
                bounds,
                reference_gap: gap,
            })
        }
        ScreeningMode::Feature => {
            // errors when the reference dual point is infeasible under w_new
            let gap = duality_gap(&spec, data, w_new, &sol.beta, &sol.alpha)?;
            let gap = certified_gap(gap, data.n(), w_new.iter().sum())?;
            let min_wg2 = w_new
                .iter()
                .zip(spec.gamma())
                .map(|(w, g)| w * g * g)
                .fold(f64::INFINITY, f64::min);
            if !(min_wg2 > 0.0) {
                return Err(Error::InvalidModel(
                    "feature screening needs strictly positive weights".into(),
                ));
            }
            let r = gap_radius_feature(spec.mu().expect("L1 model"), min_wg2, gap)?;
            let lam = spec.lambda();
            let d = data.d();
            let xc = data.xcheck();
            let bounds: Vec<(f64, f64)> = (0..d - 1)
                .map(|j| {
                    let mut center = 0.0;
                    let mut sq = 0.0;
                    for i in 0..data.n() {
                        let x = w_new[i] * xc.get(i, j);
                        center += x * sol.alpha[i];
                        sq += x * x;
                    }
                    let (c, h) = (lam * center, lam * sq.sqrt() * r);
                    (c - h, c + h)
                })
                .collect();
            Ok(ScreeningReport {
                mode,
                screened: feature_mask(&spec, d, &bounds),
                radius: r,
                bounds,
                reference_gap: gap,
            })
        }
    }
}

/// The sample-screening gap `P_w(β̃) − D_w(α̃)` as a quadratic in `w`:
/// `wᵀAw + 2bᵀw + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapFunction {
    pub a: QuadMatrix,
    pub b: Vec<f64>,
    pub constant: f64,
}

impl GapFunction {
    pub fn eval(&self, w: &[f64]) -> f64 {
        self.a.quad(w) + 2.0 * dot(&self.b, w) + self.constant
    }

    /// Maximum over the ball; never below the value at the center.
    pub fn max_over(&self, center: &[f64], radius: f64) -> Result<f64> {
        let at_center = self.eval(center);
        if radius == 0.0 {
            return Ok(at_center);
        }
        let quad_part = if self.a.is_zero() {
            let twice_b: Vec<f64> = self.b.iter().map(|v| 2.0 * v).collect();
            ball_linear_extrema(&twice_b, center, radius)?.max
        } else {
            let p = QuadBallProblem::new(self.a.clone(), self.b.clone(), center.to_vec(), radius)?;
            max_quad_ball(&p)?.value
        };
        Ok((quad_part + self.constant).max(at_center))
    }
}

/// Builds the gap function of an L1L2 reference solution:
/// `c = ℓ(X̌β̃) − α̃`, `A = (1/2λ)(α̃⋄X̌)(α̃⋄X̌)ᵀ`, constant `(λ/2)‖β̃‖²`.
pub fn sample_gap_function(sol: &PrimalDualSolution, data: &Dataset) -> Result<GapFunction> {
    require_model(sol, ScreeningMode::Sample)?;
    check_solution_shape(sol, data)?;
    let lam = sol.spec.lambda();
    let (n, d) = (data.n(), data.d());
    let xc = data.xcheck();
    let scale = 1.0 / (2.0 * lam).sqrt();
    let mut g = Vec::with_capacity(n * d);
    for i in 0..n {
        let s = sol.alpha[i] * scale;
        g.extend(xc.row(i).iter().map(|x| s * x));
    }
    let m = data.margins(&sol.beta);
    let b = m
        .iter()
        .zip(&sol.alpha)
        .map(|(&t, &a)| 0.5 * (sol.spec.loss().value(t) - a))
        .collect();
    Ok(GapFunction {
        a: QuadMatrix::LowRank(DenseMatrix::new(n, d, g)?),
        b,
        constant: 0.5 * lam * dot(&sol.beta, &sol.beta),
    })
}

fn check_ball_center(sol: &PrimalDualSolution, ball: &WeightBall) -> Result<()> {
    if ball.center() != sol.weights.as_slice() {
        return Err(Error::InvalidBall(
            "ball center must equal the weights the reference was trained at".into(),
        ));
    }
    Ok(())
}

/// Samples that are non-support vectors for every weight vector in the ball.
pub fn drss_samples(
    sol: &PrimalDualSolution,
    data: &Dataset,
    ball: &WeightBall,
) -> Result<ScreeningReport> {
    require_model(sol, ScreeningMode::Sample)?;
    check_ball_center(sol, ball)?;
    if ball.radius() == 0.0 {
        return wcss(sol, data, ball.center(), ScreeningMode::Sample);
    }
    let gf = sample_gap_function(sol, data)?;
    let maxgap = certified_gap(gf.max_over(ball.center(), ball.radius())?, data.n(), ball_weight_sum(ball))?;
    let r = (2.0 / sol.spec.lambda() * maxgap).sqrt();
    let (screened, bounds) = sample_mask(data, &sol.beta, r);
    Ok(ScreeningReport {
        mode: ScreeningMode::Sample,
        screened,
        radius: r,
        bounds,
        reference_gap: maxgap,
    })
}

/// Per-sample coefficients `eᵢ = ℓᵢ + λ(λα̃ᵢ² − 4α̃ᵢ)/4` of the L2L1 gap,
/// which is `Σ wᵢeᵢ + ρ(β̃)`.
pub fn feature_gap_coefficients(sol: &PrimalDualSolution, data: &Dataset) -> Result<(Vec<f64>, f64)> {
    require_model(sol, ScreeningMode::Feature)?;
    check_solution_shape(sol, data)?;
    let lam = sol.spec.lambda();
    let m = data.margins(&sol.beta);
    let e = m
        .iter()
        .zip(&sol.alpha)
        .map(|(&t, &a)| sol.spec.loss().value(t) + lam * (lam * a * a - 4.0 * a) / 4.0)
        .collect();
    Ok((e, sol.spec.reg_value(&sol.beta)))
}

/// Non-intercept features that are zero for every weight vector in the ball.
pub fn drsfs_features(
    sol: &PrimalDualSolution,
    data: &Dataset,
    ball: &WeightBall,
) -> Result<ScreeningReport> {
    require_model(sol, ScreeningMode::Feature)?;
    check_ball_center(sol, ball)?;
    let (wt, s) = (ball.center(), ball.radius());
    if s == 0.0 {
        return wcss(sol, data, wt, ScreeningMode::Feature);
    }
    let lam = sol.spec.lambda();
    let min_wg2 = min_weight_over_ball(wt, sol.spec.gamma(), s)?;
    let (e, rho) = feature_gap_coefficients(sol, data)?;
    let maxgap = certified_gap(ball_linear_extrema(&e, wt, s)?.max + rho, data.n(), ball_weight_sum(ball))?;
    let rbar = gap_radius_feature(sol.spec.mu().expect("L1 model"), min_wg2, maxgap)?;

    let d = data.d();
    let xc = data.xcheck();
    let bounds: Vec<(f64, f64)> = (0..d - 1)
        .into_par_iter()
        .map(|j| -> Result<(f64, f64)> {
            let col = xc.col(j);
            let a: Vec<f64> = col.iter().zip(&sol.alpha).map(|(x, a)| x * a).collect();
            let ext = ball_linear_extrema(&a, wt, s)?;
            let sq: Vec<f64> = col.iter().map(|x| x * x).collect();
            let nmax = if sq.iter().all(|&v| v == 0.0) {
                0.0
            } else {
                let p = QuadBallProblem::new(QuadMatrix::Diagonal(sq), vec![0.0; col.len()], wt.to_vec(), s)?;
                max_quad_ball(&p)?.value.max(0.0)
            };
            let n_j = lam * nmax.sqrt();
            Ok((lam * ext.min - n_j * rbar, lam * ext.max + n_j * rbar))
        })
        .collect::<Result<_>>()?;
    Ok(ScreeningReport {
        mode: ScreeningMode::Feature,
        screened: feature_mask(&sol.spec, d, &bounds),
        radius: rbar,
        bounds,
        reference_gap: maxgap,
    })
}

/// Folds a kernel matrix with labels: `Ǩᵢⱼ = yᵢ yⱼ Kᵢⱼ`.
pub fn fold_kernel(gram: &DenseMatrix, y: &[f64]) -> Result<DenseMatrix> {
    let n = gram.rows();
    if !gram.is_square() {
        return Err(Error::NotSquare {
            rows: gram.rows(),
            cols: gram.cols(),
        });
    }
    if y.len() != n {
        return Err(Error::dims("kernel labels", n, y.len()));
    }
    if let Some(v) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidDataset(format!("label {v} is not ±1")));
    }
    let mut k = gram.clone();
    for i in 0..n {
        for j in 0..n {
            k.set(i, j, y[i] * y[j] * gram.get(i, j));
        }
    }
    Ok(k)
}

/// Sample screening over the ball for the kernelized hinge-loss model.
///
/// `gram` is the unfolded kernel matrix `Kᵢⱼ = k(xᵢ, xⱼ)` and `alpha` the
/// dual solution trained at the ball center.
pub fn kernel_drss_samples(
    gram: &DenseMatrix,
    y: &[f64],
    alpha: &[f64],
    lambda: f64,
    ball: &WeightBall,
) -> Result<ScreeningReport> {
    gram.check_symmetric(crate::linalg::SYMMETRY_TOL)?;
    let kc = fold_kernel(gram, y)?;
    let n = kc.rows();
    let wt = ball.center();
    if alpha.len() != n || wt.len() != n {
        return Err(Error::dims("kernel screening vectors", n, alpha.len()));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidModel(format!("lambda {lambda} must be positive")));
    }
    if alpha.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
        return Err(Error::InfeasibleDual("kernel dual outside [0, 1]".into()));
    }
    let wa: Vec<f64> = wt.iter().zip(alpha).map(|(a, b)| a * b).collect();
    let kwa = kc.matvec(&wa);
    let margins: Vec<f64> = kwa.iter().map(|v| v / lambda).collect();
    let beta_sq = dot(&wa, &kwa) / (lambda * lambda);

    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, alpha[i] * kc.get(i, j) * alpha[j] / (2.0 * lambda));
        }
    }
    let gf = GapFunction {
        a: QuadMatrix::Dense(a),
        b: margins
            .iter()
            .zip(alpha)
            .map(|(&t, &al)| 0.5 * ((1.0 - t).max(0.0) - al))
            .collect(),
        constant: 0.5 * lambda * beta_sq,
    };
    let maxgap = certified_gap(gf.max_over(wt, ball.radius())?, n, ball_weight_sum(ball))?;
    let r = (2.0 / lambda * maxgap).sqrt();
    let zero = crate::models::LossKind::Hinge.zero_set();
    let bounds: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let nr = kc.get(i, i).max(0.0).sqrt();
            (margins[i] - nr * r, margins[i] + nr * r)
        })
        .collect();
    Ok(ScreeningReport {
        mode: ScreeningMode::Sample,
        screened: bounds.iter().map(|&(lo, hi)| zero.contains_interval(lo, hi)).collect(),
        radius: r,
        bounds,
        reference_gap: maxgap,
    })
}
