//! Training of the weighted SVMs to a prescribed duality gap.

mod dual_cd;
mod kernel;
mod primal_cd;

pub use dual_cd::train_l1l2;
pub use kernel::{kernel_duality_gap, train_l1l2_kernel, KernelSolution};
pub use primal_cd::train_l2l1;

use crate::error::{Error, Result};
use crate::models::{
    dual_infeasibility, weighted_dual_combination, Dataset, LossKind, ModelSpec, DUAL_FEAS_TOL,
};

pub const DEFAULT_RELATIVE_GAP: f64 = 1e-10;
pub const DEFAULT_MAX_EPOCHS: usize = 100_000;

/// Stopping threshold on the duality gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapTol {
    Absolute(f64),
    /// `r · max(1, P_w(0))`.
    Relative(f64),
}

impl GapTol {
    pub fn resolve(self, p_at_zero: f64) -> f64 {
        match self {
            GapTol::Absolute(t) => t,
            GapTol::Relative(r) => r * p_at_zero.max(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub gap_tol: GapTol,
    pub max_epochs: usize,
    pub seed: u64,
    /// Initial `α` for the L1L2 dual solver or initial `β` for the L2L1
    /// primal solver.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: GapTol::Relative(DEFAULT_RELATIVE_GAP),
            max_epochs: DEFAULT_MAX_EPOCHS,
            seed: 0,
            warm_start: None,
        }
    }
}

impl SolverOptions {
    pub fn with_gap_tol(gap_tol: GapTol) -> Self {
        Self {
            gap_tol,
            ..Self::default()
        }
    }
}

/// A primal/dual pair at the weights it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualSolution {
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub gap: f64,
    pub weights: Vec<f64>,
    pub spec: ModelSpec,
    pub epochs: usize,
}

/// Dispatches on the model family.
pub fn train(
    spec: &ModelSpec,
    data: &Dataset,
    w: &[f64],
    opts: &SolverOptions,
) -> Result<PrimalDualSolution> {
    match spec.loss() {
        LossKind::Hinge => train_l1l2(data, w, spec.lambda(), opts),
        LossKind::SquaredHinge => train_l2l1(data, w, spec.lambda(), opts),
    }
}

pub(crate) fn check_weights(data: &Dataset, w: &[f64]) -> Result<()> {
    if w.len() != data.n() {
        return Err(Error::dims("weights", data.n(), w.len()));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("weights"));
    }
    if let Some(v) = w.iter().find(|&&v| v < 0.0) {
        return Err(Error::InvalidModel(format!("negative weight {v}")));
    }
    Ok(())
}

/// Smallest L1 strength at which every non-intercept coefficient of the
/// L2L1 model is zero.
pub fn lambda_max(data: &Dataset, w: &[f64]) -> Result<f64> {
    check_weights(data, w)?;
    let d = data.d();
    if d < 2 {
        return Err(Error::InvalidDataset(
            "lambda_max needs at least one non-intercept feature".into(),
        ));
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidModel("weights sum to zero".into()));
    }
    let y = data.y();
    let wpos: f64 = w.iter().zip(y).filter(|(_, &yi)| yi > 0.0).map(|(wi, _)| wi).sum();
    let bd = (wpos - (total - wpos)) / total;
    let a: Vec<f64> = y.iter().map(|&yi| 2.0 * (1.0 - yi * bd).max(0.0)).collect();
    let v = weighted_dual_combination(data, w, &a);
    Ok(v[..d - 1].iter().fold(0.0, |m, x| m.max(x.abs())))
}

/// `β = (1/λ)(w⋄X̌)ᵀα` for L1L2. L2L1 has no closed primal map and is
/// rejected.
pub fn primal_from_dual(spec: &ModelSpec, data: &Dataset, w: &[f64], alpha: &[f64]) -> Result<Vec<f64>> {
    check_weights(data, w)?;
    if alpha.len() != data.n() {
        return Err(Error::dims("alpha", data.n(), alpha.len()));
    }
    match spec.loss() {
        LossKind::Hinge => {
            let mut b = weighted_dual_combination(data, w, alpha);
            for v in &mut b {
                *v /= spec.lambda();
            }
            Ok(b)
        }
        LossKind::SquaredHinge => Err(Error::InvalidModel(
            "primal_from_dual is defined for the L1L2 model only".into(),
        )),
    }
}

/// `αᵢ = (2/λ) max(0, 1 − X̌ᵢ:β)` for L2L1; for L1L2 the subgradient choice
/// `αᵢ = 1` if the margin is below 1 and `0` otherwise.
pub fn dual_from_primal(spec: &ModelSpec, data: &Dataset, w: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
    check_weights(data, w)?;
    if beta.len() != data.d() {
        return Err(Error::dims("beta", data.d(), beta.len()));
    }
    let m = data.margins(beta);
    Ok(match spec.loss() {
        LossKind::SquaredHinge => m
            .iter()
            .map(|&t| 2.0 / spec.lambda() * (1.0 - t).max(0.0))
            .collect(),
        LossKind::Hinge => m.iter().map(|&t| if t < 1.0 { 1.0 } else { 0.0 }).collect(),
    })
}

/// Scales an L2L1 dual candidate by `1/max(1, max_{j<d} |(w⊗X̌_{:j})ᵀα|)` so
/// the box part of the feasible region is satisfied.
pub(crate) fn scale_l2l1_dual(data: &Dataset, w: &[f64], alpha: &mut [f64]) {
    let v = weighted_dual_combination(data, w, alpha);
    let d = data.d();
    let worst = v[..d - 1].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if worst > 1.0 {
        for a in alpha.iter_mut() {
            *a /= worst;
        }
    }
}

/// Checks that a solution's dual point is feasible for its own weights.
pub fn check_solution(sol: &PrimalDualSolution, data: &Dataset) -> Result<()> {
    let viol = dual_infeasibility(&sol.spec, data, &sol.weights, &sol.alpha)?;
    if viol > DUAL_FEAS_TOL {
        return Err(Error::InfeasibleDual(format!("constraint violation {viol:e}")));
    }
    Ok(())
}
