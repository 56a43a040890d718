//! Losses, regularizers and the weighted primal/dual objectives of the two
//! SVM instantiations:
//!
//! * `L1L2`: hinge loss with `(λ/2)‖β‖²` (sample-sparse),
//! * `L2L1`: squared hinge with `λ Σ_{j<d} |β_j|`, intercept unpenalized
//!   (feature-sparse).

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};

/// Absolute tolerance for dual feasibility checks.
pub const DUAL_FEAS_TOL: f64 = 1e-9;
/// Weak duality is asserted up to this much negative gap.
pub const GAP_ROUNDOFF: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Hinge,
    SquaredHinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegKind {
    L2,
    /// L1 on every coordinate except the last (intercept).
    L1,
}

/// A set of reals with optionally open endpoints. Infinite endpoints are
/// always treated as open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalSet {
    pub lower: f64,
    pub upper: f64,
    pub lower_open: bool,
    pub upper_open: bool,
}

impl IntervalSet {
    pub fn open(lower: f64, upper: f64) -> Self {
        debug_assert!(lower <= upper);
        Self {
            lower,
            upper,
            lower_open: true,
            upper_open: true,
        }
    }

    pub fn point(v: f64) -> Self {
        Self {
            lower: v,
            upper: v,
            lower_open: false,
            upper_open: false,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lower_open {
            x > self.lower
        } else {
            x >= self.lower
        };
        let below = if self.upper_open {
            x < self.upper
        } else {
            x <= self.upper
        };
        above && below
    }

    /// Whether the closed interval `[lo, hi]` lies inside this set.
    pub fn contains_interval(&self, lo: f64, hi: f64) -> bool {
        lo <= hi && self.contains(lo) && self.contains(hi)
    }
}

impl LossKind {
    /// `ℓ(t)` where `t = yᵢ xᵢᵀβ`.
    pub fn value(self, t: f64) -> f64 {
        let h = (1.0 - t).max(0.0);
        match self {
            LossKind::Hinge => h,
            LossKind::SquaredHinge => h * h,
        }
    }

    /// Endpoints of the subdifferential `∂ℓ(t)`.
    pub fn subgradient(self, t: f64) -> (f64, f64) {
        match self {
            LossKind::Hinge => {
                if t < 1.0 {
                    (-1.0, -1.0)
                } else if t > 1.0 {
                    (0.0, 0.0)
                } else {
                    (-1.0, 0.0)
                }
            }
            LossKind::SquaredHinge => {
                let g = -2.0 * (1.0 - t).max(0.0);
                (g, g)
            }
        }
    }

    /// Convex conjugate `ℓ*(t)`; `+∞` outside its domain.
    pub fn conjugate(self, t: f64) -> f64 {
        match self {
            LossKind::Hinge => {
                if (-1.0..=0.0).contains(&t) {
                    t
                } else {
                    f64::INFINITY
                }
            }
            LossKind::SquaredHinge => {
                if t <= 0.0 {
                    (t * t + 4.0 * t) / 4.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Points where `∂ℓ(t) = {0}`. Open at 1 for both losses.
    pub fn zero_set(self) -> IntervalSet {
        IntervalSet::open(1.0, f64::INFINITY)
    }
}

/// Loss family, regularizer family, `λ` and the per-sample dual scaling `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    loss: LossKind,
    reg: RegKind,
    lambda: f64,
    gamma: Vec<f64>,
}

impl ModelSpec {
    pub fn new(loss: LossKind, reg: RegKind, lambda: f64, n: usize) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        let g = match (loss, reg) {
            (LossKind::Hinge, RegKind::L2) => 1.0,
            (LossKind::SquaredHinge, RegKind::L1) => lambda,
            _ => {
                return Err(Error::InvalidModel(format!(
                    "unsupported pairing {loss:?} with {reg:?}"
                )))
            }
        };
        Ok(Self {
            loss,
            reg,
            lambda,
            gamma: vec![g; n],
        })
    }

    /// Hinge loss with L2 regularization.
    pub fn l1l2(lambda: f64, n: usize) -> Result<Self> {
        Self::new(LossKind::Hinge, RegKind::L2, lambda, n)
    }

    /// Squared hinge loss with L1 regularization.
    pub fn l2l1(lambda: f64, n: usize) -> Result<Self> {
        Self::new(LossKind::SquaredHinge, RegKind::L1, lambda, n)
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn reg(&self) -> RegKind {
        self.reg
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn is_l1l2(&self) -> bool {
        self.loss == LossKind::Hinge
    }

    /// Strong convexity of the primal regularizer (L1L2 only).
    pub fn kappa(&self) -> Option<f64> {
        match self.reg {
            RegKind::L2 => Some(self.lambda),
            RegKind::L1 => None,
        }
    }

    /// Smoothness of the loss (L2L1 only).
    pub fn mu(&self) -> Option<f64> {
        match self.loss {
            LossKind::SquaredHinge => Some(2.0),
            LossKind::Hinge => None,
        }
    }

    /// `ρ(β)`.
    pub fn reg_value(&self, beta: &[f64]) -> f64 {
        match self.reg {
            RegKind::L2 => 0.5 * self.lambda * dot(beta, beta),
            RegKind::L1 => {
                let d = beta.len();
                self.lambda * beta[..d.saturating_sub(1)].iter().map(|b| b.abs()).sum::<f64>()
            }
        }
    }

    /// Zero set of `∂σ*_j` for coordinate `j` of `d`. `None` for L2, where
    /// feature screening does not apply.
    pub fn reg_zero_set(&self, j: usize, d: usize) -> Option<IntervalSet> {
        match self.reg {
            RegKind::L2 => None,
            RegKind::L1 if j + 1 == d => Some(IntervalSet::point(0.0)),
            RegKind::L1 => Some(IntervalSet::open(-self.lambda, self.lambda)),
        }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if self.gamma.len() != n {
            return Err(Error::dims("ModelSpec gamma", n, self.gamma.len()));
        }
        Ok(())
    }
}

/// Training data with the sign-folded matrix `X̌ = diag(y) X`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DenseMatrix,
    y: Vec<f64>,
    xcheck: DenseMatrix,
    n_pos: usize,
    intercept: bool,
}

impl Dataset {
    /// Requires the last column of `x` to be all ones.
    pub fn new(x: DenseMatrix, y: Vec<f64>) -> Result<Self> {
        let ds = Self::without_intercept_check(x, y)?;
        if !ds.intercept {
            return Err(Error::InvalidDataset(
                "last column must be the all-ones intercept".into(),
            ));
        }
        Ok(ds)
    }

    /// Same validation except for the intercept column.
    pub fn without_intercept_check(x: DenseMatrix, y: Vec<f64>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::dims("Dataset labels", x.rows(), y.len()));
        }
        if x.rows() == 0 || x.cols() == 0 {
            return Err(Error::InvalidDataset("empty dataset".into()));
        }
        if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidDataset(format!("label {bad} is not ±1")));
        }
        let d = x.cols();
        let mut xcheck = x.clone();
        for (i, &yi) in y.iter().enumerate() {
            for v in xcheck.row_mut(i) {
                *v *= yi;
            }
        }
        let intercept = (0..x.rows()).all(|i| x.get(i, d - 1) == 1.0);
        let n_pos = y.iter().filter(|&&v| v == 1.0).count();
        Ok(Self {
            x,
            y,
            xcheck,
            n_pos,
            intercept,
        })
    }

    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn xcheck(&self) -> &DenseMatrix {
        &self.xcheck
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    /// `X̌β`.
    pub fn margins(&self, beta: &[f64]) -> Vec<f64> {
        self.xcheck.matvec(beta)
    }

    /// `‖X̌ᵢ:‖₂` for each row.
    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| dot(self.xcheck.row(i), self.xcheck.row(i)).sqrt())
            .collect()
    }

    /// Rows reordered by `perm` (`new[k] = old[perm[k]]`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n() {
            return Err(Error::dims("Dataset::permuted", self.n(), perm.len()));
        }
        let d = self.d();
        let mut data = Vec::with_capacity(self.n() * d);
        let mut y = Vec::with_capacity(self.n());
        for &p in perm {
            data.extend_from_slice(self.x.row(p));
            y.push(self.y[p]);
        }
        Self::without_intercept_check(DenseMatrix::new(self.n(), d, data)?, y)
    }
}

fn check_shapes(spec: &ModelSpec, data: &Dataset, w: &[f64], v: &[f64], vlen: usize) -> Result<()> {
    spec.check_len(data.n())?;
    if w.len() != data.n() {
        return Err(Error::dims("weights", data.n(), w.len()));
    }
    if v.len() != vlen {
        return Err(Error::dims("coefficient vector", vlen, v.len()));
    }
    Ok(())
}

/// `P_w(β) = Σ wᵢ ℓ(X̌ᵢ:β) + ρ(β)`.
pub fn primal_objective(spec: &ModelSpec, data: &Dataset, w: &[f64], beta: &[f64]) -> Result<f64> {
    check_shapes(spec, data, w, beta, data.d())?;
    let m = data.margins(beta);
    let loss: f64 = w
        .iter()
        .zip(&m)
        .map(|(&wi, &t)| if wi == 0.0 { 0.0 } else { wi * spec.loss.value(t) })
        .sum();
    Ok(loss + spec.reg_value(beta))
}

/// `(w ⊗ α)ᵀ X̌`, the weighted dual combination of rows.
pub fn weighted_dual_combination(data: &Dataset, w: &[f64], alpha: &[f64]) -> Vec<f64> {
    let wa: Vec<f64> = w.iter().zip(alpha).map(|(a, b)| a * b).collect();
    data.xcheck().tr_matvec(&wa)
}

/// Maximum constraint violation of `α` for `D_w` (0 when feasible).
pub fn dual_infeasibility(spec: &ModelSpec, data: &Dataset, w: &[f64], alpha: &[f64]) -> Result<f64> {
    check_shapes(spec, data, w, alpha, data.n())?;
    let mut worst: f64 = 0.0;
    match spec.loss {
        LossKind::Hinge => {
            for &a in alpha {
                worst = worst.max(-a).max(a - 1.0);
            }
        }
        LossKind::SquaredHinge => {
            for &a in alpha {
                worst = worst.max(-a);
            }
            let v = weighted_dual_combination(data, w, alpha);
            let d = data.d();
            for (j, &vj) in v.iter().enumerate() {
                if j + 1 == d {
                    worst = worst.max(vj.abs());
                } else {
                    worst = worst.max(vj.abs() - 1.0);
                }
            }
        }
    }
    Ok(worst)
}

/// `D_w(α)`, or `-∞` when `α` violates the constraints by more than
/// [`DUAL_FEAS_TOL`].
pub fn dual_objective(spec: &ModelSpec, data: &Dataset, w: &[f64], alpha: &[f64]) -> Result<f64> {
    if dual_infeasibility(spec, data, w, alpha)? > DUAL_FEAS_TOL {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(dual_value_unchecked(spec, data, w, alpha))
}

/// The finite dual formula without the feasibility check.
pub fn dual_value_unchecked(spec: &ModelSpec, data: &Dataset, w: &[f64], alpha: &[f64]) -> f64 {
    let lam = spec.lambda;
    match spec.loss {
        LossKind::Hinge => {
            let lin: f64 = w.iter().zip(alpha).map(|(a, b)| a * b).sum();
            let v = weighted_dual_combination(data, w, alpha);
            lin - dot(&v, &v) / (2.0 * lam)
        }
        LossKind::SquaredHinge => {
            -lam * w
                .iter()
                .zip(alpha)
                .map(|(&wi, &a)| wi * (lam * a * a - 4.0 * a))
                .sum::<f64>()
                / 4.0
        }
    }
}

/// `P_w(β) − D_w(α)`, clipped at zero after checking weak duality up to
/// roundoff.
pub fn duality_gap(
    spec: &ModelSpec,
    data: &Dataset,
    w: &[f64],
    beta: &[f64],
    alpha: &[f64],
) -> Result<f64> {
    let viol = dual_infeasibility(spec, data, w, alpha)?;
    if viol > DUAL_FEAS_TOL {
        return Err(Error::InfeasibleDual(format!("constraint violation {viol:e}")));
    }
    let p = primal_objective(spec, data, w, beta)?;
    let g = p - dual_value_unchecked(spec, data, w, alpha);
    clip_gap(g, p)
}

/// Rejects gaps below `-GAP_ROUNDOFF·max(1, |scale|)` and clips the rest to 0.
pub(crate) fn clip_gap(g: f64, scale: f64) -> Result<f64> {
    if !g.is_finite() {
        return Err(Error::NonFinite("duality gap"));
    }
    if g < -GAP_ROUNDOFF * scale.abs().max(1.0) {
        return Err(Error::NegativeGap(g));
    }
    Ok(g.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_point() -> Dataset {
        Dataset::without_intercept_check(DenseMatrix::new(1, 1, vec![1.0]).unwrap(), vec![1.0])
            .unwrap()
    }

    #[test]
    fn loss_examples() {
        assert_eq!(LossKind::Hinge.value(0.0), 1.0);
        assert_eq!(LossKind::Hinge.subgradient(0.0), (-1.0, -1.0));
        assert_eq!(LossKind::Hinge.subgradient(1.0), (-1.0, 0.0));
        assert_eq!(LossKind::Hinge.conjugate(-0.5), -0.5);
        assert_eq!(LossKind::Hinge.conjugate(0.5), f64::INFINITY);
        assert_eq!(LossKind::SquaredHinge.conjugate(-2.0), -1.0);
        assert_eq!(LossKind::SquaredHinge.conjugate(0.1), f64::INFINITY);
        assert_eq!(LossKind::SquaredHinge.subgradient(0.0), (-2.0, -2.0));
        let z = LossKind::Hinge.zero_set();
        assert!(!z.contains(1.0));
        assert!(z.contains(1.0 + 1e-12));
    }

    #[test]
    fn regularizer_examples() {
        let l2 = ModelSpec::l1l2(2.0, 1).unwrap();
        assert_eq!(l2.reg_value(&[1.0, 1.0]), 2.0);
        let l1 = ModelSpec::l2l1(3.0, 1).unwrap();
        assert_eq!(l1.reg_value(&[1.0, -2.0, 5.0]), 9.0);
        let z = l1.reg_zero_set(0, 3).unwrap();
        assert_eq!((z.lower, z.upper, z.lower_open, z.upper_open), (-3.0, 3.0, true, true));
        assert_eq!(l1.reg_zero_set(2, 3), Some(IntervalSet::point(0.0)));
        assert!(l2.reg_zero_set(0, 3).is_none());
    }

    #[test]
    fn model_pairings() {
        assert!(ModelSpec::new(LossKind::Hinge, RegKind::L1, 1.0, 3).is_err());
        assert!(ModelSpec::new(LossKind::SquaredHinge, RegKind::L2, 1.0, 3).is_err());
        assert!(ModelSpec::l1l2(0.0, 3).is_err());
        assert!(ModelSpec::l1l2(f64::NAN, 3).is_err());
        let s = ModelSpec::l2l1(4.0, 2).unwrap();
        assert_eq!(s.gamma(), &[4.0, 4.0]);
        assert_eq!(s.mu(), Some(2.0));
        assert_eq!(ModelSpec::l1l2(4.0, 2).unwrap().kappa(), Some(4.0));
    }

    #[test]
    fn objective_examples() {
        let ds = one_point();
        let spec = ModelSpec::l1l2(1.0, 1).unwrap();
        assert_eq!(primal_objective(&spec, &ds, &[1.0], &[0.0]).unwrap(), 1.0);
        assert_eq!(primal_objective(&spec, &ds, &[1.0], &[1.0]).unwrap(), 0.5);
        assert_eq!(primal_objective(&spec, &ds, &[0.0], &[3.0]).unwrap(), 4.5);
        assert_eq!(dual_objective(&spec, &ds, &[1.0], &[1.0]).unwrap(), 0.5);
        assert_eq!(dual_objective(&spec, &ds, &[1.0], &[1.5]).unwrap(), f64::NEG_INFINITY);
        assert_eq!(duality_gap(&spec, &ds, &[1.0], &[1.0], &[1.0]).unwrap(), 0.0);
        assert_eq!(duality_gap(&spec, &ds, &[1.0], &[0.0], &[0.0]).unwrap(), 1.0);
        assert!(matches!(
            duality_gap(&spec, &ds, &[1.0], &[0.0], &[2.0]),
            Err(Error::InfeasibleDual(_))
        ));

        let l1 = ModelSpec::l2l1(1.0, 1).unwrap();
        assert_eq!(dual_objective(&l1, &ds, &[1.0], &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn dataset_validation() {
        let x = DenseMatrix::new(2, 2, vec![1.0, 1.0, 2.0, 1.0]).unwrap();
        let ds = Dataset::new(x.clone(), vec![1.0, -1.0]).unwrap();
        assert_eq!(ds.xcheck().row(1), &[-2.0, -1.0]);
        assert_eq!(ds.n_pos(), 1);
        assert!(Dataset::new(x.clone(), vec![1.0, 0.0]).is_err());
        assert!(Dataset::new(x, vec![1.0]).is_err());
        let no_int = DenseMatrix::new(2, 1, vec![1.0, 2.0]).unwrap();
        assert!(Dataset::new(no_int.clone(), vec![1.0, 1.0]).is_err());
        assert!(!Dataset::without_intercept_check(no_int, vec![1.0, 1.0])
            .unwrap()
            .has_intercept());
    }
}
