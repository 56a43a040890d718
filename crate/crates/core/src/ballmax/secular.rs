//! The secular function `T(ν) = Σ (ξᵢ / (ν − φᵢ))²` and all solutions of
//! `T(ν) = S²`.

use crate::error::{Error, Result};

/// Relative threshold below which a `ξᵢ` is treated as exactly zero.
pub const XI_ZERO_TOL: f64 = 1e-12;
/// Absolute tolerance on `T(ν#) − S²` for declaring a tangency.
pub const TANGENCY_TOL: f64 = 1e-10;
/// Guaranteed accuracy of every returned root, relative to `max(1, S²)`.
pub const ROOT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SecularProblem {
    phi: Vec<f64>,
    xi: Vec<f64>,
    radius: f64,
    active: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecularRoots {
    /// Ascending.
    pub roots: Vec<f64>,
    /// No active coordinate: `T ≡ 0` and the caller must use the singular
    /// branch only.
    pub fully_degenerate: bool,
}

impl SecularProblem {
    /// Sorts the pairs by `φ` and zeroes numerically tiny `ξᵢ`.
    pub fn new(phi: Vec<f64>, xi: Vec<f64>, radius: f64) -> Result<Self> {
        if phi.len() != xi.len() {
            return Err(Error::dims("SecularProblem", phi.len(), xi.len()));
        }
        if phi.iter().chain(&xi).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("secular problem data"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidBall(format!("radius {radius} must be positive")));
        }
        let mut pairs: Vec<(f64, f64)> = phi.into_iter().zip(xi).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let xmax = pairs.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
        let cut = XI_ZERO_TOL * (1.0 + xmax);
        for p in &mut pairs {
            if p.1.abs() <= cut {
                p.1 = 0.0;
            }
        }
        let (phi, xi): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let active = (0..xi.len()).filter(|&i| xi[i] != 0.0).collect();
        Ok(Self {
            phi,
            xi,
            radius,
            active,
        })
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Indices with `ξᵢ ≠ 0`, ascending in `φ`.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// `T(ν)`; errors when `ν` hits an active pole.
    pub fn eval(&self, nu: f64) -> Result<f64> {
        if self.active.iter().any(|&i| self.phi[i] == nu) {
            return Err(Error::SecularPole { value: nu });
        }
        Ok(self.t(nu))
    }

    fn t(&self, nu: f64) -> f64 {
        self.active
            .iter()
            .map(|&i| {
                let r = self.xi[i] / (nu - self.phi[i]);
                r * r
            })
            .sum()
    }

    /// `T'(ν)`.
    fn dt(&self, nu: f64) -> f64 {
        self.active
            .iter()
            .map(|&i| {
                let dv = nu - self.phi[i];
                -2.0 * self.xi[i] * self.xi[i] / (dv * dv * dv)
            })
            .sum()
    }

    /// Every `ν` with `T(ν) = S²`.
    pub fn roots(&self) -> SecularRoots {
        let act: Vec<(f64, f64)> = self
            .active
            .iter()
            .map(|&i| (self.phi[i], self.xi[i].abs()))
            .collect();
        if act.is_empty() {
            return SecularRoots {
                roots: Vec::new(),
                fully_degenerate: true,
            };
        }
        let s = self.radius;
        let norm = act.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt();
        let mut roots = Vec::new();

        let (p1, x1) = act[0];
        roots.push(self.refine(p1 - norm / s, p1 - x1 / s));

        for k in 0..act.len() - 1 {
            let (pa, xa) = act[k];
            let (pb, xb) = act[k + 1];
            if pb <= pa {
                continue;
            }
            // the two bracketing poles alone bound T from below on the gap
            let s2 = s * s;
            let lb = (xa.powf(2.0 / 3.0) + xb.powf(2.0 / 3.0)).powi(3) / ((pb - pa) * (pb - pa));
            if lb > (s2 + TANGENCY_TOL) * (1.0 + 1e-9) {
                continue;
            }
            let nu_min = match self.gap_minimizer(pa, pb) {
                Some(v) => v,
                None => continue,
            };
            let t_min = self.t(nu_min);
            if (t_min - s2).abs() <= TANGENCY_TOL {
                roots.push(nu_min);
            } else if t_min < s2 {
                let lo = (pa + xa / s).min(nu_min);
                let hi = (pb - xb / s).max(nu_min);
                roots.push(self.refine(lo, nu_min));
                roots.push(self.refine(nu_min, hi));
            }
        }

        let (pn, xn) = act[act.len() - 1];
        roots.push(self.refine(pn + xn / s, pn + norm / s));
        roots.sort_by(f64::total_cmp);
        SecularRoots {
            roots,
            fully_degenerate: false,
        }
    }

    /// Minimizer of the convex `T` strictly between two consecutive active
    /// poles, by bisection on the sign of `T'`.
    fn gap_minimizer(&self, pa: f64, pb: f64) -> Option<f64> {
        let eps = 1e-10 * (1.0 + pa.abs().max(pb.abs()));
        let (mut lo, mut hi) = (pa + eps, pb - eps);
        if lo >= hi {
            return None;
        }
        if self.dt(lo) >= 0.0 {
            return Some(lo);
        }
        if self.dt(hi) <= 0.0 {
            return Some(hi);
        }
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.dt(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (tl, th) = (self.t(lo), self.t(hi));
        Some(if tl <= th { lo } else { hi })
    }

    /// Solves `T(ν) = S²` on a bracket where `T − S²` changes sign, using
    /// Newton on `1/√T − 1/S` safeguarded by bisection.
    fn refine(&self, a: f64, b: f64) -> f64 {
        let s = self.radius;
        let g = |nu: f64| 1.0 / self.t(nu).sqrt() - 1.0 / s;
        let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
        let (glo, ghi) = (g(lo), g(hi));
        if glo == 0.0 {
            return lo;
        }
        if ghi == 0.0 {
            return hi;
        }
        if glo.signum() == ghi.signum() {
            return if glo.abs() <= ghi.abs() { lo } else { hi };
        }
        let lo_sign = glo.signum();
        let mut nu = 0.5 * (lo + hi);
        for _ in 0..200 {
            let t = self.t(nu);
            let gv = 1.0 / t.sqrt() - 1.0 / s;
            if gv == 0.0 {
                return nu;
            }
            if gv.signum() == lo_sign {
                lo = nu;
            } else {
                hi = nu;
            }
            if hi - lo <= 4.0 * f64::EPSILON * (1.0 + nu.abs()) {
                break;
            }
            let dg = -self.dt(nu) / (2.0 * t * t.sqrt());
            let newton = nu - gv / dg;
            let next = if dg != 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - nu).abs() <= f64::EPSILON * (1.0 + nu.abs()) {
                nu = next;
                break;
            }
            nu = next;
        }
        nu
    }
}

/// `T(ν)` for a problem; errors at an active pole.
pub fn secular_eval(problem: &SecularProblem, nu: f64) -> Result<f64> {
    problem.eval(nu)
}

/// All solutions of `T(ν) = S²`.
pub fn secular_roots(problem: &SecularProblem) -> SecularRoots {
    problem.roots()
}
