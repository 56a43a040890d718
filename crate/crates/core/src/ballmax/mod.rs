//! Exact maximization of `wᵀAw + 2bᵀw` over `‖w − w̃‖₂ ≤ S` for symmetric
//! positive semidefinite `A`.
//!
//! With `A = QᵀΦQ` and `ξ = −Q(Aw̃ + b)`, every maximizer lies on the sphere
//! and is a Lagrange point `(Φ − νI)τ = ξ` with `w = w̃ + Qᵀτ`. Nonsingular
//! points come from the roots of the secular equation; singular points put
//! `ν` on an eigenvalue whose eigenspace carries no `ξ` and spend the leftover
//! radius inside that eigenspace.

pub mod secular;

pub use secular::{secular_eval, secular_roots, SecularProblem, SecularRoots};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, sym_eigendecompose, DenseMatrix};

/// Eigenvalues closer than `CLUSTER_TOL·(1 + |φ_max|)` are one distinct value.
pub const CLUSTER_TOL: f64 = 1e-9;
/// Relative rank-drop threshold in the low-rank QR.
const QR_DROP_TOL: f64 = 1e-13;

/// The quadratic term, stored densely or in a structured form.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadMatrix {
    Dense(DenseMatrix),
    /// `A = GGᵀ` with `G` of shape `n×k`.
    LowRank(DenseMatrix),
    Diagonal(Vec<f64>),
}

impl QuadMatrix {
    pub fn n(&self) -> usize {
        match self {
            QuadMatrix::Dense(a) => a.rows(),
            QuadMatrix::LowRank(g) => g.rows(),
            QuadMatrix::Diagonal(d) => d.len(),
        }
    }

    /// `Av`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self {
            QuadMatrix::Dense(a) => a.matvec(v),
            QuadMatrix::LowRank(g) => g.matvec(&g.tr_matvec(v)),
            QuadMatrix::Diagonal(d) => d.iter().zip(v).map(|(a, b)| a * b).collect(),
        }
    }

    /// `vᵀAv`.
    pub fn quad(&self, v: &[f64]) -> f64 {
        match self {
            QuadMatrix::LowRank(g) => {
                let t = g.tr_matvec(v);
                dot(&t, &t)
            }
            _ => dot(v, &self.apply(v)),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            QuadMatrix::Dense(a) => a.max_abs() == 0.0,
            QuadMatrix::LowRank(g) => g.max_abs() == 0.0,
            QuadMatrix::Diagonal(d) => d.iter().all(|&v| v == 0.0),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            QuadMatrix::Dense(a) => a.clone(),
            QuadMatrix::LowRank(g) => {
                let n = g.rows();
                let mut a = DenseMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        a.set(i, j, dot(g.row(i), g.row(j)));
                    }
                }
                a
            }
            QuadMatrix::Diagonal(d) => DenseMatrix::from_diagonal(d),
        }
    }

    fn spectrum(&self) -> Result<Spectrum> {
        match self {
            QuadMatrix::Dense(a) => {
                let e = sym_eigendecompose(a)?;
                let vectors = (0..a.rows()).map(|i| e.vector(i).to_vec()).collect();
                Ok(Spectrum {
                    n: a.rows(),
                    values: e.phi,
                    vectors,
                })
            }
            QuadMatrix::Diagonal(d) => {
                if let Some(&v) = d.iter().find(|&&v| !(v >= 0.0) || !v.is_finite()) {
                    return Err(Error::NotPositiveSemidefinite { eigenvalue: v });
                }
                let n = d.len();
                let vectors = (0..n)
                    .map(|i| {
                        let mut e = vec![0.0; n];
                        e[i] = 1.0;
                        e
                    })
                    .collect();
                Ok(Spectrum {
                    n,
                    values: d.clone(),
                    vectors,
                })
            }
            QuadMatrix::LowRank(g) => low_rank_spectrum(g),
        }
    }
}

/// Explicit eigenpairs; when fewer than `n` vectors are given, the orthogonal
/// complement is an eigenspace with eigenvalue 0.
struct Spectrum {
    n: usize,
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

fn low_rank_spectrum(g: &DenseMatrix) -> Result<Spectrum> {
    let (n, k) = (g.rows(), g.cols());
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(k);
    for c in 0..k {
        let mut v = g.col(c);
        let orig = norm2(&v);
        let mut h = vec![0.0; basis.len()];
        // two passes of modified Gram-Schmidt keep the basis orthonormal
        for _ in 0..2 {
            for (l, q) in basis.iter().enumerate() {
                let p = dot(q, &v);
                axpy(-p, q, &mut v);
                h[l] += p;
            }
        }
        let res = norm2(&v);
        if orig > 0.0 && res > QR_DROP_TOL * orig {
            for x in &mut v {
                *x /= res;
            }
            basis.push(v);
            h.push(res);
        }
        coeffs.push(h);
    }
    let r = basis.len();
    // R is r×k; column c holds coeffs[c] padded with zeros
    let mut m = DenseMatrix::zeros(r, r);
    for h in &coeffs {
        for a in 0..h.len() {
            for b in 0..h.len() {
                m.set(a, b, m.get(a, b) + h[a] * h[b]);
            }
        }
    }
    let e = sym_eigendecompose(&m)?;
    let vectors = (0..r)
        .map(|i| {
            let mut out = vec![0.0; n];
            for (l, q) in basis.iter().enumerate() {
                axpy(e.q.get(i, l), q, &mut out);
            }
            out
        })
        .collect();
    Ok(Spectrum {
        n,
        values: e.phi,
        vectors,
    })
}

/// One distinct eigenvalue with the projection of `−(Aw̃ + b)` onto its
/// eigenspace.
struct Cluster {
    phi: f64,
    /// Projection `g` and its norm `m`.
    g: Vec<f64>,
    m: f64,
    /// A unit vector inside the eigenspace.
    unit: Vec<f64>,
}

enum Member {
    Explicit(usize),
    Complement,
}

fn clusters(spec: &Spectrum, v: &[f64]) -> Vec<Cluster> {
    let n = spec.n;
    let mut items: Vec<(f64, Member)> = spec
        .values
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, Member::Explicit(i)))
        .collect();
    let has_complement = spec.vectors.len() < n;
    if has_complement {
        items.push((0.0, Member::Complement));
    }
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pmax = items.iter().fold(0.0f64, |m, it| m.max(it.0.abs()));
    let tol = CLUSTER_TOL * (1.0 + pmax);

    let mut groups: Vec<Vec<(f64, Member)>> = Vec::new();
    for it in items {
        match groups.last_mut() {
            Some(gr) if it.0 - gr.last().unwrap().0 <= tol => gr.push(it),
            _ => groups.push(vec![it]),
        }
    }

    let xi: Vec<f64> = spec.vectors.iter().map(|e| dot(e, v)).collect();
    let complement_group = groups
        .iter()
        .position(|gr| gr.iter().any(|m| matches!(m.1, Member::Complement)));

    let mut out: Vec<Cluster> = Vec::with_capacity(groups.len());
    for (gi, gr) in groups.iter().enumerate() {
        let phi = gr.iter().map(|m| m.0).sum::<f64>() / gr.len() as f64;
        let mut g = vec![0.0; n];
        let mut unit = None;
        if Some(gi) == complement_group {
            // projection onto the complement of every other cluster
            g.copy_from_slice(v);
            for (gj, other) in groups.iter().enumerate() {
                if gj == gi {
                    continue;
                }
                for m in other {
                    if let Member::Explicit(i) = m.1 {
                        axpy(-xi[i], &spec.vectors[i], &mut g);
                    }
                }
            }
            for m in gr {
                if let Member::Explicit(i) = m.1 {
                    unit = Some(spec.vectors[i].clone());
                    break;
                }
            }
            if unit.is_none() {
                unit = Some(complement_unit(spec));
            }
        } else {
            for m in gr {
                if let Member::Explicit(i) = m.1 {
                    axpy(xi[i], &spec.vectors[i], &mut g);
                    if unit.is_none() {
                        unit = Some(spec.vectors[i].clone());
                    }
                }
            }
        }
        let m = norm2(&g);
        out.push(Cluster {
            phi,
            g,
            m,
            unit: unit.expect("cluster has a member"),
        });
    }
    out
}

/// A unit vector orthogonal to every explicit eigenvector.
fn complement_unit(spec: &Spectrum) -> Vec<f64> {
    let n = spec.n;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        for _ in 0..2 {
            for q in &spec.vectors {
                let p = dot(q, &e);
                axpy(-p, q, &mut e);
            }
        }
        let r = norm2(&e);
        if r > 0.5 {
            return e.into_iter().map(|x| x / r).collect();
        }
        if best.as_ref().map_or(true, |b| r > b.0) {
            best = Some((r, e));
        }
    }
    let (r, e) = best.expect("n ≥ 1");
    e.into_iter().map(|x| x / r).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadBallProblem {
    pub a: QuadMatrix,
    pub b: Vec<f64>,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl QuadBallProblem {
    pub fn new(a: QuadMatrix, b: Vec<f64>, center: Vec<f64>, radius: f64) -> Result<Self> {
        let n = a.n();
        if b.len() != n {
            return Err(Error::dims("QuadBallProblem b", n, b.len()));
        }
        if center.len() != n {
            return Err(Error::dims("QuadBallProblem center", n, center.len()));
        }
        if b.iter().chain(&center).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("QuadBallProblem vectors"));
        }
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidBall(format!("radius {radius} must be nonnegative")));
        }
        Ok(Self {
            a,
            b,
            center,
            radius,
        })
    }

    /// `wᵀAw + 2bᵀw`.
    pub fn objective(&self, w: &[f64]) -> f64 {
        self.a.quad(w) + 2.0 * dot(&self.b, w)
    }
}

/// One Lagrange point on the sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Objective value computed in eigen coordinates.
    pub value: f64,
    pub nu: f64,
    pub singular: bool,
    pub point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadBallMax {
    /// `wᵀAw + 2bᵀw` at `argmax`, evaluated directly.
    pub value: f64,
    pub argmax: Vec<f64>,
    pub nu: f64,
    pub singular: bool,
}

/// Every nonsingular and singular Lagrange point of the problem.
pub fn candidates(problem: &QuadBallProblem) -> Result<Vec<Candidate>> {
    if problem.a.is_zero() {
        return Err(Error::ZeroQuadratic);
    }
    let s = problem.radius;
    if !(s > 0.0) {
        return Err(Error::InvalidBall("candidate enumeration needs a positive radius".into()));
    }
    let spec = problem.a.spectrum()?;
    let wt = &problem.center;
    let mut v = problem.a.apply(wt);
    axpy(1.0, &problem.b, &mut v);
    for x in &mut v {
        *x = -*x;
    }
    let cl = clusters(&spec, &v);
    let sec = SecularProblem::new(
        cl.iter().map(|c| c.phi).collect(),
        cl.iter().map(|c| c.m).collect(),
        s,
    )?;
    // clusters are already sorted, so the secular problem keeps their order
    let active: Vec<bool> = sec.xi().iter().map(|&x| x != 0.0).collect();
    let f0 = problem.objective(wt);

    let mut out = Vec::new();
    for nu in sec.roots().roots {
        let mut tau: Vec<f64> = cl
            .iter()
            .zip(&active)
            .map(|(c, &on)| if on { c.m / (c.phi - nu) } else { 0.0 })
            .collect();
        let norm = norm2(&tau);
        if !(norm > 0.0 && norm.is_finite()) {
            continue;
        }
        for t in &mut tau {
            *t *= s / norm;
        }
        out.push(assemble(&cl, &active, &tau, f0, wt, nu, None));
    }

    for (ci, c) in cl.iter().enumerate() {
        if active[ci] {
            continue;
        }
        let nu = c.phi;
        let tau: Vec<f64> = cl
            .iter()
            .zip(&active)
            .map(|(k, &on)| if on { k.m / (k.phi - nu) } else { 0.0 })
            .collect();
        let used: f64 = tau.iter().map(|t| t * t).sum();
        let rem = s * s - used;
        if rem < -1e-12 * s * s {
            continue;
        }
        let rem = rem.max(0.0);
        out.push(assemble(&cl, &active, &tau, f0, wt, nu, Some((ci, rem))));
    }
    Ok(out)
}

fn assemble(
    cl: &[Cluster],
    active: &[bool],
    tau: &[f64],
    f0: f64,
    center: &[f64],
    nu: f64,
    singular: Option<(usize, f64)>,
) -> Candidate {
    let mut value = f0;
    let mut point = center.to_vec();
    for ((c, &on), &t) in cl.iter().zip(active).zip(tau) {
        if !on {
            continue;
        }
        value += -2.0 * c.m * t + c.phi * t * t;
        axpy(t / c.m, &c.g, &mut point);
    }
    if let Some((ci, rem)) = singular {
        value += cl[ci].phi * rem;
        axpy(rem.sqrt(), &cl[ci].unit, &mut point);
    }
    Candidate {
        value,
        nu,
        singular: singular.is_some(),
        point,
    }
}

/// Maximum of `wᵀAw + 2bᵀw` over the ball. A zero radius returns the center.
pub fn max_quad_ball(problem: &QuadBallProblem) -> Result<QuadBallMax> {
    if problem.a.is_zero() {
        return Err(Error::ZeroQuadratic);
    }
    if problem.radius == 0.0 {
        return Ok(QuadBallMax {
            value: problem.objective(&problem.center),
            argmax: problem.center.clone(),
            nu: f64::NAN,
            singular: false,
        });
    }
    let cands = candidates(problem)?;
    let best = cands
        .into_iter()
        .reduce(|a, b| {
            if b.value > a.value || (b.value == a.value && b.nu < a.nu) {
                b
            } else {
                a
            }
        })
        .ok_or_else(|| Error::InvalidBall("no stationary point found on the sphere".into()))?;
    Ok(QuadBallMax {
        value: problem.objective(&best.point),
        argmax: best.point,
        nu: best.nu,
        singular: best.singular,
    })
}

/// `min_{w ∈ 𝒲} min_i wᵢγᵢ² = min_i (w̃ᵢ − S)γᵢ²`; requires `S < min w̃ᵢ`.
pub fn min_weight_over_ball(center: &[f64], gamma: &[f64], radius: f64) -> Result<f64> {
    if center.len() != gamma.len() {
        return Err(Error::dims("min_weight_over_ball", center.len(), gamma.len()));
    }
    if center.is_empty() {
        return Err(Error::InvalidBall("empty weight vector".into()));
    }
    let wmin = center.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(radius >= 0.0) || radius >= wmin {
        return Err(Error::InvalidBall(format!(
            "radius {radius} must be below the smallest center weight {wmin}"
        )));
    }
    Ok(center
        .iter()
        .zip(gamma)
        .map(|(&w, &g)| (w - radius) * g * g)
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(a: QuadMatrix, b: Vec<f64>, c: Vec<f64>, s: f64) -> QuadBallMax {
        max_quad_ball(&QuadBallProblem::new(a, b, c, s).unwrap()).unwrap()
    }

    #[test]
    fn identity_fully_degenerate() {
        let r = solve(QuadMatrix::Dense(DenseMatrix::identity(2)), vec![0.0; 2], vec![0.0; 2], 1.0);
        assert!((r.value - 1.0).abs() < 1e-14);
        assert!(r.singular);
        assert!((norm2(&r.argmax) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_aligns_with_top_eigenvector() {
        let r = solve(QuadMatrix::Diagonal(vec![2.0, 1.0]), vec![0.0; 2], vec![0.0; 2], 1.0);
        assert!((r.value - 2.0).abs() < 1e-14);
        assert!((r.argmax[0].abs() - 1.0).abs() < 1e-12 && r.argmax[1].abs() < 1e-12);
    }

    #[test]
    fn identity_with_linear_term() {
        let r = solve(QuadMatrix::Dense(DenseMatrix::identity(2)), vec![1.0, 0.0], vec![0.0; 2], 1.0);
        assert!((r.value - 3.0).abs() < 1e-12);
        assert!((r.argmax[0] - 1.0).abs() < 1e-9 && r.argmax[1].abs() < 1e-9);
    }

    #[test]
    fn zero_radius_and_zero_matrix() {
        let r = solve(QuadMatrix::Diagonal(vec![1.0]), vec![1.0], vec![2.0], 0.0);
        assert_eq!(r.value, 8.0);
        let p = QuadBallProblem::new(QuadMatrix::Diagonal(vec![0.0]), vec![1.0], vec![0.0], 1.0).unwrap();
        assert!(matches!(max_quad_ball(&p), Err(Error::ZeroQuadratic)));
        let p = QuadBallProblem::new(QuadMatrix::Diagonal(vec![-1.0]), vec![1.0], vec![0.0], 1.0).unwrap();
        assert!(max_quad_ball(&p).is_err());
    }

    #[test]
    fn low_rank_rank_one() {
        // A = ggᵀ with g = (1, 1, 0): top eigenvalue 2 along (1,1)/√2
        let g = DenseMatrix::new(3, 1, vec![1.0, 1.0, 0.0]).unwrap();
        let r = solve(QuadMatrix::LowRank(g), vec![0.0; 3], vec![0.0; 3], 2.0);
        assert!((r.value - 8.0).abs() < 1e-12);
    }

    #[test]
    fn min_weight_examples() {
        assert!((min_weight_over_ball(&[1.0, 1.0], &[1.0, 1.0], 0.3).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(min_weight_over_ball(&[1.0, 1.0], &[3.0, 3.0], 0.0).unwrap(), 9.0);
        assert_eq!(min_weight_over_ball(&[1.0, 2.0], &[1.0, 10.0], 0.5).unwrap(), 0.5);
        assert!(min_weight_over_ball(&[1.0, 2.0], &[1.0, 1.0], 1.0).is_err());
    }
}
