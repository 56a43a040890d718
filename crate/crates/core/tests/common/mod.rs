#![allow(dead_code)]

use drss::linalg::DenseMatrix;
use drss::models::Dataset;
use drss::solver::{train, GapTol, PrimalDualSolution, SolverOptions};
use drss::models::ModelSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

/// Two Gaussian clusters with centers `±shift·u` for a random unit `u`;
/// `d` counts the intercept column.
pub fn gaussian_clusters(seed: u64, n: usize, d: usize, shift: f64) -> Dataset {
    let mut r = rng(seed);
    let p = d - 1;
    let mut u: Vec<f64> = (0..p).map(|_| normal(&mut r)).collect();
    let un = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    u.iter_mut().for_each(|v| *v /= un);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        // both classes always present
        let label = if i == 0 {
            1.0
        } else if i == 1 {
            -1.0
        } else if r.random::<f64>() < 0.5 {
            1.0
        } else {
            -1.0
        };
        let mut row: Vec<f64> = (0..p).map(|k| label * shift * u[k] + normal(&mut r)).collect();
        row.push(1.0);
        rows.push(row);
        y.push(label);
    }
    Dataset::new(DenseMatrix::from_rows(&rows).unwrap(), y).unwrap()
}

/// A random problem with the size ranges used throughout the suite.
pub fn random_problem(seed: u64) -> Dataset {
    let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = r.random_range(20..=60);
    let d = r.random_range(3..=10);
    let shift = r.random_range(0.5..2.0);
    gaussian_clusters(seed, n, d, shift)
}

pub fn random_weights(seed: u64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(lo..hi)).collect()
}

pub fn solve(spec: &ModelSpec, data: &Dataset, w: &[f64], tol: GapTol, warm: Option<Vec<f64>>) -> PrimalDualSolution {
    let opts = SolverOptions {
        gap_tol: tol,
        warm_start: warm,
        ..SolverOptions::default()
    };
    train(spec, data, w, &opts).unwrap()
}

/// `count` points of the ball around `center`: the first half on the sphere,
/// the rest in the interior.
pub fn ball_points(seed: u64, center: &[f64], radius: f64, count: usize) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let n = center.len();
    (0..count)
        .map(|k| {
            let u: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
            let un = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            let s = if k < count / 2 {
                radius
            } else {
                radius * r.random::<f64>().powf(1.0 / n as f64)
            };
            center.iter().zip(&u).map(|(c, v)| (c + s * v / un).max(0.0)).collect()
        })
        .collect()
}

/// Random symmetric PSD matrix `MMᵀ` of the given rank.
pub fn random_psd(r: &mut ChaCha8Rng, n: usize, rank: usize, scale: f64) -> DenseMatrix {
    let m: Vec<Vec<f64>> = (0..n).map(|_| (0..rank).map(|_| scale * normal(r)).collect()).collect();
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = (0..rank).map(|k| m[i][k] * m[j][k]).sum();
            a.set(i, j, v);
            a.set(j, i, v);
        }
    }
    a
}

pub fn quad_form(a: &DenseMatrix, b: &[f64], w: &[f64]) -> f64 {
    let aw = a.matvec(w);
    let q: f64 = w.iter().zip(&aw).map(|(x, y)| x * y).sum();
    q + 2.0 * b.iter().zip(w).map(|(x, y)| x * y).sum::<f64>()
}

/// Lower bound on `max wᵀAw + 2bᵀw` over the ball from boundary sampling
/// followed by projected gradient ascent on the sphere from the best samples.
pub fn ball_max_oracle(a: &DenseMatrix, b: &[f64], center: &[f64], radius: f64, samples: usize, seed: u64) -> f64 {
    let n = center.len();
    let mut r = rng(seed);
    let project = |v: &[f64]| -> Vec<f64> {
        let d: Vec<f64> = v.iter().zip(center).map(|(x, c)| x - c).collect();
        let dn = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        if dn == 0.0 {
            let mut e = center.to_vec();
            e[0] += radius;
            return e;
        }
        center.iter().zip(&d).map(|(c, x)| c + radius * x / dn).collect()
    };
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    for _ in 0..samples {
        let u: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
        let p = project(&center.iter().zip(&u).map(|(c, v)| c + v).collect::<Vec<_>>());
        let f = quad_form(a, b, &p);
        best.push((f, p));
        if best.len() > 64 {
            best.sort_by(|x, y| y.0.total_cmp(&x.0));
            best.truncate(8);
        }
    }
    best.sort_by(|x, y| y.0.total_cmp(&x.0));
    best.truncate(8);
    let lip = 2.0 * (0..n).map(|i| (0..n).map(|j| a.get(i, j).abs()).sum::<f64>()).fold(0.0, f64::max) + 1e-12;
    let mut top = f64::NEG_INFINITY;
    for (_, start) in best {
        let mut w = start;
        let mut f = quad_form(a, b, &w);
        let mut step = 1.0 / lip;
        for _ in 0..2000 {
            let aw = a.matvec(&w);
            let g: Vec<f64> = aw.iter().zip(b).map(|(x, y)| 2.0 * (x + y)).collect();
            let cand = project(&w.iter().zip(&g).map(|(x, y)| x + step * y).collect::<Vec<_>>());
            let fc = quad_form(a, b, &cand);
            if fc > f {
                w = cand;
                f = fc;
                step *= 1.5;
            } else {
                step *= 0.5;
                if step < 1e-14 / lip {
                    break;
                }
            }
        }
        top = top.max(f);
    }
    top
}

/// All solutions of `Σ (ξᵢ/(ν − φᵢ))² = S²` located by a dense scan of every
/// pole-free interval followed by bisection on sign changes.
pub fn secular_scan_oracle(phi: &[f64], xi: &[f64], radius: f64) -> Vec<f64> {
    let act: Vec<(f64, f64)> = {
        let mut v: Vec<(f64, f64)> = phi.iter().zip(xi).filter(|p| *p.1 != 0.0).map(|(a, b)| (*a, *b)).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        v
    };
    if act.is_empty() {
        return Vec::new();
    }
    let s2 = radius * radius;
    let h = |nu: f64| -> f64 { act.iter().map(|(p, x)| (x / (nu - p)).powi(2)).sum::<f64>() - s2 };
    let norm: f64 = act.iter().map(|p| p.1 * p.1).sum::<f64>().sqrt();
    let reach = 2.0 * norm / radius + 1.0;
    let mut poles: Vec<f64> = act.iter().map(|p| p.0).collect();
    poles.dedup();
    let mut intervals = vec![(poles[0] - reach, poles[0])];
    for k in 0..poles.len() - 1 {
        intervals.push((poles[k], poles[k + 1]));
    }
    intervals.push((*poles.last().unwrap(), poles.last().unwrap() + reach));
    let mut roots = Vec::new();
    const GRID: usize = 20_000;
    for (lo, hi) in intervals {
        // cosine spacing clusters points near both ends
        let pts: Vec<f64> = (1..GRID)
            .map(|k| {
                let t = k as f64 / GRID as f64;
                lo + (hi - lo) * 0.5 * (1.0 - (std::f64::consts::PI * t).cos())
            })
            .filter(|&v| v > lo && v < hi)
            .collect();
        for win in pts.windows(2) {
            let (mut a, mut b) = (win[0], win[1]);
            let (fa, fb) = (h(a), h(b));
            if fa == 0.0 {
                roots.push(a);
                continue;
            }
            if fa.signum() == fb.signum() {
                continue;
            }
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if h(m).signum() == fa.signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}
