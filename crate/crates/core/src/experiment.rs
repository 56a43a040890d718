//! Screening-rate grids over `(λ, a)` and the retraining oracle that
//! certifies screening decisions empirically.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{Dataset, ModelSpec};
use crate::screening::{drsfs_features, drss_samples, ScreeningReport, WeightBall};
use crate::solver::{lambda_max, train, GapTol, PrimalDualSolution, SolverOptions};

/// Coefficients whose magnitude exceeds this after retraining count as
/// nonzero.
pub const NONZERO_TOL: f64 = 1e-7;
/// `n · samples` above this requires `force`.
pub const ORACLE_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Sample screening for the hinge-loss, L2-regularized model.
    Drsss,
    /// Feature screening for the squared-hinge, L1-regularized model.
    Drsfs,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Drsss => "drsss",
            Task::Drsfs => "drsfs",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "drsss" => Ok(Task::Drsss),
            "drsfs" => Ok(Task::Drsfs),
            other => Err(Error::Config(format!("unknown task '{other}' (drsss or drsfs)"))),
        }
    }

    pub fn spec(self, lambda: f64, n: usize) -> Result<ModelSpec> {
        match self {
            Task::Drsss => ModelSpec::l1l2(lambda, n),
            Task::Drsfs => ModelSpec::l2l1(lambda, n),
        }
    }
}

/// Runs the distributionally robust rule that matches the task.
pub fn screen(task: Task, sol: &PrimalDualSolution, data: &Dataset, ball: &WeightBall) -> Result<ScreeningReport> {
    match task {
        Task::Drsss => drss_samples(sol, data, ball),
        Task::Drsfs => drsfs_features(sol, data, ball),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaAnchor {
    /// The number of samples.
    N,
    /// `λ_max` at unit weights.
    LambdaMax,
    Value(f64),
}

/// `anchor · 10^e` for `e = start, start + step, …` down or up to `stop`, or
/// an explicit list.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaGrid {
    Log {
        anchor: LambdaAnchor,
        start: f64,
        step: f64,
        stop: f64,
    },
    List(Vec<f64>),
}

const MAX_GRID: usize = 10_000;

fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| Error::Config(format!("invalid number '{s}'")))?;
            let b: f64 = b.trim().parse().map_err(|_| Error::Config(format!("invalid number '{s}'")))?;
            a / b
        }
        None => s.parse().map_err(|_| Error::Config(format!("invalid number '{s}'")))?,
    };
    if !v.is_finite() {
        return Err(Error::Config(format!("'{s}' is not a finite number")));
    }
    Ok(v)
}

fn arithmetic(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if step == 0.0 {
        return Err(Error::Config("grid step must be nonzero".into()));
    }
    if (stop - start) * step < 0.0 {
        return Err(Error::Config(format!(
            "grid step {step} does not move from {start} toward {stop}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor();
    if !(count >= 0.0) || count >= MAX_GRID as f64 {
        return Err(Error::Config(format!("grid would have more than {MAX_GRID} points")));
    }
    Ok((0..=count as usize).map(|k| start + k as f64 * step).collect())
}

impl LambdaGrid {
    /// Accepts `n:0:-0.5:-3`, `lmax:0:-1/3:-2`, `<number>:start:step:stop`
    /// and comma-separated explicit values.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() == 4 {
            let anchor = match parts[0].trim().to_ascii_lowercase().as_str() {
                "n" => LambdaAnchor::N,
                "lmax" => LambdaAnchor::LambdaMax,
                other => {
                    let v = parse_number(other)?;
                    if !(v > 0.0) {
                        return Err(Error::Config(format!("anchor {v} must be positive")));
                    }
                    LambdaAnchor::Value(v)
                }
            };
            let (start, step, stop) = (parse_number(parts[1])?, parse_number(parts[2])?, parse_number(parts[3])?);
            arithmetic(start, step, stop)?;
            return Ok(LambdaGrid::Log {
                anchor,
                start,
                step,
                stop,
            });
        }
        if parts.len() != 1 {
            return Err(Error::Config(format!(
                "lambda grid '{text}' must be anchor:start:step:stop or a list"
            )));
        }
        let vals = text
            .split(',')
            .map(parse_number)
            .collect::<Result<Vec<_>>>()?;
        if vals.is_empty() || vals.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Config("lambda values must be positive".into()));
        }
        Ok(LambdaGrid::List(vals))
    }

    /// Concrete λ values for a dataset (anchors use unit weights).
    pub fn resolve(&self, data: &Dataset) -> Result<Vec<f64>> {
        match self {
            LambdaGrid::List(v) => Ok(v.clone()),
            LambdaGrid::Log {
                anchor,
                start,
                step,
                stop,
            } => {
                let base = match anchor {
                    LambdaAnchor::N => data.n() as f64,
                    LambdaAnchor::LambdaMax => lambda_max(data, &vec![1.0; data.n()])?,
                    LambdaAnchor::Value(v) => *v,
                };
                Ok(arithmetic(*start, *step, *stop)?
                    .into_iter()
                    .map(|e| base * 10f64.powf(e))
                    .collect())
            }
        }
    }
}

/// Weight-change parameters `a`; `start:stop:step` or a list.
pub fn parse_a_grid(text: &str, allow_wide: bool) -> Result<Vec<f64>> {
    let text = text.trim();
    let parts: Vec<&str> = text.split(':').collect();
    let vals = match parts.len() {
        3 => arithmetic(parse_number(parts[0])?, parse_number(parts[2])?, parse_number(parts[1])?)?
            .into_iter()
            .map(|a| (a * 1e12).round() / 1e12)
            .collect(),
        1 => text.split(',').map(parse_number).collect::<Result<Vec<_>>>()?,
        _ => return Err(Error::Config(format!("a grid '{text}' must be start:stop:step or a list"))),
    };
    if vals.is_empty() {
        return Err(Error::Config("empty a grid".into()));
    }
    if !allow_wide {
        if let Some(a) = vals.iter().find(|&&a| !(0.9 - 1e-12..=1.1 + 1e-12).contains(&a)) {
            return Err(Error::Config(format!(
                "a = {a} lies outside [0.9, 1.1]; pass --allow-wide to permit it"
            )));
        }
    }
    Ok(vals)
}

pub const DEFAULT_A_GRID: &str = "0.9:1.1:0.005";

/// `S = √n⁺ · |a − 1|`.
pub fn radius_for(n_pos: usize, a: f64) -> f64 {
    (n_pos as f64).sqrt() * (a - 1.0).abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset_name: String,
    pub task: Task,
    pub lambda_grid: LambdaGrid,
    pub a_grid: Vec<f64>,
    /// Relative reference-solution tolerance.
    pub gap_tol: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    SolverFailed,
    BallInvalid,
    ScreeningFailed,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::SolverFailed => "solver_failed",
            RowStatus::BallInvalid => "ball_invalid",
            RowStatus::ScreeningFailed => "screening_failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub dataset: String,
    pub task: Task,
    pub lambda: f64,
    pub a: f64,
    pub s: f64,
    pub screened: usize,
    pub total: usize,
    pub rate: f64,
    pub status: RowStatus,
}

/// Trains once per λ at unit weights and screens every `a`.
pub fn run_grid(cfg: &ExperimentConfig, data: &Dataset) -> Result<Vec<GridRow>> {
    let n = data.n();
    let lambdas = cfg.lambda_grid.resolve(data)?;
    let total = match cfg.task {
        Task::Drsss => n,
        Task::Drsfs => data.d() - 1,
    };
    let center = vec![1.0; n];
    let opts = SolverOptions {
        gap_tol: GapTol::Relative(cfg.gap_tol),
        seed: cfg.seed,
        ..SolverOptions::default()
    };
    let mut rows = Vec::with_capacity(lambdas.len() * cfg.a_grid.len());
    for &lam in &lambdas {
        let spec = cfg.task.spec(lam, n)?;
        let sol = train(&spec, data, &center, &opts);
        let cells: Vec<GridRow> = cfg
            .a_grid
            .par_iter()
            .map(|&a| {
                let s = radius_for(data.n_pos(), a);
                let mut row = GridRow {
                    dataset: cfg.dataset_name.clone(),
                    task: cfg.task,
                    lambda: lam,
                    a,
                    s,
                    screened: 0,
                    total,
                    rate: 0.0,
                    status: RowStatus::Ok,
                };
                let sol = match &sol {
                    Ok(s) => s,
                    Err(_) => {
                        row.status = RowStatus::SolverFailed;
                        return row;
                    }
                };
                let ball = match WeightBall::new(center.clone(), s) {
                    Ok(b) => b,
                    Err(_) => {
                        row.status = RowStatus::BallInvalid;
                        return row;
                    }
                };
                match screen(cfg.task, sol, data, &ball) {
                    Ok(rep) => {
                        row.screened = rep.count();
                        row.rate = rep.rate();
                    }
                    Err(Error::InvalidBall(_)) => row.status = RowStatus::BallInvalid,
                    Err(_) => row.status = RowStatus::ScreeningFailed,
                }
                row
            })
            .collect();
        rows.extend(cells);
    }
    Ok(rows)
}

/// `%.10g`-style formatting.
pub fn format_g10(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.9e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..10).contains(&exp) {
        trim(format!("{:.*}", (9 - exp).max(0) as usize, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mant.to_string()), sign, exp.abs())
    }
}

pub const CSV_HEADER: &str = "dataset,task,lambda,a,S,screened,total,rate,status";

pub fn write_rows<W: Write>(rows: &[GridRow], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.dataset,
            r.task.name(),
            format_g10(r.lambda),
            format_g10(r.a),
            format_g10(r.s),
            r.screened,
            r.total,
            format_g10(r.rate),
            r.status.as_str()
        )?;
    }
    Ok(())
}

/// `count` weight vectors from the ball: the first half on the sphere, the
/// rest uniform in the interior. Coordinates are clamped at zero against
/// roundoff.
pub fn sample_weights(ball: &WeightBall, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ball.center().len();
    let boundary = count.div_ceil(2);
    (0..count)
        .map(|k| {
            let mut u: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = if k < boundary {
                ball.radius()
            } else {
                ball.radius() * rng.random::<f64>().powf(1.0 / n as f64)
            };
            for (v, c) in u.iter_mut().zip(ball.center()) {
                *v = (c + scale * *v / norm).max(0.0);
            }
            u
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskCheck {
    pub weights_checked: usize,
    /// `(weight sample, index)` pairs with a screened index that is nonzero.
    pub violations: Vec<(usize, usize)>,
    /// Largest `|α*ᵢ|` or `|β*ⱼ|` over screened indices and samples.
    pub max_abs_screened: f64,
}

/// Retrains at every weight vector and checks that each screened index is
/// zero in the new optimum.
pub fn check_mask(
    task: Task,
    data: &Dataset,
    lambda: f64,
    mask: &[bool],
    weights: &[Vec<f64>],
    retrain_gap_tol: f64,
    warm: Option<&PrimalDualSolution>,
) -> Result<MaskCheck> {
    let spec = task.spec(lambda, data.n())?;
    let results: Vec<Result<Vec<(usize, f64)>>> = weights
        .par_iter()
        .enumerate()
        .map(|(k, w)| {
            let opts = SolverOptions {
                gap_tol: GapTol::Absolute(retrain_gap_tol),
                seed: k as u64,
                warm_start: warm.map(|s| match task {
                    Task::Drsss => s.alpha.clone(),
                    Task::Drsfs => s.beta.clone(),
                }),
                ..SolverOptions::default()
            };
            let sol = train(&spec, data, w, &opts)?;
            let coef = match task {
                Task::Drsss => &sol.alpha,
                Task::Drsfs => &sol.beta,
            };
            Ok(mask
                .iter()
                .enumerate()
                .filter(|(_, &m)| m)
                .map(|(i, _)| (i, coef[i].abs()))
                .collect())
        })
        .collect();
    let mut out = MaskCheck {
        weights_checked: weights.len(),
        violations: Vec::new(),
        max_abs_screened: 0.0,
    };
    for (k, r) in results.into_iter().enumerate() {
        for (i, v) in r? {
            out.max_abs_screened = out.max_abs_screened.max(v);
            if v > NONZERO_TOL {
                out.violations.push((k, i));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub task: Task,
    pub lambda: f64,
    pub radius: f64,
    pub samples: usize,
    pub retrain_gap_tol: f64,
    /// Relative tolerance for the reference solution.
    pub reference_gap_tol: f64,
    pub seed: u64,
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub report: ScreeningReport,
    pub check: MaskCheck,
}

impl OracleReport {
    pub fn violations(&self) -> usize {
        self.check.violations.len()
    }
}

/// Trains at unit weights, screens over the ball and certifies the result by
/// retraining at sampled weights.
pub fn validate_oracle(cfg: &OracleConfig, data: &Dataset) -> Result<OracleReport> {
    let n = data.n();
    if !cfg.force && n.saturating_mul(cfg.samples) > ORACLE_BUDGET {
        return Err(Error::Config(format!(
            "n · samples = {} exceeds {ORACLE_BUDGET}; pass --force to run anyway",
            n.saturating_mul(cfg.samples)
        )));
    }
    let center = vec![1.0; n];
    let ball = WeightBall::new(center.clone(), cfg.radius)?;
    let spec = cfg.task.spec(cfg.lambda, n)?;
    let opts = SolverOptions {
        gap_tol: GapTol::Relative(cfg.reference_gap_tol),
        seed: cfg.seed,
        ..SolverOptions::default()
    };
    let sol = train(&spec, data, &center, &opts)?;
    let report = screen(cfg.task, &sol, data, &ball)?;
    let weights = sample_weights(&ball, cfg.samples, cfg.seed);
    let check = check_mask(
        cfg.task,
        data,
        cfg.lambda,
        &report.screened,
        &weights,
        cfg.retrain_gap_tol,
        Some(&sol),
    )?;
    Ok(OracleReport { report, check })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_grid_forms() {
        let g = LambdaGrid::parse("n:0:-0.5:-3").unwrap();
        assert!(matches!(g, LambdaGrid::Log { anchor: LambdaAnchor::N, .. }));
        let g = LambdaGrid::parse("lmax:0:-1/3:-2").unwrap();
        if let LambdaGrid::Log { step, .. } = g {
            assert!((step + 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(LambdaGrid::parse("65.8,34.7").unwrap(), LambdaGrid::List(vec![65.8, 34.7]));
        assert!(LambdaGrid::parse("n:0:0:-3").is_err());
        assert!(LambdaGrid::parse("n:0:0.5:-3").is_err());
        assert!(LambdaGrid::parse("-1").is_err());
        assert!(LambdaGrid::parse("q:0:-1:-2").is_err());
        assert!(LambdaGrid::parse("1:2").is_err());
    }

    #[test]
    fn arithmetic_endpoints() {
        let e = arithmetic(0.0, -0.5, -3.0).unwrap();
        assert_eq!(e.len(), 7);
        assert_eq!(*e.last().unwrap(), -3.0);
        let e = arithmetic(0.0, -1.0 / 3.0, -2.0).unwrap();
        assert_eq!(e.len(), 7);
    }

    #[test]
    fn a_grid_default() {
        let a = parse_a_grid(DEFAULT_A_GRID, false).unwrap();
        assert_eq!(a.len(), 41);
        assert_eq!(a[0], 0.9);
        assert_eq!(a[20], 1.0);
        assert_eq!(a[40], 1.1);
        assert!(parse_a_grid("0.5,1.0", false).is_err());
        assert_eq!(parse_a_grid("0.5,1.0", true).unwrap(), vec![0.5, 1.0]);
    }

    #[test]
    fn g10_formatting() {
        assert_eq!(format_g10(65.8), "65.8");
        assert_eq!(format_g10(0.31), "0.31");
        assert_eq!(format_g10(1.0 / 3.0), "0.3333333333");
        assert_eq!(format_g10(208.0), "208");
        assert_eq!(format_g10(1e-7), "1e-07");
        assert_eq!(format_g10(123456789012.0), "1.23456789e+11");
        assert_eq!(format_g10(-2.5), "-2.5");
        assert_eq!(format_g10(0.0), "0");
    }

    #[test]
    fn weight_samples_stay_in_ball() {
        let ball = WeightBall::new(vec![1.0; 5], 0.5).unwrap();
        let ws = sample_weights(&ball, 10, 3);
        for (k, w) in ws.iter().enumerate() {
            let d: f64 = w.iter().map(|v| (v - 1.0) * (v - 1.0)).sum::<f64>().sqrt();
            assert!(d <= 0.5 + 1e-12);
            if k < 5 {
                assert!((d - 0.5).abs() < 1e-12);
            }
        }
        assert_eq!(ws, sample_weights(&ball, 10, 3));
    }
}
