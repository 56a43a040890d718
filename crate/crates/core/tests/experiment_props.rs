mod common;

use common::*;
use drss::experiment::{
    check_mask, parse_a_grid, radius_for, run_grid, sample_weights, validate_oracle, write_rows, ExperimentConfig,
    LambdaGrid, OracleConfig, RowStatus, Task, ORACLE_BUDGET,
};
use drss::screening::{wcss, ScreeningMode, WeightBall};
use drss::solver::{train, GapTol, SolverOptions};
use drss::Error;
use proptest::prelude::*;

fn config(task: Task, grid: &str, a: &str, allow_wide: bool) -> ExperimentConfig {
    ExperimentConfig {
        dataset_name: "toy".into(),
        task,
        lambda_grid: LambdaGrid::parse(grid).unwrap(),
        a_grid: parse_a_grid(a, allow_wide).unwrap(),
        gap_tol: 1e-10,
        seed: 0,
    }
}

fn csv_of(cfg: &ExperimentConfig, data: &drss::models::Dataset) -> Vec<u8> {
    let rows = run_grid(cfg, data).unwrap();
    let mut out = Vec::new();
    write_rows(&rows, &mut out).unwrap();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn sampled_weights_stay_in_the_ball(seed in any::<u64>(), n in 1usize..30, radius in 0.0f64..0.99, count in 1usize..20) {
        let center = random_weights(seed, n, 1.0, 2.0);
        let ball = WeightBall::new(center.clone(), radius).unwrap();
        let ws = sample_weights(&ball, count, seed);
        prop_assert_eq!(ws.len(), count);
        for (k, w) in ws.iter().enumerate() {
            let dist = w.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            prop_assert!(dist <= radius * (1.0 + 1e-12) + 1e-15);
            prop_assert!(w.iter().all(|&v| v >= 0.0));
            // the center is at least 1 away from the boundary of the orthant
            if k < count.div_ceil(2) {
                prop_assert!((dist - radius).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn csv_output_is_reproducible() {
    let data = gaussian_clusters(5, 40, 6, 1.0);
    for (task, grid) in [(Task::Drsss, "n:0:-0.5:-1.5"), (Task::Drsfs, "lmax:0:-1/3:-1")] {
        let cfg = config(task, grid, "0.95:1.05:0.01", false);
        let a = csv_of(&cfg, &data);
        let b = csv_of(&cfg, &data);
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("dataset,task,lambda,a,S,screened,total,rate,status"));
        assert_eq!(lines.count(), cfg.a_grid.len() * cfg.lambda_grid.resolve(&data).unwrap().len());
    }
}

#[test]
fn unit_a_matches_pointwise_screening() {
    let data = gaussian_clusters(6, 50, 5, 1.5);
    let n = data.n();
    for (task, grid, mode) in [
        (Task::Drsss, "n:-1:-0.5:-2", ScreeningMode::Sample),
        (Task::Drsfs, "lmax:-0.2:-0.2:-0.6", ScreeningMode::Feature),
    ] {
        let cfg = config(task, grid, "1.0", false);
        let rows = run_grid(&cfg, &data).unwrap();
        for row in rows {
            assert_eq!(row.s, 0.0);
            assert_eq!(row.status, RowStatus::Ok);
            let opts = SolverOptions::with_gap_tol(GapTol::Relative(1e-10));
            let sol = train(&task.spec(row.lambda, n).unwrap(), &data, &vec![1.0; n], &opts).unwrap();
            let r = wcss(&sol, &data, &vec![1.0; n], mode).unwrap();
            assert_eq!(row.screened, r.count());
            assert_eq!(row.rate, r.rate());
        }
    }
}

#[test]
fn wide_a_marks_invalid_balls() {
    let data = gaussian_clusters(8, 60, 4, 1.0);
    assert!(data.n_pos() >= 16);
    assert!(parse_a_grid("0.5,1.0", false).is_err());
    let cfg = config(Task::Drsss, "n:-1:-1:-1", "0.5,1.0", true);
    let rows = run_grid(&cfg, &data).unwrap();
    assert_eq!(rows[0].s, radius_for(data.n_pos(), 0.5));
    assert_eq!(rows[0].status, RowStatus::BallInvalid);
    assert_eq!(rows[1].status, RowStatus::Ok);
}

#[test]
fn corrupted_mask_is_caught() {
    let data = gaussian_clusters(9, 40, 5, 0.8);
    let n = data.n();
    let lam = 1.0;
    let sol = train(&Task::Drsss.spec(lam, n).unwrap(), &data, &vec![1.0; n], &SolverOptions::default()).unwrap();
    let sv = sol.alpha.iter().position(|&a| a > 1e-3).expect("a support vector");
    let mut mask = vec![false; n];
    mask[sv] = true;
    let ball = WeightBall::new(vec![1.0; n], 0.05).unwrap();
    let weights = sample_weights(&ball, 6, 1);
    let check = check_mask(Task::Drsss, &data, lam, &mask, &weights, 1e-11, Some(&sol)).unwrap();
    assert!(!check.violations.is_empty());
    assert!(check.max_abs_screened > 1e-3);
}

#[test]
fn zero_radius_oracle_is_clean() {
    let data = gaussian_clusters(10, 40, 5, 1.2);
    for (task, lam) in [(Task::Drsss, 4.0), (Task::Drsfs, 5.0)] {
        let cfg = OracleConfig {
            task,
            lambda: lam,
            radius: 0.0,
            samples: 4,
            retrain_gap_tol: 1e-11,
            reference_gap_tol: 1e-10,
            seed: 2,
            force: false,
        };
        let r = validate_oracle(&cfg, &data).unwrap();
        assert_eq!(r.check.weights_checked, 4);
        assert_eq!(r.violations(), 0);
    }
}

#[test]
fn oracle_budget_requires_force() {
    let data = gaussian_clusters(11, 20, 3, 1.0);
    let samples = ORACLE_BUDGET / 20 + 1;
    let mut cfg = OracleConfig {
        task: Task::Drsss,
        lambda: 1.0,
        radius: 0.1,
        samples,
        retrain_gap_tol: 1e-11,
        reference_gap_tol: 1e-10,
        seed: 0,
        force: false,
    };
    assert!(matches!(validate_oracle(&cfg, &data), Err(Error::Config(_))));
    cfg.samples = ORACLE_BUDGET / 20;
    cfg.radius = -1.0;
    // at the budget the check passes and the invalid radius is what fails
    assert!(matches!(validate_oracle(&cfg, &data), Err(Error::InvalidBall(_))));
    cfg.samples = ORACLE_BUDGET;
    cfg.force = true;
    assert!(matches!(validate_oracle(&cfg, &data), Err(Error::InvalidBall(_))));
}

#[test]
fn task_names() {
    assert_eq!(Task::parse("drsss").unwrap(), Task::Drsss);
    assert_eq!(Task::parse("drsfs").unwrap(), Task::Drsfs);
    assert!(Task::parse("svm").is_err());
    assert_eq!(Task::Drsfs.name(), "drsfs");
}
