mod common;

use fixsim::engine::{Arithmetic, FxConfig, MacPosition};
use fixsim::fxcore::{AdjustMethod, FxFormat, RoundingMethod};
use fixsim::harness::{sweep, write_csv, Experiment, HarnessError, SweepGrid};
use fixsim::model_io::{load_manifest, Dataset};

/// 64 synthetic 28x28 digits: a bright square whose position encodes nothing
/// in particular; labels cycle through 0..9.
fn synthetic() -> Dataset {
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for i in 0..64usize {
        for y in 0..28 {
            for x in 0..28 {
                let on = (y / 7 + x / 7 + i) % 3 == 0;
                pixels.push(if on { 200 + (i % 50) as u8 } else { (i * 7 % 30) as u8 });
            }
        }
        labels.push((i % 10) as u8);
    }
    Dataset::new([28, 28, 1], pixels, labels).unwrap()
}

fn experiment() -> Experiment {
    Experiment::new(load_manifest(common::lenet_manifest()).unwrap(), synthetic(), None).unwrap()
}

fn small_grid() -> SweepGrid {
    SweepGrid {
        formats: vec![FxFormat::new(6, 3).unwrap(), FxFormat::new(4, 2).unwrap()],
        roundings: vec![RoundingMethod::Stochastic, RoundingMethod::Rom],
        adjusts: vec![AdjustMethod::Nbc, AdjustMethod::Norm { shift: 0 }],
        positions: vec![MacPosition::Rmac, MacPosition::Rmult],
        seed: 11,
        limit: Some(16),
        ..SweepGrid::default()
    }
}

#[test]
fn limit_errors() {
    let e = experiment();
    assert!(matches!(e.run_eval(&Arithmetic::Real, Some(0)), Err(HarnessError::ZeroLimit)));
    assert!(matches!(e.run_eval(&Arithmetic::Real, Some(65)), Err(HarnessError::LimitTooLarge { .. })));
    let r = e.run_eval(&Arithmetic::Real, Some(64)).unwrap();
    assert!((0.0..=1.0).contains(&r.accuracy));
    assert_eq!(r.images, 64);
}

#[test]
fn two_cell_grid() {
    let grid = SweepGrid {
        formats: vec![FxFormat::new(8, 4).unwrap(), FxFormat::new(6, 3).unwrap()],
        roundings: vec![RoundingMethod::Truncate],
        adjusts: vec![AdjustMethod::Bc],
        positions: vec![MacPosition::Rmac],
        limit: Some(8),
        ..SweepGrid::default()
    };
    let cells = sweep(&experiment(), &grid, |_, _, _| {}).unwrap();
    assert_eq!(cells.len(), 2);
    let mut buf = Vec::new();
    write_csv(&cells, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
}

#[test]
fn sweep_csv_is_reproducible_across_worker_counts() {
    let grid = small_grid();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let cells = sweep(&experiment(), &grid, |_, _, _| {}).unwrap();
            let mut buf = Vec::new();
            write_csv(&cells, &mut buf).unwrap();
            buf
        })
    };
    let a = run(1);
    assert_eq!(a, run(4));
    assert_eq!(a, run(1));
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 17);
}

#[test]
fn stochastic_results_depend_on_seed_only() {
    let e = experiment();
    let cfg = FxConfig::new(FxFormat::new(6, 3).unwrap(), RoundingMethod::Stochastic, AdjustMethod::Bc, MacPosition::Rmult);
    let a = e.run_eval(&Arithmetic::Fixed(cfg.with_seed(5)), Some(32)).unwrap();
    let b = e.run_eval(&Arithmetic::Fixed(cfg.with_seed(5)), Some(32)).unwrap();
    assert_eq!(a, b);
}
