mod common;

use common::testfn_toml;
use pogd_core::double_well_minima;
use pogd_harness::{parse_config, run_testfn, HarnessError, LrSchedule};

const CONSTANT: &str = "[schedule]\nkind = \"constant\"\neta0 = 0.01";

#[test]
fn sgd_on_sphere_decreases_every_step() {
    let config = parse_config(&testfn_toml("sphere", &[1.0, -2.0, 0.5], 200, "name = \"sgd\"", CONSTANT)).unwrap();
    let out = run_testfn(&config).unwrap();
    assert_eq!(out.records.len(), 201);
    assert!(out.records.windows(2).all(|w| w[1].train_loss < w[0].train_loss));
    assert!(out.records.iter().all(|r| r.epoch == 0 && r.effective_lr == Some(0.01)));
}

#[test]
fn corrected_adam_solves_rosenbrock() {
    let opt = "name = \"adam\"\nbias_correction = true";
    let config = parse_config(&testfn_toml("rosenbrock", &[-1.2, 1.0], 20_000, opt, CONSTANT)).unwrap();
    let out = run_testfn(&config).unwrap();
    assert!(out.final_f < 1e-3, "f = {}", out.final_f);
}

#[test]
fn sgd_settles_in_the_shallow_double_well_basin() {
    let (_, shallow) = double_well_minima::<f64>();
    let config = parse_config(&testfn_toml("double-well", &[1.0], 5000, "name = \"sgd\"", CONSTANT)).unwrap();
    let out = run_testfn(&config).unwrap();
    assert!((out.final_x[0] - shallow).abs() < 1e-6, "x = {}", out.final_x[0]);
}

#[test]
fn effective_lr_follows_the_schedule_exactly() {
    let schedule = "[schedule]\nkind = \"inverse-decay\"\neta0 = 0.05\nk = 0.1";
    let config = parse_config(&testfn_toml("rastrigin", &[0.3, 0.2], 50, "name = \"pogd\"", schedule)).unwrap();
    let out = run_testfn(&config).unwrap();
    let expected = LrSchedule::InverseDecay { eta0: 0.05, k: 0.1 };
    for r in &out.records {
        assert_eq!(r.effective_lr, Some(expected.eta(r.step.unwrap() as usize)));
    }
}

#[test]
fn pogd_testfn_runs_are_seed_deterministic() {
    let text = testfn_toml("rastrigin", &[2.0, -1.5], 300, "name = \"pogd\"", CONSTANT);
    let mut config = parse_config(&text).unwrap();
    let a = run_testfn(&config).unwrap();
    let b = run_testfn(&config).unwrap();
    assert_eq!(a.records, b.records);
    config.seed = 2;
    let c = run_testfn(&config).unwrap();
    assert_ne!(a.final_x, c.final_x);
}

#[test]
fn pso_rows_have_no_learning_rate_and_never_get_worse() {
    let config = parse_config(&testfn_toml("sphere", &[0.0; 4], 100, "name = \"pso\"\nparticles = 10", CONSTANT)).unwrap();
    let out = run_testfn(&config).unwrap();
    assert!(out.records.iter().all(|r| r.effective_lr.is_none()));
    assert!(out.records.windows(2).all(|w| w[1].train_loss <= w[0].train_loss));
}

#[test]
fn divergence_aborts_with_the_completed_rows() {
    let schedule = "[schedule]\nkind = \"constant\"\neta0 = 1e6";
    let config = parse_config(&testfn_toml("sphere", &[1.0], 1000, "name = \"sgd\"", schedule)).unwrap();
    match run_testfn(&config) {
        Err(HarnessError::Aborted(abort)) => {
            assert_eq!(abort.completed.len() as u64, abort.step);
            assert!(abort.completed.iter().all(|r| r.train_loss.is_finite()));
        }
        other => panic!("expected abort, got {other:?}"),
    }
}
