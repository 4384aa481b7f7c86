use pogd_core::{
    adagrad_step, adam_step, momentum_step, pogd_init, pogd_step, sgd_step, AdagradHyper,
    AdagradState, AdamHyper, AdamState, MomentumHyper, MomentumState, Objective, PogdHyper,
    RandMode, SgdHyper, TestFunction,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grads(dim: usize, steps: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1e3f64..1e3, dim), steps)
}

fn hyper() -> impl Strategy<Value = PogdHyper<f64>> {
    (1e-4f64..1.0, 0.0f64..=1.0, 0.0f64..4.0, 0.0f64..4.0, any::<bool>()).prop_map(
        |(eta, omega, c1, c2, per_element)| PogdHyper {
            eta,
            omega,
            c1,
            c2,
            rand_mode: if per_element {
                RandMode::PerElement
            } else {
                RandMode::PerStepScalar
            },
            ..PogdHyper::default()
        },
    )
}

proptest! {
    #[test]
    fn pogd_state_identities(gs in grads(4, 12), h in hyper(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = pogd_init::<f64>(4).unwrap();
        let mut theta = vec![0.0; 4];
        for g in &gs {
            let (next, t) = pogd_step(&state, &theta, g, &h, &mut rng).unwrap();
            for i in 0..4 {
                prop_assert_eq!(next.m[i], -next.v[i]);
                prop_assert_eq!(next.pb[i], g[i]);
                prop_assert!(next.a[i] >= state.a[i]);
                prop_assert!(next.a[i] >= 0.0);
                prop_assert!(next.gb[i].abs() < 1.0);
            }
            prop_assert_eq!(next.t, state.t + 1);
            state = next;
            theta = t.into_inner();
        }
    }

    #[test]
    fn pogd_is_deterministic(gs in grads(3, 8), h in hyper(), seed in any::<u64>()) {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut state = pogd_init::<f64>(3).unwrap();
            let mut theta = vec![0.1, 0.2, 0.3];
            for g in &gs {
                let (s, t) = pogd_step(&state, &theta, g, &h, &mut rng).unwrap();
                state = s;
                theta = t.into_inner();
            }
            (state, theta)
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn pogd_without_swarm_terms_is_sgd(gs in grads(5, 10), eta in 1e-4f64..1.0, seed in any::<u64>()) {
        let h = PogdHyper { eta, omega: 0.0, c1: 0.0, c2: 0.0, ..PogdHyper::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = pogd_init::<f64>(5).unwrap();
        let mut theta = vec![0.5; 5];
        let mut reference = theta.clone();
        for g in &gs {
            let (s, t) = pogd_step(&state, &theta, g, &h, &mut rng).unwrap();
            state = s;
            theta = t.into_inner();
            reference = sgd_step(&reference, g, &SgdHyper { eta }).unwrap().into_inner();
            prop_assert_eq!(&theta, &reference);
        }
    }

    #[test]
    fn zero_state_zero_gradient_is_stationary(theta in prop::collection::vec(-10.0f64..10.0, 1..6), h in hyper(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = pogd_init::<f64>(theta.len()).unwrap();
        let zero = vec![0.0; theta.len()];
        let (next, t) = pogd_step(&state, &theta, &zero, &h, &mut rng).unwrap();
        prop_assert_eq!(t.as_slice(), theta.as_slice());
        prop_assert!(next.v.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn accumulators_stay_nonnegative(gs in grads(3, 10)) {
        let mut ada = AdagradState::<f64>::new(3).unwrap();
        let mut adam = AdamState::<f64>::new(3).unwrap();
        let mut theta = vec![0.0; 3];
        for g in &gs {
            let (next, _) = adagrad_step(&ada, &theta, g, &AdagradHyper::with_eta(0.01)).unwrap();
            for i in 0..3 {
                prop_assert!(next.g_sq[i] >= ada.g_sq[i] && next.g_sq[i] >= 0.0);
            }
            ada = next;
            let (next, t) = adam_step(&adam, &theta, g, &AdamHyper::with_eta(0.01)).unwrap();
            prop_assert!(next.v.iter().all(|v| *v >= 0.0));
            adam = next;
            theta = t.into_inner();
        }
    }

    #[test]
    fn momentum_without_memory_is_sgd(gs in grads(3, 10), eta in 1e-4f64..1.0) {
        let h = MomentumHyper { eta, p: 0.0 };
        let mut state = MomentumState::new(3).unwrap();
        let mut theta = vec![1.0, -1.0, 0.5];
        let mut reference = theta.clone();
        for g in &gs {
            let (s, t) = momentum_step(&state, &theta, g, &h).unwrap();
            state = s;
            theta = t.into_inner();
            reference = sgd_step(&reference, g, &SgdHyper { eta }).unwrap().into_inner();
            prop_assert_eq!(&theta, &reference);
        }
    }

    #[test]
    fn memoryless_adam_is_normalized_sign(g in prop::collection::vec(-1e3f64..1e3, 4), eta in 1e-4f64..1.0) {
        let h = AdamHyper { eta, beta1: 0.0, beta2: 0.0, epsilon: 1e-8, bias_correction: false };
        let state = AdamState::new(4).unwrap();
        let (_, t) = adam_step(&state, &[0.0; 4], &g, &h).unwrap();
        for i in 0..4 {
            prop_assert_eq!(t[i], 0.0 - eta * g[i] / (g[i].abs() + 1e-8));
        }
    }

    #[test]
    fn sgd_step_scales_with_eta(g in prop::collection::vec(-1e3f64..1e3, 4), eta in 1e-4f64..1.0) {
        let one = sgd_step(&[0.0; 4], &g, &SgdHyper { eta }).unwrap();
        let two = sgd_step(&[0.0; 4], &g, &SgdHyper { eta: 2.0 * eta }).unwrap();
        for i in 0..4 {
            prop_assert_eq!(two[i], 2.0 * one[i]);
        }
    }
}

#[test]
fn baselines_are_rng_free() {
    let g = [0.3, -0.7];
    let a = adam_step(&AdamState::new(2).unwrap(), &[0.0; 2], &g, &AdamHyper::with_eta(0.01)).unwrap();
    let b = adam_step(&AdamState::new(2).unwrap(), &[0.0; 2], &g, &AdamHyper::with_eta(0.01)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sgd_descends_into_shallow_well() {
    let f = TestFunction::DoubleWell;
    let (deep, shallow) = pogd_core::double_well_minima::<f64>();
    let mut x = vec![1.0];
    for _ in 0..5000 {
        let g = f.gradient(&x).unwrap();
        x = sgd_step(&x, &g, &SgdHyper { eta: 0.01 }).unwrap().into_inner();
    }
    assert!((x[0] - shallow).abs() < 1e-9);
    assert!((x[0] - deep).abs() > 2.0);
}
