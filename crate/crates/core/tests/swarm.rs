use pogd_core::{pso_init, PsoHyper, Swarm, TestFunction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sphere_run(seed: u64, steps: usize) -> (Swarm<f64>, Vec<f64>) {
    let f = TestFunction::Sphere { dim: 10 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut swarm = pso_init(&f, 10, 30, f.domain(), PsoHyper::default(), &mut rng).unwrap();
    let mut trace = vec![swarm.gbest_f];
    for _ in 0..steps {
        let before: Vec<f64> = swarm.particles.iter().map(|p| p.pbest_f).collect();
        swarm.step(&f, &mut rng).unwrap();
        for (p, b) in swarm.particles.iter().zip(before) {
            assert!(p.pbest_f <= b);
            assert!(p.x.iter().all(|x| (-5.12..=5.12).contains(x)));
        }
        let min_pbest = swarm
            .particles
            .iter()
            .map(|p| p.pbest_f)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(swarm.gbest_f, min_pbest);
        trace.push(swarm.gbest_f);
    }
    (swarm, trace)
}

#[test]
fn sphere_converges_monotonically() {
    for seed in 0..3 {
        let (swarm, trace) = sphere_run(seed, 1000);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(swarm.gbest_f < 1e-3, "seed {seed}: {}", swarm.gbest_f);
    }
}

#[test]
fn seeded_runs_repeat() {
    assert_eq!(sphere_run(5, 50).0, sphere_run(5, 50).0);
}

#[test]
fn scalar_draws_still_improve() {
    let f = TestFunction::Sphere { dim: 10 };
    let hyper = PsoHyper {
        draws: pogd_core::RandMode::PerStepScalar,
        ..PsoHyper::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut swarm = pso_init(&f, 10, 30, f.domain::<f64>(), hyper, &mut rng).unwrap();
    let start = swarm.gbest_f;
    for _ in 0..300 {
        swarm.step(&f, &mut rng).unwrap();
    }
    assert!(swarm.gbest_f < start * 1e-2);
}
