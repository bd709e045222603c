use dome_core::dynamics::{evolve_closed, DecoherenceConfig, DensityMatrix, Propagator, QuantumState};
use dome_core::metrics::{bell_fidelity, bell_target, reduce_to_pair, ReducedState};
use dome_core::models::{dome_hamiltonian, DomeParams};
use dome_core::noise::{
    perturb, pooled_standard_error, sweep_coherent, sweep_sigma, DisorderConfig, FidelityMetric, ModelSpec, NoiseTarget,
};
use dome_core::spectrum::HALF_PERIOD;
use dome_core::{C64, PERIOD};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn block(n: usize, m: u32) -> DMatrix<f64> {
    dome_hamiltonian(&DomeParams::new(n, m, 1.0).unwrap()).unwrap().to_matrix()
}

fn random_state(n: usize, raw: &[f64]) -> Option<QuantumState> {
    let amps = DVector::from_fn(n + 1, |i, _| C64::new(raw[2 * i], raw[2 * i + 1]));
    let norm = amps.norm();
    (norm > 1e-3).then(|| QuantumState::new(amps / C64::new(norm, 0.0)).unwrap())
}

#[test]
fn pst_identity_over_the_tested_grid() {
    for n in 2..=10usize {
        for m in [0u32, 2, 4, 6, 10] {
            let prop = Propagator::new(&block(n, m)).unwrap();
            for start in 0..n {
                let amp = prop.amplitude(start, n - 1 - start, HALF_PERIOD).norm();
                assert!((amp - 1.0).abs() < 1e-8, "N={n} m={m} start={start}: {amp}");
            }
        }
    }
}

#[test]
fn sigma_monotonicity_is_statistical() {
    let models = [ModelSpec::Chain { n: 5, m: 2 }, ModelSpec::Chain { n: 5, m: 102 }];
    let sigmas = [0.0, 0.25, 0.5, 1.0, 2.0];
    for target in [NoiseTarget::MiddleFrequencies, NoiseTarget::EdgeFrequencies, NoiseTarget::Couplings] {
        let res = sweep_sigma(&models, target, &sigmas, 60, 7, FidelityMetric::BellAtQuarterT, 1.0).unwrap();
        for pts in res.points.chunks(sigmas.len()) {
            assert!((pts[0].mean - 1.0).abs() < 1e-9);
            for w in pts.windows(2) {
                let slack = 2.0 * pooled_standard_error(&w[0], &w[1]);
                assert!(w[1].mean <= w[0].mean + slack, "{target:?}: {} then {}", w[0].mean, w[1].mean);
            }
        }
    }
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let cfg = DisorderConfig::new(NoiseTarget::All, 0.8, 24, 99).unwrap();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            sweep_coherent(
                ModelSpec::Chain { n: 5, m: 6 },
                &cfg,
                FidelityMetric::QptAtHalfT,
                DecoherenceConfig::closed(),
                1.0,
            )
            .unwrap()
        })
    };
    let serial = run(1);
    for threads in [2, 5] {
        let par = run(threads);
        assert_eq!(serial.mean.to_bits(), par.mean.to_bits());
        assert_eq!(serial.std.to_bits(), par.std.to_bits());
    }
}

#[test]
fn draws_do_not_depend_on_evaluation_order() {
    let net = ModelSpec::Chain { n: 6, m: 2 }.network(1.0).unwrap();
    let cfg = DisorderConfig::new(NoiseTarget::All, 1.0, 10, 3).unwrap();
    let forward: Vec<_> = (0..10).map(|i| perturb(&net, &cfg, i).unwrap()).collect();
    let backward: Vec<_> = (0..10).rev().map(|i| perturb(&net, &cfg, i).unwrap()).collect();
    for (a, b) in forward.iter().zip(backward.iter().rev()) {
        assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_evolution_is_unitary(
        n in 2usize..=9,
        m in 0u32..=12,
        raw in prop::collection::vec(-1.0f64..1.0, 20),
        t in 0.0f64..3.0 * PERIOD,
    ) {
        let psi0 = random_state(n, &raw);
        prop_assume!(psi0.is_some());
        let psi0 = psi0.unwrap();
        let traj = evolve_closed(&block(n, m), &psi0, &[0.0, t]).unwrap();
        let rho = traj.density(1);
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-10);
        let prop = Propagator::new(&block(n, m)).unwrap();
        prop_assert!((prop.evolve(&psi0, t).unwrap().norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bell_fidelity_is_bounded_and_linear(
        n in 2usize..=7,
        a in prop::collection::vec(-1.0f64..1.0, 16),
        b in prop::collection::vec(-1.0f64..1.0, 16),
        w in 0.0f64..=1.0,
    ) {
        let (pa, pb) = (random_state(n, &a), random_state(n, &b));
        prop_assume!(pa.is_some() && pb.is_some());
        let ra = DensityMatrix::from_pure(&pa.unwrap());
        let rb = DensityMatrix::from_pure(&pb.unwrap());
        let fa = bell_fidelity(&reduce_to_pair(&ra, 0, n - 1).unwrap()).unwrap();
        let fb = bell_fidelity(&reduce_to_pair(&rb, 0, n - 1).unwrap()).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&fa));
        let mix = DensityMatrix::new(ra.matrix() * C64::new(w, 0.0) + rb.matrix() * C64::new(1.0 - w, 0.0)).unwrap();
        let fm = bell_fidelity(&reduce_to_pair(&mix, 0, n - 1).unwrap()).unwrap();
        prop_assert!((fm - (w * fa + (1.0 - w) * fb)).abs() < 1e-12);
    }

    #[test]
    fn target_projector_has_unit_fidelity(scale in 0.1f64..1.0) {
        let t = bell_target();
        let proj = &t * t.adjoint();
        let noise = DMatrix::<C64>::identity(4, 4) * C64::new(0.25, 0.0);
        let rho = proj * C64::new(scale, 0.0) + noise * C64::new(1.0 - scale, 0.0);
        let f = ReducedState::new(vec![0, 1], rho).unwrap().fidelity(&t).unwrap();
        prop_assert!((f - (scale + (1.0 - scale) / 4.0)).abs() < 1e-12);
    }
}
