mod common;

use common::*;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use proptest::prelude::*;
use qrc_core::data::coefficient_to_angle;
use qrc_core::dynamics::{evolve, floquet_operator, matrix_power, propagator, DriveParameters, QuantumState};
use qrc_core::network::{degree_distribution, effective_hamiltonian, percolation_network, DEFAULT_WEIGHT_FLOOR};
use qrc_core::onn::{forward_batch, OnnModel};
use qrc_core::readout::{sample_frequencies, standardize};

fn drive() -> impl Strategy<Value = DriveParameters> {
    (1usize..=6, 0.0f64..0.99, 0.0f64..2.0, 0.1f64..3.0, 0usize..8).prop_map(|(n, eps, j0t, alpha, periods)| {
        DriveParameters {
            j0t,
            alpha,
            ..DriveParameters::new(n, eps).with_periods(periods)
        }
    })
}

fn random_state(n: usize, seed: &[f64]) -> QuantumState {
    let dim = 1 << n;
    let amps = Array1::from_shape_fn(dim, |i| {
        Complex64::new(seed[i % seed.len()] + i as f64 * 0.01, seed[(i + 1) % seed.len()] - 0.3)
    });
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    QuantumState::new(amps.mapv(|z| z / norm)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn floquet_and_propagator_are_unitary(params in drive()) {
        for u in [floquet_operator(&params).unwrap(), propagator(&params).unwrap()] {
            let gram = adjoint_ref(u.matrix()).dot(u.matrix());
            prop_assert!(max_abs(&gram, &eye(u.dim())) < 1e-10);
        }
    }

    #[test]
    fn propagator_is_the_period_power(params in drive()) {
        let f = floquet_operator(&params).unwrap();
        let mut expected = eye(f.dim());
        for _ in 0..params.periods {
            expected = f.matrix().dot(&expected);
        }
        prop_assert!(max_abs(propagator(&params).unwrap().matrix(), &expected) < 1e-12);
        prop_assert!(max_abs(matrix_power(&f, params.periods).matrix(), &expected) < 1e-12);
    }

    #[test]
    fn evolution_preserves_norm(params in drive(), seed in prop::collection::vec(-1.0f64..1.0, 4)) {
        let state = random_state(params.num_qubits, &seed);
        let out = evolve(&state, &propagator(&params).unwrap()).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn effective_hamiltonian_regenerates_floquet(
        n in 1usize..=5,
        eps in 0.0f64..0.5,
        j0t in 0.0f64..1.0,
    ) {
        let params = DriveParameters { j0t, ..DriveParameters::new(n, eps) };
        let f = floquet_operator(&params).unwrap();
        let h = effective_hamiltonian(&f).unwrap();
        prop_assert!(max_abs(h.matrix(), &adjoint_ref(h.matrix())) < 1e-9);
        let back = expm(&h.matrix().mapv(|z| -I * z));
        prop_assert!(max_abs(&back, f.matrix()) < 1e-8);
        let net = percolation_network(&h, DEFAULT_WEIGHT_FLOOR);
        let hist = degree_distribution(&net);
        prop_assert_eq!(hist.total_nodes(), 1 << n);
        let degree_sum: usize = hist.bins().iter().map(|(k, count)| k * count).sum();
        prop_assert_eq!(degree_sum, 2 * net.edges().len());
    }

    #[test]
    fn standardize_ignores_positive_affine_maps(
        p in prop::collection::vec(0.0f64..1.0, 2..64),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        let spread = p.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        prop_assume!(spread > 1e-6);
        let z = standardize(&p);
        let moved: Vec<f64> = p.iter().map(|v| scale * v + shift).collect();
        let z2 = standardize(&moved);
        for (a, b) in z.iter().zip(&z2) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let n = z.len() as f64;
        prop_assert!((z.iter().sum::<f64>() / n).abs() < 1e-12);
        prop_assert!((z.iter().map(|v| v * v).sum::<f64>() / n - 1.0).abs() < 1e-9);
    }

    #[test]
    fn softmax_ignores_a_common_logit_shift(
        m in 1usize..8,
        vals in prop::collection::vec(-3.0f64..3.0, 100),
        shift in -50.0f64..50.0,
    ) {
        let mut model = OnnModel::zeros(m);
        model.weights = Array2::from_shape_fn((m, 10), |(i, l)| vals[(i * 10 + l) % 100]);
        model.bias = Array1::from_shape_fn(10, |l| vals[(l * 7) % 100]);
        let x = Array2::from_shape_fn((3, m), |(r, i)| vals[(r * 13 + i * 3) % 100]);
        let y = forward_batch(&model, x.view());
        let mut shifted = model.clone();
        shifted.bias.mapv_inplace(|b| b + shift);
        let y2 = forward_batch(&shifted, x.view());
        for (a, b) in y.iter().zip(y2.iter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for row in y.rows() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn angle_map_is_monotone_and_bounded(
        a in -1e3f64..1e3,
        b in -1e3f64..1e3,
        lo in -100.0f64..0.0,
        width in 1e-3f64..200.0,
    ) {
        let hi = lo + width;
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        let (tx, ty) = (coefficient_to_angle(x, lo, hi), coefficient_to_angle(y, lo, hi));
        prop_assert!(tx <= ty);
        prop_assert!((0.0..=std::f64::consts::PI).contains(&tx));
        prop_assert!((0.0..=std::f64::consts::PI).contains(&ty));
    }

    #[test]
    fn sampled_frequencies_are_a_distribution(
        weights in prop::collection::vec(0.0f64..1.0, 2..32),
        shots in 1u64..500,
        seed in any::<u64>(),
    ) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 0.0);
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let freq = sample_frequencies(&probs, shots, seed, 0).unwrap();
        prop_assert!((freq.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (f, p) in freq.iter().zip(&probs) {
            prop_assert!(*p > 0.0 || *f == 0.0);
            let count = f * shots as f64;
            prop_assert!((count - count.round()).abs() < 1e-9);
        }
    }
}

#[test]
fn sampled_frequencies_converge_to_exact() {
    let n = 4;
    let probs = vec![1.0 / 16.0; 16];
    let freq = sample_frequencies(&probs, 1_000_000, 3, 0).unwrap();
    let worst = freq.iter().map(|f| (f - 1.0 / (1 << n) as f64).abs()).fold(0.0, f64::max);
    assert!(worst < 5e-3, "{worst}");
}
