mod common;

use common::*;
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Inverse};
use num_complex::Complex64;
use qrc_core::data::{encode_angles, fit_pca, load_mnist_idx, prepare_state, EncodedSample};
use qrc_core::dynamics::{build_u1, build_u2, evolve, floquet_operator, DriveParameters, QuantumState};
use qrc_core::network::{effective_hamiltonian, percolation_network, DEFAULT_WEIGHT_FLOOR};
use qrc_core::onn::{apply_dropout, batch_gradients, forward_batch, OnnModel, NUM_CLASSES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn kick_matches_dense_exponential() {
    for n in 1..=3 {
        for eps in [0.0, 0.01, 0.03, 0.1, 0.5, 0.9] {
            let oracle = expm(&kick_generator(n, eps).mapv(|z| -I * z));
            let u1 = build_u1(&DriveParameters::new(n, eps)).unwrap();
            let err = max_abs(u1.matrix(), &oracle);
            assert!(err < 1e-10, "N={n} eps={eps}: {err:e}");
        }
    }
}

#[test]
fn ising_layer_matches_dense_exponential() {
    for n in 1..=3 {
        for (j0t, alpha) in [(0.06, 1.51), (0.3, 0.7), (1.0, 3.0)] {
            let params = DriveParameters {
                j0t,
                alpha,
                ..DriveParameters::new(n, 0.03)
            };
            let oracle = expm(&ising_generator(n, j0t, alpha, &[]).mapv(|z| -I * z));
            let err = max_abs(build_u2(&params).unwrap().matrix(), &oracle);
            assert!(err < 1e-10, "N={n} J0T={j0t} alpha={alpha}: {err:e}");
        }
    }
}

#[test]
fn disordered_ising_layer_matches_dense_exponential() {
    let params = DriveParameters {
        disorder_width: 0.8,
        seed: 11,
        ..DriveParameters::new(3, 0.03)
    };
    let fields = params.disorder_fields();
    assert_eq!(fields.len(), 3);
    assert!(fields.iter().all(|d| (0.0..=0.8).contains(d)));
    let oracle = expm(&ising_generator(3, params.j0t, params.alpha, &fields).mapv(|z| -I * z));
    assert!(max_abs(build_u2(&params).unwrap().matrix(), &oracle) < 1e-10);
}

#[test]
fn two_qubit_ising_phases_by_hand() {
    let u2 = build_u2(&DriveParameters::new(2, 0.03)).unwrap();
    let minus = Complex64::from_polar(1.0, -0.03);
    let plus = Complex64::from_polar(1.0, 0.03);
    for (i, expected) in [minus, plus, plus, minus].into_iter().enumerate() {
        assert!((u2.matrix()[[i, i]] - expected).norm() < 1e-15);
    }
}

/// Effective Hamiltonian through a general (non-Hermitian) eigensolver:
/// `H = V diag(-arg λ) V⁻¹`.
fn heff_by_general_eigensolver(f: &CMat) -> CMat {
    let (vals, vecs) = f.eig().unwrap();
    let energies: Array1<Complex64> = vals.mapv(|l| c(-l.arg()));
    let scaled = &vecs * &energies.insert_axis(ndarray::Axis(0));
    scaled.dot(&vecs.inv().unwrap())
}

#[test]
fn two_qubit_percolation_by_brute_force() {
    let f = floquet_operator(&DriveParameters::new(2, 0.03)).unwrap();
    let h = effective_hamiltonian(&f).unwrap();
    let oracle = heff_by_general_eigensolver(f.matrix());
    assert!(max_abs(h.matrix(), &oracle) < 1e-9);

    let net = percolation_network(&h, DEFAULT_WEIGHT_FLOOR);
    let mut expected = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            let w = oracle[[i, j]].norm();
            if (oracle[[j, j]].re - oracle[[i, i]].re).abs() < w && w > 1e-12 {
                expected.push((i, j));
            }
        }
    }
    let got: Vec<(usize, usize)> = net.edges().iter().map(|e| (e.i, e.j)).collect();
    assert_eq!(got, expected);
}

#[test]
fn interaction_free_drive_acts_qubit_by_qubit() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=5 {
        let eps = 0.07;
        let params = DriveParameters {
            j0t: 0.0,
            ..DriveParameters::new(n, eps).with_periods(3)
        };
        let thetas: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::PI)).collect();
        let phis: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::PI)).collect();
        let state = prepare_state(&EncodedSample::new(thetas.clone(), phis.clone()).unwrap());
        let f3 = qrc_core::dynamics::propagator(&params).unwrap();
        let got = evolve(&state, &f3).unwrap();

        // K³ applied to each single-qubit spinor, then the product assembled by hand
        let a = std::f64::consts::FRAC_PI_2 * (1.0 - eps);
        let k = ndarray::arr2(&[[c(a.cos()), -I * a.sin()], [-I * a.sin(), c(a.cos())]]);
        let k3 = k.dot(&k).dot(&k);
        let spinors: Vec<[Complex64; 2]> = thetas
            .iter()
            .zip(&phis)
            .map(|(t, p)| {
                let v = ndarray::arr1(&[c((t / 2.0).cos()), Complex64::from_polar((t / 2.0).sin(), *p)]);
                let w = k3.dot(&v);
                [w[0], w[1]]
            })
            .collect();
        for idx in 0..1usize << n {
            let expected: Complex64 = (0..n).map(|l| spinors[l][(idx >> l) & 1]).product();
            assert!((got.amplitudes()[idx] - expected).norm() < 1e-12, "N={n} idx={idx}");
        }
    }
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for instance in 0..100 {
        let m = rng.random_range(1..=10);
        let batch = rng.random_range(1..=5);
        let mut x = Array2::from_shape_fn((batch, m), |_| rng.random_range(-2.0..2.0));
        if instance % 2 == 1 {
            for mut row in x.rows_mut() {
                apply_dropout(row.as_slice_mut().unwrap(), 0.3, &mut rng);
            }
        }
        let labels: Vec<usize> = (0..batch).map(|_| rng.random_range(0..NUM_CLASSES)).collect();
        let mut model = OnnModel::zeros(m);
        model.weights.mapv_inplace(|_| rng.random_range(-1.0..1.0));
        model.bias.mapv_inplace(|_| rng.random_range(-1.0..1.0));
        let mut t = Array2::zeros((batch, NUM_CLASSES));
        for (r, &l) in labels.iter().enumerate() {
            t[[r, l]] = 1.0;
        }
        let y = forward_batch(&model, x.view());
        let (dw, db) = batch_gradients(x.view(), y.view(), t.view()).unwrap();

        let h = 1e-6;
        let rel = |analytic: f64, numeric: f64| (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
        for i in 0..m {
            for l in 0..NUM_CLASSES {
                let mut wp = model.weights.clone();
                let mut wm = model.weights.clone();
                wp[[i, l]] += h;
                wm[[i, l]] -= h;
                let fd = (mean_cross_entropy(&wp, &model.bias, &x, &labels)
                    - mean_cross_entropy(&wm, &model.bias, &x, &labels))
                    / (2.0 * h);
                assert!(rel(dw[[i, l]], fd) < 1e-5, "instance {instance} dW[{i},{l}] {} vs {fd}", dw[[i, l]]);
            }
        }
        for l in 0..NUM_CLASSES {
            let mut bp = model.bias.clone();
            let mut bm = model.bias.clone();
            bp[l] += h;
            bm[l] -= h;
            let fd = (mean_cross_entropy(&model.weights, &bp, &x, &labels)
                - mean_cross_entropy(&model.weights, &bm, &x, &labels))
                / (2.0 * h);
            assert!(rel(db[l], fd) < 1e-5, "instance {instance} dB[{l}]");
        }
    }
}

#[test]
fn dropout_is_unbiased_in_expectation() {
    let x = [0.3, -1.2, 2.5, 0.0, 7.0];
    let rate = 0.15;
    let trials = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut sum = [0.0; 5];
    let mut sum_sq = [0.0; 5];
    for _ in 0..trials {
        let mut v = x;
        apply_dropout(&mut v, rate, &mut rng);
        for j in 0..5 {
            sum[j] += v[j];
            sum_sq[j] += v[j] * v[j];
        }
    }
    for j in 0..5 {
        let mean = sum[j] / trials as f64;
        let var = sum_sq[j] / trials as f64 - mean * mean;
        let se = (var / trials as f64).sqrt();
        assert!((mean - x[j]).abs() <= 3.0 * se + 1e-15, "component {j}: {mean} vs {}", x[j]);
    }
}

#[test]
fn pca_matches_covariance_power_iteration_on_mnist() {
    if !mnist_available() {
        eprintln!("MNIST not found under {}; skipping", mnist_dir().display());
        return;
    }
    let dir = mnist_dir();
    let full = load_mnist_idx(&dir.join("train-images-idx3-ubyte"), &dir.join("train-labels-idx1-ubyte")).unwrap();
    let indices: Vec<usize> = (0..1000).collect();
    let data = full.subset(&indices);
    let pca = fit_pca(&data, 2).unwrap();
    let rows: Vec<Vec<f64>> = data.images().map(|img| img.iter().map(|&p| p as f64).collect()).collect();
    let oracle = covariance_top_components(&rows, 2);
    for (k, v) in oracle.iter().enumerate() {
        let axis = pca.basis().row(k);
        let same: f64 = axis.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let flipped: f64 = axis.iter().zip(v).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
        assert!(same.min(flipped) < 1e-6, "component {k}: {}", same.min(flipped));
    }
    // and the angle map of a training image stays inside [0, π]
    let enc = encode_angles(&pca, data.image(0)).unwrap();
    assert!(enc.thetas.iter().chain(&enc.phis).all(|a| (0.0..=std::f64::consts::PI).contains(a)));
}

#[test]
fn evolution_by_single_period_matches_dense_exponentials() {
    let params = DriveParameters::new(3, 0.03);
    let u1 = expm(&kick_generator(3, 0.03).mapv(|z| -I * z));
    let u2 = expm(&ising_generator(3, 0.06, 1.51, &[]).mapv(|z| -I * z));
    let f = u2.dot(&u1);
    let amps = Array1::from_shape_fn(8, |i| Complex64::new(1.0 + i as f64, 0.5 * i as f64));
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let state = QuantumState::new(amps.mapv(|z| z / norm)).unwrap();
    let expected = f.dot(state.amplitudes());
    let got = evolve(&state, &floquet_operator(&params).unwrap()).unwrap();
    let err = got
        .amplitudes()
        .iter()
        .zip(expected.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-12);
}
