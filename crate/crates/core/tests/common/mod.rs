//! Reference implementations used only by tests. Nothing here calls into the
//! library routines it is used to check.
#![allow(dead_code)]

use std::path::PathBuf;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

pub type CMat = Array2<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn eye(n: usize) -> CMat {
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { c(1.0) } else { c(0.0) })
}

pub fn sigma_x() -> CMat {
    ndarray::arr2(&[[c(0.0), c(1.0)], [c(1.0), c(0.0)]])
}

pub fn sigma_z() -> CMat {
    ndarray::arr2(&[[c(1.0), c(0.0)], [c(0.0), c(-1.0)]])
}

/// Plain four-loop Kronecker product.
pub fn kron_ref(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = a[[i, j]] * b[[k, l]];
                }
            }
        }
    }
    out
}

/// `op` acting on qubit `site` of `n`; qubit `l` is bit `l` of the basis index,
/// so the leftmost Kronecker factor is qubit `n - 1`.
pub fn on_site(op: &CMat, site: usize, n: usize) -> CMat {
    let mut out = eye(1);
    for q in (0..n).rev() {
        let factor = if q == site { op.clone() } else { eye(2) };
        out = kron_ref(&out, &factor);
    }
    out
}

pub fn max_abs(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn adjoint_ref(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

fn one_norm(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-16 Taylor
/// polynomial evaluated in Paterson–Stockmeyer form.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a.mapv(|z| z / 2f64.powi(squarings));

    let mut coeff = [0.0f64; 17];
    coeff[0] = 1.0;
    for k in 1..17 {
        coeff[k] = coeff[k - 1] / k as f64;
    }
    let b2 = b.dot(&b);
    let b3 = b2.dot(&b);
    let b4 = b2.dot(&b2);
    let powers = [eye(n), b.clone(), b2, b3];
    // p(B) = Σ_j (Σ_i c_{4j+i} B^i) (B^4)^j, Horner in B^4
    let block = |j: usize| -> CMat {
        let mut s = Array2::zeros((n, n));
        for (i, p) in powers.iter().enumerate() {
            let k = 4 * j + i;
            if k <= 16 {
                s.scaled_add(c(coeff[k]), p);
            }
        }
        s
    };
    let mut result = block(4);
    for j in (0..4).rev() {
        result = result.dot(&b4) + block(j);
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// `H₁T₁ = (π/2)(1 - ε) Σ_l σ^x_l` as a dense matrix.
pub fn kick_generator(n: usize, epsilon: f64) -> CMat {
    let a = std::f64::consts::FRAC_PI_2 * (1.0 - epsilon);
    let mut h = Array2::zeros((1 << n, 1 << n));
    for l in 0..n {
        h.scaled_add(c(a), &on_site(&sigma_x(), l, n));
    }
    h
}

/// `H₂T₂` with `T₂ = 1/2`, pairwise `J₀/|l-m|^α σ^z σ^z` plus optional onsite fields.
pub fn ising_generator(n: usize, j0t: f64, alpha: f64, fields: &[f64]) -> CMat {
    let dim = 1 << n;
    let mut h = Array2::zeros((dim, dim));
    for l in 0..n {
        for m in l + 1..n {
            let j = j0t / ((m - l) as f64).powf(alpha);
            let zz = on_site(&sigma_z(), l, n).dot(&on_site(&sigma_z(), m, n));
            h.scaled_add(c(0.5 * j), &zz);
        }
    }
    for (l, &d) in fields.iter().enumerate() {
        h.scaled_add(c(0.5 * d), &on_site(&sigma_z(), l, n));
    }
    h
}

/// Mean cross-entropy of a softmax layer, evaluated without max-shifting.
pub fn mean_cross_entropy(w: &Array2<f64>, b: &Array1<f64>, x: &Array2<f64>, labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        let logits: Vec<f64> = (0..w.ncols())
            .map(|l| b[l] + (0..w.nrows()).map(|i| w[[i, l]] * x[[r, i]]).sum::<f64>())
            .collect();
        let z: f64 = logits.iter().map(|u| u.exp()).sum();
        total -= (logits[label].exp() / z).ln();
    }
    total / labels.len() as f64
}

/// Leading eigenvectors of the sample covariance by power iteration with deflation.
pub fn covariance_top_components(rows: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n;
        }
    }
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        let centred: Vec<f64> = r.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..d {
            if centred[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                cov[i][j] += centred[i] * centred[j] / n;
            }
        }
    }
    let mut found: Vec<Vec<f64>> = Vec::new();
    for comp in 0..k {
        let mut v: Vec<f64> = (0..d).map(|i| 1.0 + ((i * 7 + comp * 13) % 11) as f64 / 10.0).collect();
        for _ in 0..20000 {
            let mut next: Vec<f64> = (0..d).map(|i| cov[i].iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
            for u in &found {
                let proj: f64 = next.iter().zip(u).map(|(a, b)| a * b).sum();
                for (x, y) in next.iter_mut().zip(u) {
                    *x -= proj * y;
                }
            }
            let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            next.iter_mut().for_each(|x| *x /= norm);
            let change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = next;
            if change < 1e-14 {
                break;
            }
        }
        found.push(v);
    }
    found
}

/// Directory holding the four MNIST IDX files; `QRC_MNIST_DIR` overrides the
/// workspace default `data/mnist`.
pub fn mnist_dir() -> PathBuf {
    std::env::var_os("QRC_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

pub fn mnist_available() -> bool {
    let dir = mnist_dir();
    [
        "train-images-idx3-ubyte",
        "train-labels-idx1-ubyte",
        "t10k-images-idx3-ubyte",
        "t10k-labels-idx1-ubyte",
    ]
    .iter()
    .all(|f| dir.join(f).is_file())
}
