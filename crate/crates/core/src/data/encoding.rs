use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64;

use super::PcaModel;
use crate::dynamics::QuantumState;
use crate::error::{Error, Result};

/// Bloch angles of every qubit: `θ_l` from component `l`, `φ_l` from component `N + l`.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedSample {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
}

impl EncodedSample {
    pub fn new(thetas: Vec<f64>, phis: Vec<f64>) -> Result<Self> {
        if thetas.len() != phis.len() || thetas.is_empty() {
            return Err(Error::Contract(format!(
                "need one (θ, φ) pair per qubit, got {} θ and {} φ",
                thetas.len(),
                phis.len()
            )));
        }
        if let Some(bad) = thetas.iter().chain(&phis).find(|a| !(0.0..=PI).contains(*a)) {
            return Err(Error::Contract(format!("angle {bad} outside [0, π]")));
        }
        Ok(EncodedSample { thetas, phis })
    }

    pub fn num_qubits(&self) -> usize {
        self.thetas.len()
    }
}

/// Affine map of a PCA coefficient onto `[0, π]` using the training range, clamped.
pub fn coefficient_to_angle(coefficient: f64, min: f64, max: f64) -> f64 {
    (PI * (coefficient - min) / (max - min)).clamp(0.0, PI)
}

/// Projects `image` onto the `2N` principal axes and maps each coefficient to an angle.
pub fn encode_angles(pca: &PcaModel, image: &[u8]) -> Result<EncodedSample> {
    let k = pca.num_components();
    if k % 2 != 0 {
        return Err(Error::Config(format!(
            "PCA has {k} components; angle encoding needs an even count (2 per qubit)"
        )));
    }
    if image.len() != pca.input_dim() {
        return Err(Error::Contract(format!(
            "image has {} pixels, PCA expects {}",
            image.len(),
            pca.input_dim()
        )));
    }
    let angles: Vec<f64> = pca
        .project(image)
        .into_iter()
        .enumerate()
        .map(|(l, c)| coefficient_to_angle(c, pca.train_min()[l], pca.train_max()[l]))
        .collect();
    let half = k / 2;
    Ok(EncodedSample {
        thetas: angles[..half].to_vec(),
        phis: angles[half..].to_vec(),
    })
}

/// Product state `⊗_l (cos(θ_l/2)|0⟩ + e^{iφ_l} sin(θ_l/2)|1⟩)`, qubit `l` in bit `l`.
pub fn prepare_state(enc: &EncodedSample) -> QuantumState {
    let n = enc.num_qubits();
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    amps[0] = Complex64::new(1.0, 0.0);
    for (l, (&theta, &phi)) in enc.thetas.iter().zip(&enc.phis).enumerate() {
        let (s, c) = (theta / 2.0).sin_cos();
        let up = Complex64::new(c, 0.0);
        let down = Complex64::from_polar(s, phi);
        let filled = 1usize << l;
        for i in 0..filled {
            let a = amps[i];
            amps[i] = a * up;
            amps[i + filled] = a * down;
        }
    }
    QuantumState::new(Array1::from(amps)).expect("a product of unit qubit states has unit norm")
}
