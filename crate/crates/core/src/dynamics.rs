//! Kicked-Ising drive: the two-step Floquet operator and its powers.
//!
//! Units are fixed to ħ = 1 and T = 1 with T₁ = T₂ = 1/2, so the kick
//! `exp(-i H₁ T₁)` rotates every qubit by `π(1 - ε)` about x and the Ising
//! step accumulates a phase `(j0t / 2) / |l - m|^α` per aligned pair.
//!
//! Basis index `i` stores qubit `l` in bit `l`; bit value 0 is the σᶻ = +1
//! state.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binio::{sha256_hex, BinReader, BinWriter};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE};

pub const DEFAULT_MAX_QUBITS: usize = 12;

/// Duration of each half of the drive period.
const HALF_PERIOD: f64 = 0.5;

/// Allowed drift of a state norm before evolution is reported as broken.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Physical knobs of the drive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriveParameters {
    pub num_qubits: usize,
    /// Rotation error ε of the global π pulse.
    pub epsilon: f64,
    /// Dimensionless coupling J₀·T.
    pub j0t: f64,
    /// Power-law decay exponent of the Ising couplings.
    pub alpha: f64,
    /// Number of drive periods n.
    pub periods: usize,
    /// Width W of the optional onsite σᶻ disorder, fields drawn from Uniform[0, W].
    pub disorder_width: f64,
    pub seed: u64,
    /// Dense-matrix guard: `num_qubits` may not exceed this.
    pub max_qubits: usize,
}

impl Default for DriveParameters {
    fn default() -> Self {
        DriveParameters {
            num_qubits: 11,
            epsilon: 0.03,
            j0t: 0.06,
            alpha: 1.51,
            periods: 50,
            disorder_width: 0.0,
            seed: 0,
            max_qubits: DEFAULT_MAX_QUBITS,
        }
    }
}

impl DriveParameters {
    pub fn new(num_qubits: usize, epsilon: f64) -> Self {
        DriveParameters {
            num_qubits,
            epsilon,
            ..Default::default()
        }
    }

    pub fn with_periods(mut self, periods: usize) -> Self {
        self.periods = periods;
        self
    }

    pub fn dim(&self) -> usize {
        1usize << self.num_qubits
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 {
            return Err(Error::Config("num_qubits must be at least 1".into()));
        }
        if self.num_qubits > self.max_qubits {
            return Err(Error::Config(format!(
                "num_qubits = {} exceeds the dense-matrix cap of {} qubits",
                self.num_qubits, self.max_qubits
            )));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon = {} outside [0, 1)", self.epsilon)));
        }
        if !self.j0t.is_finite() {
            return Err(Error::Config(format!("j0t = {} is not finite", self.j0t)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha = {} must be positive", self.alpha)));
        }
        if !(self.disorder_width >= 0.0 && self.disorder_width.is_finite()) {
            return Err(Error::Config(format!(
                "disorder_width = {} must be nonnegative",
                self.disorder_width
            )));
        }
        Ok(())
    }

    /// Ising coupling J_lm for qubits `l != m`.
    pub fn coupling(&self, l: usize, m: usize) -> f64 {
        let dist = l.abs_diff(m) as f64;
        self.j0t / dist.powf(self.alpha)
    }

    /// Onsite fields D_l, one per qubit; empty when the disorder width is zero.
    pub fn disorder_fields(&self) -> Vec<f64> {
        if self.disorder_width == 0.0 {
            return Vec::new();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.num_qubits)
            .map(|_| rng.random::<f64>() * self.disorder_width)
            .collect()
    }

    /// Stable identifier of every field that changes the propagator.
    pub fn fingerprint(&self) -> String {
        let disorder_seed = if self.disorder_width == 0.0 { 0 } else { self.seed };
        sha256_hex(
            format!(
                "drive:N={};eps={:e};j0t={:e};alpha={:e};n={};W={:e};seed={}",
                self.num_qubits,
                self.epsilon,
                self.j0t,
                self.alpha,
                self.periods,
                self.disorder_width,
                disorder_seed
            )
            .as_bytes(),
        )
    }
}

/// Normalized amplitude vector over the 2^N computational basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    amplitudes: Array1<Complex64>,
}

impl QuantumState {
    pub fn new(amplitudes: Array1<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Contract(format!(
                "state length {len} is not a power of two"
            )));
        }
        let norm = l2_norm(amplitudes.view());
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Contract(format!("state norm {norm} differs from 1")));
        }
        Ok(QuantumState { amplitudes })
    }

    /// Computational basis state |index⟩.
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amplitudes = Array1::zeros(1usize << num_qubits);
        amplitudes[index] = ONE;
        QuantumState { amplitudes }
    }

    pub fn num_qubits(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Array1<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        l2_norm(self.amplitudes.view())
    }
}

fn l2_norm(v: ArrayView1<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Dense 2^N × 2^N unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    entries: CMatrix,
}

impl UnitaryMatrix {
    /// Wraps `entries` after checking `U†U = I` within `tolerance`.
    pub fn new(entries: CMatrix, tolerance: f64) -> Result<Self> {
        if entries.nrows() != entries.ncols() || !entries.nrows().is_power_of_two() {
            return Err(Error::Contract(format!(
                "unitary must be square with power-of-two size, got {:?}",
                entries.dim()
            )));
        }
        let defect = linalg::unitarity_defect(&entries);
        if defect >= tolerance {
            return Err(Error::Contract(format!(
                "matrix is not unitary: max |U†U - I| = {defect:e}"
            )));
        }
        Ok(UnitaryMatrix { entries })
    }

    pub(crate) fn from_trusted(entries: CMatrix) -> Self {
        UnitaryMatrix { entries }
    }

    pub fn identity(num_qubits: usize) -> Self {
        UnitaryMatrix {
            entries: linalg::identity(1usize << num_qubits),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.entries)
    }

    pub fn compose(&self, rhs: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix {
            entries: self.entries.dot(&rhs.entries),
        }
    }
}

/// Single-qubit factor of the kick: `exp(-i a σˣ)` with `a = π(1 - ε)/2`.
pub fn kick_factor(epsilon: f64) -> CMatrix {
    let a = FRAC_PI_2 * (1.0 - epsilon);
    let (s, c) = a.sin_cos();
    let off = Complex64::new(0.0, -s);
    let diag = Complex64::new(c, 0.0);
    ndarray::arr2(&[[diag, off], [off, diag]])
}

/// Global kick `exp(-i H₁ T₁)`, the N-fold Kronecker power of [`kick_factor`].
pub fn build_u1(params: &DriveParameters) -> Result<UnitaryMatrix> {
    params.validate()?;
    let k = kick_factor(params.epsilon);
    let mut u = k.clone();
    for _ in 1..params.num_qubits {
        u = linalg::kron(&u, &k);
    }
    Ok(UnitaryMatrix::from_trusted(u))
}

/// Diagonal of `exp(-i H₂ T₂)`.
pub fn ising_phases(params: &DriveParameters) -> Result<Vec<Complex64>> {
    params.validate()?;
    let n = params.num_qubits;
    let fields = params.disorder_fields();
    let couplings: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|l| (l + 1..n).map(move |m| (l, m)))
        .map(|(l, m)| (l, m, params.coupling(l, m)))
        .collect();
    let spin = |i: usize, l: usize| if (i >> l) & 1 == 0 { 1.0 } else { -1.0 };
    let phases = (0..params.dim())
        .map(|i| {
            let mut energy: f64 = couplings
                .iter()
                .map(|&(l, m, j)| j * spin(i, l) * spin(i, m))
                .sum();
            energy += fields
                .iter()
                .enumerate()
                .map(|(l, d)| d * spin(i, l))
                .sum::<f64>();
            Complex64::from_polar(1.0, -HALF_PERIOD * energy)
        })
        .collect();
    Ok(phases)
}

/// Ising step `exp(-i H₂ T₂)` as a dense diagonal matrix.
pub fn build_u2(params: &DriveParameters) -> Result<UnitaryMatrix> {
    let phases = ising_phases(params)?;
    Ok(UnitaryMatrix::from_trusted(Array2::from_diag(&Array1::from(
        phases,
    ))))
}

/// One drive period, `F = exp(-i H₂ T₂) · exp(-i H₁ T₁)`.
pub fn floquet_operator(params: &DriveParameters) -> Result<UnitaryMatrix> {
    let mut u = build_u1(params)?.into_matrix();
    let phases = ising_phases(params)?;
    for (mut row, d) in u.rows_mut().into_iter().zip(phases) {
        row.mapv_inplace(|z| d * z);
    }
    Ok(UnitaryMatrix::from_trusted(u))
}

/// `F^n` for `n = params.periods`, by binary exponentiation.
pub fn propagator(params: &DriveParameters) -> Result<UnitaryMatrix> {
    let floquet = floquet_operator(params)?;
    Ok(matrix_power(&floquet, params.periods))
}

pub fn matrix_power(base: &UnitaryMatrix, exponent: usize) -> UnitaryMatrix {
    let mut result: Option<CMatrix> = None;
    let mut square = base.matrix().clone();
    let mut e = exponent;
    while e > 0 {
        if e & 1 == 1 {
            result = Some(match result {
                None => square.clone(),
                Some(r) => r.dot(&square),
            });
        }
        e >>= 1;
        if e > 0 {
            square = square.dot(&square);
        }
    }
    UnitaryMatrix::from_trusted(result.unwrap_or_else(|| linalg::identity(base.dim())))
}

/// `U ψ`, renormalized after checking that the norm survived.
pub fn evolve(state: &QuantumState, propagator: &UnitaryMatrix) -> Result<QuantumState> {
    if state.dim() != propagator.dim() {
        return Err(Error::Contract(format!(
            "state dimension {} does not match propagator dimension {}",
            state.dim(),
            propagator.dim()
        )));
    }
    let mut out = propagator.matrix().dot(state.amplitudes());
    let norm = l2_norm(out.view());
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Numerical(format!(
            "evolved state norm {norm} drifted from 1 (propagator not unitary?)"
        )));
    }
    out.mapv_inplace(|z| z / norm);
    Ok(QuantumState { amplitudes: out })
}

/// Evolves many states at once; row `r` of `states` is one amplitude vector.
///
/// Returns the evolved rows without renormalization.
pub fn evolve_rows(states: &CMatrix, propagator: &UnitaryMatrix) -> Result<CMatrix> {
    if states.ncols() != propagator.dim() {
        return Err(Error::Contract(format!(
            "state dimension {} does not match propagator dimension {}",
            states.ncols(),
            propagator.dim()
        )));
    }
    Ok(states.dot(&propagator.matrix().t()))
}

const PROPAGATOR_MAGIC: &[u8; 8] = b"QRCPROP1";

/// Writes `F^n` with a header recording the drive parameters.
pub fn save_propagator(path: &Path, params: &DriveParameters, u: &UnitaryMatrix) -> Result<()> {
    let mut w = BinWriter::create(path)?;
    w.bytes(PROPAGATOR_MAGIC)?;
    w.u64(params.num_qubits as u64)?;
    w.f64(params.epsilon)?;
    w.f64(params.j0t)?;
    w.f64(params.alpha)?;
    w.u64(params.periods as u64)?;
    w.f64(params.disorder_width)?;
    w.u64(params.seed)?;
    w.complexes(u.matrix().iter())?;
    w.finish()
}

/// Reads a propagator written by [`save_propagator`], refusing header mismatches.
pub fn load_propagator(path: &Path, params: &DriveParameters) -> Result<UnitaryMatrix> {
    let mut r = BinReader::open(path)?;
    let mut magic = [0u8; 8];
    r.bytes(&mut magic)?;
    if &magic != PROPAGATOR_MAGIC {
        return Err(Error::CacheMismatch {
            path: path.to_path_buf(),
            reason: "not a propagator file".into(),
        });
    }
    let num_qubits = r.u64()? as usize;
    let stored = DriveParameters {
        num_qubits,
        epsilon: r.f64()?,
        j0t: r.f64()?,
        alpha: r.f64()?,
        periods: r.u64()? as usize,
        disorder_width: r.f64()?,
        seed: r.u64()?,
        max_qubits: params.max_qubits,
    };
    let same_disorder = stored.disorder_width == params.disorder_width
        && (params.disorder_width == 0.0 || stored.seed == params.seed);
    if stored.num_qubits != params.num_qubits
        || stored.epsilon != params.epsilon
        || stored.j0t != params.j0t
        || stored.alpha != params.alpha
        || stored.periods != params.periods
        || !same_disorder
    {
        return Err(Error::CacheMismatch {
            path: path.to_path_buf(),
            reason: format!("header {stored:?} differs from requested {params:?}"),
        });
    }
    if num_qubits > params.max_qubits {
        return Err(Error::Config(format!("cached propagator has {num_qubits} qubits, above the cap")));
    }
    let dim = 1usize << num_qubits;
    let data = r.complexes(dim * dim)?;
    r.expect_eof()?;
    let entries = Array2::from_shape_vec((dim, dim), data).expect("dim*dim entries");
    Ok(UnitaryMatrix::from_trusted(entries))
}

/// Loads `F^n` from `dir` when present, otherwise computes and stores it.
pub fn cached_propagator(dir: &Path, params: &DriveParameters) -> Result<(UnitaryMatrix, PathBuf)> {
    let path = dir.join(format!("propagator-{}.bin", &params.fingerprint()[..16]));
    if path.exists() {
        log::info!("propagator cache hit: {}", path.display());
        return Ok((load_propagator(&path, params)?, path));
    }
    log::info!(
        "building F^{} for N={} eps={}",
        params.periods,
        params.num_qubits,
        params.epsilon
    );
    let u = propagator(params)?;
    save_propagator(&path, params, &u)?;
    Ok((u, path))
}

/// `max_i | |<i|F²|i>| - 1 |`, zero for a perfect period-doubled response.
pub fn period_doubling_defect(floquet: &UnitaryMatrix) -> f64 {
    let f2 = floquet.matrix().dot(floquet.matrix());
    f2.diag()
        .iter()
        .map(|z| (z.norm() - 1.0).abs())
        .fold(0.0, f64::max)
}
