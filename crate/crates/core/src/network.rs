//! Network picture of the Floquet dynamics.
//!
//! The effective Hamiltonian `H = i log F` (principal branch) is read as a
//! weighted graph on the computational basis: node `i` carries the energy
//! `H_ii`, and nodes `i`, `j` are linked when the hopping `|H_ij|` beats the
//! detuning `|H_jj - H_ii|`.

use std::f64::consts::PI;
use std::io::Write;

use ndarray::{s, Array2};
use num_complex::Complex64;

use crate::dynamics::UnitaryMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ZERO};

/// Unitarity required of the input to [`effective_hamiltonian`].
pub const UNITARITY_TOLERANCE: f64 = 1e-9;

/// Eigenvalues of `(F + F†)/2` closer than this are resolved together.
const CLUSTER_GAP: f64 = 1e-6;

pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-12;

/// Hermitian generator of one drive period, `exp(-i H) = F`.
#[derive(Clone, Debug)]
pub struct EffectiveHamiltonian {
    matrix: CMatrix,
    quasi_energies: Vec<f64>,
    eigenvectors: CMatrix,
}

impl EffectiveHamiltonian {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Basis-state energies `H_ii`.
    pub fn diag_energies(&self) -> Vec<f64> {
        self.matrix.diag().iter().map(|z| z.re).collect()
    }

    /// Transition amplitude `H_ij`.
    pub fn hopping(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[[i, j]]
    }

    /// Quasi-energies in `[-π, π)`, one per eigenvector column.
    pub fn quasi_energies(&self) -> &[f64] {
        &self.quasi_energies
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    /// `V diag(exp(-i E)) V†` from the stored spectral decomposition.
    pub fn floquet(&self) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (mut col, &e) in scaled.columns_mut().into_iter().zip(&self.quasi_energies) {
            let phase = Complex64::from_polar(1.0, -e);
            col.mapv_inplace(|z| z * phase);
        }
        scaled.dot(&linalg::adjoint(&self.eigenvectors))
    }
}

/// Principal-branch logarithm of a unitary: `H = i log F` with eigenphases in `(-π, π]`.
///
/// `F` is normal, so `A = (F + F†)/2` shares its eigenvectors. `A` is
/// diagonalized with a Hermitian solver; groups of nearly equal eigenvalues of
/// `A` (the pairs `e^{±iθ}` and genuine near-degeneracies) are split again by
/// diagonalizing `(F - F†)/2i` restricted to the group.
pub fn effective_hamiltonian(floquet: &UnitaryMatrix) -> Result<EffectiveHamiltonian> {
    let f = floquet.matrix();
    let n = f.nrows();
    let defect = floquet.unitarity_defect();
    if !(defect < UNITARITY_TOLERANCE) {
        return Err(Error::Contract(format!(
            "effective_hamiltonian needs a unitary input, max |F†F - I| = {defect:e}"
        )));
    }
    let f_dag = linalg::adjoint(f);
    let mut cosine_part = f + &f_dag;
    cosine_part.mapv_inplace(|z| z * 0.5);
    let (cosines, mut vectors) = linalg::hermitian_eigen(&cosine_part)?;
    drop(cosine_part);

    let f_v = f.dot(&vectors);
    let mut phases = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && cosines[end] - cosines[end - 1] < CLUSTER_GAP {
            end += 1;
        }
        if end - start == 1 {
            let v = vectors.column(start);
            let fv = f_v.column(start);
            let rayleigh: Complex64 = v.iter().zip(fv.iter()).map(|(a, b)| a.conj() * b).sum();
            phases[start] = rayleigh.arg();
        } else {
            resolve_cluster(&mut vectors, &f_v, start, end, &mut phases)?;
        }
        start = end;
    }

    let quasi_energies: Vec<f64> = phases
        .iter()
        .map(|&theta| {
            // principal branch (-π, π]
            let theta = if theta <= -PI { theta + 2.0 * PI } else { theta };
            -theta
        })
        .collect();

    let mut scaled = vectors.clone();
    for (mut col, &e) in scaled.columns_mut().into_iter().zip(&quasi_energies) {
        col.mapv_inplace(|z| z * e);
    }
    let mut matrix = scaled.dot(&linalg::adjoint(&vectors));
    linalg::hermitize(&mut matrix);
    Ok(EffectiveHamiltonian {
        matrix,
        quasi_energies,
        eigenvectors: vectors,
    })
}

fn resolve_cluster(
    vectors: &mut CMatrix,
    f_v: &CMatrix,
    start: usize,
    end: usize,
    phases: &mut [f64],
) -> Result<()> {
    let block = vectors.slice(s![.., start..end]).to_owned();
    let restricted = linalg::adjoint(&block).dot(&f_v.slice(s![.., start..end]));
    let k = end - start;
    // (G - G†) / 2i
    let sine_part = Array2::from_shape_fn((k, k), |(a, b)| {
        (restricted[[a, b]] - restricted[[b, a]].conj()) * Complex64::new(0.0, -0.5)
    });
    let (_, rotation) = linalg::hermitian_eigen(&sine_part)?;
    let rotated_g = linalg::adjoint(&rotation).dot(&restricted).dot(&rotation);
    for a in 0..k {
        phases[start + a] = rotated_g[[a, a]].arg();
    }
    let new_block = block.dot(&rotation);
    vectors.slice_mut(s![.., start..end]).assign(&new_block);
    Ok(())
}

/// One link of the percolation network, `i < j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveNetwork {
    num_nodes: usize,
    edges: Vec<Edge>,
}

impl EffectiveNetwork {
    /// Builds a network from explicit edges; they are sorted and checked.
    pub fn from_edges(num_nodes: usize, mut edges: Vec<Edge>) -> Result<Self> {
        edges.sort_by_key(|e| (e.i, e.j));
        for w in edges.windows(2) {
            if (w[0].i, w[0].j) == (w[1].i, w[1].j) {
                return Err(Error::Contract(format!("duplicate edge ({}, {})", w[0].i, w[0].j)));
            }
        }
        if let Some(e) = edges.iter().find(|e| e.i >= e.j || e.j >= num_nodes) {
            return Err(Error::Contract(format!(
                "edge ({}, {}) is a self-loop, reversed, or out of range",
                e.i, e.j
            )));
        }
        Ok(EffectiveNetwork { num_nodes, edges })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        for e in &self.edges {
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// True when every edge joins a bitstring to its complement and no node has two partners.
    pub fn is_complement_dimer_set(&self) -> bool {
        let mask = self.num_nodes - 1;
        self.max_degree() <= 1 && self.edges.iter().all(|e| e.i ^ e.j == mask)
    }

    pub fn write_edges_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i,j,weight")?;
        for e in &self.edges {
            writeln!(out, "{},{},{}", e.i, e.j, e.weight)?;
        }
        Ok(())
    }
}

/// Keeps transitions with `|E_j - E_i| < |W_ij|` and `|W_ij| > weight_floor`.
pub fn percolation_network(h: &EffectiveHamiltonian, weight_floor: f64) -> EffectiveNetwork {
    let m = h.matrix();
    let n = m.nrows();
    let energies = h.diag_energies();
    let mut edges = Vec::new();
    for i in 0..n {
        let row = m.row(i);
        for j in i + 1..n {
            let weight = row[j].norm();
            if weight > weight_floor && (energies[j] - energies[i]).abs() < weight {
                edges.push(Edge { i, j, weight });
            }
        }
    }
    EffectiveNetwork {
        num_nodes: n,
        edges,
    }
}

/// Number of nodes per degree; only degrees that occur are listed, ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeHistogram {
    bins: Vec<(usize, usize)>,
}

impl DegreeHistogram {
    pub fn from_bins(mut bins: Vec<(usize, usize)>) -> Self {
        bins.retain(|&(_, count)| count > 0);
        bins.sort_unstable();
        DegreeHistogram { bins }
    }

    pub fn bins(&self) -> &[(usize, usize)] {
        &self.bins
    }

    pub fn total_nodes(&self) -> usize {
        self.bins.iter().map(|b| b.1).sum()
    }

    pub fn distinct_degrees(&self) -> usize {
        self.bins.len()
    }

    /// Counts for every degree `0..=k_max`, empty degrees included.
    pub fn dense_counts(&self) -> Vec<usize> {
        let k_max = self.bins.last().map_or(0, |b| b.0);
        let mut counts = vec![0; k_max + 1];
        for &(k, c) in &self.bins {
            counts[k] = c;
        }
        counts
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,count")?;
        for (k, count) in &self.bins {
            writeln!(out, "{k},{count}")?;
        }
        Ok(())
    }
}

pub fn degree_distribution(net: &EffectiveNetwork) -> DegreeHistogram {
    let degrees = net.degrees();
    let max = degrees.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max + 1];
    for d in degrees {
        counts[d] += 1;
    }
    DegreeHistogram::from_bins(counts.into_iter().enumerate().collect())
}

/// Least-squares line through `(log₁₀ k, log₁₀ count)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub bins_used: usize,
}

/// Fits the bins with `k ≥ 1`; at least three such bins are required.
pub fn powerlaw_diagnostic(hist: &DegreeHistogram) -> Result<PowerLawFit> {
    let points: Vec<(f64, f64)> = hist
        .bins()
        .iter()
        .filter(|&&(k, count)| k >= 1 && count >= 1)
        .map(|&(k, count)| ((k as f64).log10(), (count as f64).log10()))
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientBins {
            usable: points.len(),
        });
    }
    let m = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    // a flat histogram is fitted exactly by the zero-slope line
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(PowerLawFit {
        slope,
        intercept,
        r_squared,
        bins_used: points.len(),
    })
}

/// One row of a network sweep.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct NetworkSummary {
    pub epsilon: f64,
    pub num_nodes: usize,
    pub edges: usize,
    pub max_degree: usize,
    pub distinct_degrees: usize,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
}

pub fn summarize(epsilon: f64, net: &EffectiveNetwork, hist: &DegreeHistogram) -> NetworkSummary {
    let fit = powerlaw_diagnostic(hist).ok();
    NetworkSummary {
        epsilon,
        num_nodes: net.num_nodes(),
        edges: net.edges().len(),
        max_degree: net.max_degree(),
        distinct_degrees: hist.distinct_degrees(),
        slope: fit.map(|f| f.slope),
        r_squared: fit.map(|f| f.r_squared),
    }
}

/// All-zero generator; handy as the network of the identity drive.
pub fn zero_hamiltonian(dim: usize) -> EffectiveHamiltonian {
    EffectiveHamiltonian {
        matrix: Array2::from_elem((dim, dim), ZERO),
        quasi_energies: vec![0.0; dim],
        eigenvectors: linalg::identity(dim),
    }
}
