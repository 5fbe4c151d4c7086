//! Measurement layer: basis-state statistics of the evolved state, z-scored.

use std::io::Write;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binio::{BinReader, BinWriter};
use crate::dynamics::QuantumState;
use crate::error::{Error, Result};

/// Spread below which a vector is treated as constant.
const DEGENERATE_STD: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShotMode {
    /// Infinite-shot limit, `p_i = |ψ_i|²`.
    Exact,
    /// Relative frequencies of `shots` simulated measurements.
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShotConfig {
    pub mode: ShotMode,
    pub shots: u64,
    pub seed: u64,
}

impl Default for ShotConfig {
    fn default() -> Self {
        ShotConfig {
            mode: ShotMode::Exact,
            shots: 1000,
            seed: 0,
        }
    }
}

impl ShotConfig {
    pub fn exact() -> Self {
        ShotConfig::default()
    }

    pub fn sampled(shots: u64, seed: u64) -> Self {
        ShotConfig {
            mode: ShotMode::Sampled,
            shots,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == ShotMode::Sampled && self.shots == 0 {
            return Err(Error::Config("sampled measurement needs shots >= 1".into()));
        }
        Ok(())
    }
}

/// Which axis the z-score runs over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Standardization {
    /// Each sample's distribution over the 2^N outcomes.
    #[default]
    PerSample,
    /// Each outcome across the training samples (sensitivity check).
    PerFeature,
}

/// Outcome distribution of one state. `stream` selects an independent random
/// stream per sample in sampled mode.
pub fn measure_distribution(state: &QuantumState, cfg: &ShotConfig, stream: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    let probs: Vec<f64> = state.amplitudes().iter().map(|z| z.norm_sqr()).collect();
    Ok(match cfg.mode {
        ShotMode::Exact => probs,
        ShotMode::Sampled => sample_frequencies(&probs, cfg.shots, cfg.seed, stream)?,
    })
}

/// Multinomial relative frequencies of `shots` draws from `probs`.
pub fn sample_frequencies(probs: &[f64], shots: u64, seed: u64, stream: u64) -> Result<Vec<f64>> {
    let dist = WeightedIndex::new(probs)
        .map_err(|e| Error::Numerical(format!("invalid outcome distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..shots {
        counts[dist.sample(&mut rng)] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / shots as f64).collect())
}

/// Population z-score; a constant input maps to all zeros.
pub fn standardize(p: &[f64]) -> Vec<f64> {
    let n = p.len() as f64;
    let mean = p.iter().sum::<f64>() / n;
    let var = p.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if !(std >= DEGENERATE_STD) {
        return vec![0.0; p.len()];
    }
    p.iter().map(|v| (v - mean) / std).collect()
}

/// Column-wise population z-score with statistics taken from `train` only.
pub fn standardize_columns(train: &mut Array2<f64>, others: &mut [&mut Array2<f64>]) {
    let n = train.nrows() as f64;
    let mean = train.sum_axis(Axis(0)) / n;
    let mut std = train.map_axis(Axis(0), |c| {
        let m = c.sum() / n;
        (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt()
    });
    std.mapv_inplace(|s| if s >= DEGENERATE_STD { s } else { f64::INFINITY });
    let apply = |m: &mut Array2<f64>| {
        for mut row in m.rows_mut() {
            row -= &mean;
            row /= &std;
        }
    };
    apply(train);
    for m in others.iter_mut() {
        apply(m);
    }
}

/// Feature rows with their labels.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSet {
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
}

impl FeatureSet {
    pub fn new(features: Array2<f64>, labels: Vec<u8>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Contract(format!(
                "{} feature rows for {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        Ok(FeatureSet { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// `label,x0,x1,...` for the first `max_rows` samples.
    pub fn write_csv<W: Write>(&self, mut out: W, max_rows: usize) -> std::io::Result<()> {
        write!(out, "label")?;
        for j in 0..self.dim() {
            write!(out, ",x{j}")?;
        }
        writeln!(out)?;
        for (row, label) in self.features.rows().into_iter().zip(&self.labels).take(max_rows) {
            write!(out, "{label}")?;
            for v in row {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Header describing how a cached feature file was produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureHeader {
    /// Hex digest of the full producing configuration.
    pub key: String,
    pub dim: usize,
    pub mode: ShotMode,
    pub shots: u64,
    pub seed: u64,
    pub standardization: Standardization,
}

const FEATURE_MAGIC: &[u8; 8] = b"QRCFEAT1";

/// Train and test features of one configuration in one flat file.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureCache {
    pub header: FeatureHeader,
    pub train: FeatureSet,
    pub test: FeatureSet,
}

impl FeatureCache {
    pub fn save(&self, path: &Path) -> Result<()> {
        let h = &self.header;
        if self.train.dim() != h.dim || self.test.dim() != h.dim {
            return Err(Error::Contract("feature width differs from header".into()));
        }
        let tmp = path.with_extension("partial");
        let mut w = BinWriter::create(&tmp)?;
        w.bytes(FEATURE_MAGIC)?;
        let key = h.key.as_bytes();
        w.u64(key.len() as u64)?;
        w.bytes(key)?;
        w.u64(self.train.len() as u64)?;
        w.u64(self.test.len() as u64)?;
        w.u64(h.dim as u64)?;
        w.u8(match h.mode {
            ShotMode::Exact => 0,
            ShotMode::Sampled => 1,
        })?;
        w.u64(h.shots)?;
        w.u64(h.seed)?;
        w.u8(match h.standardization {
            Standardization::PerSample => 0,
            Standardization::PerFeature => 1,
        })?;
        for set in [&self.train, &self.test] {
            w.bytes(&set.labels)?;
            w.f64s(set.features.iter())?;
        }
        w.finish()?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    /// Loads a cache file, refusing it unless its key equals `expected_key`.
    pub fn load(path: &Path, expected_key: &str) -> Result<FeatureCache> {
        let mut r = BinReader::open(path)?;
        let mismatch = |reason: String| Error::CacheMismatch {
            path: path.to_path_buf(),
            reason,
        };
        let mut magic = [0u8; 8];
        r.bytes(&mut magic)?;
        if &magic != FEATURE_MAGIC {
            return Err(mismatch("not a feature cache file".into()));
        }
        let key_len = r.u64()? as usize;
        if key_len > 1024 {
            return Err(mismatch(format!("implausible key length {key_len}")));
        }
        let mut key = vec![0u8; key_len];
        r.bytes(&mut key)?;
        let key = String::from_utf8(key).map_err(|_| mismatch("key is not UTF-8".into()))?;
        if key != expected_key {
            return Err(mismatch(format!("stored key {key}, expected {expected_key}")));
        }
        let n_train = r.u64()? as usize;
        let n_test = r.u64()? as usize;
        let dim = r.u64()? as usize;
        let mode = match r.u8()? {
            0 => ShotMode::Exact,
            1 => ShotMode::Sampled,
            other => return Err(mismatch(format!("unknown shot mode {other}"))),
        };
        let shots = r.u64()?;
        let seed = r.u64()?;
        let standardization = match r.u8()? {
            0 => Standardization::PerSample,
            1 => Standardization::PerFeature,
            other => return Err(mismatch(format!("unknown standardization {other}"))),
        };
        let mut read_set = |n: usize| -> Result<FeatureSet> {
            let mut labels = vec![0u8; n];
            r.bytes(&mut labels)?;
            let data = r.f64s(n * dim)?;
            FeatureSet::new(Array2::from_shape_vec((n, dim), data).expect("n*dim"), labels)
        };
        let train = read_set(n_train)?;
        let test = read_set(n_test)?;
        r.expect_eof()?;
        Ok(FeatureCache {
            header: FeatureHeader {
                key,
                dim,
                mode,
                shots,
                seed,
                standardization,
            },
            train,
            test,
        })
    }
}
