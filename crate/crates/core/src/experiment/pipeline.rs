use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Baseline, ExperimentConfig};
use crate::binio::sha256_hex;
use crate::data::{encode_angles, fit_pca, fit_pca_up_to_rank, load_mnist_idx, prepare_state, ImageDataset, PcaModel};
use crate::dynamics::{cached_propagator, floquet_operator, UnitaryMatrix, NORM_TOLERANCE};
use crate::error::{Error, Result};
use crate::network::{
    degree_distribution, effective_hamiltonian, percolation_network, summarize, NetworkSummary,
    DEFAULT_WEIGHT_FLOOR,
};
use crate::onn::{self, window_summary, EpochMetrics, OnnModel, WindowSummary};
use crate::readout::{
    sample_frequencies, standardize, standardize_columns, FeatureCache, FeatureHeader, FeatureSet, ShotConfig,
    ShotMode, Standardization,
};

/// Rows evolved per dense multiply.
const EVOLVE_CHUNK: usize = 256;

/// Sampling streams of test images start here so they never collide with training ones.
const TEST_STREAM_OFFSET: u64 = 1 << 32;

/// Byte range of MNIST pixels; scales the classical baseline features.
const PIXEL_SCALE: f64 = 255.0;

/// Creates `path` (and parents) and writes the config-hash comment line.
fn csv_writer(path: &Path, config_hash: &str) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "# config_hash={config_hash}").map_err(|e| Error::io(path, e))?;
    Ok(w)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    write_text(path, &(text + "\n"))
}

/// The train/test images of a run, after subsampling.
pub struct Inputs {
    pub train: ImageDataset,
    pub test: ImageDataset,
    train_fingerprint: String,
    test_fingerprint: String,
}

impl Inputs {
    pub fn new(train: ImageDataset, test: ImageDataset) -> Self {
        Inputs {
            train_fingerprint: train.fingerprint(),
            test_fingerprint: test.fingerprint(),
            train,
            test,
        }
    }

    /// Reads both IDX pairs named in `cfg` and draws the stratified subsamples.
    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        let train = load_mnist_idx(&cfg.train_images, &cfg.train_labels)?
            .stratified_subsample(cfg.train_samples, cfg.subsample_seed)?;
        let test = load_mnist_idx(&cfg.test_images, &cfg.test_labels)?
            .stratified_subsample(cfg.test_samples, cfg.subsample_seed)?;
        log::info!("loaded {} train / {} test images", train.len(), test.len());
        Ok(Inputs::new(train, test))
    }
}

fn pca_request(cfg: &ExperimentConfig) -> (usize, bool) {
    match cfg.baseline {
        Baseline::Onn784 => (usize::MAX, true),
        _ => (cfg.pca_components(), false),
    }
}

/// PCA fitted on the training images, loaded from the cache directory when present.
pub fn cached_pca(cfg: &ExperimentConfig, inputs: &Inputs) -> Result<PcaModel> {
    let (k, up_to_rank) = pca_request(cfg);
    let key = sha256_hex(format!("{}:{k}:{up_to_rank}", inputs.train_fingerprint).as_bytes());
    let path = cfg.cache_dir.join(format!("pca-{}.bin", &key[..16]));
    if path.exists() {
        log::info!("PCA cache hit: {}", path.display());
        return PcaModel::load(&path);
    }
    let pca = if up_to_rank {
        fit_pca_up_to_rank(&inputs.train, k)?
    } else {
        fit_pca(&inputs.train, k)?
    };
    pca.save(&path)?;
    Ok(pca)
}

#[derive(Serialize)]
struct FeatureKeyFields<'a> {
    format: u32,
    baseline: Baseline,
    drive: Option<String>,
    shots: Option<&'a ShotConfig>,
    standardization: Option<Standardization>,
    pca: String,
    train: &'a str,
    test: &'a str,
}

/// Digest of everything the feature matrices depend on.
pub fn feature_key(cfg: &ExperimentConfig, inputs: &Inputs, pca: &PcaModel) -> String {
    let quantum = cfg.baseline != Baseline::Onn784;
    let shots = cfg.shot_config();
    let fields = FeatureKeyFields {
        format: 1,
        baseline: if quantum { Baseline::None } else { Baseline::Onn784 },
        drive: quantum.then(|| cfg.drive().fingerprint()),
        shots: quantum.then_some(&shots),
        standardization: quantum.then_some(cfg.standardization),
        pca: pca.fingerprint(),
        train: &inputs.train_fingerprint,
        test: &inputs.test_fingerprint,
    };
    sha256_hex(serde_json::to_string(&fields).expect("serializable").as_bytes())
}

pub fn feature_cache_path(cfg: &ExperimentConfig, key: &str) -> PathBuf {
    cfg.cache_dir.join(format!("features-{}.bin", &key[..16]))
}

/// Outcome distributions (one row per image) after evolution by `propagator`.
///
/// Sample `i` draws its shots from random stream `stream_offset + i`.
pub fn reservoir_distributions(
    pca: &PcaModel,
    data: &ImageDataset,
    propagator: &UnitaryMatrix,
    shots: &ShotConfig,
    stream_offset: u64,
) -> Result<Array2<f64>> {
    shots.validate()?;
    let dim = propagator.dim();
    if pca.num_components() != 2 * propagator.num_qubits() {
        return Err(Error::Config(format!(
            "PCA has {} components but the reservoir has {} qubits",
            pca.num_components(),
            propagator.num_qubits()
        )));
    }
    let mut out = Array2::<f64>::zeros((data.len(), dim));
    for start in (0..data.len()).step_by(EVOLVE_CHUNK) {
        let end = (start + EVOLVE_CHUNK).min(data.len());
        let states: Vec<Vec<Complex64>> = (start..end)
            .into_par_iter()
            .map(|i| Ok(prepare_state(&encode_angles(pca, data.image(i))?).into_amplitudes().to_vec()))
            .collect::<Result<_>>()?;
        let flat: Vec<Complex64> = states.into_iter().flatten().collect();
        let batch = Array2::from_shape_vec((end - start, dim), flat).expect("rows of equal width");
        let evolved = crate::dynamics::evolve_rows(&batch, propagator)?;
        let rows: Vec<Vec<f64>> = (0..end - start)
            .into_par_iter()
            .map(|r| {
                let amps = evolved.row(r);
                let norm_sqr: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
                if (norm_sqr.sqrt() - 1.0).abs() > NORM_TOLERANCE {
                    return Err(Error::Numerical(format!(
                        "evolved state of sample {} has norm {}",
                        start + r,
                        norm_sqr.sqrt()
                    )));
                }
                let probs: Vec<f64> = amps.iter().map(|z| z.norm_sqr() / norm_sqr).collect();
                match shots.mode {
                    ShotMode::Exact => Ok(probs),
                    ShotMode::Sampled => {
                        sample_frequencies(&probs, shots.shots, shots.seed, stream_offset + (start + r) as u64)
                    }
                }
            })
            .collect::<Result<_>>()?;
        for (r, row) in rows.iter().enumerate() {
            out.row_mut(start + r).assign(&ArrayView1::from(row));
        }
        log::debug!("evolved samples {start}..{end}");
    }
    Ok(out)
}

fn standardize_rows(m: &mut Array2<f64>) {
    let rows: Vec<Vec<f64>> = (0..m.nrows())
        .into_par_iter()
        .map(|r| standardize(m.row(r).as_slice().expect("standard layout")))
        .collect();
    for (r, z) in rows.iter().enumerate() {
        m.row_mut(r).assign(&ArrayView1::from(z));
    }
}

/// Computes train and test features for `cfg` without touching the feature cache.
pub fn compute_features(cfg: &ExperimentConfig, inputs: &Inputs, pca: &PcaModel) -> Result<(FeatureSet, FeatureSet)> {
    let (train, test) = if cfg.baseline == Baseline::Onn784 {
        let scale = |m: Array2<f64>| m / PIXEL_SCALE;
        (scale(pca.project_all(&inputs.train)), scale(pca.project_all(&inputs.test)))
    } else {
        let (u, _) = cached_propagator(&cfg.cache_dir, &cfg.drive())?;
        let shots = cfg.shot_config();
        let mut train = reservoir_distributions(pca, &inputs.train, &u, &shots, 0)?;
        let mut test = reservoir_distributions(pca, &inputs.test, &u, &shots, TEST_STREAM_OFFSET)?;
        match cfg.standardization {
            Standardization::PerSample => {
                standardize_rows(&mut train);
                standardize_rows(&mut test);
            }
            Standardization::PerFeature => standardize_columns(&mut train, &mut [&mut test]),
        }
        (train, test)
    };
    Ok((
        FeatureSet::new(train, inputs.train.labels().to_vec())?,
        FeatureSet::new(test, inputs.test.labels().to_vec())?,
    ))
}

pub struct FeatureOutcome {
    pub path: PathBuf,
    pub cache: FeatureCache,
    /// True when the cache already existed and nothing was recomputed.
    pub hit: bool,
}

/// Returns the feature cache for `cfg`, computing and storing it on a miss.
pub fn ensure_features(cfg: &ExperimentConfig, inputs: &Inputs) -> Result<FeatureOutcome> {
    let pca = cached_pca(cfg, inputs)?;
    let key = feature_key(cfg, inputs, &pca);
    let path = feature_cache_path(cfg, &key);
    if path.exists() {
        log::info!("feature cache hit: {}", path.display());
        let cache = FeatureCache::load(&path, &key)?;
        return Ok(FeatureOutcome { path, cache, hit: true });
    }
    let (train, test) = compute_features(cfg, inputs, &pca)?;
    let shots = cfg.shot_config();
    let cache = FeatureCache {
        header: FeatureHeader {
            key,
            dim: train.dim(),
            mode: shots.mode,
            shots: shots.shots,
            seed: shots.seed,
            standardization: cfg.standardization,
        },
        train,
        test,
    };
    cache.save(&path)?;
    log::info!("wrote feature cache {}", path.display());
    Ok(FeatureOutcome { path, cache, hit: false })
}

/// Loads the feature cache for `cfg`, failing with [`Error::MissingCache`] if absent.
pub fn load_features(cfg: &ExperimentConfig, inputs: &Inputs) -> Result<FeatureCache> {
    let pca = cached_pca(cfg, inputs)?;
    let key = feature_key(cfg, inputs, &pca);
    let path = feature_cache_path(cfg, &key);
    if !path.exists() {
        return Err(Error::MissingCache { path });
    }
    FeatureCache::load(&path, &key)
}

#[derive(Serialize)]
struct FeatureReport<'a> {
    config_hash: String,
    cache: String,
    key: &'a str,
    cache_hit: bool,
    feature_dim: usize,
    train_samples: usize,
    test_samples: usize,
}

/// `features` subcommand: builds (or reuses) the feature cache and reports it.
pub fn cmd_features(cfg: &ExperimentConfig) -> Result<FeatureOutcome> {
    let inputs = Inputs::load(cfg)?;
    let outcome = ensure_features(cfg, &inputs)?;
    let report = FeatureReport {
        config_hash: cfg.hash(),
        cache: outcome.path.display().to_string(),
        key: &outcome.cache.header.key,
        cache_hit: outcome.hit,
        feature_dim: outcome.cache.header.dim,
        train_samples: outcome.cache.train.len(),
        test_samples: outcome.cache.test.len(),
    };
    write_json(&cfg.run_dir.join("features.json"), &report)?;
    Ok(outcome)
}

/// Network analysis of one drive, one row per ε in `cfg.epsilons`.
pub fn cmd_network(cfg: &ExperimentConfig) -> Result<Vec<NetworkSummary>> {
    if cfg.epsilons.is_empty() {
        return Err(Error::Usage("the epsilons list is empty; nothing to analyse".into()));
    }
    let hash = cfg.hash();
    let dir = cfg.run_dir.join("network");
    let mut rows = Vec::with_capacity(cfg.epsilons.len());
    // sequential on purpose: each point already saturates LAPACK
    for &eps in &cfg.epsilons {
        let mut drive = cfg.drive();
        drive.epsilon = eps;
        log::info!("network for N={} eps={eps}", drive.num_qubits);
        let f = floquet_operator(&drive)?;
        let h = effective_hamiltonian(&f)?;
        let net = percolation_network(&h, DEFAULT_WEIGHT_FLOOR);
        let hist = degree_distribution(&net);
        let path = dir.join(format!("degree-eps{eps}.csv"));
        let mut w = csv_writer(&path, &hash)?;
        hist.write_csv(&mut w).map_err(|e| Error::io(&path, e))?;
        w.flush().map_err(|e| Error::io(&path, e))?;
        if cfg.write_edges {
            let path = dir.join(format!("edges-eps{eps}.csv"));
            let mut w = csv_writer(&path, &hash)?;
            net.write_edges_csv(&mut w).map_err(|e| Error::io(&path, e))?;
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        rows.push(summarize(eps, &net, &hist));
    }
    let path = dir.join("summary.csv");
    let mut w = csv_writer(&path, &hash)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut body = String::from("epsilon,num_nodes,edges,max_degree,distinct_degrees,slope,r_squared\n");
    for r in &rows {
        body += &format!(
            "{},{},{},{},{},{},{}\n",
            r.epsilon,
            r.num_nodes,
            r.edges,
            r.max_degree,
            r.distinct_degrees,
            opt(r.slope),
            opt(r.r_squared)
        );
    }
    w.write_all(body.as_bytes()).map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

pub struct TrainOutcome {
    pub model: OnnModel,
    pub history: Vec<EpochMetrics>,
    pub window: WindowSummary,
}

/// Trains the readout on already computed features.
pub fn train_on_features(cfg: &ExperimentConfig, cache: &FeatureCache) -> Result<TrainOutcome> {
    let tc = cfg.train_config();
    let model = OnnModel::initialize(cache.train.dim(), tc.init_scale, tc.seed);
    let test = (!cache.test.is_empty()).then_some(&cache.test);
    let (model, history) = onn::train(model, &cache.train, test, &tc)?;
    let window = window_summary(&history, cfg.window_start, cfg.window_end)?;
    Ok(TrainOutcome { model, history, window })
}

fn write_metrics(path: &Path, hash: &str, history: &[EpochMetrics]) -> Result<()> {
    let mut w = csv_writer(path, hash)?;
    onn::write_metrics_csv(&mut w, history).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct TrainReport<'a> {
    config_hash: String,
    feature_key: &'a str,
    feature_dim: usize,
    train_samples: usize,
    test_samples: usize,
    window: &'a WindowSummary,
    last_epoch: Option<&'a EpochMetrics>,
}

/// `train` subcommand: needs the feature cache produced by `features`.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    let inputs = Inputs::load(cfg)?;
    let cache = load_features(cfg, &inputs)?;
    let outcome = train_on_features(cfg, &cache)?;
    let hash = cfg.hash();
    let dir = cfg.run_dir.join("train");
    write_metrics(&dir.join("metrics.csv"), &hash, &outcome.history)?;
    outcome.model.save(&dir.join("model.bin"))?;
    let sidecar = format!(
        "# config_hash={hash}\n# feature_key={}\n{}",
        cache.header.key,
        cfg.to_toml()
    );
    write_text(&dir.join("model.txt"), &sidecar)?;
    let report = TrainReport {
        config_hash: hash,
        feature_key: &cache.header.key,
        feature_dim: cache.header.dim,
        train_samples: cache.train.len(),
        test_samples: cache.test.len(),
        window: &outcome.window,
        last_epoch: outcome.history.last(),
    };
    write_json(&dir.join("summary.json"), &report)?;
    Ok(outcome)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Epsilon,
    Periods,
    Qubits,
    Dropout,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 4] = [SweepAxis::Epsilon, SweepAxis::Periods, SweepAxis::Qubits, SweepAxis::Dropout];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Periods => "periods",
            SweepAxis::Qubits => "qubits",
            SweepAxis::Dropout => "dropout",
        }
    }

    /// One configuration per sweep value, labelled by that value.
    pub fn points(self, cfg: &ExperimentConfig) -> Vec<(String, ExperimentConfig)> {
        let with = |label: String, f: &dyn Fn(&mut ExperimentConfig)| {
            let mut c = cfg.clone();
            f(&mut c);
            (label, c)
        };
        match self {
            SweepAxis::Epsilon => cfg.epsilons.iter().map(|&v| with(v.to_string(), &|c| c.epsilon = v)).collect(),
            SweepAxis::Periods => cfg.periods_list.iter().map(|&v| with(v.to_string(), &|c| c.periods = v)).collect(),
            SweepAxis::Qubits => cfg.qubits_list.iter().map(|&v| with(v.to_string(), &|c| c.num_qubits = v)).collect(),
            SweepAxis::Dropout => cfg.dropouts.iter().map(|&v| with(v.to_string(), &|c| c.dropout = v)).collect(),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown sweep axis `{s}` (epsilon, periods, qubits, dropout)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: String,
    pub window: WindowSummary,
}

/// `sweep` subcommand: features (built on demand) and training for every point on `axis`.
pub fn cmd_sweep(cfg: &ExperimentConfig, axis: SweepAxis) -> Result<Vec<SweepRow>> {
    let points = axis.points(cfg);
    if points.is_empty() {
        return Err(Error::Usage(format!("the {axis} sweep list is empty")));
    }
    for (_, c) in &points {
        c.validate()?;
    }
    let hash = cfg.hash();
    let dir = cfg.run_dir.join("sweep").join(axis.name());
    let inputs = Inputs::load(cfg)?;
    let mut rows = Vec::with_capacity(points.len());
    for (label, point) in &points {
        log::info!("sweep {axis} = {label}");
        let features = ensure_features(point, &inputs)?;
        let outcome = train_on_features(point, &features.cache)?;
        write_metrics(&dir.join(format!("metrics-{label}.csv")), &hash, &outcome.history)?;
        rows.push(SweepRow {
            value: label.clone(),
            window: outcome.window,
        });
    }
    let path = dir.join("summary.csv");
    let mut w = csv_writer(&path, &hash)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut body = format!("{axis},train_mean,train_std,test_mean,test_std,gap_mean\n");
    for r in &rows {
        let s = &r.window;
        body += &format!(
            "{},{},{},{},{},{}\n",
            r.value,
            s.train_mean,
            s.train_std,
            opt(s.test_mean),
            opt(s.test_std),
            opt(s.gap_mean)
        );
    }
    w.write_all(body.as_bytes()).map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}
