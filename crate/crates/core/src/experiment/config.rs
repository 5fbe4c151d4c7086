use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::binio::sha256_hex;
use crate::dynamics::{DriveParameters, DEFAULT_MAX_QUBITS};
use crate::error::{Error, Result};
use crate::onn::TrainConfig;
use crate::readout::{ShotConfig, ShotMode, Standardization};

/// Reference runs that bypass part of the reservoir.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    #[default]
    None,
    /// No quantum layer: the ONN reads every PCA coefficient of the image.
    Onn784,
    /// Quantum layer with a perfect π pulse (ε forced to 0).
    EpsilonZero,
}

/// Every knob of an experiment run, stored as a flat key-value TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run_dir: PathBuf,
    pub cache_dir: PathBuf,

    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    /// Stratified subsample sizes; 0 keeps the whole split.
    pub train_samples: usize,
    pub test_samples: usize,
    pub subsample_seed: u64,

    pub num_qubits: usize,
    /// Defaults to `2 * num_qubits`; any other value is rejected.
    pub pca_components: Option<usize>,
    pub epsilon: f64,
    pub j0t: f64,
    pub alpha: f64,
    pub periods: usize,
    pub disorder_width: f64,
    pub drive_seed: u64,
    pub max_qubits: usize,

    pub shot_mode: ShotMode,
    pub shots: u64,
    pub shot_seed: u64,
    pub standardization: Standardization,

    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub dropout: f64,
    pub train_seed: u64,
    pub init_scale: Option<f64>,
    /// Epoch window (inclusive, 1-based) for summary statistics.
    pub window_start: usize,
    pub window_end: usize,

    pub baseline: Baseline,

    pub epsilons: Vec<f64>,
    pub periods_list: Vec<usize>,
    pub qubits_list: Vec<usize>,
    pub dropouts: Vec<f64>,

    /// Also write the full edge list for every network point.
    pub write_edges: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let drive = DriveParameters::default();
        let train = TrainConfig::default();
        let shots = ShotConfig::default();
        ExperimentConfig {
            run_dir: "runs/default".into(),
            cache_dir: "runs/cache".into(),
            train_images: "data/mnist/train-images-idx3-ubyte".into(),
            train_labels: "data/mnist/train-labels-idx1-ubyte".into(),
            test_images: "data/mnist/t10k-images-idx3-ubyte".into(),
            test_labels: "data/mnist/t10k-labels-idx1-ubyte".into(),
            train_samples: 12000,
            test_samples: 2000,
            subsample_seed: 0,
            num_qubits: drive.num_qubits,
            pca_components: None,
            epsilon: drive.epsilon,
            j0t: drive.j0t,
            alpha: drive.alpha,
            periods: drive.periods,
            disorder_width: drive.disorder_width,
            drive_seed: drive.seed,
            max_qubits: DEFAULT_MAX_QUBITS,
            shot_mode: shots.mode,
            shots: shots.shots,
            shot_seed: shots.seed,
            standardization: Standardization::PerSample,
            learning_rate: train.learning_rate,
            batch_size: train.batch_size,
            epochs: train.epochs,
            dropout: train.dropout,
            train_seed: train.seed,
            init_scale: train.init_scale,
            window_start: 200,
            window_end: 300,
            baseline: Baseline::None,
            epsilons: vec![0.0, 0.01, 0.03, 0.1],
            periods_list: vec![10, 30, 50, 70],
            qubits_list: vec![7, 9, 11],
            dropouts: vec![0.0, 0.05, 0.10, 0.15],
            write_edges: false,
        }
    }
}

impl ExperimentConfig {
    /// Reads `path` (if any), applies `key=value` overrides, and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("override `{item}` is not key=value")))?;
            table.insert(key.trim().to_string(), parse_override(raw.trim()));
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(k) = self.pca_components {
            if k != 2 * self.num_qubits {
                return Err(Error::Config(format!(
                    "pca_components = {k} must equal 2 * num_qubits = {}",
                    2 * self.num_qubits
                )));
            }
        }
        if self.window_start > self.window_end {
            return Err(Error::Config(format!(
                "window_start {} exceeds window_end {}",
                self.window_start, self.window_end
            )));
        }
        self.drive().validate()?;
        self.shot_config().validate()
    }

    pub fn pca_components(&self) -> usize {
        2 * self.num_qubits
    }

    pub fn drive(&self) -> DriveParameters {
        DriveParameters {
            num_qubits: self.num_qubits,
            epsilon: if self.baseline == Baseline::EpsilonZero { 0.0 } else { self.epsilon },
            j0t: self.j0t,
            alpha: self.alpha,
            periods: self.periods,
            disorder_width: self.disorder_width,
            seed: self.drive_seed,
            max_qubits: self.max_qubits,
        }
    }

    pub fn shot_config(&self) -> ShotConfig {
        ShotConfig {
            mode: self.shot_mode,
            shots: self.shots,
            seed: self.shot_seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            dropout: self.dropout,
            seed: self.train_seed,
            init_scale: self.init_scale,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// SHA-256 of the canonical JSON form, output locations excluded.
    pub fn hash(&self) -> String {
        let mut key = self.clone();
        key.run_dir = PathBuf::new();
        key.cache_dir = PathBuf::new();
        sha256_hex(serde_json::to_string(&key).expect("serializable").as_bytes())
    }
}

fn parse_override(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key v was just parsed"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}
