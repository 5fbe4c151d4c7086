use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::SVD;

use super::ImageDataset;
use crate::binio::{sha256_hex, BinReader, BinWriter};
use crate::error::{Error, Result};

const PCA_MAGIC: &[u8; 8] = b"QRCPCA01";

/// Mean-centred principal axes of a training set plus the projection range
/// each axis spans over that set.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    mean: Array1<f64>,
    /// One principal axis per row, by descending singular value.
    basis: Array2<f64>,
    train_min: Vec<f64>,
    train_max: Vec<f64>,
    explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn num_components(&self) -> usize {
        self.basis.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn basis(&self) -> &Array2<f64> {
        &self.basis
    }

    pub fn train_min(&self) -> &[f64] {
        &self.train_min
    }

    pub fn train_max(&self) -> &[f64] {
        &self.train_max
    }

    pub fn explained_variance_ratio(&self) -> &[f64] {
        &self.explained_variance_ratio
    }

    /// Coefficients `c̃` of the centred image on each principal axis.
    pub fn project(&self, image: &[u8]) -> Vec<f64> {
        assert_eq!(image.len(), self.input_dim(), "image size does not match the PCA input");
        let centred: Array1<f64> = image
            .iter()
            .zip(self.mean.iter())
            .map(|(&p, m)| p as f64 - m)
            .collect();
        self.basis.dot(&centred).to_vec()
    }

    /// Rows of `c̃` for every image of `data`.
    pub fn project_all(&self, data: &ImageDataset) -> Array2<f64> {
        let centred = centred_matrix(data, &self.mean);
        centred.dot(&self.basis.t())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BinWriter::create(path)?;
        self.write_to(&mut w)?;
        w.finish()
    }

    fn write_to(&self, w: &mut BinWriter) -> Result<()> {
        w.bytes(PCA_MAGIC)?;
        w.u64(self.input_dim() as u64)?;
        w.u64(self.num_components() as u64)?;
        w.f64s(self.mean.iter())?;
        w.f64s(self.basis.iter())?;
        w.f64s(&self.train_min)?;
        w.f64s(&self.train_max)?;
        w.f64s(&self.explained_variance_ratio)
    }

    pub fn load(path: &Path) -> Result<PcaModel> {
        let mut r = BinReader::open(path)?;
        let mut magic = [0u8; 8];
        r.bytes(&mut magic)?;
        if &magic != PCA_MAGIC {
            return Err(Error::CacheMismatch {
                path: path.to_path_buf(),
                reason: "not a PCA model file".into(),
            });
        }
        let dim = r.u64()? as usize;
        let k = r.u64()? as usize;
        let mean = Array1::from(r.f64s(dim)?);
        let basis = Array2::from_shape_vec((k, dim), r.f64s(k * dim)?).expect("k*dim entries");
        let train_min = r.f64s(k)?;
        let train_max = r.f64s(k)?;
        let explained_variance_ratio = r.f64s(k)?;
        r.expect_eof()?;
        Ok(PcaModel {
            mean,
            basis,
            train_min,
            train_max,
            explained_variance_ratio,
        })
    }

    /// SHA-256 over the serialized model.
    pub fn fingerprint(&self) -> String {
        let mut bytes = Vec::new();
        for v in self
            .mean
            .iter()
            .chain(self.basis.iter())
            .chain(&self.train_min)
            .chain(&self.train_max)
        {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        sha256_hex(&bytes)
    }
}

fn centred_matrix(data: &ImageDataset, mean: &Array1<f64>) -> Array2<f64> {
    let dim = data.pixels_per_image();
    let mut x = Array2::zeros((data.len(), dim));
    for (mut row, img) in x.rows_mut().into_iter().zip(data.images()) {
        for ((dst, &p), m) in row.iter_mut().zip(img).zip(mean.iter()) {
            *dst = p as f64 - m;
        }
    }
    x
}

/// Fits `num_components` principal axes to `train` by SVD of the centred data.
///
/// Each axis is signed so that its largest-magnitude coordinate is positive
/// (first such coordinate on ties).
pub fn fit_pca(train: &ImageDataset, num_components: usize) -> Result<PcaModel> {
    fit(train, num_components, false)
}

/// Like [`fit_pca`] but keeps only as many axes as the centred data has rank,
/// so `usize::MAX` yields every informative direction.
pub fn fit_pca_up_to_rank(train: &ImageDataset, max_components: usize) -> Result<PcaModel> {
    fit(train, max_components.min(train.pixels_per_image()), true)
}

fn fit(train: &ImageDataset, num_components: usize, truncate_to_rank: bool) -> Result<PcaModel> {
    let dim = train.pixels_per_image();
    if train.is_empty() {
        return Err(Error::Config("cannot fit PCA on an empty dataset".into()));
    }
    if num_components == 0 || num_components > dim {
        return Err(Error::Config(format!(
            "num_components = {num_components} must lie in 1..={dim}"
        )));
    }
    let n = train.len();
    let mut mean = Array1::<f64>::zeros(dim);
    for img in train.images() {
        for (m, &p) in mean.iter_mut().zip(img) {
            *m += p as f64;
        }
    }
    mean.mapv_inplace(|s| s / n as f64);
    let centred = centred_matrix(train, &mean);

    let (_, sigma, vt) = centred
        .svd(false, true)
        .map_err(|e| Error::Numerical(format!("PCA singular value decomposition failed: {e}")))?;
    let vt = vt.expect("right singular vectors requested");
    let largest = sigma.first().copied().unwrap_or(0.0);
    let cutoff = largest * (n.max(dim) as f64) * f64::EPSILON;
    let rank = sigma.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    let num_components = if truncate_to_rank { num_components.min(rank) } else { num_components };
    if num_components == 0 || num_components > rank {
        return Err(Error::Config(format!(
            "requested {num_components} components but the centred training data has rank {rank}"
        )));
    }

    let mut basis = vt.slice(ndarray::s![..num_components, ..]).to_owned();
    for mut axis in basis.axis_iter_mut(Axis(0)) {
        let pivot = axis
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &v)| if v.abs() > best.1.abs() { (i, v) } else { best })
            .1;
        if pivot < 0.0 {
            axis.mapv_inplace(|v| -v);
        }
    }

    let projections = centred.dot(&basis.t());
    let train_min: Vec<f64> = projections
        .axis_iter(Axis(1))
        .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let train_max: Vec<f64> = projections
        .axis_iter(Axis(1))
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let total_variance: f64 = sigma.iter().map(|s| s * s).sum();
    let explained_variance_ratio = sigma
        .iter()
        .take(num_components)
        .map(|s| s * s / total_variance)
        .collect();

    Ok(PcaModel {
        mean,
        basis,
        train_min,
        train_max,
        explained_variance_ratio,
    })
}
