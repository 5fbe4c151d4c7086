use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::binio::{sha256_hex, BinWriter};
use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;

const NUM_CLASSES: usize = 10;

/// Grayscale images (row-major bytes) with digit labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageDataset {
    pixels: Vec<u8>,
    labels: Vec<u8>,
    rows: usize,
    cols: usize,
}

impl ImageDataset {
    pub fn new(pixels: Vec<u8>, labels: Vec<u8>, rows: usize, cols: usize) -> Result<Self> {
        let per = rows * cols;
        if per == 0 || pixels.len() != labels.len() * per {
            return Err(Error::Contract(format!(
                "{} pixels do not form {} images of {rows}x{cols}",
                pixels.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l as usize >= NUM_CLASSES) {
            return Err(Error::Contract(format!("label {bad} outside 0..=9")));
        }
        Ok(ImageDataset {
            pixels,
            labels,
            rows,
            cols,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn pixels_per_image(&self) -> usize {
        self.rows * self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn image(&self, index: usize) -> &[u8] {
        let per = self.pixels_per_image();
        &self.pixels[index * per..(index + 1) * per]
    }

    pub fn images(&self) -> impl ExactSizeIterator<Item = &[u8]> {
        self.pixels.chunks_exact(self.pixels_per_image())
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// SHA-256 over shape, labels and pixels.
    pub fn fingerprint(&self) -> String {
        let mut bytes = Vec::with_capacity(16 + self.labels.len() + self.pixels.len());
        bytes.extend_from_slice(&(self.rows as u64).to_le_bytes());
        bytes.extend_from_slice(&(self.cols as u64).to_le_bytes());
        bytes.extend_from_slice(&self.labels);
        bytes.extend_from_slice(&self.pixels);
        sha256_hex(&bytes)
    }

    pub fn subset(&self, indices: &[usize]) -> ImageDataset {
        let mut pixels = Vec::with_capacity(indices.len() * self.pixels_per_image());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            pixels.extend_from_slice(self.image(i));
            labels.push(self.labels[i]);
        }
        ImageDataset {
            pixels,
            labels,
            rows: self.rows,
            cols: self.cols,
        }
    }

    /// Seeded class-balanced subsample of `total` images, kept in file order.
    ///
    /// `total == 0` or `total >= len()` returns the whole set. Remainders of
    /// `total / 10` go to the lowest digits.
    pub fn stratified_subsample(&self, total: usize, seed: u64) -> Result<ImageDataset> {
        if total == 0 || total >= self.len() {
            return Ok(self.clone());
        }
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); NUM_CLASSES];
        for (i, &l) in self.labels.iter().enumerate() {
            by_class[l as usize].push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chosen = Vec::with_capacity(total);
        for (class, members) in by_class.iter_mut().enumerate() {
            let quota = total / NUM_CLASSES + usize::from(class < total % NUM_CLASSES);
            if members.len() < quota {
                return Err(Error::Config(format!(
                    "digit {class} has {} images, fewer than the {quota} requested",
                    members.len()
                )));
            }
            members.shuffle(&mut rng);
            chosen.extend_from_slice(&members[..quota]);
        }
        chosen.sort_unstable();
        Ok(self.subset(&chosen))
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Ingest {
            path: path.to_path_buf(),
            offset: offset as u64,
            reason: "truncated header".into(),
        })
}

fn check_magic(found: u32, expected: u32, path: &Path) -> Result<()> {
    if found != expected {
        return Err(Error::Ingest {
            path: path.to_path_buf(),
            offset: 0,
            reason: format!("bad magic number {found}, expected {expected}"),
        });
    }
    Ok(())
}

fn check_payload(bytes: &[u8], header: usize, expected: usize, path: &Path) -> Result<()> {
    let have = bytes.len() - header;
    if have != expected {
        return Err(Error::Ingest {
            path: path.to_path_buf(),
            offset: bytes.len() as u64,
            reason: format!(
                "{} payload: {expected} bytes declared, {have} present",
                if have < expected { "truncated" } else { "oversized" }
            ),
        });
    }
    Ok(())
}

/// Parses an IDX image file (magic 2051) and its IDX label file (magic 2049).
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path) -> Result<ImageDataset> {
    let images = read_file(images_path)?;
    check_magic(be_u32(&images, 0, images_path)?, IMAGE_MAGIC, images_path)?;
    let count = be_u32(&images, 4, images_path)? as usize;
    let rows = be_u32(&images, 8, images_path)? as usize;
    let cols = be_u32(&images, 12, images_path)? as usize;
    check_payload(&images, 16, count * rows * cols, images_path)?;

    let labels = read_file(labels_path)?;
    check_magic(be_u32(&labels, 0, labels_path)?, LABEL_MAGIC, labels_path)?;
    let label_count = be_u32(&labels, 4, labels_path)? as usize;
    check_payload(&labels, 8, label_count, labels_path)?;
    if label_count != count {
        return Err(Error::Ingest {
            path: labels_path.to_path_buf(),
            offset: 4,
            reason: format!(
                "{label_count} labels for {count} images in {}",
                images_path.display()
            ),
        });
    }
    if let Some(pos) = labels[8..].iter().position(|&l| l > 9) {
        return Err(Error::Ingest {
            path: labels_path.to_path_buf(),
            offset: (8 + pos) as u64,
            reason: format!("label {} outside 0..=9", labels[8 + pos]),
        });
    }
    ImageDataset::new(images[16..].to_vec(), labels[8..].to_vec(), rows, cols)
}

pub fn write_idx_images(path: &Path, data: &ImageDataset) -> Result<()> {
    let mut w = BinWriter::create(path)?;
    let (rows, cols) = data.shape();
    for v in [IMAGE_MAGIC, data.len() as u32, rows as u32, cols as u32] {
        w.bytes(&v.to_be_bytes())?;
    }
    w.bytes(&data.pixels)?;
    w.finish()
}

pub fn write_idx_labels(path: &Path, data: &ImageDataset) -> Result<()> {
    let mut w = BinWriter::create(path)?;
    for v in [LABEL_MAGIC, data.len() as u32] {
        w.bytes(&v.to_be_bytes())?;
    }
    w.bytes(&data.labels)?;
    w.finish()
}
