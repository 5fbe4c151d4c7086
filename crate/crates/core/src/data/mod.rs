//! Classical input side: MNIST ingestion, PCA compression and qubit encoding.

mod encoding;
mod idx;
mod pca;

pub use encoding::{coefficient_to_angle, encode_angles, prepare_state, EncodedSample};
pub use idx::{load_mnist_idx, write_idx_images, write_idx_labels, ImageDataset, IMAGE_MAGIC, LABEL_MAGIC};
pub use pca::{fit_pca, fit_pca_up_to_rank, PcaModel};
