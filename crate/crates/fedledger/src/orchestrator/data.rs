use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::canonical::{derive_stream_seed, derive_tagged_seed};
use crate::fl::{ClientId, LocalDataset};
use crate::privacy::standard_normal;

use super::OrchestratorError;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Error)]
pub enum IdxError {
    #[error("{file}: bad magic {got:#010x}, want {want:#010x}")]
    WrongMagic { file: String, got: u32, want: u32 },
    #[error("{file}: truncated, need {needed} bytes but file has {got}")]
    Truncated { file: String, needed: usize, got: usize },
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Flattened image rows with pixel values scaled into [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct IdxData {
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub rows: usize,
    pub cols: usize,
}

fn read_u32_be(bytes: &[u8], offset: usize, file: &str) -> Result<u32, IdxError> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(IdxError::Truncated { file: file.into(), needed: end, got: bytes.len() });
    }
    Ok(u32::from_be_bytes(bytes[offset..end].try_into().expect("4-byte slice")))
}

/// Parses a big-endian IDX image/label file pair.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<IdxData, IdxError> {
    let img_name = images_path.display().to_string();
    let lbl_name = labels_path.display().to_string();
    let img = fs::read(images_path)?;
    let lbl = fs::read(labels_path)?;

    let magic = read_u32_be(&img, 0, &img_name)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(IdxError::WrongMagic { file: img_name, got: magic, want: IDX_IMAGES_MAGIC });
    }
    let count = read_u32_be(&img, 4, &img_name)? as usize;
    let rows = read_u32_be(&img, 8, &img_name)? as usize;
    let cols = read_u32_be(&img, 12, &img_name)? as usize;
    let needed = 16 + count * rows * cols;
    if img.len() < needed {
        return Err(IdxError::Truncated { file: img_name, needed, got: img.len() });
    }

    let magic = read_u32_be(&lbl, 0, &lbl_name)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(IdxError::WrongMagic { file: lbl_name, got: magic, want: IDX_LABELS_MAGIC });
    }
    let lbl_count = read_u32_be(&lbl, 4, &lbl_name)? as usize;
    let lbl_needed = 8 + lbl_count;
    if lbl.len() < lbl_needed {
        return Err(IdxError::Truncated { file: lbl_name, needed: lbl_needed, got: lbl.len() });
    }
    if count != lbl_count {
        return Err(IdxError::CountMismatch { images: count, labels: lbl_count });
    }

    let pixels = rows * cols;
    let images = (0..count)
        .map(|i| {
            img[16 + i * pixels..16 + (i + 1) * pixels]
                .iter()
                .map(|&b| b as f64 / 255.0)
                .collect()
        })
        .collect();
    let labels = lbl[8..8 + count].iter().map(|&b| b as usize).collect();
    Ok(IdxData { images, labels, rows, cols })
}

/// Slices loaded IDX data into per-client datasets, consuming samples in
/// file order. The class count is shared across clients and inferred from
/// the whole label set.
pub fn partition_idx(data: &IdxData, sizes: &[usize]) -> Result<Vec<LocalDataset>, OrchestratorError> {
    let total: usize = sizes.iter().sum();
    if total > data.images.len() {
        return Err(OrchestratorError::Config(format!(
            "partition sizes sum to {total} but the dataset has {} samples",
            data.images.len()
        )));
    }
    let classes = data.labels.iter().max().map_or(2, |&m| (m + 1).max(2));
    let features = data.rows * data.cols;
    let mut offset = 0;
    sizes
        .iter()
        .map(|&n| {
            let xs = data.images[offset..offset + n].to_vec();
            let ys = data.labels[offset..offset + n].to_vec();
            offset += n;
            Ok(LocalDataset::new(features, classes, xs, ys)?)
        })
        .collect()
}

pub fn client_ids(count: usize) -> Vec<ClientId> {
    (0..count).map(|i| format!("client-{i:03}")).collect()
}

/// Gaussian blobs: one seeded random unit direction per class, scaled by
/// `separation`, shared by every client; samples are that mean plus unit
/// isotropic noise, with uniformly random labels.
pub fn generate_synthetic(
    master_seed: u64,
    clients: usize,
    samples_per_client: usize,
    features: usize,
    classes: usize,
    separation: f64,
) -> Result<Vec<LocalDataset>, OrchestratorError> {
    let means = class_means(master_seed, classes, features, separation);
    client_ids(clients)
        .iter()
        .map(|id| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_tagged_seed(master_seed, id, 0, "data"));
            let mut xs = Vec::with_capacity(samples_per_client);
            let mut ys = Vec::with_capacity(samples_per_client);
            for _ in 0..samples_per_client {
                let y = rng.random_range(0..classes);
                xs.push((0..features).map(|f| means[y][f] + standard_normal(&mut rng)).collect());
                ys.push(y);
            }
            Ok(LocalDataset::new(features, classes, xs, ys)?)
        })
        .collect()
}

fn class_means(master_seed: u64, classes: usize, features: usize, separation: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_stream_seed(master_seed, "class-means"));
    (0..classes)
        .map(|_| {
            let mut dir: Vec<f64> = (0..features).map(|_| standard_normal(&mut rng)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-12 {
                dir = vec![0.0; features];
                dir[0] = 1.0;
                return dir.iter().map(|v| v * separation).collect();
            }
            dir.iter().map(|v| v / norm * separation).collect()
        })
        .collect()
}

/// Carves a seeded 20% holdout (floor(n/5) samples per client) out of the
/// client datasets before any training happens. The remaining samples keep
/// their original relative order.
pub fn split_holdout(
    master_seed: u64,
    ids: &[ClientId],
    datasets: Vec<LocalDataset>,
) -> Result<(Vec<LocalDataset>, LocalDataset), OrchestratorError> {
    let features = datasets[0].features;
    let classes = datasets[0].classes;
    let mut train = Vec::with_capacity(datasets.len());
    let mut holdout_xs = Vec::new();
    let mut holdout_ys = Vec::new();
    for (id, ds) in ids.iter().zip(datasets) {
        let n = ds.len();
        let mut indices: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_tagged_seed(master_seed, id, 0, "split"));
        indices.shuffle(&mut rng);
        let (held, kept) = indices.split_at(n / 5);
        let mut held: Vec<usize> = held.to_vec();
        let mut kept: Vec<usize> = kept.to_vec();
        held.sort_unstable();
        kept.sort_unstable();
        for &i in &held {
            holdout_xs.push(ds.xs[i].clone());
            holdout_ys.push(ds.ys[i]);
        }
        let xs: Vec<Vec<f64>> = kept.iter().map(|&i| ds.xs[i].clone()).collect();
        let ys: Vec<usize> = kept.iter().map(|&i| ds.ys[i]).collect();
        train.push(LocalDataset::new(features, classes, xs, ys)?);
    }
    if holdout_xs.is_empty() {
        return Err(OrchestratorError::Config(
            "held-out evaluation set is empty; give at least one client 5 or more samples".into(),
        ));
    }
    let holdout = LocalDataset::new(features, classes, holdout_xs, holdout_ys)?;
    Ok((train, holdout))
}
