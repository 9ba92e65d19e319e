use std::fs;
use std::path::{Path, PathBuf};

use super::ModelError;

pub const MNIST_SHAPE: [usize; 3] = [28, 28, 1];
pub const CIFAR_SHAPE: [usize; 3] = [32, 32, 3];
const CIFAR_RECORD: usize = 1 + 32 * 32 * 3;
const IDX_IMAGES: u32 = 0x0000_0803;
const IDX_LABELS: u32 = 0x0000_0801;

/// Labelled images kept as raw bytes in HWC order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    shape: [usize; 3],
    pixels: Vec<u8>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(shape: [usize; 3], pixels: Vec<u8>, labels: Vec<u8>) -> Result<Self, ModelError> {
        let per: usize = shape.iter().product();
        if per == 0 || pixels.len() != per * labels.len() {
            return Err(ModelError::CountMismatch { images: pixels.len() / per.max(1), labels: labels.len() });
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l > 9) {
            return Err(ModelError::InvalidLabel { index, label });
        }
        Ok(Self { shape, pixels, labels })
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let per = self.pixels.len() / self.labels.len();
        &self.pixels[i * per..(i + 1) * per]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// The first `n` items (all of them if `n` exceeds the size).
    pub fn head(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        let per = self.pixels.len() / self.labels.len().max(1);
        Dataset { shape: self.shape, pixels: self.pixels[..n * per].to_vec(), labels: self.labels[..n].to_vec() }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, ModelError> {
    fs::read(path).map_err(|source| ModelError::Io { path: path.to_path_buf(), source })
}

fn be_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes.get(at..at + 4).map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

fn idx_header(path: &Path, bytes: &[u8], magic: u32, dims: usize) -> Result<Vec<usize>, ModelError> {
    let found = be_u32(bytes, 0);
    if found != Some(magic) {
        return Err(ModelError::BadMagic { path: path.to_path_buf(), expected: magic, found });
    }
    let sizes: Option<Vec<usize>> = (0..dims).map(|d| be_u32(bytes, 4 + 4 * d).map(|v| v as usize)).collect();
    let sizes = sizes.ok_or_else(|| ModelError::TruncatedRecord { path: path.to_path_buf(), offset: bytes.len() })?;
    let body: usize = sizes.iter().product();
    let header = 4 + 4 * dims;
    if bytes.len() != header + body {
        return Err(ModelError::TruncatedRecord { path: path.to_path_buf(), offset: bytes.len().min(header + body) });
    }
    Ok(sizes)
}

/// Read an IDX image file (magic 0x803) and label file (magic 0x801).
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset, ModelError> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let ib = read(ip)?;
    let lb = read(lp)?;
    let idims = idx_header(ip, &ib, IDX_IMAGES, 3)?;
    let ldims = idx_header(lp, &lb, IDX_LABELS, 1)?;
    if idims[0] != ldims[0] {
        return Err(ModelError::CountMismatch { images: idims[0], labels: ldims[0] });
    }
    Dataset::new([idims[1], idims[2], 1], ib[16..].to_vec(), lb[8..].to_vec())
}

/// Read CIFAR-10 binary batches: records of one label byte followed by the
/// red, green and blue 32x32 planes. Images are converted to HWC.
pub fn load_cifar_binary<P: AsRef<Path>>(paths: &[P]) -> Result<Dataset, ModelError> {
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for p in paths {
        let path = p.as_ref();
        let bytes = read(path)?;
        if bytes.len() % CIFAR_RECORD != 0 {
            return Err(ModelError::TruncatedRecord {
                path: path.to_path_buf(),
                offset: bytes.len() - bytes.len() % CIFAR_RECORD,
            });
        }
        for rec in bytes.chunks_exact(CIFAR_RECORD) {
            if rec[0] > 9 {
                return Err(ModelError::InvalidLabel { index: labels.len(), label: rec[0] });
            }
            labels.push(rec[0]);
            let planes = &rec[1..];
            for i in 0..1024 {
                pixels.extend([planes[i], planes[1024 + i], planes[2048 + i]]);
            }
        }
    }
    Dataset::new(CIFAR_SHAPE, pixels, labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// MNIST from `dir` using the standard file names (`t10k-*` for test,
/// `train-*` for training), with or without the `-idx?-ubyte` suffix.
pub fn load_mnist(dir: impl AsRef<Path>, split: Split) -> Result<Dataset, ModelError> {
    let dir = dir.as_ref();
    let stem = match split {
        Split::Train => "train",
        Split::Test => "t10k",
    };
    let pick = |kind: &str, suffix: &str| -> PathBuf {
        let long = dir.join(format!("{stem}-{kind}-{suffix}"));
        if long.exists() {
            long
        } else {
            dir.join(format!("{stem}-{kind}"))
        }
    };
    load_idx(pick("images", "idx3-ubyte"), pick("labels", "idx1-ubyte"))
}

/// CIFAR-10 from `dir`: `data_batch_1..5.bin` for training, `test_batch.bin`
/// for test.
pub fn load_cifar10(dir: impl AsRef<Path>, split: Split) -> Result<Dataset, ModelError> {
    let dir = dir.as_ref();
    let files: Vec<PathBuf> = match split {
        Split::Train => (1..=5).map(|i| dir.join(format!("data_batch_{i}.bin"))).collect(),
        Split::Test => vec![dir.join("test_batch.bin")],
    };
    load_cifar_binary(&files)
}
