//! MNIST IDX parsing and image → point-cloud conversion.
//!
//! IDX files are read uncompressed; gzip archives must be decompressed
//! before use (`gunzip train-images-idx3-ubyte.gz`).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Side length of an MNIST image.
pub const SIDE: usize = 28;

/// Default binarization threshold, roughly 0.4 of full intensity.
pub const DEFAULT_THRESHOLD: u8 = 102;

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdxKind {
    Images,
    Labels,
}

impl IdxKind {
    fn magic(self) -> u32 {
        match self {
            IdxKind::Images => IMAGE_MAGIC,
            IdxKind::Labels => LABEL_MAGIC,
        }
    }
}

/// A set of equally sized grayscale images, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSet {
    pub rows: usize,
    pub cols: usize,
    pixels: Vec<u8>,
}

impl ImageSet {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>) -> Result<Self> {
        let size = rows * cols;
        if size == 0 || pixels.len() % size != 0 {
            return Err(Error::InvalidConfig(format!(
                "{} pixels do not form whole {rows}x{cols} images",
                pixels.len()
            )));
        }
        Ok(ImageSet { rows, cols, pixels })
    }

    pub fn len(&self) -> usize {
        self.pixels.len() / (self.rows * self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn image(&self, index: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[index * size..(index + 1) * size]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> {
        self.pixels.chunks_exact(self.rows * self.cols)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    pub labels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdxData {
    Images(ImageSet),
    Labels(LabelSet),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Finite multiset of planar points; duplicates are allowed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointCloud {
    pub points: Vec<Point>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Self {
        PointCloud { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl FromIterator<(f64, f64)> for PointCloud {
    fn from_iter<I: IntoIterator<Item = (f64, f64)>>(iter: I) -> Self {
        PointCloud::new(iter.into_iter().map(|(x, y)| Point::new(x, y)).collect())
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    let raw = bytes.get(offset..offset + 4).ok_or(Error::Truncated {
        declared: offset + 4,
        found: bytes.len(),
    })?;
    Ok(u32::from_be_bytes(raw.try_into().expect("4-byte slice")))
}

/// Parse a complete IDX file of the given kind.
pub fn parse_idx(bytes: &[u8], kind: IdxKind) -> Result<IdxData> {
    let magic = read_u32(bytes, 0)?;
    if magic != kind.magic() {
        return Err(Error::WrongMagic {
            expected: kind.magic(),
            found: magic,
        });
    }
    let count = read_u32(bytes, 4)? as usize;
    match kind {
        IdxKind::Images => {
            let rows = read_u32(bytes, 8)? as usize;
            let cols = read_u32(bytes, 12)? as usize;
            let payload = &bytes[16..];
            let declared = count * rows * cols;
            if payload.len() < declared {
                return Err(Error::Truncated {
                    declared,
                    found: payload.len(),
                });
            }
            if rows == 0 || cols == 0 {
                return Err(Error::InvalidConfig("IDX image dimensions must be positive".into()));
            }
            Ok(IdxData::Images(ImageSet {
                rows,
                cols,
                pixels: payload[..declared].to_vec(),
            }))
        }
        IdxKind::Labels => {
            let payload = &bytes[8..];
            if payload.len() < count {
                return Err(Error::Truncated {
                    declared: count,
                    found: payload.len(),
                });
            }
            Ok(IdxData::Labels(LabelSet {
                labels: payload[..count].to_vec(),
            }))
        }
    }
}

pub fn parse_images(bytes: &[u8]) -> Result<ImageSet> {
    match parse_idx(bytes, IdxKind::Images)? {
        IdxData::Images(set) => Ok(set),
        IdxData::Labels(_) => unreachable!("kind is images"),
    }
}

pub fn parse_labels(bytes: &[u8]) -> Result<LabelSet> {
    match parse_idx(bytes, IdxKind::Labels)? {
        IdxData::Labels(set) => Ok(set),
        IdxData::Images(_) => unreachable!("kind is labels"),
    }
}

pub fn serialize_images(set: &ImageSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + set.pixels.len());
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(set.len() as u32).to_be_bytes());
    out.extend_from_slice(&(set.rows as u32).to_be_bytes());
    out.extend_from_slice(&(set.cols as u32).to_be_bytes());
    out.extend_from_slice(&set.pixels);
    out
}

pub fn serialize_labels(set: &LabelSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + set.labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(set.labels.len() as u32).to_be_bytes());
    out.extend_from_slice(&set.labels);
    out
}

/// Load `train-images-idx3-ubyte` and `train-labels-idx1-ubyte` from `dir`.
pub fn load_mnist(dir: &Path) -> Result<(ImageSet, LabelSet)> {
    let read = |name: &str| {
        let path = dir.join(name);
        fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingData(path),
            _ => Error::Io(e),
        })
    };
    let images = parse_images(&read(TRAIN_IMAGES)?)?;
    let labels = parse_labels(&read(TRAIN_LABELS)?)?;
    if images.len() != labels.labels.len() {
        return Err(Error::LengthMismatch {
            left: images.len(),
            right: labels.labels.len(),
        });
    }
    Ok((images, labels))
}

/// One point per pixel strictly brighter than `threshold`, at
/// `(column, rows - 1 - row)` so that up in the image is increasing y.
/// Points come out in row-major scan order.
pub fn image_to_point_cloud(image: &[u8], cols: usize, threshold: u8) -> PointCloud {
    let rows = image.len() / cols;
    let points = image
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v > threshold)
        .map(|(i, _)| {
            let (row, col) = (i / cols, i % cols);
            Point::new(col as f64, (rows - 1 - row) as f64)
        })
        .collect();
    PointCloud { points }
}
