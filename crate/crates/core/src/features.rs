//! Summaries of bottleneck-distance distributions and the feature matrix.
//!
//! Moment conventions: `sd` is the sample standard deviation (divisor
//! `N - 1`, zero for `N = 1`); skewness `m₃ / m₂^{3/2}` and kurtosis
//! `m₄ / m₂²` (not excess) use central moments with divisor `N`, and both are
//! zero when the distances are all equal. `largest_bin` is the occupancy of
//! the fullest of `hist_bins` equal-width bins spanning `[min, max]`.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::eval::hole_label_map;
use crate::hclust::Linkage;
use crate::persistence::Dim1Means;
use crate::sampling::SamplingSetting;
use crate::{Error, Result};

pub const DEFAULT_HIST_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary7 {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub largest_bin: usize,
}

impl Summary7 {
    pub const NAMES: [&'static str; 7] = ["min", "max", "mean", "sd", "skewness", "kurtosis", "largest_bin"];

    pub fn values(&self) -> [f64; 7] {
        [
            self.min,
            self.max,
            self.mean,
            self.sd,
            self.skewness,
            self.kurtosis,
            self.largest_bin as f64,
        ]
    }
}

pub fn summarize_bottleneck_distribution(distances: &[f64], hist_bins: usize) -> Result<Summary7> {
    if distances.is_empty() {
        return Err(Error::Empty);
    }
    if hist_bins == 0 {
        return Err(Error::InvalidConfig("hist_bins must be positive".into()));
    }
    let n = distances.len();
    let nf = n as f64;
    let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let max = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Ok(Summary7 {
            min,
            max,
            mean: min,
            sd: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
            largest_bin: n,
        });
    }
    let mean = distances.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in distances {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let sd = if n > 1 { (m2 / (nf - 1.0)).sqrt() } else { 0.0 };
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (0.0, 0.0)
    };

    let mut counts = vec![0usize; hist_bins];
    let width = max - min;
    for &x in distances {
        let b = (((x - min) / width) * hist_bins as f64) as usize;
        counts[b.min(hist_bins - 1)] += 1;
    }
    Ok(Summary7 {
        min,
        max,
        mean,
        sd,
        skewness,
        kurtosis,
        largest_bin: counts.into_iter().max().unwrap_or(0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnInfo {
    pub name: String,
    /// Homological dimension the feature belongs to (0 = clustering, 1 = cycles).
    pub dim: u8,
    pub setting: usize,
    pub landmark: usize,
    pub resolution: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub linkage: Option<Linkage>,
    pub statistic: String,
}

/// Canonical column order: dimension-0 block with settings outer, linkages
/// middle and summaries inner, followed by the dimension-1 block
/// (settings outer, statistic inner).
pub fn feature_columns(settings: &[SamplingSetting]) -> Vec<ColumnInfo> {
    let mut cols = Vec::with_capacity(settings.len() * (Linkage::ALL.len() * 7 + 3));
    for (si, s) in settings.iter().enumerate() {
        for linkage in Linkage::ALL {
            for stat in Summary7::NAMES {
                cols.push(ColumnInfo {
                    name: format!("d0_{}_{}_{}", s.label(), linkage.name(), stat),
                    dim: 0,
                    setting: si,
                    landmark: s.landmark_index,
                    resolution: s.resolution_k,
                    linkage: Some(linkage),
                    statistic: stat.to_string(),
                });
            }
        }
    }
    for (si, s) in settings.iter().enumerate() {
        for stat in Dim1Means::NAMES {
            cols.push(ColumnInfo {
                name: format!("d1_{}_{}", s.label(), stat),
                dim: 1,
                setting: si,
                landmark: s.landmark_index,
                resolution: s.resolution_k,
                linkage: None,
                statistic: stat.to_string(),
            });
        }
    }
    cols
}

/// Everything the pipeline computes for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageFeatures {
    pub image: usize,
    pub digit: u8,
    /// One summary per (setting, linkage), setting-major in [`Linkage::ALL`] order.
    pub dim0: Vec<Summary7>,
    /// Instance-averaged cycle features, one per setting.
    pub dim1: Vec<Dim1Means>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub columns: Vec<ColumnInfo>,
    pub image_ids: Vec<usize>,
    pub digits: Vec<u8>,
    pub hole_counts: Vec<u8>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.image_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let p = self.n_features();
        &self.values[r * p..(r + 1) * p]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim_count(&self, dim: u8) -> usize {
        self.columns.iter().filter(|c| c.dim == dim).count()
    }

    /// Row-major copy restricted to `cols` (in the given order).
    pub fn select_columns(&self, cols: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_rows() * cols.len());
        for r in 0..self.n_rows() {
            let row = self.row(r);
            out.extend(cols.iter().map(|&c| row[c]));
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["image".to_string()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        header.push("digit".into());
        header.push("hole_count".into());
        w.write_record(&header)?;
        for r in 0..self.n_rows() {
            let mut rec = Vec::with_capacity(self.n_features() + 3);
            rec.push(self.image_ids[r].to_string());
            rec.extend(self.row(r).iter().map(|v| v.to_string()));
            rec.push(self.digits[r].to_string());
            rec.push(self.hole_counts[r].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a table written by [`FeatureMatrix::write_csv`]; `columns` must
    /// match the header.
    pub fn read_csv<R: Read>(reader: R, columns: Vec<ColumnInfo>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.clone();
        let p = columns.len();
        if header.len() != p + 3
            || &header[0] != "image"
            || &header[p + 1] != "digit"
            || &header[p + 2] != "hole_count"
            || columns.iter().zip(header.iter().skip(1)).any(|(c, h)| c.name != h)
        {
            return Err(Error::MalformedTable(
                "header does not match the column dictionary".into(),
            ));
        }
        let parse_err = |what: &str, r: usize| Error::MalformedTable(format!("bad {what} in row {r}"));
        let (mut image_ids, mut digits, mut hole_counts, mut values) = (vec![], vec![], vec![], vec![]);
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            image_ids.push(rec[0].parse().map_err(|_| parse_err("image id", r))?);
            for c in 1..=p {
                let v: f64 = rec[c].parse().map_err(|_| parse_err("value", r))?;
                if v.is_nan() {
                    return Err(parse_err("value", r));
                }
                values.push(v);
            }
            digits.push(rec[p + 1].parse().map_err(|_| parse_err("digit", r))?);
            hole_counts.push(rec[p + 2].parse().map_err(|_| parse_err("hole count", r))?);
        }
        Ok(FeatureMatrix {
            columns,
            image_ids,
            digits,
            hole_counts,
            values,
        })
    }
}

pub fn assemble_feature_matrix(settings: &[SamplingSetting], images: &[ImageFeatures]) -> Result<FeatureMatrix> {
    let columns = feature_columns(settings);
    let n_dim0 = settings.len() * Linkage::ALL.len();
    let mut values = Vec::with_capacity(images.len() * columns.len());
    let mut hole_counts = Vec::with_capacity(images.len());
    for img in images {
        if img.dim0.len() < n_dim0 {
            let i = img.dim0.len();
            let s = settings[i / Linkage::ALL.len()];
            return Err(Error::MissingBlock {
                image: img.image,
                block: format!("{}_{}", s.label(), Linkage::ALL[i % Linkage::ALL.len()].name()),
            });
        }
        if img.dim1.len() < settings.len() {
            return Err(Error::MissingBlock {
                image: img.image,
                block: format!("{}_dim1", settings[img.dim1.len()].label()),
            });
        }
        if img.dim0.len() > n_dim0 || img.dim1.len() > settings.len() {
            return Err(Error::InvalidConfig(format!(
                "image {} has more feature blocks than the sampling settings",
                img.image
            )));
        }
        for s in &img.dim0 {
            values.extend(s.values());
        }
        for d in &img.dim1 {
            values.extend(d.values());
        }
        hole_counts.push(hole_label_map(img.digit as u32)? as u8);
    }
    Ok(FeatureMatrix {
        columns,
        image_ids: images.iter().map(|i| i.image).collect(),
        digits: images.iter().map(|i| i.digit).collect(),
        hole_counts,
        values,
    })
}

/// Column dictionary plus the provenance of a feature table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub n_rows: usize,
    pub n_features: usize,
    pub n_dim0: usize,
    pub n_dim1: usize,
    pub columns: Vec<ColumnInfo>,
}

impl FeatureManifest {
    pub fn new(matrix: &FeatureMatrix, config_hash: String, master_seed: u64) -> Self {
        FeatureManifest {
            config_hash,
            master_seed,
            n_rows: matrix.n_rows(),
            n_features: matrix.n_features(),
            n_dim0: matrix.dim_count(0),
            n_dim1: matrix.dim_count(1),
            columns: matrix.columns.clone(),
        }
    }

    /// Check internal consistency against the expected setting list.
    pub fn validate(&self, settings: &[SamplingSetting]) -> Result<()> {
        let expected = feature_columns(settings);
        let bad = |m: String| Err(Error::MalformedTable(m));
        if self.columns.len() != self.n_features || self.n_dim0 + self.n_dim1 != self.n_features {
            return bad("column counts disagree".into());
        }
        if self.columns != expected {
            return bad("column dictionary differs from the canonical layout".into());
        }
        let names: HashSet<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        if names.len() != self.columns.len() {
            return bad("duplicate column names".into());
        }
        if self.columns.iter().filter(|c| c.dim == 0).count() != self.n_dim0 {
            return bad("dimension-0 count disagrees".into());
        }
        Ok(())
    }
}
