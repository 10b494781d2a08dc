//! Landmark-referenced, multi-resolution subsampling of point clouds.
//!
//! For a landmark `L` and resolution `k`, the distances from every point to
//! `L` are histogrammed into equal-width bins over `[0, max distance]` and
//! `ceil(s / k)` points are drawn without replacement from each bin holding
//! `s` points. A *setting* is one (landmark, resolution) pair; the default
//! 3×3 landmark grid and resolutions 2..=6 give 45 settings.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::ingest::{Point, PointCloud};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

/// Histogram bins used when sampling around a landmark.
pub const DEFAULT_SAMPLING_BINS: usize = 10;
pub const DEFAULT_RESOLUTIONS: [u32; 5] = [2, 3, 4, 5, 6];
pub const DEFAULT_INSTANCES: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Landmarks {
    pub positions: Vec<Point>,
}

impl Landmarks {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

impl Default for Landmarks {
    fn default() -> Self {
        landmark_grid()
    }
}

/// The centred 3×3 grid over a 28×28 image, row-major from (4.5, 4.5).
pub fn landmark_grid() -> Landmarks {
    const AXIS: [f64; 3] = [4.5, 13.5, 22.5];
    let positions = AXIS
        .iter()
        .flat_map(|&y| AXIS.iter().map(move |&x| Point::new(x, y)))
        .collect();
    Landmarks { positions }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SamplingSetting {
    pub landmark_index: usize,
    pub resolution_k: u32,
}

impl SamplingSetting {
    /// Short stable label, e.g. `L3_k4`.
    pub fn label(&self) -> String {
        format!("L{}_k{}", self.landmark_index, self.resolution_k)
    }
}

/// All settings, landmark-major then resolution, i.e. setting index
/// `landmark_index * resolutions.len() + resolution position`.
pub fn settings(n_landmarks: usize, resolutions: &[u32]) -> Vec<SamplingSetting> {
    (0..n_landmarks)
        .flat_map(|landmark_index| {
            resolutions.iter().map(move |&resolution_k| SamplingSetting {
                landmark_index,
                resolution_k,
            })
        })
        .collect()
}

/// Indices into `cloud` selected for one sample, in increasing order.
pub fn sample_indices_at_resolution(
    cloud: &PointCloud,
    landmark: Point,
    k: u32,
    bins: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if k == 0 || bins == 0 {
        return Err(Error::InvalidConfig("resolution and bin count must be positive".into()));
    }
    let dists: Vec<f64> = cloud.points.iter().map(|p| p.dist(&landmark)).collect();
    let max = dists.iter().copied().fold(0.0_f64, f64::max);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); bins];
    for (i, &d) in dists.iter().enumerate() {
        let b = if max > 0.0 {
            ((d / max * bins as f64) as usize).min(bins - 1)
        } else {
            0
        };
        members[b].push(i);
    }

    let mut rng = rng_from_seed(seed);
    let mut picked = Vec::new();
    for bin in members.iter().filter(|m| !m.is_empty()) {
        let quota = bin.len().div_ceil(k as usize);
        picked.extend(index::sample(&mut rng, bin.len(), quota).into_iter().map(|j| bin[j]));
    }
    picked.sort_unstable();
    Ok(picked)
}

/// One sample of `cloud` at resolution `k` around `landmark`.
pub fn sample_at_resolution(cloud: &PointCloud, landmark: Point, k: u32, bins: usize, seed: u64) -> Result<PointCloud> {
    let idx = sample_indices_at_resolution(cloud, landmark, k, bins, seed)?;
    Ok(PointCloud::new(idx.into_iter().map(|i| cloud.points[i]).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub landmarks: Landmarks,
    pub resolutions: Vec<u32>,
    pub n_instances: usize,
    pub bins: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            landmarks: landmark_grid(),
            resolutions: DEFAULT_RESOLUTIONS.to_vec(),
            n_instances: DEFAULT_INSTANCES,
            bins: DEFAULT_SAMPLING_BINS,
        }
    }
}

impl SamplingConfig {
    pub fn settings(&self) -> Vec<SamplingSetting> {
        settings(self.landmarks.len(), &self.resolutions)
    }

    /// Seed of instance `instance` in setting `setting_index`: stream
    /// `setting_index * n_instances + instance` under `master_seed`.
    pub fn instance_seed(&self, master_seed: u64, setting_index: usize, instance: usize) -> u64 {
        derive_seed(master_seed, (setting_index * self.n_instances + instance) as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSamples {
    pub setting: SamplingSetting,
    pub instance_seeds: Vec<u64>,
    pub instances: Vec<PointCloud>,
}

/// Samples for every setting; serializes as setting → instance → point list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub master_seed: u64,
    pub settings: Vec<SettingSamples>,
}

impl SampleSet {
    pub fn total_clouds(&self) -> usize {
        self.settings.iter().map(|s| s.instances.len()).sum()
    }
}

pub fn generate_sample_set(cloud: &PointCloud, config: &SamplingConfig, master_seed: u64) -> Result<SampleSet> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let settings = config
        .settings()
        .into_iter()
        .enumerate()
        .map(|(si, setting)| {
            let landmark = config.landmarks.positions[setting.landmark_index];
            let instance_seeds: Vec<u64> = (0..config.n_instances)
                .map(|i| config.instance_seed(master_seed, si, i))
                .collect();
            let instances = instance_seeds
                .iter()
                .map(|&seed| sample_at_resolution(cloud, landmark, setting.resolution_k, config.bins, seed))
                .collect::<Result<Vec<_>>>()?;
            Ok(SettingSamples {
                setting,
                instance_seeds,
                instances,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleSet { master_seed, settings })
}
