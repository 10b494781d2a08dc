//! Per-image feature extraction: sample → cluster → diagrams → bottleneck
//! summaries, plus the instance-averaged dimension-1 features.

use std::fs;
use std::path::{Path, PathBuf};

use log::debug;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bottleneck::pairwise_bottleneck;
use crate::features::{summarize_bottleneck_distribution, ImageFeatures, DEFAULT_HIST_BINS};
use crate::hclust::{clustering_diagram, linkage, pairwise_distances, ClusteringDiagram, Linkage};
use crate::ingest::{image_to_point_cloud, ImageSet, LabelSet, DEFAULT_THRESHOLD};
use crate::par::Execution;
use crate::persistence::{dim1_features, rips_dim1, Dim1Features, Dim1Means};
use crate::rng::derive_seed;
use crate::sampling::{generate_sample_set, SamplingConfig};
use crate::{Error, Result};

/// Everything that influences a row of the feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub threshold: u8,
    pub sampling: SamplingConfig,
    pub hist_bins: usize,
    pub noise_cutoff: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            threshold: DEFAULT_THRESHOLD,
            sampling: SamplingConfig::default(),
            hist_bins: DEFAULT_HIST_BINS,
            noise_cutoff: 0.0,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.sampling.n_instances < 2 {
            return bad("at least 2 instances per setting are needed for pairwise distances");
        }
        if self.sampling.resolutions.is_empty() || self.sampling.resolutions.contains(&0) {
            return bad("resolutions must be a non-empty list of positive integers");
        }
        if self.sampling.landmarks.is_empty() {
            return bad("at least one landmark is required");
        }
        if self.sampling.bins == 0 || self.hist_bins == 0 {
            return bad("bin counts must be positive");
        }
        if !(self.noise_cutoff >= 0.0 && self.noise_cutoff.is_finite()) {
            return bad("noise cutoff must be a finite non-negative number");
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form; keys every cache entry.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Master sampling seed of image `image`.
    pub fn image_seed(&self, image: usize) -> u64 {
        derive_seed(self.seed, image as u64)
    }
}

fn diagram_of(dm: Option<&crate::hclust::DistanceMatrix>, method: Linkage) -> Result<ClusteringDiagram> {
    match dm {
        Some(dm) => Ok(clustering_diagram(&linkage(dm, method)?)),
        None => Ok(ClusteringDiagram::default()),
    }
}

/// Run the full per-image pipeline on one grayscale image.
pub fn extract_image_features(
    pixels: &[u8],
    cols: usize,
    image: usize,
    digit: u8,
    config: &PipelineConfig,
) -> Result<ImageFeatures> {
    let cloud = image_to_point_cloud(pixels, cols, config.threshold);
    if cloud.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: cloud.len(),
        });
    }
    let samples = generate_sample_set(&cloud, &config.sampling, config.image_seed(image))?;
    let mut dim0 = Vec::with_capacity(samples.settings.len() * Linkage::ALL.len());
    let mut dim1 = Vec::with_capacity(samples.settings.len());
    for setting in &samples.settings {
        let mut diagrams: Vec<Vec<ClusteringDiagram>> = vec![Vec::new(); Linkage::ALL.len()];
        let mut cycles: Vec<Dim1Features> = Vec::with_capacity(setting.instances.len());
        for sample in &setting.instances {
            // A one-point sample has no merges and no cycles.
            let dm = if sample.len() >= 2 {
                Some(pairwise_distances(sample)?)
            } else {
                None
            };
            for (slot, method) in diagrams.iter_mut().zip(Linkage::ALL) {
                slot.push(diagram_of(dm.as_ref(), method)?);
            }
            cycles.push(match &dm {
                Some(dm) if dm.len() >= 3 => dim1_features(&rips_dim1(dm)?, config.noise_cutoff),
                _ => Dim1Features::default(),
            });
        }
        for per_linkage in &diagrams {
            let distances = pairwise_bottleneck(per_linkage)?;
            dim0.push(summarize_bottleneck_distribution(&distances, config.hist_bins)?);
        }
        dim1.push(Dim1Means::of(&cycles));
    }
    Ok(ImageFeatures {
        image,
        digit,
        dim0,
        dim1,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    config_hash: String,
    features: ImageFeatures,
}

/// On-disk cache of per-image features under `<root>/<config hash>/`.
#[derive(Debug, Clone)]
pub struct FeatureCache {
    dir: PathBuf,
    hash: String,
}

impl FeatureCache {
    pub fn new(root: &Path, config: &PipelineConfig) -> Result<Self> {
        let hash = config.hash();
        let dir = root.join(&hash[..16]);
        fs::create_dir_all(&dir)?;
        Ok(FeatureCache { dir, hash })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, image: usize) -> PathBuf {
        self.dir.join(format!("image-{image:06}.json"))
    }

    pub fn load(&self, image: usize) -> Result<Option<ImageFeatures>> {
        let path = self.path(image);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let corrupt = |reason: String| Error::CacheCorrupt {
            path: path.clone(),
            reason,
        };
        let entry: CacheEntry = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
        if entry.config_hash != self.hash {
            return Err(corrupt(format!("config hash {} != {}", entry.config_hash, self.hash)));
        }
        if entry.features.image != image {
            return Err(corrupt(format!("entry is for image {}", entry.features.image)));
        }
        Ok(Some(entry.features))
    }

    pub fn store(&self, features: &ImageFeatures) -> Result<()> {
        let entry = CacheEntry {
            config_hash: self.hash.clone(),
            features: features.clone(),
        };
        let path = self.path(features.image);
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec(&entry)?)?;
        fs::rename(tmp, path)?;
        Ok(())
    }
}

/// Features for the images `ids`, served from `cache` where possible.
pub fn extract_features(
    images: &ImageSet,
    labels: &LabelSet,
    ids: &[usize],
    config: &PipelineConfig,
    cache: Option<&FeatureCache>,
    exec: Execution,
) -> Result<Vec<ImageFeatures>> {
    config.validate()?;
    exec.try_map_range(ids.len(), |i| {
        let id = ids[i];
        if let Some(cache) = cache {
            if let Some(hit) = cache.load(id)? {
                return Ok(hit);
            }
        }
        let features = extract_image_features(images.image(id), images.cols, id, labels.labels[id], config)?;
        if let Some(cache) = cache {
            cache.store(&features)?;
        }
        debug!("image {id}: features extracted");
        Ok(features)
    })
}
