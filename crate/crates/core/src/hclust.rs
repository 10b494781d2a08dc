//! Agglomerative hierarchical clustering and clustering diagrams.
//!
//! Inter-cluster distances are maintained with the Lance–Williams update.
//! Ward's method runs the recurrence on squared Euclidean distances and
//! reports square-rooted heights. Among equally close pairs the one with the
//! lexicographically smallest `(a, b)` cluster ids merges first, where leaves
//! are `0..n` and the cluster formed by merge `s` gets id `n + s`.

use serde::{Deserialize, Serialize};

use crate::ingest::PointCloud;
use crate::{Error, Result};

/// Dense symmetric distance matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Build from a full row-major `n × n` buffer. Symmetry is enforced by
    /// copying the upper triangle onto the lower one.
    pub fn from_full(n: usize, mut entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::LengthMismatch {
                left: entries.len(),
                right: n * n,
            });
        }
        for i in 0..n {
            entries[i * n + i] = 0.0;
            for j in i + 1..n {
                let v = entries[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidConfig(format!("distance ({i}, {j}) = {v}")));
                }
                entries[j * n + i] = v;
            }
        }
        Ok(DistanceMatrix { n, entries })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Largest entry, i.e. the diameter of the underlying cloud.
    pub fn max(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

/// Euclidean distance matrix of `cloud`.
pub fn pairwise_distances(cloud: &PointCloud) -> Result<DistanceMatrix> {
    let n = cloud.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = cloud.points[i].dist(&cloud.points[j]);
            entries[i * n + j] = d;
            entries[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Average,
    Complete,
    Ward,
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [Linkage::Single, Linkage::Average, Linkage::Complete, Linkage::Ward];

    pub fn name(self) -> &'static str {
        match self {
            Linkage::Single => "single",
            Linkage::Average => "average",
            Linkage::Complete => "complete",
            Linkage::Ward => "ward",
        }
    }

    /// Distance from the union of clusters `i` and `j` to cluster `k`.
    #[inline]
    fn update(self, d_ik: f64, d_jk: f64, d_ij: f64, n_i: f64, n_j: f64, n_k: f64) -> f64 {
        match self {
            Linkage::Single => d_ik.min(d_jk),
            Linkage::Complete => d_ik.max(d_jk),
            Linkage::Average => (n_i * d_ik + n_j * d_jk) / (n_i + n_j),
            Linkage::Ward => ((n_i + n_k) * d_ik + (n_j + n_k) * d_jk - n_k * d_ij) / (n_i + n_j + n_k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

/// The `n - 1` merges of an agglomerative clustering, in merge order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn heights(&self) -> impl Iterator<Item = f64> + '_ {
        self.merges.iter().map(|m| m.height)
    }
}

pub fn linkage(dm: &DistanceMatrix, method: Linkage) -> Result<Dendrogram> {
    let n = dm.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let mut d = dm.entries.clone();
    if method == Linkage::Ward {
        d.iter_mut().for_each(|v| *v *= *v);
    }
    // Slot i holds cluster `ids[i]`; `active` lists live slots in increasing order.
    let mut ids: Vec<usize> = (0..n).collect();
    let mut sizes = vec![1usize; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
        let mut best_key = (usize::MAX, usize::MAX);
        for (p, &i) in active.iter().enumerate() {
            let row = &d[i * n..(i + 1) * n];
            for &j in &active[p + 1..] {
                let v = row[j];
                if v < best.0 {
                    best = (v, i, j);
                    best_key = ordered(ids[i], ids[j]);
                } else if v == best.0 {
                    let key = ordered(ids[i], ids[j]);
                    if key < best_key {
                        best = (v, i, j);
                        best_key = key;
                    }
                }
            }
        }
        let (d_ij, i, j) = best;
        let (ni, nj) = (sizes[i] as f64, sizes[j] as f64);
        for &k in &active {
            if k == i || k == j {
                continue;
            }
            let v = method.update(d[i * n + k], d[j * n + k], d_ij, ni, nj, sizes[k] as f64);
            d[i * n + k] = v;
            d[k * n + i] = v;
        }
        let height = if method == Linkage::Ward {
            d_ij.max(0.0).sqrt()
        } else {
            d_ij
        };
        sizes[i] += sizes[j];
        merges.push(Merge {
            a: best_key.0,
            b: best_key.1,
            height,
            size: sizes[i],
        });
        ids[i] = n + step;
        active.retain(|&s| s != j);
    }
    Ok(Dendrogram { n_leaves: n, merges })
}

#[inline]
fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Multiset of merge heights, read as points `(0, d)`; stored sorted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusteringDiagram {
    pub deaths: Vec<f64>,
}

impl ClusteringDiagram {
    pub fn new(mut deaths: Vec<f64>) -> Self {
        deaths.sort_by(f64::total_cmp);
        ClusteringDiagram { deaths }
    }

    pub fn len(&self) -> usize {
        self.deaths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deaths.is_empty()
    }
}

pub fn clustering_diagram(dendrogram: &Dendrogram) -> ClusteringDiagram {
    ClusteringDiagram::new(dendrogram.heights().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> DistanceMatrix {
        pairwise_distances(&xs.iter().map(|&x| (x, 0.0)).collect()).unwrap()
    }

    fn heights(xs: &[f64], m: Linkage) -> Vec<f64> {
        linkage(&line(xs), m).unwrap().heights().collect()
    }

    #[test]
    fn three_four_five() {
        let dm = pairwise_distances(&[(0.0, 0.0), (3.0, 4.0)].into_iter().collect()).unwrap();
        assert_eq!(dm.get(0, 1), 5.0);
        assert_eq!(dm.get(1, 0), 5.0);
        assert_eq!(dm.get(0, 0), 0.0);
    }

    #[test]
    fn duplicate_points_have_zero_distance() {
        let dm = pairwise_distances(&[(1.0, 2.0), (1.0, 2.0), (0.0, 0.0)].into_iter().collect()).unwrap();
        assert_eq!(dm.get(0, 1), 0.0);
        let d = clustering_diagram(&linkage(&dm, Linkage::Average).unwrap());
        assert_eq!(d.deaths[0], 0.0);
    }

    #[test]
    fn too_few_points() {
        let one: PointCloud = [(0.0, 0.0)].into_iter().collect();
        assert!(matches!(pairwise_distances(&one), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn golden_heights_on_zero_one_three() {
        let xs = [0.0, 1.0, 3.0];
        assert_eq!(heights(&xs, Linkage::Single), vec![1.0, 2.0]);
        assert_eq!(heights(&xs, Linkage::Complete), vec![1.0, 3.0]);
        assert_eq!(heights(&xs, Linkage::Average), vec![1.0, 2.5]);
        let ward = heights(&xs, Linkage::Ward);
        assert_eq!(ward[0], 1.0);
        assert!((ward[1] - (25.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn merge_records_and_ties() {
        // Equidistant points: merges go by smallest cluster ids.
        let d = linkage(&line(&[0.0, 1.0, 2.0, 3.0]), Linkage::Single).unwrap();
        let pairs: Vec<(usize, usize)> = d.merges.iter().map(|m| (m.a, m.b)).collect();
        assert_eq!(pairs, vec![(0, 1), (2, 3), (4, 5)]);
        assert_eq!(d.merges.last().unwrap().size, 4);
    }

    #[test]
    fn two_points_give_singleton_diagram() {
        let d = clustering_diagram(&linkage(&line(&[0.0, 2.0]), Linkage::Ward).unwrap());
        assert_eq!(d.deaths, vec![2.0]);
    }

    #[test]
    fn dendrogram_json_round_trip() {
        let d = linkage(&line(&[0.0, 1.0, 3.0, 7.0]), Linkage::Complete).unwrap();
        let back: Dendrogram = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(d, back);
    }

    fn cloud_strategy() -> impl Strategy<Value = PointCloud> {
        proptest::collection::vec((0i32..28, 0i32..28), 2..40)
            .prop_map(|v| v.into_iter().map(|(x, y)| (x as f64, y as f64)).collect())
    }

    proptest! {
        #[test]
        fn heights_non_decreasing(cloud in cloud_strategy()) {
            let dm = pairwise_distances(&cloud).unwrap();
            for m in Linkage::ALL {
                let h: Vec<f64> = linkage(&dm, m).unwrap().heights().collect();
                prop_assert_eq!(h.len(), cloud.len() - 1);
                for w in h.windows(2) {
                    prop_assert!(w[1] >= w[0] - 1e-9 * w[0].max(1.0), "{:?} {:?}", m, w);
                }
            }
        }

        #[test]
        fn single_heights_permutation_invariant_with_ties(cloud in cloud_strategy(), rot in 0usize..40) {
            check_permutation(&cloud, rot, &[Linkage::Single])?;
        }

        #[test]
        fn heights_permutation_invariant(cloud in continuous_cloud(), rot in 0usize..40) {
            check_permutation(&cloud, rot, &Linkage::ALL)?;
        }
    }

    fn continuous_cloud() -> impl Strategy<Value = PointCloud> {
        proptest::collection::vec((0.0f64..27.0, 0.0f64..27.0), 2..40).prop_map(|v| v.into_iter().collect())
    }

    fn check_permutation(cloud: &PointCloud, rot: usize, methods: &[Linkage]) -> Result<(), TestCaseError> {
        let mut pts = cloud.points.clone();
        let r = rot % pts.len();
        pts.rotate_left(r);
        pts.reverse();
        let a = pairwise_distances(cloud).unwrap();
        let b = pairwise_distances(&PointCloud::new(pts)).unwrap();
        for &m in methods {
            let da = clustering_diagram(&linkage(&a, m).unwrap());
            let db = clustering_diagram(&linkage(&b, m).unwrap());
            for (x, y) in da.deaths.iter().zip(&db.deaths) {
                prop_assert!((x - y).abs() <= 1e-9 * x.max(1.0), "{:?}: {} vs {}", m, x, y);
            }
        }
        Ok(())
    }
}
