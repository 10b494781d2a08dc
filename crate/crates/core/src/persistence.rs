//! Vietoris–Rips persistent homology in dimensions 0 and 1.
//!
//! Simplices are ordered by scale, then dimension, then lexicographic vertex
//! order. Dimension 0 is read off a Kruskal pass over the edges. Dimension 1
//! is computed over GF(2), by default through the coboundary (cohomology)
//! reduction, which yields the same pairs as the boundary reduction with far
//! fewer column operations.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use serde::{Deserialize, Serialize};

use crate::hclust::DistanceMatrix;
use crate::union_find::UnionFind;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub birth: f64,
    pub death: f64,
}

impl PersistencePair {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub dimension: u8,
    pub pairs: Vec<PersistencePair>,
}

impl PersistenceDiagram {
    pub fn deaths(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.death).collect()
    }
}

/// Edges sorted by (length, i, j), `i < j`.
fn sorted_edges(dm: &DistanceMatrix) -> Vec<(f64, u32, u32)> {
    let n = dm.len();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        let row = dm.row(i);
        for (j, &w) in row.iter().enumerate().skip(i + 1) {
            edges.push((w, i as u32, j as u32));
        }
    }
    edges.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    edges
}

/// Finite part of the dimension-0 diagram: births 0, deaths are the
/// minimum-spanning-tree edge lengths in increasing order.
pub fn rips_dim0(dm: &DistanceMatrix) -> Result<PersistenceDiagram> {
    let n = dm.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let mut uf = UnionFind::new(n);
    let mut pairs = Vec::with_capacity(n - 1);
    for (w, i, j) in sorted_edges(dm) {
        if uf.union(i as usize, j as usize) {
            pairs.push(PersistencePair { birth: 0.0, death: w });
            if pairs.len() == n - 1 {
                break;
            }
        }
    }
    Ok(PersistenceDiagram { dimension: 0, pairs })
}

fn edge_ranks(n: usize, edges: &[(f64, u32, u32)]) -> Vec<u32> {
    let mut rank = vec![0u32; n * n];
    for (r, &(_, i, j)) in edges.iter().enumerate() {
        rank[i as usize * n + j as usize] = r as u32;
        rank[j as usize * n + i as usize] = r as u32;
    }
    rank
}

/// Dimension-1 pairs with positive persistence, ordered by death then birth.
///
/// Reduces edge coboundaries in decreasing filtration order. Spanning-tree
/// edges are skipped because they already pair with vertices. A triangle is
/// keyed by `rank(latest edge) * n + opposite vertex`, which orders
/// triangles compatibly with their scale; the pivot of a coboundary column
/// is its smallest key. When an edge's smallest cofacet is not yet claimed
/// the column needs no reduction and is only materialized if a later column
/// has to add it.
pub fn rips_dim1(dm: &DistanceMatrix) -> Result<PersistenceDiagram> {
    let n = dm.len();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    let edges = sorted_edges(dm);
    let rank = edge_ranks(n, &edges);
    let mut uf = UnionFind::new(n);
    let tree: Vec<bool> = edges
        .iter()
        .map(|&(_, i, j)| uf.union(i as usize, j as usize))
        .collect();
    let cob = Coboundary {
        n,
        rank: &rank,
        edges: &edges,
    };

    let mut owner: HashMap<u64, Column, KeyHash> = HashMap::default();
    let mut pairs = Vec::new();
    let mut col: Vec<u64> = Vec::with_capacity(n);
    let mut other: Vec<u64> = Vec::with_capacity(n);
    let mut scratch = Vec::with_capacity(n);
    for e in (0..edges.len()).rev() {
        if tree[e] {
            continue;
        }
        let birth = edges[e].0;
        if let Some(first) = cob.first_own(e) {
            if !owner.contains_key(&first) {
                // Zero persistence: the pair appears at the edge's own scale.
                owner.insert(first, Column::Raw(e));
                continue;
            }
        }
        cob.fill(e, &mut col);
        while let Some(o) = col.first().and_then(|p| owner.get(p)) {
            let added = match o {
                Column::Raw(e2) => {
                    cob.fill(*e2, &mut other);
                    &other
                }
                Column::Reduced(c) => c,
            };
            symmetric_difference(&col, added, &mut scratch);
            std::mem::swap(&mut col, &mut scratch);
        }
        if let Some(&pivot) = col.first() {
            let death = edges[pivot as usize / n].0;
            if death > birth {
                pairs.push(PersistencePair { birth, death });
            }
            owner.insert(pivot, Column::Reduced(col.clone()));
        }
    }
    pairs.sort_by(|p, q| p.death.total_cmp(&q.death).then(p.birth.total_cmp(&q.birth)));
    Ok(PersistenceDiagram { dimension: 1, pairs })
}

enum Column {
    /// Unreduced coboundary of an edge.
    Raw(usize),
    Reduced(Vec<u64>),
}

struct Coboundary<'a> {
    n: usize,
    rank: &'a [u32],
    edges: &'a [(f64, u32, u32)],
}

impl Coboundary<'_> {
    /// Smallest cofacet key among triangles whose latest edge is `e`.
    fn first_own(&self, e: usize) -> Option<u64> {
        let (n, (_, i, j)) = (self.n, self.edges[e]);
        let (i, j) = (i as usize, j as usize);
        let r = e as u32;
        (0..n)
            .find(|&k| k != i && k != j && self.rank[i * n + k] < r && self.rank[j * n + k] < r)
            .map(|k| (e * n + k) as u64)
    }

    /// Sorted cofacet keys of edge `e`.
    fn fill(&self, e: usize, out: &mut Vec<u64>) {
        let (n, (_, i, j)) = (self.n, self.edges[e]);
        let (i, j) = (i as usize, j as usize);
        out.clear();
        let mut later = Vec::new();
        for k in (0..n).filter(|&k| k != i && k != j) {
            let (rik, rjk) = (self.rank[i * n + k] as usize, self.rank[j * n + k] as usize);
            if e > rik && e > rjk {
                out.push((e * n + k) as u64);
            } else if rik > rjk {
                later.push((rik * n + j) as u64);
            } else {
                later.push((rjk * n + i) as u64);
            }
        }
        later.sort_unstable();
        out.extend_from_slice(&later);
    }
}

/// Multiplicative hashing for dense integer keys.
#[derive(Default, Clone, Copy)]
struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = (v ^ (v >> 29)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    }
}

type KeyHash = BuildHasherDefault<KeyHasher>;

/// Same diagram as [`rips_dim1`], by reducing triangle boundary columns in
/// increasing filtration order. The complex becomes a full simplex at the
/// diameter, so every cycle-creating edge is eventually paired and the
/// reduction stops as soon as the last one is.
pub fn rips_dim1_homology(dm: &DistanceMatrix) -> Result<PersistenceDiagram> {
    let n = dm.len();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    let edges = sorted_edges(dm);
    let rank = edge_ranks(n, &edges);
    let mut uf = UnionFind::new(n);
    let cycles = edges
        .iter()
        .filter(|&&(_, i, j)| !uf.union(i as usize, j as usize))
        .count();

    let mut pairs = Vec::new();
    let mut owner = vec![usize::MAX; edges.len()];
    let mut reduced: Vec<Vec<u32>> = Vec::new();
    let mut batch: Vec<[u32; 3]> = Vec::new();
    let mut scratch = Vec::new();

    let mut start = 0;
    while start < edges.len() && reduced.len() < cycles {
        let scale = edges[start].0;
        let mut end = start;
        while end < edges.len() && edges[end].0 == scale {
            end += 1;
        }
        // Triangles whose latest edge lies in this equal-scale block.
        batch.clear();
        for (r, &(_, i, j)) in edges.iter().enumerate().take(end).skip(start) {
            let (i, j, r) = (i as usize, j as usize, r as u32);
            for k in 0..n {
                if k != i && k != j && rank[i * n + k] < r && rank[j * n + k] < r {
                    let mut t = [i as u32, j as u32, k as u32];
                    t.sort_unstable();
                    batch.push(t);
                }
            }
        }
        batch.sort_unstable();

        for &[a, b, c] in &batch {
            let (a, b, c) = (a as usize, b as usize, c as usize);
            let mut col = vec![rank[a * n + b], rank[a * n + c], rank[b * n + c]];
            col.sort_unstable();
            while let Some(&o) = col.last().map(|&p| &owner[p as usize]).filter(|&&o| o != usize::MAX) {
                symmetric_difference(&col, &reduced[o], &mut scratch);
                std::mem::swap(&mut col, &mut scratch);
            }
            if let Some(&pivot) = col.last() {
                owner[pivot as usize] = reduced.len();
                reduced.push(col);
                let birth = edges[pivot as usize].0;
                if birth < scale {
                    pairs.push(PersistencePair { birth, death: scale });
                }
                if reduced.len() == cycles {
                    break;
                }
            }
        }
        start = end;
    }
    pairs.sort_by(|p, q| p.death.total_cmp(&q.death).then(p.birth.total_cmp(&q.birth)));
    Ok(PersistenceDiagram { dimension: 1, pairs })
}

/// `out = a Δ b` for columns sorted in increasing order.
fn symmetric_difference<T: Ord + Copy>(a: &[T], b: &[T], out: &mut Vec<T>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Cycle statistics of one dimension-1 diagram.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Dim1Features {
    pub cycle_count: usize,
    pub avg_persistence: f64,
    pub max_persistence: f64,
}

/// Count, mean and max persistence over pairs with `death - birth > noise_cutoff`.
pub fn dim1_features(diagram: &PersistenceDiagram, noise_cutoff: f64) -> Dim1Features {
    debug_assert_eq!(diagram.dimension, 1);
    let kept: Vec<f64> = diagram
        .pairs
        .iter()
        .map(PersistencePair::persistence)
        .filter(|&p| p > noise_cutoff)
        .collect();
    if kept.is_empty() {
        return Dim1Features::default();
    }
    Dim1Features {
        cycle_count: kept.len(),
        avg_persistence: kept.iter().sum::<f64>() / kept.len() as f64,
        max_persistence: kept.iter().copied().fold(0.0, f64::max),
    }
}

/// Per-setting dimension-1 features: means over the sampled instances.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Dim1Means {
    pub cycle_count: f64,
    pub avg_persistence: f64,
    pub max_persistence: f64,
}

impl Dim1Means {
    pub const NAMES: [&'static str; 3] = ["cycles", "avg_persistence", "max_persistence"];

    pub fn of(features: &[Dim1Features]) -> Self {
        if features.is_empty() {
            return Dim1Means::default();
        }
        let m = features.len() as f64;
        Dim1Means {
            cycle_count: features.iter().map(|f| f.cycle_count as f64).sum::<f64>() / m,
            avg_persistence: features.iter().map(|f| f.avg_persistence).sum::<f64>() / m,
            max_persistence: features.iter().map(|f| f.max_persistence).sum::<f64>() / m,
        }
    }

    pub fn values(&self) -> [f64; 3] {
        [self.cycle_count, self.avg_persistence, self.max_persistence]
    }
}
