//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use clustershape::hclust::{DistanceMatrix, Linkage};
use clustershape::ingest::PointCloud;
use rand::Rng;

pub fn random_cloud<R: Rng>(rng: &mut R, n: usize, side: f64) -> PointCloud {
    (0..n)
        .map(|_| (rng.random_range(0.0..side), rng.random_range(0.0..side)))
        .collect()
}

/// Dimension-1 pairs `(birth, death)` with positive persistence from a dense
/// reduction of the whole Rips boundary matrix (vertices, edges, triangles),
/// sorted by death then birth.
pub fn dense_dim1_pairs(dm: &DistanceMatrix) -> Vec<(f64, f64)> {
    let n = dm.len();
    let mut simplices: Vec<(f64, Vec<usize>)> = (0..n).map(|v| (0.0, vec![v])).collect();
    for i in 0..n {
        for j in i + 1..n {
            simplices.push((dm.get(i, j), vec![i, j]));
            for k in j + 1..n {
                let w = dm.get(i, j).max(dm.get(i, k)).max(dm.get(j, k));
                simplices.push((w, vec![i, j, k]));
            }
        }
    }
    simplices.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.len().cmp(&b.1.len())).then(a.1.cmp(&b.1)));
    let index = |s: &[usize]| simplices.iter().position(|(_, t)| t == s).unwrap();
    let m = simplices.len();
    let mut columns: Vec<Vec<bool>> = simplices
        .iter()
        .map(|(_, s)| {
            let mut col = vec![false; m];
            if s.len() > 1 {
                for drop in 0..s.len() {
                    let face: Vec<usize> = s
                        .iter()
                        .enumerate()
                        .filter(|&(p, _)| p != drop)
                        .map(|(_, &v)| v)
                        .collect();
                    col[index(&face)] = true;
                }
            }
            col
        })
        .collect();
    let low = |c: &[bool]| c.iter().rposition(|&x| x);
    let mut owner: Vec<Option<usize>> = vec![None; m];
    let mut pairs = Vec::new();
    for j in 0..m {
        while let Some(l) = low(&columns[j]) {
            match owner[l] {
                Some(o) => {
                    let other = columns[o].clone();
                    for (x, y) in columns[j].iter_mut().zip(other) {
                        *x ^= y;
                    }
                }
                None => break,
            }
        }
        if let Some(l) = low(&columns[j]) {
            owner[l] = Some(j);
            if simplices[l].1.len() == 2 && simplices[j].0 > simplices[l].0 {
                pairs.push((simplices[l].0, simplices[j].0));
            }
        }
    }
    pairs.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    pairs
}

/// Sorted edge weights of a minimum spanning tree (Prim).
pub fn prim_mst_weights(dm: &DistanceMatrix) -> Vec<f64> {
    let n = dm.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    best[0] = 0.0;
    let mut weights = Vec::with_capacity(n - 1);
    for step in 0..n {
        let v = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]))
            .unwrap();
        in_tree[v] = true;
        if step > 0 {
            weights.push(best[v]);
        }
        for u in 0..n {
            if !in_tree[u] && dm.get(v, u) < best[u] {
                best[u] = dm.get(v, u);
            }
        }
    }
    weights.sort_by(f64::total_cmp);
    weights
}

/// Agglomerative merge heights computed from the definition of each
/// linkage on explicit cluster memberships, sorted ascending.
pub fn naive_linkage_heights(cloud: &PointCloud, method: Linkage) -> Vec<f64> {
    let pts: Vec<(f64, f64)> = cloud.points.iter().map(|p| (p.x, p.y)).collect();
    let d = |a: usize, b: usize| ((pts[a].0 - pts[b].0).powi(2) + (pts[a].1 - pts[b].1).powi(2)).sqrt();
    let dist = |u: &[usize], v: &[usize]| -> f64 {
        let all = u.iter().flat_map(|&a| v.iter().map(move |&b| d(a, b)));
        match method {
            Linkage::Single => all.fold(f64::INFINITY, f64::min),
            Linkage::Complete => all.fold(0.0, f64::max),
            Linkage::Average => all.sum::<f64>() / (u.len() * v.len()) as f64,
            Linkage::Ward => {
                let centroid = |c: &[usize]| {
                    let k = c.len() as f64;
                    (
                        c.iter().map(|&i| pts[i].0).sum::<f64>() / k,
                        c.iter().map(|&i| pts[i].1).sum::<f64>() / k,
                    )
                };
                let (cu, cv) = (centroid(u), centroid(v));
                let (nu, nv) = (u.len() as f64, v.len() as f64);
                (2.0 * nu * nv / (nu + nv)).sqrt() * ((cu.0 - cv.0).powi(2) + (cu.1 - cv.1).powi(2)).sqrt()
            }
        }
    };
    let mut clusters: Vec<Vec<usize>> = (0..pts.len()).map(|i| vec![i]).collect();
    let mut heights = Vec::new();
    while clusters.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let v = dist(&clusters[i], &clusters[j]);
                if v < best.0 {
                    best = (v, i, j);
                }
            }
        }
        let (h, i, j) = best;
        let merged = clusters.remove(j);
        clusters[i].extend(merged);
        heights.push(h);
    }
    heights.sort_by(f64::total_cmp);
    heights
}

/// Γ(k / 2) for a positive integer `k`.
fn gamma_half(k: usize) -> f64 {
    let mut g = if k % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if k % 2 == 0 { 1.0 } else { 0.5 };
    while x < k as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Two-sided p-value of Student's t by composite Simpson quadrature of the
/// density over `[0, |t|]`.
pub fn t_test_p_oracle(t: f64, df: usize) -> f64 {
    let nu = df as f64;
    let c = gamma_half(df + 1) / ((nu * std::f64::consts::PI).sqrt() * gamma_half(df));
    let f = |x: f64| c * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0);
    let steps = 200_000;
    let h = t.abs() / steps as f64;
    let mut s = f(0.0) + f(t.abs());
    for i in 1..steps {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    (1.0 - 2.0 * s * h / 3.0).max(0.0)
}

#[test]
fn oracle_self_checks() {
    // Γ(5/2) = 3√π/4; df = 1 is the Cauchy distribution.
    assert!((gamma_half(5) - 0.75 * std::f64::consts::PI.sqrt()).abs() < 1e-14);
    let p = t_test_p_oracle(1.0, 1);
    assert!((p - 0.5).abs() < 1e-10, "{p}");
    // df = 2 has the closed form p = 1 - t / sqrt(t^2 + 2).
    let t: f64 = 2.0;
    assert!((t_test_p_oracle(t, 2) - (1.0 - t / (t * t + 2.0).sqrt())).abs() < 1e-10);
}
