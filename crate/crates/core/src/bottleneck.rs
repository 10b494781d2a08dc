//! Exact bottleneck distance between clustering diagrams.
//!
//! Every point of a clustering diagram sits at birth 0, so the L∞ cost of
//! matching `(0, a)` with `(0, b)` is `|a - b|` and the cost of sending
//! `(0, a)` to the diagonal is `a / 2`. The distance is the smallest value in
//! the candidate set `{|aᵢ - bⱼ|} ∪ {aᵢ / 2} ∪ {bⱼ / 2}` at which a
//! feasible matching exists. The search narrows the candidate set with
//! median selection, so it costs linear time plus a logarithmic number of
//! feasibility checks.
//!
//! Feasibility at threshold ε: every point with `d / 2 > ε` must be matched
//! to a point of the other diagram within ε. A matching that covers the
//! required points of one side and one that covers those of the other side
//! can always be combined into one covering both (Mendelsohn–Dulmage), and
//! each one-sided question is an interval-matching problem that a sorted
//! greedy sweep answers exactly. [`Feasibility::HopcroftKarp`] runs the
//! textbook augmented-graph perfect-matching test instead.

use std::borrow::Cow;

use crate::hclust::ClusteringDiagram;
use crate::matching::BipartiteGraph;
use crate::par::Execution;
use crate::{Error, Result};

/// Largest combined size accepted by [`bottleneck_oracle`].
pub const ORACLE_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Feasibility {
    #[default]
    Greedy,
    HopcroftKarp,
}

pub fn bottleneck_distance(a: &ClusteringDiagram, b: &ClusteringDiagram) -> f64 {
    bottleneck_distance_with(a, b, Feasibility::Greedy)
}

pub fn bottleneck_distance_with(a: &ClusteringDiagram, b: &ClusteringDiagram, method: Feasibility) -> f64 {
    let a = sorted(&a.deaths);
    let b = sorted(&b.deaths);
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let feasible = |eps: f64| match method {
        Feasibility::Greedy => greedy_feasible(&a, &b, eps),
        Feasibility::HopcroftKarp => matching_feasible(&a, &b, eps),
    };

    // Cost of one particular matching (largest with largest, leftovers to
    // the diagonal) bounds the answer; larger candidates can be dropped.
    let upper = rank_matching_cost(&a, &b);
    let mut cands = Vec::with_capacity(4 * (a.len() + b.len()));
    cands.extend(a.iter().chain(b.iter()).map(|&x| x / 2.0).filter(|&c| c <= upper));
    let mut lo = 0;
    for &x in a.iter() {
        while lo < b.len() && x - b[lo] > upper {
            lo += 1;
        }
        cands.extend(b[lo..].iter().map(|&y| (x - y).abs()).take_while(|&c| c <= upper));
    }
    cands.push(upper);

    // `upper` is feasible, so the answer is the smallest feasible candidate.
    let mut slice = &mut cands[..];
    while slice.len() > 1 {
        let mid = (slice.len() - 1) / 2;
        let (_, &mut pivot, _) = slice.select_nth_unstable_by(mid, f64::total_cmp);
        if feasible(pivot) {
            slice = &mut slice[..=mid];
        } else {
            slice = &mut slice[mid + 1..];
        }
    }
    slice[0]
}

fn rank_matching_cost(a: &[f64], b: &[f64]) -> f64 {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let skip = long.len() - short.len();
    let matched = long[skip..].iter().zip(short).map(|(x, y)| (x - y).abs());
    let unmatched = long[..skip].iter().map(|x| x / 2.0);
    matched.chain(unmatched).fold(0.0, f64::max)
}

fn sorted(xs: &[f64]) -> Cow<'_, [f64]> {
    if xs.windows(2).all(|w| w[0] <= w[1]) {
        Cow::Borrowed(xs)
    } else {
        let mut v = xs.to_vec();
        v.sort_by(f64::total_cmp);
        Cow::Owned(v)
    }
}

fn greedy_feasible(a: &[f64], b: &[f64], eps: f64) -> bool {
    covers_required(a, b, eps) && covers_required(b, a, eps)
}

/// Can every `x` in `required` with `x / 2 > eps` get its own partner in
/// `pool` within `eps`? Both slices sorted ascending; the required points
/// form a suffix of `required`.
fn covers_required(required: &[f64], pool: &[f64], eps: f64) -> bool {
    let first = required.partition_point(|&x| x / 2.0 <= eps);
    let mut j = 0;
    for &x in &required[first..] {
        while j < pool.len() && pool[j] < x && x - pool[j] > eps {
            j += 1;
        }
        if j == pool.len() || (pool[j] - x).abs() > eps {
            return false;
        }
        j += 1;
    }
    true
}

fn matching_feasible(a: &[f64], b: &[f64], eps: f64) -> bool {
    let (na, nb) = (a.len(), b.len());
    // Left: A then diagonal copies of B. Right: B then diagonal copies of A.
    let mut g = BipartiteGraph::new(na + nb, nb + na);
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            if (x - y).abs() <= eps {
                g.add_edge(i, j);
            }
        }
        if x / 2.0 <= eps {
            g.add_edge(i, nb + i);
        }
    }
    for (j, &y) in b.iter().enumerate() {
        if y / 2.0 <= eps {
            g.add_edge(na + j, j);
        }
        for i in 0..na {
            g.add_edge(na + j, nb + i);
        }
    }
    g.max_matching() == na + nb
}

/// Exhaustive minimum over all partial injections `a → b` (unmatched points
/// go to the diagonal). Limited to `|a| + |b| <= ORACLE_LIMIT`.
pub fn bottleneck_oracle(a: &ClusteringDiagram, b: &ClusteringDiagram) -> Result<f64> {
    let total = a.len() + b.len();
    if total > ORACLE_LIMIT {
        return Err(Error::TooLarge {
            limit: ORACLE_LIMIT,
            got: total,
        });
    }
    let mut used = vec![false; b.len()];
    let mut best = f64::INFINITY;
    search(&a.deaths, &b.deaths, 0, &mut used, 0.0, &mut best);
    Ok(if total == 0 { 0.0 } else { best })
}

fn search(a: &[f64], b: &[f64], i: usize, used: &mut [bool], cost: f64, best: &mut f64) {
    if i == a.len() {
        let rest = b
            .iter()
            .zip(used.iter())
            .filter(|(_, &u)| !u)
            .fold(cost, |m, (&y, _)| m.max(y / 2.0));
        if rest < *best {
            *best = rest;
        }
        return;
    }
    search(a, b, i + 1, used, cost.max(a[i] / 2.0), best);
    for j in 0..b.len() {
        if !used[j] {
            used[j] = true;
            search(a, b, i + 1, used, cost.max((a[i] - b[j]).abs()), best);
            used[j] = false;
        }
    }
}

/// All `m(m-1)/2` distances in row-major upper-triangle order:
/// (0,1), (0,2), …, (0,m-1), (1,2), ….
pub fn pairwise_bottleneck(diagrams: &[ClusteringDiagram]) -> Result<Vec<f64>> {
    pairwise_bottleneck_with(diagrams, Execution::Sequential)
}

pub fn pairwise_bottleneck_with(diagrams: &[ClusteringDiagram], exec: Execution) -> Result<Vec<f64>> {
    let m = diagrams.len();
    if m < 2 {
        return Err(Error::TooFew { needed: 2, got: m });
    }
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    Ok(exec.map(&pairs, |&(i, j)| bottleneck_distance(&diagrams[i], &diagrams[j])))
}
