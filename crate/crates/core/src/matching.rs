//! Maximum-cardinality bipartite matching (Hopcroft–Karp).

use std::collections::VecDeque;

const FREE: usize = usize::MAX;

/// Bipartite graph with `left` vertices carrying adjacency lists into `0..right`.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    right: usize,
    adj: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn new(left: usize, right: usize) -> Self {
        BipartiteGraph {
            right,
            adj: vec![Vec::new(); left],
        }
    }

    pub fn add_edge(&mut self, l: usize, r: usize) {
        debug_assert!(r < self.right);
        self.adj[l].push(r);
    }

    /// Size of a maximum matching.
    pub fn max_matching(&self) -> usize {
        let left = self.adj.len();
        let mut match_l = vec![FREE; left];
        let mut match_r = vec![FREE; self.right];
        let mut dist = vec![0usize; left];
        let mut size = 0;
        loop {
            // BFS layers from free left vertices.
            let mut queue = VecDeque::new();
            for l in 0..left {
                if match_l[l] == FREE {
                    dist[l] = 0;
                    queue.push_back(l);
                } else {
                    dist[l] = usize::MAX;
                }
            }
            let mut found = false;
            while let Some(l) = queue.pop_front() {
                for &r in &self.adj[l] {
                    let m = match_r[r];
                    if m == FREE {
                        found = true;
                    } else if dist[m] == usize::MAX {
                        dist[m] = dist[l] + 1;
                        queue.push_back(m);
                    }
                }
            }
            if !found {
                return size;
            }
            let mut it = vec![0usize; left];
            for l in 0..left {
                if match_l[l] == FREE && self.augment(l, &mut match_l, &mut match_r, &mut dist, &mut it) {
                    size += 1;
                }
            }
        }
    }

    fn augment(
        &self,
        l: usize,
        match_l: &mut [usize],
        match_r: &mut [usize],
        dist: &mut [usize],
        it: &mut [usize],
    ) -> bool {
        while it[l] < self.adj[l].len() {
            let r = self.adj[l][it[l]];
            it[l] += 1;
            let m = match_r[r];
            if m == FREE || (dist[m] == dist[l] + 1 && self.augment(m, match_l, match_r, dist, it)) {
                match_l[l] = r;
                match_r[r] = l;
                return true;
            }
        }
        dist[l] = usize::MAX;
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_matching_needs_augmenting_path() {
        // l0-{r0,r1}, l1-{r0}: greedy l0->r0 must be undone.
        let mut g = BipartiteGraph::new(2, 2);
        g.add_edge(0, 0);
        g.add_edge(0, 1);
        g.add_edge(1, 0);
        assert_eq!(g.max_matching(), 2);
    }

    #[test]
    fn hall_violation() {
        let mut g = BipartiteGraph::new(3, 3);
        for l in 0..3 {
            g.add_edge(l, 0);
        }
        g.add_edge(2, 2);
        assert_eq!(g.max_matching(), 2);
        assert_eq!(BipartiteGraph::new(0, 4).max_matching(), 0);
    }
}
