//! Max-plus algebra on weighted digraphs.
//!
//! Used twice: as the exact zero-temperature solver (maximum cycle mean and
//! calibrated subactions) and as a warm start for the log-domain eigen
//! iteration, where the tropical eigenvector is within `O(log n)` of the
//! logarithm of the Perron vector.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// A weighted digraph on `n` nodes; an edge `(from, to, w)` contributes `w`
/// to any walk passing through it.
#[derive(Clone, Debug)]
pub struct MaxPlusGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl MaxPlusGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        debug_assert!(edges.iter().all(|&(u, v, _)| u < n && v < n));
        MaxPlusGraph { n, edges }
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn reversed(&self) -> MaxPlusGraph {
        MaxPlusGraph {
            n: self.n,
            edges: self.edges.iter().map(|&(u, v, w)| (v, u, w)).collect(),
        }
    }

    /// Maximum cycle mean. The graph must be strongly connected.
    ///
    /// Karp's recursion locates the value; the mean of a critical cycle is
    /// then recomputed in exact arithmetic and rounded once, so the result
    /// does not depend on the order of the floating-point sums.
    pub fn max_cycle_mean(&self) -> f64 {
        let approx = self.karp();
        if !approx.is_finite() {
            return approx;
        }
        let scale = 1.0 + self.edges.iter().fold(0.0_f64, |s, e| s.max(e.2.abs()));
        let (v, critical) = self.eigenvector(approx);
        let cycle = self.tight_cycle(approx, &v, critical, 1e-12 * scale);
        let heaviest = self.shifted_adjacency(0.0);
        let weights: Vec<f64> = (0..cycle.len())
            .map(|i| heaviest[cycle[i]][cycle[(i + 1) % cycle.len()]])
            .collect();
        match exact_mean(&weights) {
            Some(m) if (m - approx).abs() <= 1e-12 * scale => m,
            _ => approx,
        }
    }

    /// Karp's maximum cycle mean in floating point.
    fn karp(&self) -> f64 {
        let n = self.n;
        // walks[k][v]: best weight of a walk with exactly k edges from node 0 to v
        let mut walks = vec![vec![f64::NEG_INFINITY; n]; n + 1];
        walks[0][0] = 0.0;
        for k in 1..=n {
            let (done, rest) = walks.split_at_mut(k);
            let prev = &done[k - 1];
            let cur = &mut rest[0];
            for &(u, v, w) in &self.edges {
                if prev[u] > f64::NEG_INFINITY {
                    cur[v] = cur[v].max(prev[u] + w);
                }
            }
        }
        let mut best = f64::NEG_INFINITY;
        for v in 0..n {
            if walks[n][v] == f64::NEG_INFINITY {
                continue;
            }
            let mut worst = f64::INFINITY;
            for k in 0..n {
                if walks[k][v] > f64::NEG_INFINITY {
                    worst = worst.min((walks[n][v] - walks[k][v]) / (n - k) as f64);
                }
            }
            best = best.max(worst);
        }
        best
    }

    /// Dense matrix of the heaviest edge `u -> v` shifted by `-m`.
    fn shifted_adjacency(&self, m: f64) -> Vec<Vec<f64>> {
        let mut g = vec![vec![f64::NEG_INFINITY; self.n]; self.n];
        for &(u, v, w) in &self.edges {
            g[u][v] = g[u][v].max(w - m);
        }
        g
    }

    /// A max-plus eigenvector for eigenvalue `m`:
    /// `V(u) = max over edges u -> v of [w - m + V(v)]`, gauge `max V = 0`.
    ///
    /// Built from the Kleene star of the shifted graph at a critical node.
    /// Returns the vector and the chosen critical node.
    pub fn eigenvector(&self, m: f64) -> (Vec<f64>, usize) {
        let n = self.n;
        let mut star = self.shifted_adjacency(m);
        for k in 0..n {
            for i in 0..n {
                let ik = star[i][k];
                if ik == f64::NEG_INFINITY {
                    continue;
                }
                for j in 0..n {
                    let through = ik + star[k][j];
                    if through > star[i][j] {
                        star[i][j] = through;
                    }
                }
            }
        }
        // critical nodes have a cycle of weight 0 through them; pick the
        // lowest index among the best (closest to zero) diagonals
        let mut critical = 0;
        for k in 1..n {
            if star[k][k] > star[critical][critical] {
                critical = k;
            }
        }
        let mut v: Vec<f64> = (0..n)
            .map(|u| {
                if u == critical {
                    star[u][u].max(0.0)
                } else {
                    star[u][critical]
                }
            })
            .collect();
        let top = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        v.iter_mut().for_each(|x| *x -= top);
        (v, critical)
    }

    /// Follows tight edges (`w - m + V(v) = V(u)`) from `start` until a node
    /// repeats; the repeated segment is a cycle of mean `m`. Ties go to the
    /// edge listed first.
    pub fn tight_cycle(&self, m: f64, v: &[f64], start: usize, tol: f64) -> Vec<usize> {
        let mut first_seen = vec![usize::MAX; self.n];
        let mut path = Vec::new();
        let mut u = start;
        loop {
            if first_seen[u] != usize::MAX {
                return path[first_seen[u]..].to_vec();
            }
            first_seen[u] = path.len();
            path.push(u);
            let mut next = None;
            let mut best = f64::NEG_INFINITY;
            for &(a, b, w) in &self.edges {
                if a != u {
                    continue;
                }
                let slack = w - m + v[b] - v[u];
                if slack >= -tol {
                    next = Some(b);
                    break;
                }
                if slack > best {
                    best = slack;
                    next = Some(b);
                }
            }
            match next {
                Some(b) => u = b,
                None => return path,
            }
        }
    }

    /// Largest value of `w - m + V(v) - V(u)` over all edges, and the largest
    /// deviation from 0 of its per-node maximum.
    pub fn calibration(&self, m: f64, v: &[f64]) -> (f64, f64) {
        let mut per_node = vec![f64::NEG_INFINITY; self.n];
        for &(u, b, w) in &self.edges {
            per_node[u] = per_node[u].max(w - m + v[b] - v[u]);
        }
        let feasibility = per_node.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let calibration = per_node.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        (feasibility, calibration)
    }
}

/// Mean of finite weights computed exactly and rounded once; `None` for an
/// empty or non-finite input.
pub fn exact_mean(weights: &[f64]) -> Option<f64> {
    if weights.is_empty() {
        return None;
    }
    let mut total = BigRational::zero();
    for &w in weights {
        total += BigRational::from_float(w)?;
    }
    (total / BigRational::from_integer(weights.len().into())).to_f64()
}
