//! Brute-force oracle: every labeled graph on `n ≤ 7` vertices, weighted by
//! its exact probability under `G(n, p)` for a rational `p`.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// A component: `(vertices, edges)`.
pub type Comp = (u64, u64);

pub struct GraphShape {
    pub edges: u32,
    /// Components sorted by (vertices, edges).
    pub comps: Vec<Comp>,
    /// Component of vertex 0.
    pub root: Comp,
}

impl GraphShape {
    pub fn largest(&self) -> u64 {
        self.comps.iter().map(|c| c.0).max().unwrap_or(0)
    }

    /// Number of components with `k` vertices and `k + l` edges.
    pub fn x(&self, k: u64, l: i64) -> i64 {
        self.comps
            .iter()
            .filter(|c| c.0 == k && c.1 as i64 == k as i64 + l)
            .count() as i64
    }

    /// Number of components with `k` vertices.
    pub fn y(&self, k: u64) -> i64 {
        self.comps.iter().filter(|c| c.0 == k).count() as i64
    }
}

pub struct Enumeration {
    pub n: u64,
    pub pairs: u32,
    pub graphs: Vec<GraphShape>,
}

fn pair_list(n: u64) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for i in 0..n as usize {
        for j in i + 1..n as usize {
            v.push((i, j));
        }
    }
    v
}

fn shape(n: usize, pairs: &[(usize, usize)], mask: u32) -> GraphShape {
    let mut adj = vec![0u32; n];
    for (bit, &(i, j)) in pairs.iter().enumerate() {
        if mask >> bit & 1 == 1 {
            adj[i] |= 1 << j;
            adj[j] |= 1 << i;
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut comps = Vec::new();
    let mut root = (0, 0);
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let mut members = 1u32 << start;
        let mut frontier = members;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let fresh = adj[v] & !members;
            members |= fresh;
            frontier |= fresh;
        }
        let mut degree_sum = 0u32;
        for v in 0..n {
            if members >> v & 1 == 1 {
                label[v] = comps.len();
                degree_sum += adj[v].count_ones();
            }
        }
        let c = (members.count_ones() as u64, (degree_sum / 2) as u64);
        if start == 0 {
            root = c;
        }
        comps.push(c);
    }
    comps.sort_unstable();
    GraphShape {
        edges: mask.count_ones(),
        comps,
        root,
    }
}

impl Enumeration {
    pub fn new(n: u64) -> Self {
        assert!((1..=7).contains(&n));
        let pairs = pair_list(n);
        let graphs = (0..1u32 << pairs.len())
            .map(|mask| shape(n as usize, &pairs, mask))
            .collect();
        Self {
            n,
            pairs: pairs.len() as u32,
            graphs,
        }
    }

    /// `E[f(G)]` for an integer-valued statistic `f`.
    pub fn expect(&self, p: &BigRational, f: impl Fn(&GraphShape) -> i64) -> BigRational {
        let mut by_edges = vec![0i64; self.pairs as usize + 1];
        for g in &self.graphs {
            by_edges[g.edges as usize] += f(g);
        }
        let q = BigRational::one() - p;
        let mut total = BigRational::zero();
        for (m, &count) in by_edges.iter().enumerate() {
            if count != 0 {
                let weight = num_traits::pow(p.clone(), m)
                    * num_traits::pow(q.clone(), self.pairs as usize - m);
                total += BigRational::from_integer(BigInt::from(count)) * weight;
            }
        }
        total
    }

    pub fn prob(&self, p: &BigRational, event: impl Fn(&GraphShape) -> bool) -> BigRational {
        self.expect(p, |g| event(g) as i64)
    }
}

/// Connected labeled graphs on `k` vertices with `m` edges, by enumeration.
pub fn connected_count(k: u64, m: u32) -> u64 {
    Enumeration::new(k)
        .graphs
        .iter()
        .filter(|g| g.edges == m && g.comps.len() == 1)
        .count() as u64
}
