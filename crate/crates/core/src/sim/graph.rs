use rand::Rng;
use rand_distr::{Distribution, Geometric};

/// Disjoint sets with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Merges the sets of `a` and `b`, returning the size of the merged set.
    pub fn union(&mut self, a: u32, b: u32) -> u32 {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return self.size[ra as usize];
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        self.size[ra as usize]
    }

    pub fn set_size(&mut self, x: u32) -> u32 {
        let r = self.find(x);
        self.size[r as usize]
    }
}

/// Calls `edge(i, j)` for every edge of one sample of `G(n, p)`, in
/// lexicographic order of the pairs `i < j`.
///
/// Gaps between consecutive present pairs are drawn from the geometric law,
/// so the expected work is `O(n + p n²)`.
pub fn for_each_edge<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R, mut edge: impl FnMut(u32, u32)) {
    if n < 2 || p <= 0.0 {
        return;
    }
    let pairs = n * (n - 1) / 2;
    let gap = Geometric::new(p).expect("p in (0, 1]");
    let (mut row, mut row_start) = (0u64, 0u64);
    let mut t = 0u64;
    loop {
        t = t.saturating_add(gap.sample(rng));
        if t >= pairs {
            return;
        }
        while t >= row_start + (n - 1 - row) {
            row_start += n - 1 - row;
            row += 1;
        }
        let col = row + 1 + (t - row_start);
        edge(row as u32, col as u32);
        t += 1;
    }
}

/// Component sizes from one sample of `G(n, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphSample {
    /// Size of the largest component.
    pub largest: u64,
    /// Size of the component containing vertex 0.
    pub vertex_component: u64,
}

pub fn sample_graph<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> GraphSample {
    assert!(
        n >= 1 && n <= u32::MAX as u64,
        "n out of range for the graph sampler"
    );
    let mut uf = UnionFind::new(n as usize);
    let mut largest = 1u32;
    for_each_edge(n, p, rng, |i, j| {
        largest = largest.max(uf.union(i, j));
    });
    GraphSample {
        largest: largest as u64,
        vertex_component: uf.set_size(0) as u64,
    }
}
