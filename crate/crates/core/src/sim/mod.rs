//! Monte Carlo samplers and a replica harness.
//!
//! Replica `i` of a run with seed `s` draws from its own ChaCha8 stream
//! `(s, i)`, and all reductions are integer counts, so every summary is a
//! pure function of the inputs and the seed whatever the thread count.

mod explore;
mod graph;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use explore::{component_reaches, explore_component, ExplorationState, VertexComponent};
pub use graph::{for_each_edge, sample_graph, GraphSample, UnionFind};

use crate::error::{Error, Result};
use crate::window::CriticalWindow;

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// The generator for replica `index` of a run seeded with `seed`.
pub fn replica_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Largest component size of one sample of `G(n, p)`.
pub fn sample_graph_l1(w: &CriticalWindow, seed: u64) -> u64 {
    sample_graph(w.n(), w.p(), &mut replica_rng(seed, 0)).largest
}

/// `(size, edges)` of the component of a fixed vertex, by exploration.
pub fn sample_component_of_vertex(w: &CriticalWindow, seed: u64) -> VertexComponent {
    explore_component(w.n(), w.p(), &mut replica_rng(seed, 0))
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let n = trials as f64;
    let x = successes as f64;
    let z2 = z * z;
    let centre = (x + z2 / 2.0) / (n + z2);
    let half = z / (n + z2) * (x * (n - x) / n + z2 / 4.0).sqrt();
    let est = x / n;
    (
        (centre - half).max(0.0).min(est),
        (centre + half).min(1.0).max(est),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub replicas: u64,
    pub seed: u64,
    pub successes: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub histogram: Option<BTreeMap<u64, u64>>,
}

impl SimulationSummary {
    fn from_counts(replicas: u64, seed: u64, successes: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, replicas, Z95);
        Self {
            replicas,
            seed,
            successes,
            estimate: successes as f64 / replicas as f64,
            ci_low,
            ci_high,
            histogram: None,
        }
    }

    /// Half the width of the confidence interval.
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// The event counted by [`estimate_tail`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// `L1 ≥ k`, full-graph sampler.
    L1Ge,
    /// `L1 = k`, full-graph sampler.
    L1Eq,
    /// `|C(v)| ≥ k`, exploration sampler.
    CvGe,
}

impl Target {
    pub fn name(&self) -> &'static str {
        match self {
            Target::L1Ge => "L1_GE",
            Target::L1Eq => "L1_EQ",
            Target::CvGe => "CV_GE",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L1_GE" => Ok(Target::L1Ge),
            "L1_EQ" => Ok(Target::L1Eq),
            "CV_GE" => Ok(Target::CvGe),
            _ => Err(Error::domain(format!(
                "unknown event {s:?}; expected L1_GE, L1_EQ or CV_GE"
            ))),
        }
    }
}

/// Which size [`empirical_pmf`] records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmfMode {
    /// Largest component, full-graph sampler.
    L1,
    /// Component of a fixed vertex, exploration sampler.
    Cv,
    /// Component of vertex 0, full-graph sampler.
    CvGraph,
}

impl PmfMode {
    pub fn name(&self) -> &'static str {
        match self {
            PmfMode::L1 => "L1",
            PmfMode::Cv => "CV",
            PmfMode::CvGraph => "CV_GRAPH",
        }
    }
}

impl FromStr for PmfMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L1" => Ok(PmfMode::L1),
            "CV" => Ok(PmfMode::Cv),
            "CV_GRAPH" => Ok(PmfMode::CvGraph),
            _ => Err(Error::domain(format!(
                "unknown mode {s:?}; expected L1, CV or CV_GRAPH"
            ))),
        }
    }
}

/// Runs `replicas` replicas and folds their results with a commutative,
/// associative `merge`.
pub fn reduce_replicas<A, I, S, M>(replicas: u64, seed: u64, init: I, step: S, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    S: Fn(&mut A, &mut ChaCha8Rng) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..replicas)
            .into_par_iter()
            .fold(&init, |mut acc, i| {
                step(&mut acc, &mut replica_rng(seed, i));
                acc
            })
            .reduce(&init, &merge)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = &merge;
        let mut acc = init();
        for i in 0..replicas {
            step(&mut acc, &mut replica_rng(seed, i));
        }
        acc
    }
}

/// Runs `f` with at most `threads` worker threads (all cores when `None`).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    #[cfg(feature = "parallel")]
    {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            if t == 0 {
                return Err(Error::domain("thread count must be at least 1"));
            }
            builder = builder.num_threads(t);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::domain(format!("cannot start thread pool: {e}")))?;
        Ok(pool.install(f))
    }
    #[cfg(not(feature = "parallel"))]
    {
        if threads == Some(0) {
            return Err(Error::domain("thread count must be at least 1"));
        }
        Ok(f())
    }
}

fn require_replicas(replicas: u64) -> Result<()> {
    if replicas == 0 {
        return Err(Error::domain("replicas must be at least 1"));
    }
    Ok(())
}

/// Monte Carlo estimate of the probability of `target` at `k`.
pub fn estimate_tail(
    w: &CriticalWindow,
    k: u64,
    target: Target,
    replicas: u64,
    seed: u64,
) -> Result<SimulationSummary> {
    require_replicas(replicas)?;
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    let (n, p) = (w.n(), w.p());
    let hit = |rng: &mut ChaCha8Rng| match target {
        Target::L1Ge => sample_graph(n, p, rng).largest >= k,
        Target::L1Eq => sample_graph(n, p, rng).largest == k,
        Target::CvGe => component_reaches(n, p, k, rng),
    };
    let successes = reduce_replicas(
        replicas,
        seed,
        || 0u64,
        |acc, rng| *acc += hit(rng) as u64,
        |a, b| a + b,
    );
    Ok(SimulationSummary::from_counts(replicas, seed, successes))
}

fn merge_maps<K: Ord>(mut a: BTreeMap<K, u64>, b: BTreeMap<K, u64>) -> BTreeMap<K, u64> {
    for (key, count) in b {
        *a.entry(key).or_insert(0) += count;
    }
    a
}

/// Histogram of `L1` or of `|C(v)|` over independent replicas. Every replica
/// contributes one entry, so `successes = replicas`.
pub fn empirical_pmf(
    w: &CriticalWindow,
    mode: PmfMode,
    replicas: u64,
    seed: u64,
) -> Result<SimulationSummary> {
    require_replicas(replicas)?;
    let (n, p) = (w.n(), w.p());
    let histogram = reduce_replicas(
        replicas,
        seed,
        BTreeMap::new,
        |acc, rng| {
            let size = match mode {
                PmfMode::L1 => sample_graph(n, p, rng).largest,
                PmfMode::Cv => explore_component(n, p, rng).size,
                PmfMode::CvGraph => sample_graph(n, p, rng).vertex_component,
            };
            *acc.entry(size).or_insert(0) += 1;
        },
        merge_maps,
    );
    let mut summary = SimulationSummary::from_counts(replicas, seed, replicas);
    summary.histogram = Some(histogram);
    Ok(summary)
}

/// Histogram of `(|C(v)|, E(C(v)))` over independent exploration replicas.
pub fn empirical_joint_pmf(
    w: &CriticalWindow,
    replicas: u64,
    seed: u64,
) -> Result<BTreeMap<VertexComponent, u64>> {
    require_replicas(replicas)?;
    let (n, p) = (w.n(), w.p());
    Ok(reduce_replicas(
        replicas,
        seed,
        BTreeMap::new,
        |acc, rng| *acc.entry(explore_component(n, p, rng)).or_insert(0) += 1,
        merge_maps,
    ))
}
