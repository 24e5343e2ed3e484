use rand::Rng;
use rand_distr::{Binomial, Distribution};

/// Bookkeeping of the breadth-first exploration of the component of a fixed
/// vertex.
///
/// The queue starts with the root alone. Step `j` removes one queued vertex,
/// appends its `η_j` unseen neighbours and records its edges to vertices
/// still waiting in the queue. With `walk = Σ (η_i − 1)` the queue holds
/// `1 + walk` vertices, so it empties at the first step where `walk = −1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExplorationState {
    pub step: u64,
    pub queue_len: u64,
    pub seen: u64,
    pub walk: i64,
    pub edges_internal: u64,
}

impl ExplorationState {
    pub fn start() -> Self {
        Self {
            step: 0,
            queue_len: 1,
            seen: 1,
            walk: 0,
            edges_internal: 0,
        }
    }

    pub fn finished(&self) -> bool {
        self.queue_len == 0
    }

    /// Processes one queued vertex of `G(n, p)`.
    pub fn advance<R: Rng + ?Sized>(&mut self, n: u64, p: f64, rng: &mut R) {
        debug_assert!(!self.finished());
        let fresh = draw_binomial(n - self.seen, p, rng);
        let back = draw_binomial(self.queue_len - 1, p, rng);
        self.step += 1;
        self.seen += fresh;
        self.edges_internal += fresh + back;
        self.queue_len = self.queue_len - 1 + fresh;
        self.walk += fresh as i64 - 1;
        debug_assert_eq!(self.queue_len as i64, self.walk + 1);
    }
}

fn draw_binomial<R: Rng + ?Sized>(trials: u64, p: f64, rng: &mut R) -> u64 {
    if trials == 0 {
        return 0;
    }
    Binomial::new(trials, p).expect("p in [0, 1]").sample(rng)
}

/// `(size, edges)` of the component of a fixed vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexComponent {
    pub size: u64,
    pub edges: u64,
}

/// Explores the component of a fixed vertex to completion.
pub fn explore_component<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> VertexComponent {
    let mut state = ExplorationState::start();
    while !state.finished() {
        state.advance(n, p, rng);
    }
    debug_assert_eq!(state.step, state.seen);
    VertexComponent {
        size: state.seen,
        edges: state.edges_internal,
    }
}

/// Whether the component of a fixed vertex has at least `k` vertices. Stops
/// as soon as the answer is known.
pub fn component_reaches<R: Rng + ?Sized>(n: u64, p: f64, k: u64, rng: &mut R) -> bool {
    let mut state = ExplorationState::start();
    while !state.finished() {
        if state.seen >= k {
            return true;
        }
        state.advance(n, p, rng);
    }
    state.seen >= k
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn invariants_hold_along_the_walk() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2_000 {
            let mut s = ExplorationState::start();
            while !s.finished() {
                s.advance(40, 0.05, &mut rng);
                assert_eq!(s.queue_len as i64, s.walk + 1);
                assert!(s.seen <= 40);
            }
            assert_eq!(s.walk, -1);
            assert_eq!(s.step, s.seen);
            assert!(s.edges_internal + 1 >= s.seen);
        }
    }

    #[test]
    fn degenerate_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = explore_component(7, 1.0, &mut rng);
        assert_eq!(c, VertexComponent { size: 7, edges: 21 });
        let c = explore_component(7, 0.0, &mut rng);
        assert_eq!(c, VertexComponent { size: 1, edges: 0 });
        assert_eq!(explore_component(1, 0.5, &mut rng).size, 1);
    }

    #[test]
    fn early_stop_agrees_with_full_run() {
        for seed in 0..500 {
            let full = explore_component(30, 0.06, &mut ChaCha8Rng::seed_from_u64(seed));
            let hit = component_reaches(30, 0.06, 5, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(hit, full.size >= 5);
        }
    }
}
