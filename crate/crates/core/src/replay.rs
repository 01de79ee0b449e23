//! Joint experience storage.
//!
//! One buffer stores whole joint steps so that, when a minibatch is drawn,
//! every agent's slice of a given element refers to the same environment
//! step. This is what makes centralized mixing well defined.

use rand::Rng;

use crate::error::{Error, Result};

/// One time-aligned joint step across all agents.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub next_obs: Vec<Vec<f64>>,
    pub done: bool,
}

/// Fixed-capacity FIFO ring of joint transitions with uniform sampling.
#[derive(Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    obs_dims: Vec<usize>,
    action_dims: Vec<usize>,
    storage: Vec<Transition>,
    write_cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dims: Vec<usize>, action_dims: Vec<usize>) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        assert_eq!(obs_dims.len(), action_dims.len());
        ReplayBuffer {
            capacity,
            obs_dims,
            action_dims,
            storage: Vec::new(),
            write_cursor: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn num_agents(&self) -> usize {
        self.obs_dims.len()
    }

    fn validate(&self, t: &Transition) -> Result<()> {
        let n = self.num_agents();
        if t.obs.len() != n || t.actions.len() != n || t.rewards.len() != n || t.next_obs.len() != n
        {
            return Err(Error::domain(format!(
                "transition covers {} agents, buffer stores {}",
                t.obs.len(),
                n
            )));
        }
        for i in 0..n {
            if t.obs[i].len() != self.obs_dims[i] || t.next_obs[i].len() != self.obs_dims[i] {
                return Err(Error::domain(format!(
                    "agent {i} observation length {} does not match {}",
                    t.obs[i].len(),
                    self.obs_dims[i]
                )));
            }
            if t.actions[i].len() != self.action_dims[i] {
                return Err(Error::domain(format!(
                    "agent {i} action length {} does not match {}",
                    t.actions[i].len(),
                    self.action_dims[i]
                )));
            }
        }
        Ok(())
    }

    /// Appends a transition, evicting the oldest once at capacity.
    pub fn push(&mut self, t: Transition) -> Result<()> {
        self.validate(&t)?;
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.write_cursor] = t;
        }
        self.write_cursor = (self.write_cursor + 1) % self.capacity;
        Ok(())
    }

    /// Draws `batch` indices i.i.d. uniform with replacement. Returns `None`
    /// while fewer than `batch` transitions are stored (the caller skips the
    /// update).
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Option<Vec<&Transition>> {
        if self.storage.len() < batch || batch == 0 {
            return None;
        }
        Some(
            (0..batch)
                .map(|_| &self.storage[rng.gen_range(0..self.storage.len())])
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn tagged(tag: f64) -> Transition {
        Transition {
            obs: vec![vec![tag, 0.0], vec![tag, 1.0]],
            actions: vec![vec![0.0], vec![0.0]],
            rewards: vec![tag, tag],
            next_obs: vec![vec![tag, 2.0], vec![tag, 3.0]],
            done: false,
        }
    }

    fn small_buffer(capacity: usize) -> ReplayBuffer {
        ReplayBuffer::new(capacity, vec![2, 2], vec![1, 1])
    }

    #[test]
    fn eviction_is_fifo() {
        let mut buf = small_buffer(3);
        for i in 1..=4 {
            buf.push(tagged(i as f64)).unwrap();
        }
        assert_eq!(buf.len(), 3);
        let tags: std::collections::BTreeSet<i64> =
            buf.storage.iter().map(|t| t.rewards[0] as i64).collect();
        assert_eq!(tags, [2, 3, 4].into_iter().collect());
    }

    #[test]
    fn single_item_roundtrip() {
        let mut buf = small_buffer(10);
        buf.push(tagged(7.0)).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let batch = buf.sample(1, &mut rng).unwrap();
        assert_eq!(batch[0], &tagged(7.0));
    }

    #[test]
    fn size_tracks_pushes_below_capacity() {
        let mut buf = small_buffer(500_000);
        for i in 0..100_000 {
            buf.push(tagged(i as f64)).unwrap();
        }
        assert_eq!(buf.len(), 100_000);
    }

    #[test]
    fn sample_before_ready_returns_none() {
        let mut buf = small_buffer(8);
        buf.push(tagged(1.0)).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert!(buf.sample(2, &mut rng).is_none());
        assert!(buf.sample(1, &mut rng).is_some());
    }

    #[test]
    fn shape_inconsistent_transition_is_rejected() {
        let mut buf = small_buffer(4);
        let mut bad = tagged(1.0);
        bad.obs[1] = vec![0.0; 5];
        assert!(matches!(buf.push(bad), Err(Error::Domain(_))));
        let mut bad = tagged(1.0);
        bad.actions.pop();
        assert!(matches!(buf.push(bad), Err(Error::Domain(_))));
    }

    #[test]
    fn sampling_frequencies_are_uniform() {
        let mut buf = small_buffer(100);
        for i in 0..100 {
            buf.push(tagged(i as f64)).unwrap();
        }
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let mut counts = vec![0u64; 100];
        let draws = 1_000_000usize;
        for _ in 0..draws / 100 {
            for t in buf.sample(100, &mut rng).unwrap() {
                counts[t.rewards[0] as usize] += 1;
            }
        }
        // Binomial(n, 1/100): mean 10^4, sigma ~ 99.5; allow 5 sigma.
        let mean = draws as f64 / 100.0;
        let sigma = (draws as f64 * 0.01 * 0.99).sqrt();
        for (i, c) in counts.iter().enumerate() {
            assert!(
                (*c as f64 - mean).abs() <= 5.0 * sigma,
                "index {i} drawn {c} times"
            );
        }
    }

    #[test]
    fn sampled_batches_stay_time_aligned() {
        // The step counter is embedded in every per-agent field; any sampled
        // element must agree across agents.
        let mut buf = small_buffer(64);
        for i in 0..64 {
            buf.push(tagged(i as f64)).unwrap();
        }
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for t in buf.sample(64, &mut rng).unwrap() {
            let tag = t.obs[0][0];
            assert_eq!(t.obs[1][0], tag);
            assert_eq!(t.next_obs[0][0], tag);
            assert_eq!(t.next_obs[1][0], tag);
            assert_eq!(t.rewards[0], tag);
            assert_eq!(t.rewards[1], tag);
        }
    }
}
