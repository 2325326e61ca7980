use rand::seq::index;
use rand::Rng;

use super::Transition;

/// Bounded transition memory; once full, each insert overwrites the oldest.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            capacity,
            storage: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Stored transitions, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.storage.len() < self.capacity { 0 } else { self.next };
        self.storage[split..].iter().chain(&self.storage[..split])
    }

    /// `b` distinct transitions drawn uniformly, or `None` until more than
    /// `b` are stored.
    pub fn sample<R: Rng + ?Sized>(&self, b: usize, rng: &mut R) -> Option<Vec<&Transition>> {
        if self.storage.len() <= b {
            return None;
        }
        Some(
            index::sample(rng, self.storage.len(), b)
                .into_iter()
                .map(|i| &self.storage[i])
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(r: f64) -> Transition {
        Transition {
            s: vec![r],
            a: 0,
            r,
            s_next: vec![r],
            terminal: false,
        }
    }

    #[test]
    fn not_ready_until_more_than_b() {
        let mut buf = ReplayBuffer::new(100);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 0..32 {
            buf.push(t(k as f64));
        }
        assert!(buf.sample(32, &mut rng).is_none());
        buf.push(t(32.0));
        let batch = buf.sample(32, &mut rng).unwrap();
        let mut seen: Vec<f64> = batch.iter().map(|x| x.r).collect();
        seen.sort_by(f64::total_cmp);
        seen.dedup();
        assert_eq!(seen.len(), 32);
    }

    #[test]
    fn evicts_oldest_first() {
        let mut buf = ReplayBuffer::new(10);
        for k in 0..13 {
            buf.push(t(k as f64));
        }
        assert_eq!(buf.len(), 10);
        let kept: Vec<f64> = buf.iter().map(|x| x.r).collect();
        assert_eq!(kept, (3..13).map(|k| k as f64).collect::<Vec<_>>());
    }

    #[test]
    fn seeded_sampling_repeats() {
        let mut buf = ReplayBuffer::new(1000);
        for k in 0..500 {
            buf.push(t(k as f64));
        }
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5)
                .map(|_| buf.sample(32, &mut rng).unwrap().iter().map(|x| x.r).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }
}
