//! Keyed random streams.
//!
//! Every particle draws from its own ChaCha8 stream selected by
//! `(seed, replica, generation, particle)`: the replica picks the ChaCha stream
//! id and `(generation, particle)` pick a block-aligned word position. A
//! particle's randomness therefore does not depend on processing order,
//! thread count, or the draws of any other particle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 32-bit words reserved for one particle.
const PARTICLE_WORDS: u32 = 6;
const GENERATION_SHIFT: u32 = 44;

/// Maximum number of `u64` draws a single particle may consume.
pub const DRAWS_PER_PARTICLE: usize = 1 << (PARTICLE_WORDS - 1);

/// Stream factory for one replica.
#[derive(Clone, Debug)]
pub struct ReplicaStreams {
    base: ChaCha8Rng,
}

impl ReplicaStreams {
    pub fn new(seed: u64, replica: u64) -> Self {
        let mut base = ChaCha8Rng::seed_from_u64(seed);
        base.set_stream(replica);
        ReplicaStreams { base }
    }

    /// Stream owned by particle `particle` of generation `generation`.
    pub fn particle(&self, generation: u64, particle: u64) -> ChaCha8Rng {
        assert!(generation < 1 << (68 - GENERATION_SHIFT), "generation index too large");
        assert!(particle < 1 << (GENERATION_SHIFT - PARTICLE_WORDS), "particle index too large");
        let mut rng = self.base.clone();
        rng.set_word_pos(((generation as u128) << GENERATION_SHIFT) | ((particle as u128) << PARTICLE_WORDS));
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_depend_only_on_their_key() {
        let a = ReplicaStreams::new(1, 2);
        let b = ReplicaStreams::new(1, 2);
        let x: Vec<u64> = (0..4).map(|_| 0).scan(a.particle(3, 4), |r, _: u64| Some(r.random())).collect();
        let y: Vec<u64> = (0..4).map(|_| 0).scan(b.particle(3, 4), |r, _: u64| Some(r.random())).collect();
        assert_eq!(x, y);
        assert_ne!(x[0], a.particle(3, 5).random::<u64>());
        assert_ne!(x[0], a.particle(4, 4).random::<u64>());
        assert_ne!(x[0], ReplicaStreams::new(1, 3).particle(3, 4).random::<u64>());
        assert_ne!(x[0], ReplicaStreams::new(2, 2).particle(3, 4).random::<u64>());
    }

    #[test]
    fn neighbouring_particles_do_not_overlap() {
        let s = ReplicaStreams::new(9, 0);
        let mut r = s.particle(0, 0);
        let first: Vec<u64> = (0..DRAWS_PER_PARTICLE).map(|_| r.random()).collect();
        let next: u64 = s.particle(0, 1).random();
        assert!(!first.contains(&next));
        assert_eq!(r.random::<u64>(), next);
    }
}
