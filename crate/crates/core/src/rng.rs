//! Named, counter-addressed random streams.
//!
//! A single `u64` seed plus a stream label yields a ChaCha key; each trial
//! index selects an independent ChaCha stream under that key. Results depend
//! only on `(seed, label, index)`, never on scheduling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::subset::Subset;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Streams {
    key: [u8; 32],
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Streams {
    pub fn new(seed: u64, label: &str) -> Self {
        let mut state = seed ^ fnv1a(label).rotate_left(17);
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix(&mut state).to_le_bytes());
        }
        Streams { key }
    }

    /// Generator for trial `index`.
    pub fn trial(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }
}

/// `X_p`: each of `n` elements independently with probability `p`.
pub fn sample_subset(n: usize, p: f64, rng: &mut impl Rng) -> Subset {
    let mut s = Subset::empty();
    for x in 0..n {
        if rng.gen::<f64>() < p {
            s.insert(x);
        }
    }
    s
}
