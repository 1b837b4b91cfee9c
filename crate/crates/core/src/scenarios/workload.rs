use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp};

use crate::identity::{generate_keypair, KeyPair};
use crate::storage::MAX_REVIEW_TEXT;

use super::TextLength;

const WORDS: &[&str] = &[
    "great", "app", "crashes", "after", "update", "love", "the", "new", "design", "battery",
    "drain", "is", "terrible", "works", "offline", "sync", "slow", "fast", "support", "helpful",
    "ads", "too", "many", "five", "stars", "would", "recommend", "login", "broken", "again",
];

pub fn sample_length(rng: &mut impl Rng, dist: &TextLength) -> usize {
    let raw = match *dist {
        TextLength::Fixed { bytes } => bytes,
        TextLength::Uniform { min, max } => rng.gen_range(min..=max),
        TextLength::Exponential { mean } => {
            let exp = Exp::new(1.0 / mean).expect("mean validated");
            exp.sample(rng).ceil() as usize
        }
    };
    raw.clamp(1, MAX_REVIEW_TEXT)
}

/// ASCII text of exactly `len` bytes.
pub fn review_text(rng: &mut impl Rng, len: usize) -> String {
    let mut text = String::with_capacity(len + 16);
    while text.len() < len {
        if !text.is_empty() {
            text.push(' ');
        }
        text.push_str(WORDS[rng.gen_range(0..WORDS.len())]);
    }
    text.truncate(len);
    text
}

pub fn fresh_key(rng: &mut impl RngCore) -> KeyPair {
    let mut seed = [0u8; 32];
    rng.fill_bytes(&mut seed);
    generate_keypair(&seed).expect("32-byte seed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lengths_stay_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dist = TextLength::Exponential { mean: 89.0 };
        let lens: Vec<usize> = (0..2000).map(|_| sample_length(&mut rng, &dist)).collect();
        assert!(lens.iter().all(|&l| (1..=MAX_REVIEW_TEXT).contains(&l)));
        let mean = lens.iter().sum::<usize>() as f64 / lens.len() as f64;
        assert!((80.0..100.0).contains(&mean), "mean {mean}");
    }

    #[test]
    fn text_has_exact_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for len in [1, 2, 7, 89, 8192] {
            assert_eq!(review_text(&mut rng, len).len(), len);
        }
    }
}
