use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};

/// Two disjoint parts of a dataset whose row ids cover the source exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitPair {
    pub part_a: Dataset,
    pub part_b: Dataset,
    pub seed: u64,
}

/// Random partition with `⌊fraction·n⌋` rows in `part_a`. Rows keep their
/// source order inside each part.
pub fn split_random(d: &Dataset, fraction: f64, seed: u64) -> Result<SplitPair, DataError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DataError::InvalidFraction(fraction));
    }
    if d.n_rows() < 2 {
        return Err(DataError::TooFewRows {
            needed: 2,
            got: d.n_rows(),
        });
    }
    let (a, b) = split_positions(d.n_rows(), fraction, seed);
    Ok(SplitPair {
        part_a: d.subset(&a),
        part_b: d.subset(&b),
        seed,
    })
}

/// Position-level split used by [`split_random`]; both halves sorted.
pub fn split_positions(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_a = (fraction * n as f64).floor() as usize;
    let mut a = order[..n_a].to_vec();
    let mut b = order[n_a..].to_vec();
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}
