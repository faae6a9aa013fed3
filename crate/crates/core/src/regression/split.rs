//! Seeded train/test partition.
//!
//! The shuffle is a Fisher–Yates pass driven by ChaCha8
//! (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`): for `i` from `n - 1`
//! down to `1`, swap position `i` with `next_u64() % (i + 1)`. The first
//! `round(n * test_fraction)` shuffled records (clamped to `[1, n - 1]`) form
//! the test set, the remainder the training set.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::RegressionError;

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const DEFAULT_SPLIT_SEED: u64 = 42;

/// Seeded permutation of `0..n`.
pub fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        idx.swap(i, j);
    }
    idx
}

pub fn test_size(n: usize, test_fraction: f64) -> usize {
    ((n as f64 * test_fraction).round() as usize).clamp(1, n.saturating_sub(1))
}

/// Returns `(train, test)`.
pub fn train_test_split<T: Clone>(
    records: &[T],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>), RegressionError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(RegressionError::InvalidFraction(test_fraction));
    }
    let n = records.len();
    if n < 2 {
        return Err(RegressionError::TooFewSamples { n, required: 2 });
    }
    let order = shuffled_indices(n, seed);
    let k = test_size(n, test_fraction);
    let test = order[..k].iter().map(|&i| records[i].clone()).collect();
    let train = order[k..].iter().map(|&i| records[i].clone()).collect();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn sizes() {
        let records: Vec<u32> = (0..10).collect();
        let (train, test) = train_test_split(&records, 0.2, 42).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        let (train, test) = train_test_split(&(0..90).collect::<Vec<_>>(), 0.2, 42).unwrap();
        assert_eq!((train.len(), test.len()), (72, 18));
        // clamped so that neither side is empty
        let (train, test) = train_test_split(&[1, 2], 0.01, 0).unwrap();
        assert_eq!((train.len(), test.len()), (1, 1));
        let (train, test) = train_test_split(&[1, 2, 3], 0.99, 0).unwrap();
        assert_eq!((train.len(), test.len()), (1, 2));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let records: Vec<u32> = (0..50).collect();
        let a = train_test_split(&records, 0.2, 42).unwrap();
        let b = train_test_split(&records, 0.2, 42).unwrap();
        assert_eq!(a, b);
        let c = train_test_split(&records, 0.2, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            train_test_split(&[1], 0.2, 0),
            Err(RegressionError::TooFewSamples { .. })
        ));
        assert!(matches!(
            train_test_split(&[1, 2, 3], 1.0, 0),
            Err(RegressionError::InvalidFraction(_))
        ));
        assert!(train_test_split(&[1, 2, 3], 0.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn partition_is_disjoint_and_complete(n in 2usize..300, frac in 0.01f64..0.99, seed: u64) {
            let records: Vec<usize> = (0..n).collect();
            let (train, test) = train_test_split(&records, frac, seed).unwrap();
            prop_assert!(!train.is_empty() && !test.is_empty());
            prop_assert_eq!(test.len(), test_size(n, frac));
            let all: BTreeSet<usize> = train.iter().chain(&test).cloned().collect();
            prop_assert_eq!(all.len(), n);
            prop_assert_eq!(train.len() + test.len(), n);
        }
    }
}
