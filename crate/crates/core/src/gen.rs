//! Seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NswError, Result};
use crate::model::Instance;

/// Each `heavy[i][g]` is drawn independently with probability `density`,
/// row by row, from a ChaCha8 stream seeded with `seed`.
pub fn random_instance(seed: u64, n: usize, m: usize, p: u64, density: f64) -> Result<Instance> {
    if !(0.0..=1.0).contains(&density) {
        return Err(NswError::InvalidInstance(format!("density {density} is outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let heavy = (0..n).map(|_| (0..m).map(|_| rng.gen_bool(density)).collect()).collect();
    Instance::new(p, m, heavy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instance() {
        assert_eq!(random_instance(9, 4, 7, 5, 0.5).unwrap(), random_instance(9, 4, 7, 5, 0.5).unwrap());
        assert_ne!(random_instance(9, 4, 7, 5, 0.5).unwrap(), random_instance(10, 4, 7, 5, 0.5).unwrap());
    }

    #[test]
    fn density_extremes() {
        let none = random_instance(1, 3, 6, 3, 0.0).unwrap();
        assert_eq!(none.heavy_goods().count(), 0);
        let all = random_instance(1, 3, 6, 3, 1.0).unwrap();
        assert!(all.heavy_matrix().iter().flatten().all(|&h| h));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(random_instance(1, 2, 2, 3, 1.5).is_err());
        assert!(random_instance(1, 2, 2, 4, 0.5).is_err());
    }
}
