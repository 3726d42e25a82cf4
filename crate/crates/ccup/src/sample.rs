//! Seeded random-model generators.
//!
//! All sweeps in this crate draw from a symmetric Dirichlet(1)
//! distribution — i.e. uniformly from the probability simplex — via the
//! standard exponential-spacings construction: draw `Exp(1)` weights per
//! cell and normalize. Cells are strictly positive, so generated models
//! have full support and exercise the interiors of the inequalities.
//!
//! Reproducibility contract: the generator is ChaCha8, seeded with the
//! experiment seed, with the (trial+1)-th stream selected per trial.
//! The same `(seed, trial)` pair therefore yields the same model on
//! every platform, and trials can be regenerated individually.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::prob::{Alphabet, Channel, Dist, Joint};

/// The RNG for one trial of a seeded sweep.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Stream 0 is left untouched so a plain `seed_from_u64` user never
    // collides with trial 0.
    rng.set_stream(trial.wrapping_add(1));
    rng
}

/// One `Exp(1)` draw, bounded away from zero so normalized cells are
/// strictly positive.
fn exp_draw(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return -u.ln();
        }
    }
}

/// A Dirichlet(1)-distributed point on the simplex over `alphabet`.
pub fn random_dist(rng: &mut ChaCha8Rng, alphabet: Alphabet) -> Dist {
    let weights: Vec<f64> = (0..alphabet.size()).map(|_| exp_draw(rng)).collect();
    Dist::normalized(alphabet, weights).expect("exponential weights are positive and finite")
}

/// A Dirichlet(1)-distributed joint table over `rows × cols`.
pub fn random_joint(rng: &mut ChaCha8Rng, rows: Alphabet, cols: Alphabet) -> Joint {
    let flat = random_dist(
        rng,
        Alphabet::new(rows.size() * cols.size()).expect("nonzero table"),
    );
    let probs = flat
        .probs()
        .chunks(cols.size())
        .map(|c| c.to_vec())
        .collect();
    Joint::new(rows, cols, probs).expect("normalized table")
}

/// A channel whose rows are independent Dirichlet(1) draws.
pub fn random_channel(rng: &mut ChaCha8Rng, from: Alphabet, to: Alphabet) -> Channel {
    let rows = (0..from.size())
        .map(|_| random_dist(rng, to.clone()))
        .collect();
    Channel::from_rows(from, rows).expect("rows share the target alphabet")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_trial_reproduce_the_same_model() {
        let a = Alphabet::new(6).unwrap();
        let mut r1 = trial_rng(42, 3);
        let mut r2 = trial_rng(42, 3);
        assert_eq!(random_dist(&mut r1, a.clone()), random_dist(&mut r2, a));
    }

    #[test]
    fn different_trials_of_one_seed_differ() {
        let a = Alphabet::new(6).unwrap();
        let mut r1 = trial_rng(42, 0);
        let mut r2 = trial_rng(42, 1);
        assert_ne!(random_dist(&mut r1, a.clone()), random_dist(&mut r2, a));
    }

    #[test]
    fn generated_cells_are_strictly_positive() {
        for trial in 0..50 {
            let mut rng = trial_rng(9, trial);
            let j = random_joint(
                &mut rng,
                Alphabet::new(5).unwrap(),
                Alphabet::new(7).unwrap(),
            );
            for row in j.probs() {
                for &p in row {
                    assert!(p > 0.0);
                }
            }
        }
    }

    #[test]
    fn generated_channels_validate() {
        let mut rng = trial_rng(1, 0);
        let ch = random_channel(
            &mut rng,
            Alphabet::new(4).unwrap(),
            Alphabet::new(3).unwrap(),
        );
        for row in ch.rows() {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
        }
    }
}
