//! Exact information laws on finite joint tables, in nats.
//!
//! Builds a small weather/activity table, reads off its entropies, and
//! verifies the two identities every joint obeys: the conditional-entropy
//! inequality `H(Ψ|Φ) + H(Φ|Ψ) ≥ |H(Φ) − H(Ψ)|` and the chain rule
//! `H(Φ,Ψ) = H(Φ) + H(Ψ|Φ)`. A seeded sweep then shows the margin stays
//! nonnegative on random tables.
//!
//! Run with: `cargo run --example information_laws`

use ccup::prob::{
    check_chain_rule, check_entropy_inequality, compression_gain, conditional_entropy, entropy,
    joint_entropy, mutual_information, Alphabet, Given, Joint,
};
use ccup::sample::{random_joint, trial_rng};

fn main() -> ccup::Result<()> {
    let weather = Alphabet::with_labels(vec!["sun".into(), "rain".into(), "snow".into()])?;
    let activity = Alphabet::with_labels(vec!["hike".into(), "read".into(), "ski".into()])?;
    let joint = Joint::new(
        weather,
        activity,
        vec![
            vec![0.30, 0.06, 0.04],
            vec![0.02, 0.28, 0.02],
            vec![0.03, 0.05, 0.20],
        ],
    )?;

    println!(
        "H(weather)            = {:.4} nats",
        entropy(&joint.row_marginal())
    );
    println!(
        "H(activity)           = {:.4} nats",
        entropy(&joint.col_marginal())
    );
    println!("H(weather, activity)  = {:.4} nats", joint_entropy(&joint));
    println!(
        "H(activity | weather) = {:.4} nats",
        conditional_entropy(&joint, Given::Row)
    );
    println!(
        "H(weather | activity) = {:.4} nats",
        conditional_entropy(&joint, Given::Col)
    );
    println!(
        "I(weather; activity)  = {:.4} nats",
        mutual_information(&joint)
    );
    println!();
    println!(
        "entropy inequality margin = {:.6}",
        check_entropy_inequality(&joint)
    );
    println!(
        "chain rule residual       = {:.2e}",
        check_chain_rule(&joint)
    );
    println!(
        "compression gain          = {:.4} nats",
        compression_gain(&joint)
    );

    // The margin is a theorem, not a property of this table: sweep
    // random joints and watch its infimum stay at or above zero.
    let rows = Alphabet::new(4)?;
    let cols = Alphabet::new(5)?;
    let mut min_margin = f64::INFINITY;
    let mut max_residual: f64 = 0.0;
    for trial in 0..1000 {
        let mut rng = trial_rng(7, trial);
        let j = random_joint(&mut rng, rows.clone(), cols.clone());
        min_margin = min_margin.min(check_entropy_inequality(&j));
        max_residual = max_residual.max(check_chain_rule(&j).abs());
    }
    println!();
    println!("over 1000 random 4x5 joints:");
    println!("  min inequality margin  = {min_margin:.6}");
    println!("  max chain-rule residual = {max_residual:.2e}");
    assert!(min_margin >= 0.0);
    Ok(())
}
