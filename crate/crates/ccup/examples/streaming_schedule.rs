//! Streaming schedules: proximal content updates along a context stream.
//!
//! Each step minimizes `⟨surprisal, w⟩ + λ·KL(w ‖ current)` against the
//! newest context. On a stationary stream the schedule settles into a
//! verified fixed point of the update map; on a drifting stream it keeps
//! tracking and never stops early.
//!
//! Run with: `cargo run --example streaming_schedule`

use ccup::prob::Dist;
use ccup::sample::{random_channel, random_dist, trial_rng};
use ccup::temporal::{continual_loss, run_h1, schema_fixed_point, TemporalConfig};
use ccup::variational::Convention;

fn main() -> ccup::Result<()> {
    let mut rng = trial_rng(9, 0);
    let latent = ccup::prob::Alphabet::new(3)?;
    let context = ccup::prob::Alphabet::new(4)?;
    let likelihood = random_channel(&mut rng, latent.clone(), context.clone());
    let initial = Dist::uniform(latent.clone());
    let config = TemporalConfig::new(0.5, 1e-12, 4000, Convention::ExpectedRow)?;

    // Stationary: one context, repeated.
    let observed = random_dist(&mut rng, context.clone());
    let stream = vec![observed; 4000];
    let trace = run_h1(&initial, &stream, &likelihood, &config)?;
    println!(
        "stationary stream: stopped after {} steps",
        trace.steps.len()
    );
    println!(
        "final content: {:?}",
        rounded(trace.final_content().expect("steps ran"))
    );
    println!("continual loss = {:.4}", continual_loss(&trace, &config));

    match schema_fixed_point(&trace, &likelihood, &config, 1e-9)? {
        Some(schema) => println!("verified fixed point: {:?}", rounded(&schema)),
        None => println!("no verified fixed point at this tolerance"),
    }

    println!();
    println!("step   objective   KL step");
    for (i, s) in trace.steps.iter().enumerate().take(6) {
        println!("{:>4}   {:>9.4}   {:>9.3e}", i + 1, s.objective, s.kl_step);
    }

    // Drifting: alternate two contexts. Early stopping is reserved for
    // bitwise-stationary streams, so every observation is consumed —
    // even after the multiplicative updates pin the content to a
    // simplex vertex and later steps stop moving it.
    let other = random_dist(&mut rng, context);
    let drifting: Vec<Dist> = (0..200)
        .map(|t| {
            if t % 2 == 0 {
                stream[0].clone()
            } else {
                other.clone()
            }
        })
        .collect();
    let drift_trace = run_h1(&initial, &drifting, &likelihood, &config)?;
    println!();
    println!(
        "drifting stream: no early stop — all {} observations consumed",
        drift_trace.steps.len()
    );
    assert_eq!(drift_trace.steps.len(), drifting.len());
    Ok(())
}

fn rounded(d: &Dist) -> Vec<f64> {
    d.probs().iter().map(|p| (p * 1e4).round() / 1e4).collect()
}
