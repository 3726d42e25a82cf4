//! The perception cycle: predict a context, observe one, update content.
//!
//! Starts a cycle from uniform content against a fixed observed context
//! and iterates until the per-step KL movement drops below tolerance.
//! The diagnostics show geometric contraction of the step sizes and a
//! monotone descent of the predicted-context conditional entropy.
//!
//! Run with: `cargo run --example perception_cycle`

use ccup::bootstrap::{contraction_report, run_cycle, sharpest_row_observation, CycleState};
use ccup::prob::Dist;
use ccup::sample::trial_rng;
use ccup::variational::GenerativeModel;

fn main() -> ccup::Result<()> {
    let mut rng = trial_rng(5, 0);
    let model = GenerativeModel::random(&mut rng, 3, 3, 3)?;
    let observed = sharpest_row_observation(&model);
    let initial = CycleState::start(&model, Dist::uniform(model.latent_alphabet().clone()))?;

    let (final_state, diag) = run_cycle(&initial, &model, &observed, 1.0, 1e-9, 2000)?;
    match diag.converged_at {
        Some(n) => println!("converged after {n} cycles"),
        None => println!("hit the iteration cap without meeting tolerance"),
    }
    println!("final content: {:?}", rounded(&final_state.content));
    println!(
        "predicted context: {:?}",
        rounded(&final_state.predicted_context)
    );

    println!();
    println!("step   KL movement   H(predicted context)");
    let show = diag.kl_steps.len().min(8);
    for i in 0..show {
        println!(
            "{:>4}   {:>11.3e}   {:>20.6}",
            i + 1,
            diag.kl_steps[i],
            diag.cond_entropy_steps[i + 1]
        );
    }
    if diag.kl_steps.len() > show {
        println!("  ... ({} more steps)", diag.kl_steps.len() - show);
    }

    let (mean_gamma, max_gamma) = contraction_report(&diag)?;
    println!();
    println!("contraction ratio: mean {mean_gamma:.4}, max {max_gamma:.4}");
    assert!(max_gamma < 1.0, "steps must shrink geometrically");

    let descending = diag
        .cond_entropy_steps
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-9);
    println!("conditional entropy monotonically decreasing: {descending}");
    Ok(())
}

fn rounded(d: &Dist) -> Vec<f64> {
    d.probs().iter().map(|p| (p * 1e4).round() / 1e4).collect()
}
