//! Composing latent views and checking what composition buys.
//!
//! Two identical child views are pooled by a product-of-experts into a
//! parent view. Against a shared noisy observation channel the check
//! reports, per child: alignment (the parent predicts contexts no less
//! sharply), consistency (the parent's predictive stays within ε of the
//! child's), and abstraction (whether the parent still carries at least
//! the child's mutual information with the context — a diagnostic that
//! a sharpening composition deliberately trades away).
//!
//! Run with: `cargo run --example composition_checks`

use ccup::hierarchy::{check_composition, compose, Composer};
use ccup::prob::{Alphabet, Channel, Dist, Joint};

fn main() -> ccup::Result<()> {
    let latent = Alphabet::new(3)?;
    let context = Alphabet::new(3)?;

    // A circulant observation channel: mostly faithful, a little leaky.
    let noise = 0.15;
    let rows = (0..3)
        .map(|z| {
            (0..3)
                .map(|psi| if psi == z { 1.0 - 2.0 * noise } else { noise })
                .collect()
        })
        .collect();
    let channel = Channel::new(latent.clone(), context, rows)?;

    let child = Dist::new(latent.clone(), vec![0.6, 0.25, 0.15])?;
    let parent = compose(&[child.clone(), child.clone()], Composer::Product, None)?;
    println!("child  view: {:?}", child.probs());
    println!("parent view: {:?}", rounded(&parent));
    println!("(the product of two agreeing experts is sharper than either)");

    let report = check_composition(
        &parent,
        std::slice::from_ref(&child),
        |view: &Dist| Joint::from_marginal_channel(view, &channel),
        0.05,
    )?;

    println!();
    for (name, clauses) in [
        ("alignment  ", &report.alignment),
        ("consistency", &report.consistency),
        ("abstraction", &report.abstraction),
    ] {
        for c in clauses {
            let verdict = if c.pass { "pass" } else { "fail" };
            println!(
                "{name} child {}: value {:>8.5} vs threshold {:>8.5} -> {verdict}",
                c.child, c.value, c.threshold
            );
        }
    }
    println!();
    println!("alignment holds:   {}", report.alignment_holds());
    println!("consistency holds: {}", report.consistency_holds());
    println!("abstraction holds: {}", report.abstraction_holds());
    // The failed clause is the price of sharpening: for a fixed channel,
    // mutual information peaks near the uniform marginal, so a parent
    // sharper than its children predicts better but informs less.

    // A mixture pool is the opposite move: it can only blur the views,
    // so composing disagreeing children with it trades sharpness for
    // coverage.
    let other = Dist::new(latent, vec![0.1, 0.2, 0.7])?;
    let blend = compose(&[child, other], Composer::Mixture, Some(&[0.5, 0.5]))?;
    println!();
    println!("mixture of disagreeing views: {:?}", rounded(&blend));
    Ok(())
}

fn rounded(d: &Dist) -> Vec<f64> {
    d.probs().iter().map(|p| (p * 1e4).round() / 1e4).collect()
}
