//! Resource-allocation signals from a content/context table.
//!
//! Reads three control signals off one joint distribution — attention
//! (sensitivity of the conditional entropy to mass on each content
//! symbol), learning rate (how much structure remains to learn), and
//! memory (how much the table already explains) — and normalizes each
//! into the unit interval. A noise sweep shows the signals responding
//! monotonically as the table blurs.
//!
//! Run with: `cargo run --example resource_control`

use ccup::control::{allocate, attention_gain, ControlConfig};
use ccup::prob::{mutual_information, Alphabet, Channel, Dist, Joint};

fn main() -> ccup::Result<()> {
    let config = ControlConfig::new(1.0, 1.0, 1.0, 1e-6, 100.0)?;
    let content = Alphabet::new(3)?;
    let context = Alphabet::new(3)?;

    println!("noise   attention   learning rate   memory   I(content; context)");
    for step in [1, 4, 8, 12, 16] {
        let joint = noisy_diagonal(&content, &context, step as f64 * 0.05)?;
        let a = allocate(&joint, &config)?;
        println!(
            "{:>5.2}   {:>9.4}   {:>13.4}   {:>6.4}   {:>10.4}",
            step as f64 * 0.05,
            a.attention,
            a.learning_rate,
            a.memory,
            mutual_information(&joint)
        );
    }

    // Per-symbol sensitivities behind the attention signal.
    let joint = noisy_diagonal(&content, &context, 0.2)?;
    let gains = attention_gain(&joint, 1e-5)?;
    println!();
    println!("per-symbol sensitivity at noise 0.20:");
    for (i, g) in gains.iter().enumerate() {
        println!(
            "  content symbol {i}: |dH/dp| = {:.4}{}",
            g.sensitivity,
            if g.zero_marginal {
                "  (no marginal mass)"
            } else {
                ""
            }
        );
    }
    Ok(())
}

/// Uniform content marginal pushed through a mostly diagonal channel
/// whose rows blur at different rates, so the symbols are genuinely
/// unequal and the attention signal has something to resolve.
fn noisy_diagonal(content: &Alphabet, context: &Alphabet, noise: f64) -> ccup::Result<Joint> {
    let n = context.size();
    let rows = (0..content.size())
        .map(|z| {
            let own = noise * (z + 1) as f64 / content.size() as f64;
            (0..n)
                .map(|psi| {
                    if psi == z {
                        1.0 - own
                    } else {
                        own / (n - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    let channel = Channel::new(content.clone(), context.clone(), rows)?;
    Joint::from_marginal_channel(&Dist::uniform(content.clone()), &channel)
}
