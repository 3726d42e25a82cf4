//! Stacked schedules at separated timescales.
//!
//! Three levels share one latent alphabet but update at cadences 1, 2,
//! and 4, each seeing a sliding-window mixture of the raw context stream
//! and feeling a pull toward its (slower) parent. The tick records show
//! the adjacent-level divergences settling as the stack coheres.
//!
//! Run with: `cargo run --example multiscale_schedule`

use ccup::hierarchy::{run_h2, Composer, HierarchySpec, LevelSpec};
use ccup::prob::{Alphabet, Dist};
use ccup::sample::{random_channel, random_dist, trial_rng};

fn main() -> ccup::Result<()> {
    let mut rng = trial_rng(6, 0);
    let latent = Alphabet::new(3)?;
    let context = Alphabet::new(4)?;
    let channel = random_channel(&mut rng, latent.clone(), context.clone());

    let level = |cadence: usize, window: usize, mu: f64| LevelSpec {
        alphabet: latent.clone(),
        lambda: 1.0,
        mu,
        gamma: 0.5,
        epsilon: 0.1,
        cadence,
        aggregator: window,
        composer: Composer::Mixture,
    };
    // Fastest first; the top level answers to no parent.
    let spec = HierarchySpec::new(vec![level(1, 1, 0.5), level(2, 2, 0.5), level(4, 4, 0.0)])?;

    let observed = random_dist(&mut rng, context);
    let stream = vec![observed; 128];
    let likelihoods = vec![channel.clone(), channel.clone(), channel];

    let (traces, report) = run_h2(&spec, &stream, &likelihoods)?;
    for (l, trace) in traces.iter().enumerate() {
        println!("level {l}: {} updates", trace.steps.len());
    }

    println!();
    println!("tick step   KL(0‖1)    KL(1‖2)    weighted   L_multi");
    for tick in report.ticks.iter().step_by(4) {
        println!(
            "{:>9}   {:>8.2e}   {:>8.2e}   {:>8.2e}   {:>7.4}",
            tick.step,
            tick.inter_scale_kl[0],
            tick.inter_scale_kl[1],
            tick.weighted_inter_scale,
            tick.l_multi
        );
    }

    let early = &report.ticks[3];
    let last = report.ticks.last().expect("ticks recorded");
    let settled = last
        .inter_scale_kl
        .iter()
        .zip(&early.inter_scale_kl)
        .all(|(now, then)| now <= then);
    println!();
    println!("final content per level:");
    for trace in &traces {
        println!(
            "  {:?}",
            rounded(trace.final_content().expect("updates ran"))
        );
    }
    println!("inter-scale divergences settled at or below their early values: {settled}");
    Ok(())
}

fn rounded(d: &Dist) -> Vec<f64> {
    d.probs().iter().map(|p| (p * 1e4).round() / 1e4).collect()
}
