//! Staged parameter learning: structure slowly, binding quickly.
//!
//! Splits learning into two stages on separated step sizes — prior
//! (structure) updates first at a small rate, then likelihood (binding)
//! updates at a larger rate with the stage-1 winner frozen. The loss
//! trajectory shows each stage lowering its own objective, and running
//! the stages in the opposite order is kept as a control condition.
//!
//! Run with: `cargo run --example staged_learning`

use ccup::sample::{random_dist, trial_rng};
use ccup::variational::{
    final_binding_loss, run_bld, run_bld_with_order, BldConfig, BldStage, GenerativeModel,
    StageOrder,
};

fn main() -> ccup::Result<()> {
    let mut rng = trial_rng(21, 0);
    let model = GenerativeModel::random(&mut rng, 3, 3, 4)?;
    let contexts: Vec<_> = (0..5)
        .map(|_| random_dist(&mut rng, model.context_alphabet().clone()))
        .collect();

    let config = BldConfig::new(0.05, 0.4, 8, 8)?;
    let (learned, trace) = run_bld(&config, &model, &contexts)?;

    println!("iter  stage      structure loss  binding loss");
    for r in &trace.records {
        let stage = match r.stage {
            BldStage::Structure => "structure",
            BldStage::Binding => "binding  ",
        };
        println!(
            "{:>4}  {stage}  {:>14.6}  {:>12.6}",
            r.iteration, r.structure_loss, r.binding_loss
        );
    }

    // Each stage is accountable only for its own objective: structure
    // steps lower the structure loss, binding steps the binding loss.
    let structure: Vec<_> = trace
        .records
        .iter()
        .filter(|r| r.stage == BldStage::Structure)
        .collect();
    let binding: Vec<_> = trace
        .records
        .iter()
        .filter(|r| r.stage == BldStage::Binding)
        .collect();
    println!();
    println!(
        "structure stage: structure loss {:.6} -> {:.6}",
        structure[0].structure_loss,
        structure.last().expect("stage ran").structure_loss
    );
    println!(
        "binding stage:   binding loss   {:.6} -> {:.6}",
        binding[0].binding_loss,
        binding.last().expect("stage ran").binding_loss
    );
    println!(
        "final binding loss (learned model) = {:.6}",
        final_binding_loss(&learned, &contexts)?
    );

    // Control condition: binding before structure optimizes against a
    // winner the structure stage then abandons.
    let (control, _) = run_bld_with_order(&config, &model, &contexts, StageOrder::ContextFirst)?;
    println!(
        "final binding loss (reversed order) = {:.6}",
        final_binding_loss(&control, &contexts)?
    );
    Ok(())
}
