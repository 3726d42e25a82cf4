//! Variational free energy over a finite generative model.
//!
//! Draws a random model, minimizes the regularized free energy in closed
//! form, and shows that at unit regularization the minimizer is the exact
//! Bayes posterior. A small λ sweep then traces how the reconstruction
//! and prior-divergence terms trade off, and the posterior-entropy bound
//! is checked at the optimum.
//!
//! Run with: `cargo run --example free_energy`

use ccup::prob::Dist;
use ccup::sample::{random_dist, trial_rng};
use ccup::variational::{entropy_bound_check, free_energy, minimize_free_energy, GenerativeModel};

fn main() -> ccup::Result<()> {
    let mut rng = trial_rng(3, 0);
    let model = GenerativeModel::random(&mut rng, 3, 4, 5)?;
    let context = random_dist(&mut rng, model.context_alphabet().clone());
    let content = 1;

    // λ = 1: the closed-form minimizer is Bayes' rule, row by row.
    let posterior = minimize_free_energy(&model, content, &context, 1.0)?;
    let prior_row = model.prior().row(content);
    for psi in 0..model.context_alphabet().size() {
        let bayes = bayes_row(&prior_row, model.likelihood().rows(), psi);
        let tv = posterior.row(psi).total_variation(&bayes)?;
        println!("context symbol {psi}: |q - bayes|_TV = {tv:.2e}");
        assert!(tv < 1e-12);
    }

    println!();
    println!("lambda   reconstruction   prior KL   total");
    for lambda in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let q = minimize_free_energy(&model, content, &context, lambda)?;
        let report = free_energy(&q, &model, content, &context, lambda)?;
        println!(
            "{lambda:>6.2}   {:>14.4}   {:>8.4}   {:>6.4}",
            report.reconstruction, report.kl_term, report.total
        );
    }

    // At the optimum the expected posterior entropy stays within the
    // budget set by the prior entropy and the attained free energy.
    let margin = entropy_bound_check(&posterior, &model, content, &context, 1.0)?;
    println!();
    println!("posterior entropy bound margin = {margin:.6} (nonnegative)");
    assert!(margin >= -1e-10);
    Ok(())
}

/// Bayes posterior over latents for one observed context symbol.
fn bayes_row(prior_row: &Dist, likelihood_rows: &[Vec<f64>], psi: usize) -> Dist {
    let weights: Vec<f64> = prior_row
        .probs()
        .iter()
        .zip(likelihood_rows)
        .map(|(&p, row)| p * row[psi])
        .collect();
    Dist::normalized(prior_row.alphabet().clone(), weights).expect("posterior is normalizable")
}
