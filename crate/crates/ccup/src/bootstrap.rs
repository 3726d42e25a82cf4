//! Closed perception loop with convergence and contraction diagnostics.
//!
//! One cycle alternates a forward prediction and a backward correction:
//!
//! ```text
//! f: predicted_context = Σ_z content(z) · p(·|z)          (generative mixture)
//! g: content'(z)      ∝ content(z) · exp(Σ_ψ obs(ψ) ln p(ψ|z) / λ)
//! ```
//!
//! The backward step is a λ-tilted multiplicative update: at λ = 1 it is
//! the exact Bayes reweighting by the observation's average
//! log-likelihood, and as λ → ∞ it degenerates to the identity. Nothing
//! here assumes the loop contracts — contraction (the per-step KL ratio
//! γ) and entropy descent are *measured* and reported, because no finite
//! model class is known to guarantee them. Entropy ascent beyond a
//! 3-iteration burn-in is treated as divergence and aborts with a trace
//! dump; KL contraction is summarized by [`contraction_report`].

use crate::error::{Error, Result};
use crate::prob::{entropy, kl_divergence, Dist};
use crate::variational::{
    content_conditional_entropy, predictive_mixture, Convention, GenerativeModel,
};

/// Iterations excluded from monotonicity and contraction assertions while
/// transients from an arbitrary initialization die out.
pub const BURN_IN: usize = 3;

/// Per-step KL magnitudes below this are numerically indistinguishable
/// from zero and are skipped when forming contraction ratios.
const MEASURABLE_KL: f64 = 1e-14;

/// One iterate of the loop: the current content estimate and the context
/// it predicts.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleState {
    /// Current content estimate, a distribution over latent symbols.
    pub content: Dist,
    /// The context this content predicts (the forward mixture).
    pub predicted_context: Dist,
    /// How many cycle steps produced this state.
    pub iteration: usize,
}

impl CycleState {
    /// Iteration-zero state whose prediction is the forward mixture of
    /// `content` under the model's likelihood.
    pub fn start(model: &GenerativeModel, content: Dist) -> Result<Self> {
        if content.alphabet() != model.latent_alphabet() {
            return Err(Error::ShapeMismatch(
                "content must be a distribution over the model's latent alphabet".into(),
            ));
        }
        let predicted_context = predictive_mixture(&content, model.likelihood())?;
        Ok(Self {
            content,
            predicted_context,
            iteration: 0,
        })
    }
}

/// Measured per-step behavior of a [`run_cycle`] call.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CycleDiagnostics {
    /// `KL(p(Ψ|Φ^{t+1}) ‖ p(Ψ|Φ^{t}))` for each step.
    pub kl_steps: Vec<f64>,
    /// Ratios `γ_t = kl_t / kl_{t−1}` over consecutive measurable steps.
    pub contraction_estimates: Vec<f64>,
    /// Expected-row `H(Ψ|Φ^{t})`, starting with the initial state.
    pub cond_entropy_steps: Vec<f64>,
    /// First step whose KL fell below tolerance, if any.
    pub converged_at: Option<usize>,
}

/// Expected-row conditional context entropy of a content estimate:
/// `Σ_z content(z) · H(p(·|z))`.
fn expected_row_entropy(content: &Dist, model: &GenerativeModel) -> Result<f64> {
    content_conditional_entropy(content, model.likelihood(), Convention::ExpectedRow)
}

/// The model's lowest-entropy likelihood row, as a context distribution —
/// the most compressible observation the model can explain. Ties break to
/// the lowest latent index.
pub fn sharpest_row_observation(model: &GenerativeModel) -> Dist {
    let mut best = 0;
    let mut best_h = f64::INFINITY;
    for z in 0..model.latent_alphabet().size() {
        let h = entropy(&model.likelihood().row(z));
        if h < best_h {
            best = z;
            best_h = h;
        }
    }
    model.likelihood().row(best)
}

/// One forward–backward cycle.
///
/// The returned state's prediction is the forward mixture of the
/// *incoming* content; its content is the λ-tilted backward update
/// against `observed_context`. Multiplicative updates preserve the
/// content's support; if the observation's zero-likelihood entries
/// eliminate every supported latent, the offending context symbols are
/// named in the error.
pub fn cycle_step(
    state: &CycleState,
    model: &GenerativeModel,
    observed_context: &Dist,
    lambda: f64,
) -> Result<CycleState> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be a positive finite real, got {lambda}"
        )));
    }
    if state.content.alphabet() != model.latent_alphabet() {
        return Err(Error::ShapeMismatch(
            "cycle content must live on the model's latent alphabet".into(),
        ));
    }
    if observed_context.alphabet() != model.context_alphabet() {
        return Err(Error::ShapeMismatch(
            "observed context must live on the model's context alphabet".into(),
        ));
    }
    let predicted_context = predictive_mixture(&state.content, model.likelihood())?;

    // Backward tilt in log space: ln w_z = ln c_z + (Σ_ψ obs(ψ) ln p(ψ|z)) / λ.
    let n_z = model.latent_alphabet().size();
    let mut logw = vec![f64::NEG_INFINITY; n_z];
    let mut max_lw = f64::NEG_INFINITY;
    for (z, lw) in logw.iter_mut().enumerate() {
        let c = state.content.get(z);
        if c <= 0.0 {
            continue;
        }
        let mut h = 0.0;
        for (psi, &w) in observed_context.probs().iter().enumerate() {
            if w > 0.0 {
                let like = model.likelihood().rows()[z][psi];
                if like == 0.0 {
                    h = f64::NEG_INFINITY;
                    break;
                }
                h += w * like.ln();
            }
        }
        if h.is_finite() {
            *lw = c.ln() + h / lambda;
            max_lw = max_lw.max(*lw);
        }
    }
    if max_lw == f64::NEG_INFINITY {
        // Every supported latent was eliminated; name the context symbols
        // whose zero-likelihood entries did it.
        let mut symbols = Vec::new();
        for (psi, &w) in observed_context.probs().iter().enumerate() {
            if w > 0.0 {
                let kills = (0..n_z).any(|z| {
                    state.content.get(z) > 0.0 && model.likelihood().rows()[z][psi] == 0.0
                });
                if kills {
                    symbols.push(psi);
                }
            }
        }
        return Err(Error::DegenerateObservation { symbols });
    }
    let weights: Vec<f64> = logw
        .iter()
        .map(|&lw| {
            if lw == f64::NEG_INFINITY {
                0.0
            } else {
                (lw - max_lw).exp()
            }
        })
        .collect();
    let content = Dist::normalized(model.latent_alphabet().clone(), weights)?;
    Ok(CycleState {
        content,
        predicted_context,
        iteration: state.iteration + 1,
    })
}

/// Contraction ratios over consecutive measurable KL steps.
fn gamma_estimates(kl_steps: &[f64]) -> Vec<f64> {
    kl_steps
        .windows(2)
        .filter(|w| w[0] >= MEASURABLE_KL && w[1] >= MEASURABLE_KL)
        .map(|w| w[1] / w[0])
        .collect()
}

/// Iterates [`cycle_step`] until the predicted-context KL step falls
/// below `tol` or `max_iter` is exhausted (the latter is reported via
/// `converged_at = None`, not an error).
///
/// Divergence *is* an error: if the expected-row `H(Ψ|Φ)` rises by more
/// than 1e-9 on any post-burn-in step, the run aborts with the recorded
/// trace in the error detail.
pub fn run_cycle(
    initial: &CycleState,
    model: &GenerativeModel,
    observed_context: &Dist,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(CycleState, CycleDiagnostics)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter(
            "max_iter must be at least 1".into(),
        ));
    }
    let mut state = initial.clone();
    let mut diag = CycleDiagnostics::default();
    let mut prev_mix = predictive_mixture(&state.content, model.likelihood())?;
    let mut prev_h = expected_row_entropy(&state.content, model)?;
    diag.cond_entropy_steps.push(prev_h);
    for step in 1..=max_iter {
        state = cycle_step(&state, model, observed_context, lambda)?;
        let new_mix = predictive_mixture(&state.content, model.likelihood())?;
        // Multiplicative updates only shrink support, so this KL is finite.
        let kl = kl_divergence(&new_mix, &prev_mix)?;
        diag.kl_steps.push(kl);
        let h = expected_row_entropy(&state.content, model)?;
        if step > BURN_IN && h > prev_h + 1e-9 {
            return Err(Error::Diverged {
                iteration: step,
                detail: format!(
                    "expected-row H(Ψ|Φ) rose {prev_h} -> {h}; kl_steps={:?}, cond_entropy_steps={:?}",
                    diag.kl_steps, diag.cond_entropy_steps
                ),
            });
        }
        diag.cond_entropy_steps.push(h);
        prev_h = h;
        prev_mix = new_mix;
        if kl < tol {
            diag.converged_at = Some(step);
            break;
        }
    }
    diag.contraction_estimates = gamma_estimates(&diag.kl_steps);
    Ok((state, diag))
}

/// Summarizes contraction: `gamma_max` is the largest ratio after
/// burn-in (the first `min(3, n−1)` ratios are transients and dropped);
/// `monotone_fraction` is the share of all ratios ≤ 1.
///
/// Needs at least 3 KL steps, of which at least 2 must be measurable.
pub fn contraction_report(diag: &CycleDiagnostics) -> Result<(f64, f64)> {
    if diag.kl_steps.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: diag.kl_steps.len(),
        });
    }
    let estimates = gamma_estimates(&diag.kl_steps);
    if estimates.is_empty() {
        let measurable = diag
            .kl_steps
            .iter()
            .filter(|&&k| k >= MEASURABLE_KL)
            .count();
        return Err(Error::InsufficientData {
            needed: 2,
            got: measurable,
        });
    }
    let drop = estimates.len().saturating_sub(1).min(BURN_IN);
    let gamma_max = estimates[drop..]
        .iter()
        .fold(f64::NEG_INFINITY, |acc, &g| acc.max(g));
    let monotone = estimates.iter().filter(|&&g| g <= 1.0 + 1e-12).count();
    let monotone_fraction = monotone as f64 / estimates.len() as f64;
    Ok((gamma_max, monotone_fraction))
}
