//! Structured-prior free energy: objective, exact minimizer, two-stage
//! structure-then-binding inference, staged learning, and an entropy bound.
//!
//! The central objective, for a content symbol Φ with prior row `p(Z|Φ)`,
//! a likelihood channel `p(Ψ|Z)`, a context distribution over Ψ, and a
//! regularization weight λ > 0, is
//!
//! ```text
//! F[q] = E_ψ E_{q(z|ψ)}[−ln p(ψ|z)]  +  λ · E_ψ[ KL(q(·|ψ) ‖ p(·|Φ)) ]
//! ```
//!
//! Because the models are finite tables, the minimizer has an exact
//! per-context-symbol closed form — the λ-tilted prior
//! `q*(z|ψ) ∝ p(z|Φ) · p(ψ|z)^{1/λ}` — which at λ = 1 is exactly the
//! Bayes posterior. Tests therefore compare against independent oracles
//! (joint-table normalization, simplex grids) with no optimizer slack.
//!
//! Two-stage inference selects content first ([`sbs_stage1`]: pick the
//! candidate whose predicted context is least uncertain) and binds
//! second ([`sbs_stage2`]: minimize F under the winner's prior).
//! [`run_bld`] learns the table parameters themselves the same way:
//! slow multiplicative steps on the prior (structure), then faster steps
//! on the likelihood (binding), each stage with backtracking descent.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::prob::{entropy, kl_divergence, Alphabet, Channel, Dist};
use crate::sample;

/// How `H(Ψ|Φ)` is computed from a prior row and the likelihood channel.
///
/// The mixture convention measures uncertainty of the *predicted context*
/// (entropy of the prior-weighted mixture of likelihood rows); the
/// expected-row convention measures the *average observation noise*
/// (prior-weighted mean of row entropies). They differ by exactly the
/// information the latent carries about the context, so every report in
/// this crate names which one it used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    /// `H(Σ_z p(z|Φ) · p(·|z))` — entropy of the predictive mixture.
    Mixture,
    /// `Σ_z p(z|Φ) · H(p(·|z))` — prior-weighted mean row entropy.
    ExpectedRow,
}

impl std::fmt::Display for Convention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Convention::Mixture => write!(f, "mixture"),
            Convention::ExpectedRow => write!(f, "expected-row"),
        }
    }
}

/// A two-channel generative model: content → latent → context.
///
/// `prior` holds one distribution over latents per content symbol;
/// `likelihood` holds one distribution over context symbols per latent.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerativeModel {
    prior: Channel,
    likelihood: Channel,
}

impl GenerativeModel {
    /// Validates that the channels chain: the prior's target alphabet must
    /// be the likelihood's source alphabet.
    pub fn new(prior: Channel, likelihood: Channel) -> Result<Self> {
        if prior.to_alphabet() != likelihood.from_alphabet() {
            return Err(Error::ShapeMismatch(
                "prior target alphabet must equal likelihood source alphabet".into(),
            ));
        }
        Ok(Self { prior, likelihood })
    }

    /// A model with Dirichlet(1) prior and likelihood rows.
    pub fn random(
        rng: &mut ChaCha8Rng,
        content_size: usize,
        latent_size: usize,
        context_size: usize,
    ) -> Result<Self> {
        let content = Alphabet::new(content_size)?;
        let latent = Alphabet::new(latent_size)?;
        let context = Alphabet::new(context_size)?;
        let prior = sample::random_channel(rng, content, latent.clone());
        let likelihood = sample::random_channel(rng, latent, context);
        Self::new(prior, likelihood)
    }

    /// The same likelihood with every prior row flattened to uniform —
    /// the structure-free baseline model.
    pub fn with_uniform_prior(&self) -> Self {
        let prior = Channel::uniform(
            self.prior.from_alphabet().clone(),
            self.prior.to_alphabet().clone(),
        );
        Self {
            prior,
            likelihood: self.likelihood.clone(),
        }
    }

    pub fn prior(&self) -> &Channel {
        &self.prior
    }

    pub fn likelihood(&self) -> &Channel {
        &self.likelihood
    }

    pub fn content_alphabet(&self) -> &Alphabet {
        self.prior.from_alphabet()
    }

    pub fn latent_alphabet(&self) -> &Alphabet {
        self.prior.to_alphabet()
    }

    pub fn context_alphabet(&self) -> &Alphabet {
        self.likelihood.to_alphabet()
    }
}

/// A conditional posterior over latents, one row per context symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct Posterior {
    q: Channel,
}

impl Posterior {
    pub fn new(q: Channel) -> Self {
        Self { q }
    }

    pub fn q(&self) -> &Channel {
        &self.q
    }

    /// Posterior over latents for context symbol `psi`.
    pub fn row(&self, psi: usize) -> Dist {
        self.q.row(psi)
    }

    /// `E_ψ[H(q(·|ψ))]` under `context` — the specificity score used by
    /// stage-2 binding (0 means every observation pins the latent down).
    pub fn expected_latent_entropy(&self, context: &Dist) -> Result<f64> {
        if context.alphabet() != self.q.from_alphabet() {
            return Err(Error::ShapeMismatch(
                "context alphabet must equal the posterior's source alphabet".into(),
            ));
        }
        let mut h = 0.0;
        for (psi, &w) in context.probs().iter().enumerate() {
            if w > 0.0 {
                h += w * entropy(&self.q.row(psi));
            }
        }
        Ok(h)
    }
}

/// The three components of the structured-prior objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeEnergyReport {
    /// Expected negative log-likelihood `E_ψ E_q[−ln p(ψ|z)]`, nats.
    pub reconstruction: f64,
    /// Expected divergence from the prior `E_ψ[KL(q(·|ψ) ‖ p(·|Φ))]`, nats.
    pub kl_term: f64,
    /// `reconstruction + lambda · kl_term`.
    pub total: f64,
    /// Regularization weight λ > 0.
    pub lambda: f64,
}

/// The predictive context mixture `Σ_z p(z|Φ) · p(·|z)` for one prior row.
pub fn predictive_mixture(prior_row: &Dist, likelihood: &Channel) -> Result<Dist> {
    if prior_row.alphabet() != likelihood.from_alphabet() {
        return Err(Error::ShapeMismatch(
            "prior row alphabet must equal likelihood source alphabet".into(),
        ));
    }
    let mut mix = vec![0.0; likelihood.to_alphabet().size()];
    for (z, &w) in prior_row.probs().iter().enumerate() {
        if w > 0.0 {
            for (psi, &l) in likelihood.rows()[z].iter().enumerate() {
                mix[psi] += w * l;
            }
        }
    }
    Dist::normalized(likelihood.to_alphabet().clone(), mix)
}

/// `H(Ψ|Φ)` for one prior row under the chosen [`Convention`].
pub fn content_conditional_entropy(
    prior_row: &Dist,
    likelihood: &Channel,
    convention: Convention,
) -> Result<f64> {
    if prior_row.alphabet() != likelihood.from_alphabet() {
        return Err(Error::ShapeMismatch(
            "prior row alphabet must equal likelihood source alphabet".into(),
        ));
    }
    match convention {
        Convention::Mixture => Ok(entropy(&predictive_mixture(prior_row, likelihood)?)),
        Convention::ExpectedRow => {
            let mut h = 0.0;
            for (z, &w) in prior_row.probs().iter().enumerate() {
                if w > 0.0 {
                    h += w * entropy(&likelihood.row(z));
                }
            }
            Ok(h)
        }
    }
}

fn check_model_context(model: &GenerativeModel, context: &Dist) -> Result<()> {
    if context.alphabet() != model.context_alphabet() {
        return Err(Error::ShapeMismatch(
            "context alphabet must equal the model's context alphabet".into(),
        ));
    }
    Ok(())
}

fn check_content_index(model: &GenerativeModel, content_index: usize) -> Result<()> {
    if content_index >= model.content_alphabet().size() {
        return Err(Error::InvalidParameter(format!(
            "content index {content_index} out of range for {} symbols",
            model.content_alphabet().size()
        )));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lambda must be a positive finite real, got {lambda}"
        )));
    }
    Ok(())
}

/// Evaluates the structured-prior objective for an arbitrary posterior.
///
/// `total` may be `+∞` when `q` puts mass on a latent with zero
/// likelihood for an observed context symbol, or outside the prior's
/// support; law checks rely on observing such failures rather than
/// erroring on them.
pub fn free_energy(
    q: &Posterior,
    model: &GenerativeModel,
    content_index: usize,
    context: &Dist,
    lambda: f64,
) -> Result<FreeEnergyReport> {
    check_lambda(lambda)?;
    check_content_index(model, content_index)?;
    check_model_context(model, context)?;
    if q.q().from_alphabet() != model.context_alphabet()
        || q.q().to_alphabet() != model.latent_alphabet()
    {
        return Err(Error::ShapeMismatch(
            "posterior must map context symbols to latent distributions".into(),
        ));
    }
    let prior_row = model.prior().row(content_index);
    let mut reconstruction = 0.0;
    let mut kl_term = 0.0;
    for (psi, &w) in context.probs().iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        let q_row = q.row(psi);
        for (z, &qz) in q_row.probs().iter().enumerate() {
            if qz > 0.0 {
                // −ln 0 = +∞ propagates: mass on an impossible observation.
                reconstruction += w * qz * -model.likelihood().rows()[z][psi].ln();
            }
        }
        kl_term += w * kl_divergence(&q_row, &prior_row)?;
    }
    Ok(FreeEnergyReport {
        reconstruction,
        kl_term,
        total: reconstruction + lambda * kl_term,
        lambda,
    })
}

/// Exact minimizer of [`free_energy`]: the λ-tilted prior
/// `q*(z|ψ) ∝ p(z|Φ) · p(ψ|z)^{1/λ}`, computed row by row in log space.
///
/// At λ = 1 this is the Bayes posterior `p(z|ψ, Φ)`; as λ → ∞ it
/// approaches the prior row. Errors with the offending symbol when some
/// context symbol has zero prior-weighted likelihood under every latent
/// (no posterior exists there), rather than smoothing.
pub fn minimize_free_energy(
    model: &GenerativeModel,
    content_index: usize,
    context: &Dist,
    lambda: f64,
) -> Result<Posterior> {
    check_lambda(lambda)?;
    check_content_index(model, content_index)?;
    check_model_context(model, context)?;
    let prior_row = model.prior().row(content_index);
    let latent = model.latent_alphabet().clone();
    let n_psi = model.context_alphabet().size();
    let mut rows = Vec::with_capacity(n_psi);
    for psi in 0..n_psi {
        // Log-space weights with max subtraction keep extreme λ stable.
        let mut logw = vec![f64::NEG_INFINITY; latent.size()];
        let mut max_lw = f64::NEG_INFINITY;
        for (z, &pz) in prior_row.probs().iter().enumerate() {
            let like = model.likelihood().rows()[z][psi];
            if pz > 0.0 && like > 0.0 {
                let lw = pz.ln() + like.ln() / lambda;
                logw[z] = lw;
                max_lw = max_lw.max(lw);
            }
        }
        if max_lw == f64::NEG_INFINITY {
            return Err(Error::DegenerateContextSymbol { symbol: psi });
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
        rows.push(Dist::normalized(latent.clone(), weights)?);
    }
    let q = Channel::from_rows(model.context_alphabet().clone(), rows)?;
    Ok(Posterior::new(q))
}

/// Margin of the preconditioning entropy bound
/// `H(p(Z|Φ)) + (1/λ)·F[q] − E_ψ[H(q(·|ψ))]`.
///
/// The bound is asserted (margin ≥ 0) only while the reconstruction term
/// is nonnegative, which holds for every probability-table model here;
/// an infinite free energy makes the bound inapplicable and is reported
/// as an error rather than a margin.
pub fn entropy_bound_check(
    q: &Posterior,
    model: &GenerativeModel,
    content_index: usize,
    context: &Dist,
    lambda: f64,
) -> Result<f64> {
    let report = free_energy(q, model, content_index, context, lambda)?;
    if !report.total.is_finite() {
        return Err(Error::BoundInapplicable);
    }
    let prior_entropy = entropy(&model.prior().row(content_index));
    let posterior_entropy = q.expected_latent_entropy(context)?;
    Ok(prior_entropy + report.total / lambda - posterior_entropy)
}

/// Stage 1 of two-stage inference: pick the candidate content symbol
/// whose predicted context is least uncertain.
///
/// Each candidate is scored by `H(Ψ|Φ=candidate)` under `convention`;
/// the score does not depend on the particular contexts observed — the
/// contexts argument is validated as the dataset the winner must cover.
/// Ties break to the lowest candidate index, independent of ordering.
pub fn sbs_stage1(
    candidates: &[usize],
    model: &GenerativeModel,
    contexts: &[Dist],
    convention: Convention,
) -> Result<(usize, f64)> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter(
            "no candidate content symbols".into(),
        ));
    }
    if contexts.is_empty() {
        return Err(Error::InvalidParameter("no contexts to cover".into()));
    }
    for ctx in contexts {
        check_model_context(model, ctx)?;
    }
    let mut best: Option<(usize, f64)> = None;
    for &c in candidates {
        check_content_index(model, c)?;
        let score =
            content_conditional_entropy(&model.prior().row(c), model.likelihood(), convention)?;
        best = match best {
            None => Some((c, score)),
            Some((bc, bs)) => {
                if score < bs || (score == bs && c < bc) {
                    Some((c, score))
                } else {
                    Some((bc, bs))
                }
            }
        };
    }
    Ok(best.expect("candidates checked non-empty"))
}

/// Stage 2: bind the stage-1 winner to a new context by exact free-energy
/// minimization seeded with the winner's prior row. Returns the posterior
/// and its specificity score `E_ψ[H(q(·|ψ))]` (lower = sharper binding).
pub fn sbs_stage2(
    best: usize,
    model: &GenerativeModel,
    new_context: &Dist,
    lambda: f64,
) -> Result<(Posterior, f64)> {
    let q = minimize_free_energy(model, best, new_context, lambda)?;
    let score = q.expected_latent_entropy(new_context)?;
    Ok((q, score))
}

/// Projects a probe onto the nearest stored attractor by KL divergence
/// `KL(probe ‖ stored_i)`; ties break to the lowest index.
pub fn retrieve_attractor(stored: &[Dist], probe: &Dist) -> Result<usize> {
    if stored.is_empty() {
        return Err(Error::InvalidParameter("no stored attractors".into()));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in stored.iter().enumerate() {
        let d = kl_divergence(probe, s)?;
        if d.is_finite() {
            best = match best {
                None => Some((i, d)),
                Some((_, bd)) if d < bd => Some((i, d)),
                keep => keep,
            };
        }
    }
    best.map(|(i, _)| i).ok_or(Error::NoAttractorCoversProbe)
}

/// Counts damped fixed-point iterations until successive posteriors are
/// within `tol` (context-weighted KL between consecutive iterates).
///
/// The iteration interpolates geometrically (weight ½ in log space)
/// between the current posterior and the closed-form optimum, starting
/// from the model's own prior row — so a prior already aligned with the
/// data starts closer and stops sooner. Pair a model with its
/// [`GenerativeModel::with_uniform_prior`] baseline to measure how much
/// work the structured prior saves.
pub fn inference_iterations(
    model: &GenerativeModel,
    content_index: usize,
    context: &Dist,
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let target = minimize_free_energy(model, content_index, context, lambda)?;
    let latent = model.latent_alphabet().clone();
    let prior_row = model.prior().row(content_index);
    let n_psi = model.context_alphabet().size();
    let mut current: Vec<Dist> = vec![prior_row; n_psi];
    for step in 1..=max_iter {
        let mut moved = 0.0;
        let mut next = Vec::with_capacity(n_psi);
        for psi in 0..n_psi {
            let t = target.row(psi);
            let weights: Vec<f64> = current[psi]
                .probs()
                .iter()
                .zip(t.probs())
                .map(|(&c, &t)| (c * t).sqrt())
                .collect();
            let row = Dist::normalized(latent.clone(), weights)?;
            let w = context.get(psi);
            if w > 0.0 {
                moved += w * kl_divergence(&row, &current[psi])?;
            }
            next.push(row);
        }
        current = next;
        if moved < tol {
            return Ok(step);
        }
    }
    Err(Error::Diverged {
        iteration: max_iter,
        detail: format!("posterior iteration still above tolerance {tol:e}"),
    })
}

/// Step sizes and iteration budget for staged parameter learning.
///
/// Structure learns slowly (`eta_content`), binding learns fast
/// (`eta_context`); the asymmetry is enforced at construction.
/// `eta_content = 0` is allowed and makes the structure stage a no-op.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BldConfig {
    eta_content: f64,
    eta_context: f64,
    stage_a_iters: usize,
    stage_b_iters: usize,
}

impl BldConfig {
    pub fn new(
        eta_content: f64,
        eta_context: f64,
        stage_a_iters: usize,
        stage_b_iters: usize,
    ) -> Result<Self> {
        if !(eta_content >= 0.0) || !eta_content.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "eta_content must be a nonnegative finite real, got {eta_content}"
            )));
        }
        if !(eta_context > 0.0) || !eta_context.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "eta_context must be a positive finite real, got {eta_context}"
            )));
        }
        if eta_content >= eta_context {
            return Err(Error::InvalidParameter(format!(
                "structure must learn slower than binding: eta_content {eta_content} >= eta_context {eta_context}"
            )));
        }
        Ok(Self {
            eta_content,
            eta_context,
            stage_a_iters,
            stage_b_iters,
        })
    }

    pub fn eta_content(&self) -> f64 {
        self.eta_content
    }

    pub fn eta_context(&self) -> f64 {
        self.eta_context
    }

    pub fn stage_a_iters(&self) -> usize {
        self.stage_a_iters
    }

    pub fn stage_b_iters(&self) -> usize {
        self.stage_b_iters
    }
}

/// Which parameter family a [`BldRecord`] belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BldStage {
    /// Prior (content-side) updates.
    Structure,
    /// Likelihood (context-side) updates.
    Binding,
}

/// One iteration of staged learning: both losses at the post-step state.
///
/// `structure_loss` is the mean mixture-convention `H(Ψ|Φ)` over content
/// symbols; `binding_loss` is the mean negative log-evidence of the
/// observed contexts under the currently best content symbol (the frozen
/// stage-1 winner once the binding stage has begun).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BldRecord {
    pub iteration: usize,
    pub stage: BldStage,
    pub structure_loss: f64,
    pub binding_loss: f64,
}

/// Loss trajectory of one [`run_bld`] call. Record 0 is the initial state.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct BldTrace {
    pub records: Vec<BldRecord>,
}

/// Which parameter family updates first in [`run_bld_with_order`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageOrder {
    /// Prior first, then likelihood — the default staged schedule.
    StructureFirst,
    /// Likelihood first, then prior — the control condition.
    ContextFirst,
}

/// Mean over content symbols of mixture-convention `H(Ψ|Φ)`.
fn structure_loss(model: &GenerativeModel) -> Result<f64> {
    let n = model.content_alphabet().size();
    let mut total = 0.0;
    for c in 0..n {
        total += content_conditional_entropy(
            &model.prior().row(c),
            model.likelihood(),
            Convention::Mixture,
        )?;
    }
    Ok(total / n as f64)
}

/// Mean over contexts of the negative log-evidence under `content_index`:
/// the free energy of the exact posterior at λ = 1.
fn binding_loss(model: &GenerativeModel, content_index: usize, contexts: &[Dist]) -> Result<f64> {
    let mix = predictive_mixture(&model.prior().row(content_index), model.likelihood())?;
    let mut total = 0.0;
    for ctx in contexts {
        for (psi, &w) in ctx.probs().iter().enumerate() {
            if w > 0.0 {
                total += w * -mix.get(psi).ln();
            }
        }
    }
    Ok(total / contexts.len() as f64)
}

/// Content symbol minimizing [`binding_loss`] after stage-1 selection,
/// i.e. the mixture-convention stage-1 winner over all content symbols.
fn current_winner(model: &GenerativeModel, contexts: &[Dist]) -> Result<usize> {
    let all: Vec<usize> = (0..model.content_alphabet().size()).collect();
    Ok(sbs_stage1(&all, model, contexts, Convention::Mixture)?.0)
}

/// One multiplicative (exponentiated-gradient) descent step on a row set,
/// exponent-shifted for overflow safety. Zero cells stay zero.
fn eg_step(
    rows: &[Vec<f64>],
    grads: &[Vec<f64>],
    eta: f64,
    alphabet: &Alphabet,
) -> Result<Vec<Dist>> {
    let mut out = Vec::with_capacity(rows.len());
    for (row, grad) in rows.iter().zip(grads) {
        let min_g = grad.iter().cloned().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = row
            .iter()
            .zip(grad)
            .map(|(&w, &g)| {
                if w > 0.0 {
                    w * (-eta * (g - min_g)).exp()
                } else {
                    0.0
                }
            })
            .collect();
        out.push(Dist::normalized(alphabet.clone(), weights)?);
    }
    Ok(out)
}

/// Gradient of the structure loss with respect to prior row `c`:
/// `∂H(mix_c)/∂w_z = −Σ_ψ p(ψ|z) ln mix_c(ψ)` up to an additive constant
/// that the multiplicative update absorbs.
fn structure_grads(model: &GenerativeModel) -> Result<Vec<Vec<f64>>> {
    let n = model.content_alphabet().size();
    let mut grads = Vec::with_capacity(n);
    for c in 0..n {
        let mix = predictive_mixture(&model.prior().row(c), model.likelihood())?;
        let mut g = vec![0.0; model.latent_alphabet().size()];
        for (z, gz) in g.iter_mut().enumerate() {
            for (psi, &l) in model.likelihood().rows()[z].iter().enumerate() {
                if l > 0.0 {
                    *gz += -l * mix.get(psi).ln();
                }
            }
        }
        grads.push(g);
    }
    Ok(grads)
}

/// Gradient of the binding loss with respect to likelihood row `z`:
/// `∂L/∂p(ψ|z) = mean_ctx[−ctx(ψ) · p(z|Φ*) / mix(ψ)]`.
fn binding_grads(
    model: &GenerativeModel,
    winner: usize,
    contexts: &[Dist],
) -> Result<Vec<Vec<f64>>> {
    let prior_row = model.prior().row(winner);
    let mix = predictive_mixture(&prior_row, model.likelihood())?;
    let n_z = model.latent_alphabet().size();
    let n_psi = model.context_alphabet().size();
    let mut grads = vec![vec![0.0; n_psi]; n_z];
    for ctx in contexts {
        for (psi, &w) in ctx.probs().iter().enumerate() {
            if w > 0.0 {
                for (z, grad_row) in grads.iter_mut().enumerate() {
                    grad_row[psi] += -w * prior_row.get(z) / mix.get(psi) / contexts.len() as f64;
                }
            }
        }
    }
    Ok(grads)
}

const BACKTRACK_HALVINGS: usize = 30;
const DESCENT_SLACK: f64 = 1e-9;

/// Runs one descent stage: repeated EG steps with backtracking halving
/// (at most 30 halvings per step; a step that cannot descend is skipped).
/// `apply` installs candidate rows; `loss` and `grads` evaluate the stage
/// objective on the current model.
#[allow(clippy::too_many_arguments)]
fn descend_stage(
    model: &mut GenerativeModel,
    iters: usize,
    eta0: f64,
    loss: &dyn Fn(&GenerativeModel) -> Result<f64>,
    grads: &dyn Fn(&GenerativeModel) -> Result<Vec<Vec<f64>>>,
    apply: &dyn Fn(&GenerativeModel, Vec<Dist>) -> Result<GenerativeModel>,
    rows_of: &dyn Fn(&GenerativeModel) -> Vec<Vec<f64>>,
    row_alphabet: &Alphabet,
    mut record: impl FnMut(&GenerativeModel, usize) -> Result<()>,
    first_iteration: usize,
) -> Result<()> {
    let mut current_loss = loss(model)?;
    for i in 0..iters {
        let iteration = first_iteration + i;
        if !current_loss.is_finite() {
            return Err(Error::Diverged {
                iteration,
                detail: format!("stage loss became non-finite: {current_loss}"),
            });
        }
        if eta0 > 0.0 {
            let g = grads(model)?;
            let mut eta = eta0;
            for _ in 0..=BACKTRACK_HALVINGS {
                let stepped = eg_step(&rows_of(model), &g, eta, row_alphabet)?;
                let candidate = apply(model, stepped)?;
                let cand_loss = loss(&candidate)?;
                if cand_loss <= current_loss + DESCENT_SLACK {
                    *model = candidate;
                    current_loss = cand_loss;
                    break;
                }
                eta *= 0.5;
            }
            // All halvings rejected: keep the current parameters (no-op step).
        }
        record(model, iteration)?;
    }
    Ok(())
}

/// Staged parameter learning with the default structure-first order.
/// See [`run_bld_with_order`].
pub fn run_bld(
    config: &BldConfig,
    model: &GenerativeModel,
    contexts: &[Dist],
) -> Result<(GenerativeModel, BldTrace)> {
    run_bld_with_order(config, model, contexts, StageOrder::StructureFirst)
}

/// Staged parameter learning on a private copy of the model.
///
/// The structure stage updates prior rows by multiplicative steps of
/// size `eta_content` on the mean mixture `H(Ψ|Φ)`; the binding stage
/// freezes the stage-1 winner and updates likelihood rows by steps of
/// size `eta_context` on the winner's negative log-evidence. Each stage
/// backtracks (halving, ≤ 30 times) so its own loss never increases by
/// more than 1e-9 per accepted step. [`StageOrder::ContextFirst`] runs
/// the same two stages in the opposite order as a control condition.
pub fn run_bld_with_order(
    config: &BldConfig,
    model: &GenerativeModel,
    contexts: &[Dist],
    order: StageOrder,
) -> Result<(GenerativeModel, BldTrace)> {
    if contexts.is_empty() {
        return Err(Error::InvalidParameter("no contexts to learn from".into()));
    }
    for ctx in contexts {
        check_model_context(model, ctx)?;
    }
    let mut model = model.clone();
    let mut trace = BldTrace::default();
    let push = |trace: &mut BldTrace,
                model: &GenerativeModel,
                iteration: usize,
                stage: BldStage,
                frozen: Option<usize>|
     -> Result<()> {
        let w = match frozen {
            Some(w) => w,
            None => current_winner(model, contexts)?,
        };
        trace.records.push(BldRecord {
            iteration,
            stage,
            structure_loss: structure_loss(model)?,
            binding_loss: binding_loss(model, w, contexts)?,
        });
        Ok(())
    };

    let first_stage = match order {
        StageOrder::StructureFirst => BldStage::Structure,
        StageOrder::ContextFirst => BldStage::Binding,
    };
    push(&mut trace, &model, 0, first_stage, None)?;

    let latent = model.latent_alphabet().clone();
    let context_alpha = model.context_alphabet().clone();

    let structure_pass =
        |model: &mut GenerativeModel, trace: &mut BldTrace, first_iteration: usize| -> Result<()> {
            let trace_cell = std::cell::RefCell::new(trace);
            descend_stage(
                model,
                config.stage_a_iters(),
                config.eta_content(),
                &structure_loss,
                &structure_grads,
                &|m, rows| {
                    let prior = Channel::from_rows(m.content_alphabet().clone(), rows)?;
                    GenerativeModel::new(prior, m.likelihood().clone())
                },
                &|m| m.prior().rows().to_vec(),
                &latent,
                |m, iteration| {
                    push(
                        &mut trace_cell.borrow_mut(),
                        m,
                        iteration,
                        BldStage::Structure,
                        None,
                    )
                },
                first_iteration,
            )
        };
    let binding_pass =
        |model: &mut GenerativeModel, trace: &mut BldTrace, first_iteration: usize| -> Result<()> {
            let winner = current_winner(model, contexts)?;
            let trace_cell = std::cell::RefCell::new(trace);
            descend_stage(
                model,
                config.stage_b_iters(),
                config.eta_context(),
                &|m| binding_loss(m, winner, contexts),
                &|m| binding_grads(m, winner, contexts),
                &|m, rows| {
                    let likelihood = Channel::from_rows(m.latent_alphabet().clone(), rows)?;
                    GenerativeModel::new(m.prior().clone(), likelihood)
                },
                &|m| m.likelihood().rows().to_vec(),
                &context_alpha,
                |m, iteration| {
                    push(
                        &mut trace_cell.borrow_mut(),
                        m,
                        iteration,
                        BldStage::Binding,
                        Some(winner),
                    )
                },
                first_iteration,
            )
        };

    match order {
        StageOrder::StructureFirst => {
            structure_pass(&mut model, &mut trace, 1)?;
            binding_pass(&mut model, &mut trace, 1 + config.stage_a_iters())?;
        }
        StageOrder::ContextFirst => {
            binding_pass(&mut model, &mut trace, 1)?;
            structure_pass(&mut model, &mut trace, 1 + config.stage_b_iters())?;
        }
    }
    Ok((model, trace))
}

/// Negative log-evidence of the contexts under the model's own best
/// content symbol — the end-task objective used to compare runs.
pub fn final_binding_loss(model: &GenerativeModel, contexts: &[Dist]) -> Result<f64> {
    let winner = current_winner(model, contexts)?;
    binding_loss(model, winner, contexts)
}
