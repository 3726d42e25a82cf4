//! Multiscale schedules and spatial composition of content states.
//!
//! The temporal half stacks streaming schedules at separated timescales:
//! level ℓ revises its content every `cadence_ℓ` steps against a windowed
//! average of the raw context stream, pulled both toward its own previous
//! state (weight λ_ℓ) and toward its slower parent (weight μ_ℓ):
//!
//! ```text
//! Φ'_ℓ(z) ∝ Φ_ℓ(z)^{λ/(λ+μ)} · Φ_{ℓ+1}(z)^{μ/(λ+μ)} · exp(−h(z)/(λ+μ))
//! ```
//!
//! The spatial half builds parents out of children — product-of-experts or
//! mixture — and audits the result with three independent clauses:
//! *alignment* (the parent predicts the context with strictly less
//! entropy than every child), *consistency* (the parent's predictive stays
//! within ε of each child's), and *abstraction* (the parent's coupling
//! carries more mutual information than at least one child's).
//!
//! Two different readings of "entropy given a content state" coexist here,
//! each forced by what it measures. The composition clauses condition on a
//! *known* state, so the residual uncertainty is the entropy of that
//! state's predictive distribution. The hierarchical loss receives a full
//! coupling table in which the state is a *random variable*, so its term
//! is the table's conditional entropy (zero for deterministic couplings).

use crate::error::{Error, Result};
use crate::prob::{
    conditional_entropy, entropy, kl_divergence, mutual_information, Alphabet, Channel, Dist,
    Given, Joint, NORM_TOL,
};
use crate::temporal::{
    context_surprisal, proximal_update, row_surprisals, run_h1, unexplainable_symbols, DagEdge,
    ScheduleStep, ScheduleTrace, TemporalConfig,
};
use crate::variational::Convention;

/// How the inter-scale gap is measured in every multiscale report: the
/// ideal conditional-expectation alignment is not constructible from the
/// objects at hand, so the reported metric is the divergence between
/// adjacent contents on their shared alphabet.
pub const INTER_SCALE_METRIC: &str =
    "KL(level content \u{2016} parent content) on the shared latent alphabet";

/// How children combine into a parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Composer {
    /// Normalized elementwise product (product-of-experts); weights, if
    /// given, become exponents (a geometric pool).
    Product,
    /// Weighted average; uniform weights when none are given.
    Mixture,
}

/// Per-level parameters of a multiscale schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSpec {
    /// Latent alphabet of this level's content (shared across levels).
    pub alphabet: Alphabet,
    /// Pull toward the level's own previous content.
    pub lambda: f64,
    /// Pull toward the parent level's content; must be 0 at the top.
    pub mu: f64,
    /// Weight of this level's inter-scale divergence in the weighted
    /// diagnostic (the pair `(ℓ, ℓ+1)` is billed to level ℓ).
    pub gamma: f64,
    /// Consistency tolerance attached to this level's composition checks.
    pub epsilon: f64,
    /// Update period: the level revises only at multiples of this step.
    pub cadence: usize,
    /// Sliding-window length for context aggregation (uniform mixture),
    /// clipped at the start of the stream.
    pub aggregator: usize,
    /// How this level's children compose spatially.
    pub composer: Composer,
}

/// A validated stack of level specifications, fastest first.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchySpec {
    levels: Vec<LevelSpec>,
}

impl HierarchySpec {
    /// Validates timescale separation (cadences strictly increasing), a
    /// free-standing top level (μ = 0), and per-level parameter ranges.
    pub fn new(levels: Vec<LevelSpec>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter(
                "a hierarchy needs at least one level".into(),
            ));
        }
        for (l, level) in levels.iter().enumerate() {
            if !level.lambda.is_finite() || level.lambda < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "level {l}: inertia weight must be finite and nonnegative, got {}",
                    level.lambda
                )));
            }
            if !level.mu.is_finite() || level.mu < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "level {l}: parent pull must be finite and nonnegative, got {}",
                    level.mu
                )));
            }
            if level.lambda + level.mu <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "level {l}: inertia and parent pull cannot both vanish"
                )));
            }
            if !level.gamma.is_finite() || level.gamma < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "level {l}: inter-scale weight must be finite and nonnegative, got {}",
                    level.gamma
                )));
            }
            if !(level.epsilon >= 0.0) || !level.epsilon.is_finite() || level.epsilon == 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "level {l}: consistency tolerance must be positive, got {}",
                    level.epsilon
                )));
            }
            if level.cadence == 0 {
                return Err(Error::InvalidParameter(format!(
                    "level {l}: cadence must be a positive period"
                )));
            }
            if level.aggregator == 0 {
                return Err(Error::InvalidParameter(format!(
                    "level {l}: aggregation window must hold at least one context"
                )));
            }
            if l > 0 && level.cadence <= levels[l - 1].cadence {
                return Err(Error::InvalidParameter(format!(
                    "level {l}: cadence {} does not exceed the faster level's {} — \
                     timescales must strictly separate",
                    level.cadence,
                    levels[l - 1].cadence
                )));
            }
        }
        let top = levels.last().expect("nonempty");
        if top.mu != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "top level has no parent to pull toward; its coupling must be 0, got {}",
                top.mu
            )));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[LevelSpec] {
        &self.levels
    }

    fn top_cadence(&self) -> usize {
        self.levels.last().expect("nonempty").cadence
    }
}

/// One level's live state: its content and the context it currently sees.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelState {
    pub content: Dist,
    pub aggregated_context: Dist,
}

/// One proximal revision of a level's content.
///
/// Minimizes `⟨h, Φ⟩ + λ·KL(Φ ‖ content) + μ·KL(Φ ‖ parent)` exactly,
/// where `h` is the per-row surprisal of the level's aggregated context.
/// With no parent (or μ = 0) this is precisely the streaming update of
/// [`proximal_update`] — same code path, bit for bit.
pub fn level_update(
    state: &LevelState,
    parent_content: Option<&Dist>,
    likelihood: &Channel,
    lambda: f64,
    mu: f64,
) -> Result<Dist> {
    if !lambda.is_finite() || lambda < 0.0 || !mu.is_finite() || mu < 0.0 || lambda + mu <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "level weights must be finite, nonnegative, and not both zero (λ = {lambda}, μ = {mu})"
        )));
    }
    let parent = match parent_content {
        Some(p) if mu > 0.0 => p,
        Some(_) | None if mu == 0.0 => {
            // tol and max_steps are inert for a single update.
            let cfg = TemporalConfig::new(lambda, 1.0, 1, Convention::ExpectedRow)?;
            return proximal_update(&state.content, &state.aggregated_context, likelihood, &cfg);
        }
        _ => {
            return Err(Error::InvalidParameter(
                "a positive parent pull needs a parent content to pull toward".into(),
            ));
        }
    };
    if parent.alphabet() != state.content.alphabet() {
        return Err(Error::ShapeMismatch(
            "parent content must live on the same latent alphabet as the level".into(),
        ));
    }
    if state.content.alphabet() != likelihood.from_alphabet()
        || state.aggregated_context.alphabet() != likelihood.to_alphabet()
    {
        return Err(Error::ShapeMismatch(
            "level state does not match the emission channel's alphabets".into(),
        ));
    }

    let h = row_surprisals(&state.aggregated_context, likelihood);
    let total = lambda + mu;
    let mut any_overlap = false;
    let mut logw: Vec<f64> = Vec::with_capacity(state.content.len());
    for z in 0..state.content.len() {
        let c = state.content.get(z);
        let p = parent.get(z);
        let own_ok = lambda == 0.0 || c > 0.0;
        let parent_ok = mu == 0.0 || p > 0.0;
        if own_ok && parent_ok {
            any_overlap = true;
            if h[z].is_finite() {
                let own = if lambda > 0.0 { lambda * c.ln() } else { 0.0 };
                let pull = if mu > 0.0 { mu * p.ln() } else { 0.0 };
                logw.push((own + pull - h[z]) / total);
                continue;
            }
        }
        logw.push(f64::NEG_INFINITY);
    }
    if !any_overlap {
        return Err(Error::InfeasibleUpdate);
    }
    let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::DegenerateObservation {
            symbols: unexplainable_symbols(&state.content, &state.aggregated_context, likelihood),
        });
    }
    let weights = logw
        .into_iter()
        .map(|w| {
            if w == f64::NEG_INFINITY {
                0.0
            } else {
                (w - top).exp()
            }
        })
        .collect();
    Dist::normalized(state.content.alphabet().clone(), weights)
}

/// One top-level tick of a multiscale run.
#[derive(Clone, Debug, PartialEq)]
pub struct TickRecord {
    /// Stream step (1-based) at which the top level updated.
    pub step: usize,
    /// `KL(Φ_ℓ ‖ Φ_{ℓ+1})` for each adjacent pair, fastest first; may be
    /// `+∞` when a level abandons support its parent still holds.
    pub inter_scale_kl: Vec<f64>,
    /// `Σ_ℓ γ_ℓ · inter_scale_kl[ℓ]`.
    pub weighted_inter_scale: f64,
    /// Total multiscale loss at this tick:
    /// `Σ_ℓ [surprisal_ℓ + λ_ℓ·(last own KL step) + μ_ℓ·KL(Φ_ℓ ‖ Φ_{ℓ+1})]`,
    /// using each level's most recent update.
    pub l_multi: f64,
}

/// Inter-scale diagnostics of a multiscale run, one record per top-level
/// tick. The metric behind `inter_scale_kl` is [`INTER_SCALE_METRIC`].
#[derive(Clone, Debug, PartialEq, Default)]
pub struct MultiscaleReport {
    pub ticks: Vec<TickRecord>,
}

/// Uniform mixture of the window of raw contexts ending at `t` (1-based),
/// clipped at the stream start.
fn window_mixture(stream: &[Dist], t: usize, window: usize) -> Dist {
    let lo = t.saturating_sub(window);
    let slice = &stream[lo..t];
    if slice.len() == 1 {
        // A window holding one context is that context — bypassing the
        // renormalization keeps single-step windows bit-identical to the
        // raw stream.
        return slice[0].clone();
    }
    let mut acc = vec![0.0; slice[0].len()];
    for d in slice {
        for (a, &p) in acc.iter_mut().zip(d.probs()) {
            *a += p;
        }
    }
    Dist::normalized(slice[0].alphabet().clone(), acc).expect("mean of valid dists is valid")
}

/// Runs a multiscale schedule over a raw context stream.
///
/// Every level starts from the uniform content. Within a step the levels
/// update sequentially, fastest first, each seeing its parent's content
/// from before the parent's own update this step. Level ℓ fires at
/// multiples of its cadence, observing the uniform mixture of the last
/// `aggregator_ℓ` raw contexts. Each top-level tick appends a
/// [`TickRecord`]; the run never stops early, so a single-level hierarchy
/// is exactly a streaming schedule (it delegates to [`run_h1`] with an
/// unreachable stopping tolerance).
pub fn run_h2(
    spec: &HierarchySpec,
    context_stream: &[Dist],
    likelihoods: &[Channel],
) -> Result<(Vec<ScheduleTrace>, MultiscaleReport)> {
    let levels = spec.levels();
    if likelihoods.len() != levels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} levels but {} emission channels",
            levels.len(),
            likelihoods.len()
        )));
    }
    if context_stream.len() < spec.top_cadence() {
        return Err(Error::InvalidParameter(format!(
            "stream of {} steps never reaches the coarsest cadence {}",
            context_stream.len(),
            spec.top_cadence()
        )));
    }
    for (l, (level, like)) in levels.iter().zip(likelihoods).enumerate() {
        if like.from_alphabet() != &level.alphabet {
            return Err(Error::ShapeMismatch(format!(
                "level {l}: emission channel input does not match the level alphabet"
            )));
        }
        if like.to_alphabet() != context_stream[0].alphabet() {
            return Err(Error::ShapeMismatch(format!(
                "level {l}: emission channel output does not match the context alphabet"
            )));
        }
    }
    if context_stream
        .iter()
        .any(|c| c.alphabet() != context_stream[0].alphabet())
    {
        return Err(Error::ShapeMismatch(
            "every context in the stream must share one alphabet".into(),
        ));
    }

    if levels.len() == 1 {
        let level = &levels[0];
        let schedule: Vec<Dist> = (1..=context_stream.len())
            .filter(|t| t % level.cadence == 0)
            .map(|t| window_mixture(context_stream, t, level.aggregator))
            .collect();
        let cfg = TemporalConfig::new(
            level.lambda,
            f64::MIN_POSITIVE, // stops only at an exact fixed point
            schedule.len(),
            Convention::ExpectedRow,
        )?;
        let initial = Dist::uniform(level.alphabet.clone());
        let trace = run_h1(&initial, &schedule, &likelihoods[0], &cfg)?;
        let mut ticks = Vec::with_capacity(trace.steps.len());
        let mut prev_cum = 0.0;
        for (k, step) in trace.steps.iter().enumerate() {
            let data = step.cum_cond_entropy - prev_cum;
            prev_cum = step.cum_cond_entropy;
            ticks.push(TickRecord {
                step: (k + 1) * level.cadence,
                inter_scale_kl: Vec::new(),
                weighted_inter_scale: 0.0,
                l_multi: data + level.lambda * step.kl_step,
            });
        }
        return Ok((vec![trace], MultiscaleReport { ticks }));
    }

    let n = levels.len();
    let mut contents: Vec<Dist> = levels
        .iter()
        .map(|l| Dist::uniform(l.alphabet.clone()))
        .collect();
    let mut traces = vec![ScheduleTrace::default(); n];
    let mut cums = vec![0.0; n];
    let mut last_kl = vec![0.0; n];
    let mut last_data = vec![0.0; n];
    let mut ticks = Vec::new();

    for t in 1..=context_stream.len() {
        for l in 0..n {
            let level = &levels[l];
            if t % level.cadence != 0 {
                continue;
            }
            let aggregated = window_mixture(context_stream, t, level.aggregator);
            let state = LevelState {
                content: contents[l].clone(),
                aggregated_context: aggregated.clone(),
            };
            let parent = if l + 1 < n {
                Some(&contents[l + 1])
            } else {
                None
            };
            let next = level_update(&state, parent, &likelihoods[l], level.lambda, level.mu)?;
            let kl = kl_divergence(&next, &contents[l])?;
            let data =
                context_surprisal(&next, &aggregated, &likelihoods[l], Convention::ExpectedRow)?;
            let k = traces[l].steps.len();
            let objective = if k == 0 {
                data
            } else {
                data + level.lambda * kl
            };
            cums[l] += data;
            traces[l].steps.push(ScheduleStep {
                content: next.clone(),
                context: aggregated,
                objective,
                kl_step: kl,
                cum_cond_entropy: cums[l],
            });
            traces[l].dag_edges.push(DagEdge {
                from: k,
                to: k + 1,
                kl,
            });
            last_kl[l] = kl;
            last_data[l] = data;
            contents[l] = next;
        }
        if t % spec.top_cadence() == 0 {
            let inter: Vec<f64> = (0..n - 1)
                .map(|l| kl_divergence(&contents[l], &contents[l + 1]))
                .collect::<Result<_>>()?;
            let weighted = inter
                .iter()
                .zip(levels)
                .map(|(&kl, level)| level.gamma * kl)
                .sum();
            let mut l_multi = 0.0;
            for l in 0..n {
                l_multi += last_data[l] + levels[l].lambda * last_kl[l];
                if l + 1 < n {
                    l_multi += levels[l].mu * inter[l];
                }
            }
            ticks.push(TickRecord {
                step: t,
                inter_scale_kl: inter,
                weighted_inter_scale: weighted,
                l_multi,
            });
        }
    }
    Ok((traces, MultiscaleReport { ticks }))
}

/// Combines children into a parent state.
///
/// `Product` multiplies elementwise and renormalizes (weights, if given,
/// become exponents — a geometric pool); `Mixture` averages (uniformly
/// without weights). Weights must lie on the simplex; a weight of zero
/// excludes its child entirely.
pub fn compose(children: &[Dist], composer: Composer, weights: Option<&[f64]>) -> Result<Dist> {
    if children.is_empty() {
        return Err(Error::EmptyComposition);
    }
    let alphabet = children[0].alphabet();
    if children.iter().any(|c| c.alphabet() != alphabet) {
        return Err(Error::ShapeMismatch(
            "children must share one alphabet to compose".into(),
        ));
    }
    if let Some(w) = weights {
        if w.len() != children.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for {} children",
                w.len(),
                children.len()
            )));
        }
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidParameter(
                "composition weights must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "composition weights must sum to 1, got {sum}"
            )));
        }
    }
    match composer {
        Composer::Product => {
            let mut logw = vec![0.0_f64; alphabet.size()];
            for (i, child) in children.iter().enumerate() {
                let w = weights.map_or(1.0, |ws| ws[i]);
                if w == 0.0 {
                    continue;
                }
                for (acc, &p) in logw.iter_mut().zip(child.probs()) {
                    *acc += if p > 0.0 {
                        w * p.ln()
                    } else {
                        f64::NEG_INFINITY
                    };
                }
            }
            let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if top == f64::NEG_INFINITY {
                return Err(Error::EmptyComposition);
            }
            let weights = logw
                .into_iter()
                .map(|w| {
                    if w == f64::NEG_INFINITY {
                        0.0
                    } else {
                        (w - top).exp()
                    }
                })
                .collect();
            Dist::normalized(alphabet.clone(), weights)
        }
        Composer::Mixture => {
            let uniform = 1.0 / children.len() as f64;
            let mut acc = vec![0.0; alphabet.size()];
            for (i, child) in children.iter().enumerate() {
                let w = weights.map_or(uniform, |ws| ws[i]);
                for (a, &p) in acc.iter_mut().zip(child.probs()) {
                    *a += w * p;
                }
            }
            Dist::normalized(alphabet.clone(), acc)
        }
    }
}

/// One clause evaluation against one child.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClauseCheck {
    pub child: usize,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Independent verdicts of the three composition clauses.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositionReport {
    /// Parent's predictive entropy (`value`) vs each child's
    /// (`threshold`); passes when strictly smaller.
    pub alignment: Vec<ClauseCheck>,
    /// `KL(parent predictive ‖ child predictive)` vs ε; passes when within.
    pub consistency: Vec<ClauseCheck>,
    /// Parent coupling's mutual information vs each child's; the clause
    /// needs only one child to be beaten.
    pub abstraction: Vec<ClauseCheck>,
}

impl CompositionReport {
    /// Alignment demands strict sharpening against *every* child.
    pub fn alignment_holds(&self) -> bool {
        self.alignment.iter().all(|c| c.pass)
    }

    /// Consistency demands closeness to *every* child.
    pub fn consistency_holds(&self) -> bool {
        self.consistency.iter().all(|c| c.pass)
    }

    /// Abstraction demands beating *at least one* child.
    pub fn abstraction_holds(&self) -> bool {
        self.abstraction.iter().any(|c| c.pass)
    }
}

/// Couples a content state to the context via `builder` and sanity-checks
/// that the result really is that state's coupling.
fn coupled(builder: &dyn Fn(&Dist) -> Result<Joint>, content: &Dist) -> Result<Joint> {
    let joint = builder(content)?;
    if joint.row_alphabet() != content.alphabet() {
        return Err(Error::ShapeMismatch(
            "coupling joint's row side must be the content alphabet".into(),
        ));
    }
    if joint.row_marginal().total_variation(content)? > 1e-9 {
        return Err(Error::InvalidJoint(
            "coupling joint's content marginal does not match the supplied content".into(),
        ));
    }
    Ok(joint)
}

/// Audits a parent against its children through their context couplings.
///
/// `context_joint_builder` must return, for any content state, the joint
/// coupling that state to the context below. Conditioning on a known
/// state leaves its predictive distribution, so the alignment values are
/// predictive entropies and the consistency values are divergences
/// between predictive distributions; abstraction compares the couplings'
/// mutual informations. The three clauses are reported independently —
/// none is assumed to hold.
pub fn check_composition<F>(
    parent: &Dist,
    children: &[Dist],
    context_joint_builder: F,
    epsilon: f64,
) -> Result<CompositionReport>
where
    F: Fn(&Dist) -> Result<Joint>,
{
    if children.is_empty() {
        return Err(Error::InvalidParameter(
            "composition check needs at least one child".into(),
        ));
    }
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "consistency tolerance must be finite and nonnegative, got {epsilon}"
        )));
    }
    if children.iter().any(|c| c.alphabet() != parent.alphabet()) {
        return Err(Error::ShapeMismatch(
            "parent and children must share one latent alphabet".into(),
        ));
    }
    let parent_joint = coupled(&context_joint_builder, parent)?;
    let parent_predictive = parent_joint.col_marginal();
    let parent_entropy = entropy(&parent_predictive);
    let parent_information = mutual_information(&parent_joint);

    let mut report = CompositionReport {
        alignment: Vec::with_capacity(children.len()),
        consistency: Vec::with_capacity(children.len()),
        abstraction: Vec::with_capacity(children.len()),
    };
    for (k, child) in children.iter().enumerate() {
        let child_joint = coupled(&context_joint_builder, child)?;
        if child_joint.col_alphabet() != parent_joint.col_alphabet() {
            return Err(Error::ShapeMismatch(
                "couplings must share one context alphabet".into(),
            ));
        }
        let child_predictive = child_joint.col_marginal();
        let child_entropy = entropy(&child_predictive);
        let divergence = kl_divergence(&parent_predictive, &child_predictive)?;
        let child_information = mutual_information(&child_joint);
        report.alignment.push(ClauseCheck {
            child: k,
            value: parent_entropy,
            threshold: child_entropy,
            pass: parent_entropy < child_entropy,
        });
        report.consistency.push(ClauseCheck {
            child: k,
            value: divergence,
            threshold: epsilon,
            pass: divergence <= epsilon,
        });
        report.abstraction.push(ClauseCheck {
            child: k,
            value: parent_information,
            threshold: child_information,
            pass: parent_information > child_information,
        });
    }
    Ok(report)
}

/// One level of a hierarchical-loss evaluation: a parent state, the
/// children it should compose from, and the joint coupling the parent (as
/// a random variable) to the context below it.
#[derive(Clone, Debug, PartialEq)]
pub struct LossLevel {
    pub parent: Dist,
    pub children: Vec<Dist>,
    pub context_joint: Joint,
    pub composer: Composer,
    pub weights: Option<Vec<f64>>,
}

/// Total hierarchical loss
/// `Σ_ℓ [H(Ψ_{ℓ−1}|Φ_ℓ) + λ_ℓ·KL(parent_ℓ ‖ compose(children_ℓ))]`.
///
/// The entropy term is the coupling joint's conditional entropy given the
/// content side (zero for deterministic couplings); the KL term is `+∞`
/// when a parent keeps support its composition lost.
pub fn hierarchical_loss(levels: &[LossLevel], lambdas: &[f64]) -> Result<f64> {
    if lambdas.len() != levels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} level weights for {} levels",
            lambdas.len(),
            levels.len()
        )));
    }
    if lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::InvalidParameter(
            "level weights must be finite and nonnegative".into(),
        ));
    }
    let mut loss = 0.0;
    for (level, &lambda) in levels.iter().zip(lambdas) {
        if level.context_joint.row_alphabet() != level.parent.alphabet() {
            return Err(Error::ShapeMismatch(
                "coupling joint's row side must be the parent alphabet".into(),
            ));
        }
        if level
            .context_joint
            .row_marginal()
            .total_variation(&level.parent)?
            > 1e-9
        {
            return Err(Error::InvalidJoint(
                "coupling joint's content marginal does not match the parent".into(),
            ));
        }
        let composed = compose(&level.children, level.composer, level.weights.as_deref())?;
        loss += conditional_entropy(&level.context_joint, Given::Row)
            + lambda * kl_divergence(&level.parent, &composed)?;
    }
    Ok(loss)
}
