//! Entropy-modulated resource allocation: attention, learning rate, memory.
//!
//! Three closed-form rules turn the information geometry of a content ×
//! context joint into control signals:
//!
//! - attention follows the sensitivity of `H(Ψ|Φ)` to reweighting each
//!   content symbol (sharp dependence → watch that symbol);
//! - learning rate follows `H(Ψ|Φ) / (H(Φ) + ε)` (update fast while
//!   context is unexplained relative to how settled the content is);
//! - memory follows `I(Ψ;Φ) / min{H(Ψ), H(Φ)}` (store only what context
//!   and content actually share).
//!
//! The underlying theory gives proportionalities, not scales, so every
//! raw signal is mapped through the fixed monotone normalization
//! [`signal_to_unit`] — `x ↦ clamp(x/(1+x), 1e-9, 1)` — to land in
//! (0, 1]. A joint objective over the three signals would separate per
//! component (each rule touches a disjoint part of the log-barrier
//! objective), which is why closed forms replace a numeric solver.

use crate::error::{Error, Result};
use crate::prob::{conditional_entropy, entropy, mutual_information, Given, Joint};

/// Coefficients and limits for [`allocate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlConfig {
    lambda1: f64,
    lambda2: f64,
    lambda3: f64,
    epsilon: f64,
    kappa: f64,
}

impl ControlConfig {
    /// All coefficients must be positive; `epsilon` at most 1e-3.
    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64, epsilon: f64, kappa: f64) -> Result<Self> {
        for (name, v) in [
            ("lambda1", lambda1),
            ("lambda2", lambda2),
            ("lambda3", lambda3),
            ("epsilon", epsilon),
            ("kappa", kappa),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a positive finite real, got {v}"
                )));
            }
        }
        if epsilon > 1e-3 {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be at most 1e-3, got {epsilon}"
            )));
        }
        Ok(Self {
            lambda1,
            lambda2,
            lambda3,
            epsilon,
            kappa,
        })
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    pub fn lambda3(&self) -> f64 {
        self.lambda3
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

impl Default for ControlConfig {
    /// Unit coefficients, ε = 1e-6, and a 100-nat budget (effectively
    /// unbounded for any table this crate works with).
    fn default() -> Self {
        Self::new(1.0, 1.0, 1.0, 1e-6, 100.0).expect("defaults are valid")
    }
}

/// The allocation triple; every component lies in (0, 1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Allocation {
    pub attention: f64,
    pub learning_rate: f64,
    pub memory: f64,
}

/// Sensitivity of one content symbol, with its zero-marginal flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttentionGain {
    /// `|∂H(Ψ|Φ)/∂ mass on this symbol|`, by symmetric finite difference.
    pub sensitivity: f64,
    /// True when the symbol carries no marginal mass, so no finite
    /// difference exists and the sensitivity is reported as 0.
    pub zero_marginal: bool,
}

/// The fixed raw-signal normalization: `clamp(x/(1+x), 1e-9, 1)`, with
/// `+∞ ↦ 1`. Strictly increasing on finite nonnegative inputs, so it
/// preserves the ordering of raw signals.
pub fn signal_to_unit(x: f64) -> f64 {
    if x.is_infinite() && x > 0.0 {
        return 1.0;
    }
    (x / (1.0 + x)).clamp(1e-9, 1.0)
}

/// Per content-symbol sensitivity of `H(Ψ|Φ)` to that symbol's marginal
/// mass: a central finite difference under renormalization.
///
/// The conditional rows are held fixed while the content marginal moves
/// `±δ` on one coordinate and is renormalized; `δ` shrinks to half the
/// symbol's mass when the symbol is nearly exhausted so the perturbed
/// marginal stays valid. Raw magnitudes are returned, not normalized
/// allocations.
pub fn attention_gain(joint: &Joint, perturbation: f64) -> Result<Vec<AttentionGain>> {
    if !(1e-8..=1e-3).contains(&perturbation) {
        return Err(Error::InvalidParameter(format!(
            "perturbation must lie in [1e-8, 1e-3], got {perturbation}"
        )));
    }
    let w = joint.row_marginal();
    // Row conditional entropies; H(Ψ|Φ) as a function of the marginal is
    // then the linear form Σ_i w_i · H_i.
    let row_entropies: Vec<f64> = joint
        .probs()
        .iter()
        .zip(w.probs())
        .map(|(row, &m)| {
            if m <= 0.0 {
                return 0.0;
            }
            let mut h = 0.0;
            for &p in row {
                if p > 0.0 {
                    h -= (p / m) * (p / m).ln();
                }
            }
            h.max(0.0)
        })
        .collect();
    let cond_entropy_at = |marginal: &[f64]| -> f64 {
        marginal
            .iter()
            .zip(&row_entropies)
            .map(|(&m, &h)| m * h)
            .sum()
    };
    let mut gains = Vec::with_capacity(joint.nrows());
    for (i, &wi) in w.probs().iter().enumerate() {
        if wi <= 0.0 {
            gains.push(AttentionGain {
                sensitivity: 0.0,
                zero_marginal: true,
            });
            continue;
        }
        let delta = perturbation.min(wi / 2.0);
        let mut plus = w.probs().to_vec();
        plus[i] += delta;
        let plus_sum: f64 = plus.iter().sum();
        for v in &mut plus {
            *v /= plus_sum;
        }
        let mut minus = w.probs().to_vec();
        minus[i] -= delta;
        let minus_sum: f64 = minus.iter().sum();
        for v in &mut minus {
            *v /= minus_sum;
        }
        let sensitivity = (cond_entropy_at(&plus) - cond_entropy_at(&minus)).abs() / (2.0 * delta);
        gains.push(AttentionGain {
            sensitivity,
            zero_marginal: false,
        });
    }
    Ok(gains)
}

/// The raw learning-rate ratio `H(Ψ|Φ) / (H(Φ) + ε)` before normalization.
pub fn learning_rate_ratio(joint: &Joint, config: &ControlConfig) -> f64 {
    conditional_entropy(joint, Given::Row) / (entropy(&joint.row_marginal()) + config.epsilon())
}

/// `H(Ψ|Φ) / (H(Φ) + ε)` pushed through [`signal_to_unit`]: learn fast
/// exactly while residual context uncertainty dominates settled content.
pub fn learning_rate(joint: &Joint, config: &ControlConfig) -> f64 {
    signal_to_unit(learning_rate_ratio(joint, config))
}

/// Shared-information fraction `I(Ψ;Φ) / min{H(Ψ), H(Φ)}` in [0, 1];
/// 0 when the mutual information is below 1e-10 (including the case
/// where both entropies vanish).
pub fn memory_allocation(joint: &Joint) -> f64 {
    let i = mutual_information(joint);
    if i <= 1e-10 {
        return 0.0;
    }
    let floor = entropy(&joint.row_marginal()).min(entropy(&joint.col_marginal()));
    (i / floor).min(1.0)
}

/// Combines the three raw signals into an [`Allocation`].
///
/// Raw signals are `λ1 · mean attention sensitivity`,
/// `λ2 · learning-rate ratio`, and `λ3 · odds(memory fraction)` — the
/// odds map `m/(1−m)` makes the normalized memory component equal the
/// fraction itself at λ3 = 1 — each pushed through [`signal_to_unit`].
/// Errors when the content entropy exceeds the `κ` budget.
pub fn allocate(joint: &Joint, config: &ControlConfig) -> Result<Allocation> {
    let h_content = entropy(&joint.row_marginal());
    if h_content > config.kappa() {
        return Err(Error::BudgetExceeded {
            entropy: h_content,
            budget: config.kappa(),
        });
    }
    let gains = attention_gain(joint, 1e-5)?;
    let mean_gain = gains.iter().map(|g| g.sensitivity).sum::<f64>() / gains.len() as f64;
    let memory_fraction = memory_allocation(joint);
    let odds = if memory_fraction >= 1.0 {
        f64::INFINITY
    } else {
        memory_fraction / (1.0 - memory_fraction)
    };
    Ok(Allocation {
        attention: signal_to_unit(config.lambda1() * mean_gain),
        learning_rate: signal_to_unit(config.lambda2() * learning_rate_ratio(joint, config)),
        memory: signal_to_unit(config.lambda3() * odds),
    })
}
