//! Exact information-theoretic primitives over finite discrete distributions.
//!
//! Everything here is computed in closed form over explicit probability
//! tables — no sampling, no estimation. Entropies are in nats, with the
//! usual conventions `0·ln 0 := 0` and `0·ln(0/0) := 0`. Absolute
//! continuity failures in [`kl_divergence`] yield `+∞` rather than an
//! error so that law checks can observe them.
//!
//! Validation happens at construction: once a [`Dist`], [`Joint`], or
//! [`Channel`] exists, the numeric operations on it are infallible.
//! Normalization is checked to within [`NORM_TOL`]; the executable law
//! checks ([`check_entropy_inequality`], [`check_chain_rule`]) are
//! asserted elsewhere to within [`LAW_TOL`].

use crate::error::{Error, Result};

/// Absolute tolerance for normalization checks at construction.
pub const NORM_TOL: f64 = 1e-12;

/// Absolute tolerance for the executable information-law checks.
pub const LAW_TOL: f64 = 1e-10;

/// A finite symbol set, optionally labeled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    size: usize,
    labels: Option<Vec<String>>,
}

impl Alphabet {
    /// An unlabeled alphabet of `size` symbols.
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidAlphabet("size must be at least 1".into()));
        }
        Ok(Self { size, labels: None })
    }

    /// A labeled alphabet; labels must be unique and non-empty.
    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidAlphabet("size must be at least 1".into()));
        }
        for (i, a) in labels.iter().enumerate() {
            for b in labels.iter().skip(i + 1) {
                if a == b {
                    return Err(Error::InvalidAlphabet(format!("duplicate label {a:?}")));
                }
            }
        }
        Ok(Self {
            size: labels.len(),
            labels: Some(labels),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Human-readable name of symbol `i`: its label when present, else its index.
    pub fn symbol_name(&self, i: usize) -> String {
        match &self.labels {
            Some(ls) if i < ls.len() => ls[i].clone(),
            _ => i.to_string(),
        }
    }
}

fn check_probs(probs: &[f64], what: &str) -> Result<()> {
    for (i, &p) in probs.iter().enumerate() {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::InvalidDist(format!(
                "{what} entry {i} is {p}, expected a nonnegative finite real"
            )));
        }
    }
    Ok(())
}

/// A probability distribution over an [`Alphabet`].
#[derive(Clone, Debug, PartialEq)]
pub struct Dist {
    alphabet: Alphabet,
    probs: Vec<f64>,
}

impl Dist {
    /// Validates nonnegativity and normalization to within [`NORM_TOL`].
    pub fn new(alphabet: Alphabet, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != alphabet.size() {
            return Err(Error::InvalidDist(format!(
                "expected {} entries, got {}",
                alphabet.size(),
                probs.len()
            )));
        }
        check_probs(&probs, "probability")?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidDist(format!(
                "entries sum to {sum}, expected 1 within {NORM_TOL:e}"
            )));
        }
        Ok(Self { alphabet, probs })
    }

    /// Scales nonnegative weights to sum to one. Errors when the weights are
    /// not finite-nonnegative or their sum is zero.
    pub fn normalized(alphabet: Alphabet, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != alphabet.size() {
            return Err(Error::InvalidDist(format!(
                "expected {} entries, got {}",
                alphabet.size(),
                weights.len()
            )));
        }
        check_probs(&weights, "weight")?;
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 || !sum.is_finite() {
            return Err(Error::InvalidDist(format!(
                "weights sum to {sum}, expected a positive finite total"
            )));
        }
        let mut probs: Vec<f64> = weights.iter().map(|w| w / sum).collect();
        // Second pass trims the accumulated rounding so wide tables still
        // satisfy the 1e-12 normalization invariant.
        let s2: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= s2;
        }
        Ok(Self { alphabet, probs })
    }

    /// The maximum-entropy distribution.
    pub fn uniform(alphabet: Alphabet) -> Self {
        let n = alphabet.size();
        Self {
            alphabet,
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// All mass on one symbol.
    pub fn point_mass(alphabet: Alphabet, index: usize) -> Result<Self> {
        if index >= alphabet.size() {
            return Err(Error::InvalidDist(format!(
                "point-mass index {index} out of range for {} symbols",
                alphabet.size()
            )));
        }
        let mut probs = vec![0.0; alphabet.size()];
        probs[index] = 1.0;
        Ok(Self { alphabet, probs })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Largest absolute difference between entries; the metric behind the
    /// crate's total-variation comparisons (TV = half the L1 distance).
    pub fn total_variation(&self, other: &Dist) -> Result<f64> {
        if self.alphabet != other.alphabet {
            return Err(Error::ShapeMismatch(
                "total variation requires a shared alphabet".into(),
            ));
        }
        let l1: f64 = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(0.5 * l1)
    }
}

/// A joint distribution over a pair of alphabets (rows × columns).
#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    row_alphabet: Alphabet,
    col_alphabet: Alphabet,
    probs: Vec<Vec<f64>>,
}

impl Joint {
    /// Validates shape, nonnegativity, and total mass 1 within [`NORM_TOL`].
    pub fn new(
        row_alphabet: Alphabet,
        col_alphabet: Alphabet,
        probs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if probs.len() != row_alphabet.size() {
            return Err(Error::InvalidJoint(format!(
                "expected {} rows, got {}",
                row_alphabet.size(),
                probs.len()
            )));
        }
        let mut total = 0.0;
        for (i, row) in probs.iter().enumerate() {
            if row.len() != col_alphabet.size() {
                return Err(Error::InvalidJoint(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    col_alphabet.size()
                )));
            }
            check_probs(row, "joint").map_err(|e| Error::InvalidJoint(e.to_string()))?;
            total += row.iter().sum::<f64>();
        }
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidJoint(format!(
                "entries sum to {total}, expected 1 within {NORM_TOL:e}"
            )));
        }
        Ok(Self {
            row_alphabet,
            col_alphabet,
            probs,
        })
    }

    /// The product joint of two independent marginals.
    pub fn from_independent(rows: &Dist, cols: &Dist) -> Self {
        let probs = rows
            .probs()
            .iter()
            .map(|&r| cols.probs().iter().map(|&c| r * c).collect())
            .collect();
        Self {
            row_alphabet: rows.alphabet().clone(),
            col_alphabet: cols.alphabet().clone(),
            probs,
        }
    }

    /// The joint induced by a row marginal and a conditional channel:
    /// `p(i, j) = marginal(i) · channel(j | i)`.
    pub fn from_marginal_channel(marginal: &Dist, channel: &Channel) -> Result<Self> {
        if marginal.alphabet() != channel.from_alphabet() {
            return Err(Error::ShapeMismatch(
                "marginal alphabet must equal the channel's source alphabet".into(),
            ));
        }
        let probs = marginal
            .probs()
            .iter()
            .enumerate()
            .map(|(i, &m)| channel.rows()[i].iter().map(|&c| m * c).collect())
            .collect();
        Ok(Self {
            row_alphabet: marginal.alphabet().clone(),
            col_alphabet: channel.to_alphabet().clone(),
            probs,
        })
    }

    pub fn row_alphabet(&self) -> &Alphabet {
        &self.row_alphabet
    }

    pub fn col_alphabet(&self) -> &Alphabet {
        &self.col_alphabet
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.probs[row][col]
    }

    pub fn nrows(&self) -> usize {
        self.row_alphabet.size()
    }

    pub fn ncols(&self) -> usize {
        self.col_alphabet.size()
    }

    /// Marginal over rows, `p(i) = Σ_j p(i, j)`.
    pub fn row_marginal(&self) -> Dist {
        let probs: Vec<f64> = self.probs.iter().map(|r| r.iter().sum()).collect();
        Dist {
            alphabet: self.row_alphabet.clone(),
            probs,
        }
    }

    /// Marginal over columns, `p(j) = Σ_i p(i, j)`.
    pub fn col_marginal(&self) -> Dist {
        let mut probs = vec![0.0; self.ncols()];
        for row in &self.probs {
            for (j, &p) in row.iter().enumerate() {
                probs[j] += p;
            }
        }
        Dist {
            alphabet: self.col_alphabet.clone(),
            probs,
        }
    }

    /// The same joint with rows and columns exchanged.
    pub fn transposed(&self) -> Joint {
        let mut probs = vec![vec![0.0; self.nrows()]; self.ncols()];
        for (i, row) in self.probs.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                probs[j][i] = p;
            }
        }
        Joint {
            row_alphabet: self.col_alphabet.clone(),
            col_alphabet: self.row_alphabet.clone(),
            probs,
        }
    }
}

/// A conditional distribution table: one [`Dist`] over `to_alphabet`
/// per symbol of `from_alphabet`.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    from_alphabet: Alphabet,
    to_alphabet: Alphabet,
    rows: Vec<Vec<f64>>,
}

impl Channel {
    /// Validates that every row is a distribution within [`NORM_TOL`].
    pub fn new(
        from_alphabet: Alphabet,
        to_alphabet: Alphabet,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rows.len() != from_alphabet.size() {
            return Err(Error::InvalidChannel(format!(
                "expected {} rows, got {}",
                from_alphabet.size(),
                rows.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != to_alphabet.size() {
                return Err(Error::InvalidChannel(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    to_alphabet.size()
                )));
            }
            check_probs(row, "channel").map_err(|e| Error::InvalidChannel(e.to_string()))?;
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidChannel(format!(
                    "row {i} sums to {sum}, expected 1 within {NORM_TOL:e}"
                )));
            }
        }
        Ok(Self {
            from_alphabet,
            to_alphabet,
            rows,
        })
    }

    /// Builds a channel from per-source-row distributions.
    pub fn from_rows(from_alphabet: Alphabet, rows: Vec<Dist>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidChannel(
                "a channel needs at least one row".into(),
            ));
        }
        let to_alphabet = rows[0].alphabet().clone();
        for (i, r) in rows.iter().enumerate() {
            if r.alphabet() != &to_alphabet {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} is over a different alphabet than row 0"
                )));
            }
        }
        let rows = rows.into_iter().map(|r| r.probs).collect();
        Self::new(from_alphabet, to_alphabet, rows)
    }

    /// The channel whose every row is uniform.
    pub fn uniform(from_alphabet: Alphabet, to_alphabet: Alphabet) -> Self {
        let n = to_alphabet.size();
        let rows = vec![vec![1.0 / n as f64; n]; from_alphabet.size()];
        Self {
            from_alphabet,
            to_alphabet,
            rows,
        }
    }

    /// A deterministic channel sending source symbol `i` to `map[i]`.
    pub fn deterministic(
        from_alphabet: Alphabet,
        to_alphabet: Alphabet,
        map: &[usize],
    ) -> Result<Self> {
        if map.len() != from_alphabet.size() {
            return Err(Error::InvalidChannel(format!(
                "expected {} map entries, got {}",
                from_alphabet.size(),
                map.len()
            )));
        }
        let mut rows = vec![vec![0.0; to_alphabet.size()]; from_alphabet.size()];
        for (i, &j) in map.iter().enumerate() {
            if j >= to_alphabet.size() {
                return Err(Error::InvalidChannel(format!(
                    "map entry {i} points to symbol {j}, out of range"
                )));
            }
            rows[i][j] = 1.0;
        }
        Ok(Self {
            from_alphabet,
            to_alphabet,
            rows,
        })
    }

    pub fn from_alphabet(&self) -> &Alphabet {
        &self.from_alphabet
    }

    pub fn to_alphabet(&self) -> &Alphabet {
        &self.to_alphabet
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn nrows(&self) -> usize {
        self.from_alphabet.size()
    }

    /// Row `i` as an owned distribution.
    pub fn row(&self, i: usize) -> Dist {
        Dist {
            alphabet: self.to_alphabet.clone(),
            probs: self.rows[i].clone(),
        }
    }

    /// Replaces row `i`; the replacement must share the target alphabet.
    pub fn set_row(&mut self, i: usize, row: Dist) -> Result<()> {
        if row.alphabet() != &self.to_alphabet {
            return Err(Error::ShapeMismatch(
                "replacement row is over a different alphabet".into(),
            ));
        }
        self.rows[i] = row.probs;
        Ok(())
    }
}

/// Which variable of a [`Joint`] is conditioned on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Given {
    /// Condition on the row variable: `H(col | row)`.
    Row,
    /// Condition on the column variable: `H(row | col)`.
    Col,
}

/// Shannon entropy in nats: `H = −Σ p ln p`, with `0·ln 0 := 0`.
pub fn entropy(d: &Dist) -> f64 {
    neg_sum_plogp(d.probs().iter().copied())
}

/// Entropy of the flattened joint table.
pub fn joint_entropy(j: &Joint) -> f64 {
    neg_sum_plogp(j.probs().iter().flatten().copied())
}

fn neg_sum_plogp(ps: impl Iterator<Item = f64>) -> f64 {
    let mut h = 0.0;
    for p in ps {
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    h.max(0.0)
}

/// Conditional entropy by direct summation:
/// `H(col|row) = −Σ_ij p(i,j) ln(p(i,j) / p(i))` (and symmetrically for
/// [`Given::Col`]). Computed independently of the chain rule so that
/// [`check_chain_rule`] exercises a genuine floating-point identity.
pub fn conditional_entropy(j: &Joint, given: Given) -> f64 {
    let table: Vec<Vec<f64>> = match given {
        Given::Row => j.probs().to_vec(),
        Given::Col => j.transposed().probs().to_vec(),
    };
    let mut h = 0.0;
    for row in &table {
        let mass: f64 = row.iter().sum();
        if mass <= 0.0 {
            continue;
        }
        for &p in row {
            if p > 0.0 {
                h -= p * (p / mass).ln();
            }
        }
    }
    h.max(0.0)
}

/// Mutual information `I = H(row) + H(col) − H(row, col)`, clamped to 0
/// (the analytic value is nonnegative; rounding may undershoot by ≤ 1e-10).
pub fn mutual_information(j: &Joint) -> f64 {
    let i = entropy(&j.row_marginal()) + entropy(&j.col_marginal()) - joint_entropy(j);
    i.max(0.0)
}

/// Kullback–Leibler divergence `Σ p ln(p/q)` in nats. Returns `+∞` exactly
/// when some `p_i > 0` has `q_i = 0`; errors only on alphabet mismatch.
pub fn kl_divergence(p: &Dist, q: &Dist) -> Result<f64> {
    if p.alphabet() != q.alphabet() {
        return Err(Error::ShapeMismatch(
            "KL divergence requires a shared alphabet".into(),
        ));
    }
    let mut kl = 0.0;
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        if pi > 0.0 {
            if qi == 0.0 {
                return Ok(f64::INFINITY);
            }
            kl += pi * (pi / qi).ln();
        }
    }
    Ok(kl.max(0.0))
}

/// Margin of the two-sided uncertainty inequality:
/// `H(row|col) + H(col|row) − |H(row) − H(col)|`. Analytically ≥ 0 for
/// every joint; callers assert margin ≥ −[`LAW_TOL`].
pub fn check_entropy_inequality(j: &Joint) -> f64 {
    let h_row_given_col = conditional_entropy(j, Given::Col);
    let h_col_given_row = conditional_entropy(j, Given::Row);
    let h_row = entropy(&j.row_marginal());
    let h_col = entropy(&j.col_marginal());
    h_row_given_col + h_col_given_row - (h_row - h_col).abs()
}

/// Residual of the entropy chain rule `|H(row,col) − H(row) − H(col|row)|`.
/// Must be ≤ [`LAW_TOL`] for every valid joint.
pub fn check_chain_rule(j: &Joint) -> f64 {
    let lhs = joint_entropy(j);
    let rhs = entropy(&j.row_marginal()) + conditional_entropy(j, Given::Row);
    (lhs - rhs).abs()
}

/// Ideal-code-length saving of coding the column variable conditioned on
/// the row variable instead of unconditionally:
/// `H(col) − H(col|row)`, which equals the mutual information.
pub fn compression_gain(j: &Joint) -> f64 {
    let gain = entropy(&j.col_marginal()) - conditional_entropy(j, Given::Row);
    gain.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;

    const TIGHT: f64 = 1e-12;

    fn coin() -> Dist {
        Dist::new(Alphabet::new(2).unwrap(), vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn entropy_uniform_over_four_symbols_is_ln_4() {
        let d = Dist::uniform(Alphabet::new(4).unwrap());
        assert!((entropy(&d) - 4.0_f64.ln()).abs() < TIGHT);
    }

    #[test]
    fn entropy_point_mass_is_zero() {
        let d = Dist::point_mass(Alphabet::new(5).unwrap(), 2).unwrap();
        assert_eq!(entropy(&d), 0.0);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn entropy_quarter_three_quarters_matches_high_precision_oracle() {
        // −(0.25 ln 0.25 + 0.75 ln 0.75), summed at 128-bit precision.
        let oracle = 0.562335144618808350288030315224;
        let d = Dist::new(Alphabet::new(2).unwrap(), vec![0.25, 0.75]).unwrap();
        assert!((entropy(&d) - oracle).abs() < 1e-15);
    }

    #[test]
    fn joint_entropy_of_independent_fair_coins_is_two_ln_2() {
        let j = Joint::from_independent(&coin(), &coin());
        assert!((joint_entropy(&j) - 2.0 * std::f64::consts::LN_2).abs() < TIGHT);
    }

    #[test]
    fn joint_entropy_of_perfectly_correlated_coins_is_ln_2() {
        let a = Alphabet::new(2).unwrap();
        let j = Joint::new(a.clone(), a, vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((joint_entropy(&j) - std::f64::consts::LN_2).abs() < TIGHT);
    }

    #[test]
    fn joint_entropy_equals_entropy_of_flattened_table() {
        let mut rng = sample::trial_rng(7, 0);
        let j = sample::random_joint(
            &mut rng,
            Alphabet::new(3).unwrap(),
            Alphabet::new(4).unwrap(),
        );
        let flat = Dist::new(
            Alphabet::new(12).unwrap(),
            j.probs().iter().flatten().copied().collect(),
        )
        .unwrap();
        assert!((joint_entropy(&j) - entropy(&flat)).abs() < TIGHT);
    }

    #[test]
    fn conditional_entropy_under_independence_equals_marginal_entropy() {
        let d = Dist::new(Alphabet::new(3).unwrap(), vec![0.2, 0.5, 0.3]).unwrap();
        let j = Joint::from_independent(&coin(), &d);
        assert!((conditional_entropy(&j, Given::Row) - entropy(&d)).abs() < TIGHT);
        assert!((conditional_entropy(&j, Given::Col) - entropy(&coin())).abs() < TIGHT);
    }

    #[test]
    fn conditional_entropy_of_deterministic_channel_is_zero() {
        let a3 = Alphabet::new(3).unwrap();
        let ch = Channel::deterministic(a3.clone(), a3.clone(), &[2, 0, 1]).unwrap();
        let j = Joint::from_marginal_channel(&Dist::uniform(a3), &ch).unwrap();
        assert_eq!(conditional_entropy(&j, Given::Row), 0.0);
    }

    #[test]
    fn conditional_entropy_matches_chain_rule_difference() {
        let mut rng = sample::trial_rng(11, 0);
        let a3 = Alphabet::new(3).unwrap();
        let j = sample::random_joint(&mut rng, a3.clone(), a3);
        let expected = joint_entropy(&j) - entropy(&j.row_marginal());
        assert!((conditional_entropy(&j, Given::Row) - expected).abs() < LAW_TOL);
    }

    #[test]
    fn mutual_information_of_independent_joint_is_zero() {
        let d = Dist::new(Alphabet::new(4).unwrap(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let j = Joint::from_independent(&d, &coin());
        assert!(mutual_information(&j) < LAW_TOL);
    }

    #[test]
    fn mutual_information_of_correlated_coins_is_ln_2() {
        let a = Alphabet::new(2).unwrap();
        let j = Joint::new(a.clone(), a, vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((mutual_information(&j) - std::f64::consts::LN_2).abs() < TIGHT);
    }

    #[test]
    fn mutual_information_identities_agree() {
        let mut rng = sample::trial_rng(13, 0);
        let j = sample::random_joint(
            &mut rng,
            Alphabet::new(4).unwrap(),
            Alphabet::new(2).unwrap(),
        );
        let via_sum = mutual_information(&j);
        let via_conditional = entropy(&j.row_marginal()) - conditional_entropy(&j, Given::Col);
        assert!((via_sum - via_conditional).abs() < LAW_TOL);
    }

    #[test]
    fn kl_divergence_of_identical_dists_is_zero() {
        let d = Dist::new(Alphabet::new(3).unwrap(), vec![0.6, 0.3, 0.1]).unwrap();
        assert_eq!(kl_divergence(&d, &d).unwrap(), 0.0);
    }

    #[test]
    fn kl_divergence_point_mass_against_fair_coin_is_ln_2() {
        let a = Alphabet::new(2).unwrap();
        let p = Dist::point_mass(a.clone(), 0).unwrap();
        let q = Dist::new(a, vec![0.5, 0.5]).unwrap();
        assert!((kl_divergence(&p, &q).unwrap() - std::f64::consts::LN_2).abs() < TIGHT);
    }

    #[test]
    fn kl_divergence_is_infinite_exactly_on_support_failure() {
        let a = Alphabet::new(2).unwrap();
        let p = Dist::new(a.clone(), vec![0.5, 0.5]).unwrap();
        let q = Dist::point_mass(a, 0).unwrap();
        assert!(kl_divergence(&p, &q).unwrap().is_infinite());
        // The reverse direction is finite: mass only where q is supported.
        assert!(kl_divergence(&q, &p).unwrap().is_finite());
    }

    #[test]
    fn kl_divergence_rejects_mismatched_alphabets() {
        let p = Dist::uniform(Alphabet::new(2).unwrap());
        let q = Dist::uniform(Alphabet::new(3).unwrap());
        assert!(matches!(
            kl_divergence(&p, &q),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn entropy_inequality_is_tight_on_a_bijection() {
        let a = Alphabet::new(3).unwrap();
        let ch = Channel::deterministic(a.clone(), a.clone(), &[1, 2, 0]).unwrap();
        let j = Joint::from_marginal_channel(&Dist::uniform(a), &ch).unwrap();
        assert!(check_entropy_inequality(&j).abs() < TIGHT);
    }

    #[test]
    fn entropy_inequality_margin_on_independent_coins_is_two_ln_2() {
        let j = Joint::from_independent(&coin(), &coin());
        assert!((check_entropy_inequality(&j) - 2.0 * std::f64::consts::LN_2).abs() < TIGHT);
    }

    #[test]
    fn entropy_inequality_holds_across_seeded_sweep() {
        let mut worst = f64::INFINITY;
        for trial in 0..1000 {
            let mut rng = sample::trial_rng(1001, trial);
            let j = sample::random_joint(
                &mut rng,
                Alphabet::new(5).unwrap(),
                Alphabet::new(7).unwrap(),
            );
            worst = worst.min(check_entropy_inequality(&j));
        }
        assert!(worst >= -LAW_TOL, "worst margin {worst}");
    }

    #[test]
    fn chain_rule_residual_stays_below_tolerance_across_seeded_sweep() {
        let mut worst: f64 = 0.0;
        for trial in 0..1000 {
            let mut rng = sample::trial_rng(1002, trial);
            let j = sample::random_joint(
                &mut rng,
                Alphabet::new(5).unwrap(),
                Alphabet::new(7).unwrap(),
            );
            worst = worst.max(check_chain_rule(&j));
        }
        assert!(worst <= LAW_TOL, "worst residual {worst}");
    }

    #[test]
    fn mutual_information_never_exceeds_either_marginal_entropy() {
        for trial in 0..1000 {
            let mut rng = sample::trial_rng(1003, trial);
            let j = sample::random_joint(
                &mut rng,
                Alphabet::new(4).unwrap(),
                Alphabet::new(3).unwrap(),
            );
            let i = mutual_information(&j);
            let cap = entropy(&j.row_marginal()).min(entropy(&j.col_marginal()));
            assert!(
                i <= cap + LAW_TOL,
                "I {i} exceeds min marginal entropy {cap}"
            );
        }
    }

    #[test]
    fn compression_gain_is_zero_under_independence() {
        let d = Dist::new(Alphabet::new(3).unwrap(), vec![0.3, 0.3, 0.4]).unwrap();
        let j = Joint::from_independent(&d, &coin());
        assert!(compression_gain(&j) < LAW_TOL);
    }

    #[test]
    fn compression_gain_on_bijection_equals_column_entropy() {
        let a = Alphabet::new(4).unwrap();
        let ch = Channel::deterministic(a.clone(), a.clone(), &[3, 2, 1, 0]).unwrap();
        let marginal = Dist::new(a.clone(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let j = Joint::from_marginal_channel(&marginal, &ch).unwrap();
        let h_col = entropy(&j.col_marginal());
        assert!((compression_gain(&j) - h_col).abs() < TIGHT);
    }

    #[test]
    fn compression_gain_equals_mutual_information() {
        for trial in 0..200 {
            let mut rng = sample::trial_rng(1004, trial);
            let j = sample::random_joint(
                &mut rng,
                Alphabet::new(3).unwrap(),
                Alphabet::new(5).unwrap(),
            );
            assert!((compression_gain(&j) - mutual_information(&j)).abs() < LAW_TOL);
        }
    }

    #[test]
    fn conditional_entropy_is_permutation_invariant() {
        let mut rng = sample::trial_rng(1005, 0);
        let a3 = Alphabet::new(3).unwrap();
        let j = sample::random_joint(&mut rng, a3.clone(), a3.clone());
        // Apply the permutation (0 1 2) -> (2 0 1) to rows and columns together.
        let perm = [2usize, 0, 1];
        let mut permuted = vec![vec![0.0; 3]; 3];
        for i in 0..3 {
            for k in 0..3 {
                permuted[perm[i]][perm[k]] = j.get(i, k);
            }
        }
        let pj = Joint::new(a3.clone(), a3, permuted).unwrap();
        let before = conditional_entropy(&j, Given::Row);
        let after = conditional_entropy(&pj, Given::Row);
        assert!((before - after).abs() < TIGHT);
    }

    #[test]
    fn dist_rejects_negative_entries() {
        let r = Dist::new(Alphabet::new(2).unwrap(), vec![1.2, -0.2]);
        assert!(matches!(r, Err(Error::InvalidDist(_))));
    }

    #[test]
    fn dist_rejects_bad_normalization() {
        let r = Dist::new(Alphabet::new(2).unwrap(), vec![0.6, 0.6]);
        assert!(matches!(r, Err(Error::InvalidDist(_))));
    }

    #[test]
    fn dist_rejects_non_finite_entries() {
        let r = Dist::new(Alphabet::new(2).unwrap(), vec![f64::NAN, 1.0]);
        assert!(matches!(r, Err(Error::InvalidDist(_))));
    }

    #[test]
    fn joint_rejects_bad_total_mass() {
        let a = Alphabet::new(2).unwrap();
        let r = Joint::new(a.clone(), a, vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert!(matches!(r, Err(Error::InvalidJoint(_))));
    }

    #[test]
    fn channel_rejects_unnormalized_rows() {
        let a = Alphabet::new(2).unwrap();
        let r = Channel::new(a.clone(), a, vec![vec![0.7, 0.7], vec![0.5, 0.5]]);
        assert!(matches!(r, Err(Error::InvalidChannel(_))));
    }

    #[test]
    fn alphabet_rejects_zero_size_and_duplicate_labels() {
        assert!(matches!(Alphabet::new(0), Err(Error::InvalidAlphabet(_))));
        let dup = Alphabet::with_labels(vec!["a".into(), "a".into()]);
        assert!(matches!(dup, Err(Error::InvalidAlphabet(_))));
    }

    #[test]
    fn normalized_rescales_weights_and_rejects_zero_total() {
        let a = Alphabet::new(3).unwrap();
        let d = Dist::normalized(a.clone(), vec![2.0, 1.0, 1.0]).unwrap();
        assert!((d.get(0) - 0.5).abs() < TIGHT);
        assert!(matches!(
            Dist::normalized(a, vec![0.0, 0.0, 0.0]),
            Err(Error::InvalidDist(_))
        ));
    }
}
