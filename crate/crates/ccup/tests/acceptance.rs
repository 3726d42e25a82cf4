//! Acceptance gate: every release criterion as one test, one pass/fail
//! line each. Tolerances are stated inline; seeds and family shapes are
//! frozen so reruns are bit-reproducible.

use std::path::Path;
use std::time::Instant;

use rand::Rng;

use ccup::harness::{comparable_body, run_experiment, run_sbs_comparison, ExperimentConfig};
use ccup::hierarchy::{level_update, run_h2, Composer, HierarchySpec, LevelSpec, LevelState};
use ccup::prob::{
    check_chain_rule, check_entropy_inequality, kl_divergence, Alphabet, Channel, Dist,
};
use ccup::sample::{random_channel, random_dist, random_joint, trial_rng};
use ccup::temporal::{
    context_surprisal, proximal_update, run_h1, schema_fixed_point, TemporalConfig,
};
use ccup::variational::{
    entropy_bound_check, free_energy, minimize_free_energy, Convention, GenerativeModel, Posterior,
};
use ccup::Error;

const SEED: u64 = 42;

fn a(n: usize) -> Alphabet {
    Alphabet::new(n).unwrap()
}

fn config(text: &str) -> ExperimentConfig {
    let config: ExperimentConfig = toml::from_str(text).unwrap();
    config.validate().unwrap();
    config
}

/// Every point of the `k`-simplex on a grid with `n` steps per edge,
/// renormalized to machine precision.
fn simplex_grid(alphabet: &Alphabet, n: usize) -> Vec<Dist> {
    let k = alphabet.size();
    let mut out = Vec::new();
    let mut stack = vec![(Vec::<usize>::new(), n)];
    while let Some((prefix, left)) = stack.pop() {
        if prefix.len() == k - 1 {
            let mut counts = prefix;
            counts.push(left);
            let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
            out.push(Dist::normalized(alphabet.clone(), weights).unwrap());
            continue;
        }
        for c in 0..=left {
            let mut next = prefix.clone();
            next.push(c);
            stack.push((next, left - c));
        }
    }
    out
}

#[test]
fn entropy_laws_hold_on_ten_thousand_joints_up_to_seven_by_seven() {
    let start = Instant::now();
    let mut min_margin = f64::INFINITY;
    let mut max_residual = f64::NEG_INFINITY;
    for trial in 0..10_000u64 {
        let mut rng = trial_rng(SEED, trial);
        let rows = rng.gen_range(2..=7usize);
        let cols = rng.gen_range(2..=7usize);
        let joint = random_joint(&mut rng, a(rows), a(cols));
        min_margin = min_margin.min(check_entropy_inequality(&joint));
        max_residual = max_residual.max(check_chain_rule(&joint));
    }
    let elapsed = start.elapsed();
    assert!(
        min_margin >= -1e-10,
        "conditional-entropy inequality margin fell to {min_margin}"
    );
    assert!(
        max_residual <= 1e-10,
        "chain-rule residual rose to {max_residual}"
    );
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "sweep took {elapsed:?}, budget is 10 s"
    );
}

#[test]
fn free_energy_minimizer_is_exact_bayes_at_unit_lambda() {
    let mut worst_tv = 0.0f64;
    for trial in 0..1000u64 {
        let mut rng = trial_rng(SEED, trial);
        let model = GenerativeModel::random(&mut rng, 3, 3, 3).unwrap();
        let index = rng.gen_range(0..3usize);
        let context = random_dist(&mut rng, a(3));
        let q = minimize_free_energy(&model, index, &context, 1.0).unwrap();
        let prior = model.prior().row(index);
        for psi in 0..3 {
            // Joint-table Bayes: q(z|ψ) ∝ p(z|Φ)·p(ψ|z).
            let weights: Vec<f64> = (0..3)
                .map(|z| prior.probs()[z] * model.likelihood().rows()[z][psi])
                .collect();
            let bayes = Dist::normalized(a(3), weights).unwrap();
            worst_tv = worst_tv.max(q.row(psi).total_variation(&bayes).unwrap());
        }
    }
    assert!(
        worst_tv <= 1e-10,
        "posterior diverged from joint-table Bayes by TV {worst_tv}"
    );
}

#[test]
fn closed_form_minimizers_beat_every_simplex_grid_competitor() {
    // Tilted-prior posterior against a 0.05-step grid per context row.
    let posterior_grid = simplex_grid(&a(3), 20);
    for trial in 0..100u64 {
        let mut rng = trial_rng(SEED, trial);
        let model = GenerativeModel::random(&mut rng, 3, 3, 3).unwrap();
        let index = rng.gen_range(0..3usize);
        let context = random_dist(&mut rng, a(3));
        let lambda = rng.gen_range(0.2..2.0);
        let closed = minimize_free_energy(&model, index, &context, lambda).unwrap();
        let f_closed = free_energy(&closed, &model, index, &context, lambda)
            .unwrap()
            .total;
        // The objective is separable across context rows, so the best
        // grid competitor combines each row's independent argmin.
        let mut best_rows: Vec<Vec<f64>> =
            (0..3).map(|psi| closed.row(psi).probs().to_vec()).collect();
        for psi in 0..3 {
            let mut best = f64::INFINITY;
            for candidate in &posterior_grid {
                let mut rows = best_rows.clone();
                rows[psi] = candidate.probs().to_vec();
                let q = Posterior::new(Channel::new(a(3), a(3), rows).unwrap());
                let f = free_energy(&q, &model, index, &context, lambda)
                    .unwrap()
                    .total;
                if f < best {
                    best = f;
                    best_rows[psi] = candidate.probs().to_vec();
                }
            }
        }
        let q_best = Posterior::new(Channel::new(a(3), a(3), best_rows).unwrap());
        let f_grid = free_energy(&q_best, &model, index, &context, lambda)
            .unwrap()
            .total;
        assert!(
            f_closed <= f_grid + 1e-9,
            "trial {trial}: closed form {f_closed} lost to grid {f_grid}"
        );
    }

    // Streaming update against a 0.02-step grid on the 3-simplex.
    let grid = simplex_grid(&a(3), 50);
    for trial in 0..100u64 {
        let mut rng = trial_rng(SEED, trial);
        let likelihood = random_channel(&mut rng, a(3), a(4));
        let current = random_dist(&mut rng, a(3));
        let context = random_dist(&mut rng, a(4));
        let lambda = rng.gen_range(0.2..2.0);
        let cfg = TemporalConfig::new(lambda, 1e-9, 1, Convention::ExpectedRow).unwrap();
        let updated = proximal_update(&current, &context, &likelihood, &cfg).unwrap();
        let objective = |w: &Dist| {
            context_surprisal(w, &context, &likelihood, Convention::ExpectedRow).unwrap()
                + lambda * kl_divergence(w, &current).unwrap()
        };
        let f_closed = objective(&updated);
        let f_grid = grid.iter().map(&objective).fold(f64::INFINITY, f64::min);
        assert!(
            f_closed <= f_grid + 1e-9,
            "trial {trial}: streaming update {f_closed} lost to grid {f_grid}"
        );
    }

    // Level update with a parent pull against the same 0.02-step grid.
    for trial in 0..100u64 {
        let mut rng = trial_rng(SEED, trial);
        let likelihood = random_channel(&mut rng, a(3), a(4));
        let content = random_dist(&mut rng, a(3));
        let parent = random_dist(&mut rng, a(3));
        let observed = random_dist(&mut rng, a(4));
        let lambda = rng.gen_range(0.2..2.0);
        let mu = rng.gen_range(0.2..2.0);
        let state = LevelState {
            content: content.clone(),
            aggregated_context: observed.clone(),
        };
        let updated = level_update(&state, Some(&parent), &likelihood, lambda, mu).unwrap();
        let objective = |w: &Dist| {
            context_surprisal(w, &observed, &likelihood, Convention::ExpectedRow).unwrap()
                + lambda * kl_divergence(w, &content).unwrap()
                + mu * kl_divergence(w, &parent).unwrap()
        };
        let f_closed = objective(&updated);
        let f_grid = grid.iter().map(&objective).fold(f64::INFINITY, f64::min);
        assert!(
            f_closed <= f_grid + 1e-9,
            "trial {trial}: level update {f_closed} lost to grid {f_grid}"
        );
    }
}

#[test]
fn posterior_entropy_bound_holds_across_a_thousand_seeds() {
    let mut min_margin = f64::INFINITY;
    let mut inapplicable = Vec::new();
    for trial in 0..1000u64 {
        let mut rng = trial_rng(SEED, trial);
        let model = GenerativeModel::random(&mut rng, 3, 3, 3).unwrap();
        let index = rng.gen_range(0..3usize);
        let context = random_dist(&mut rng, a(3));
        let q = minimize_free_energy(&model, index, &context, 1.0).unwrap();
        match entropy_bound_check(&q, &model, index, &context, 1.0) {
            Ok(margin) => min_margin = min_margin.min(margin),
            Err(Error::BoundInapplicable) => inapplicable.push(trial),
            Err(e) => panic!("unexpected failure on trial {trial}: {e}"),
        }
    }
    assert!(
        min_margin >= -1e-10,
        "entropy bound margin fell to {min_margin}"
    );
    assert!(
        inapplicable.is_empty(),
        "inapplicable instances (expected none): {inapplicable:?}"
    );
}

#[test]
fn perception_cycles_contract_with_monotone_entropy_descent() {
    let mut conforming = 0usize;
    let mut nonconforming = Vec::new();
    let mut descent_violations = 0usize;
    for trial in 0..100u64 {
        let mut rng = trial_rng(SEED, trial);
        let model = GenerativeModel::random(&mut rng, 3, 3, 3).unwrap();
        let observed = ccup::bootstrap::sharpest_row_observation(&model);
        let initial = ccup::bootstrap::CycleState::start(&model, Dist::uniform(a(3))).unwrap();
        let (_, diag) = ccup::bootstrap::run_cycle(&initial, &model, &observed, 1.0, 1e-9, 2000)
            .unwrap_or_else(|e| panic!("trial {trial} aborted: {e}"));
        let converged = diag.converged_at.is_some();
        let gamma_ok = match ccup::bootstrap::contraction_report(&diag) {
            Ok((gamma, _)) => gamma < 1.0,
            Err(Error::InsufficientData { .. }) => true,
            Err(e) => panic!("trial {trial}: {e}"),
        };
        if converged && gamma_ok {
            conforming += 1;
        } else {
            nonconforming.push(trial);
        }
        // Entropy-descent audit after the burn-in transient.
        let burn = 3.min(diag.cond_entropy_steps.len().saturating_sub(1));
        for pair in diag.cond_entropy_steps[burn..].windows(2) {
            if pair[1] > pair[0] + 1e-9 {
                descent_violations += 1;
            }
        }
    }
    assert!(
        conforming >= 95,
        "only {conforming}/100 conformed; nonconforming trials: {nonconforming:?}"
    );
    assert_eq!(
        descent_violations, 0,
        "conditional entropy rose beyond 1e-9 after burn-in"
    );
}

#[test]
fn stationary_schedules_reach_a_verified_fixed_point() {
    let cfg = TemporalConfig::new(0.3, 1e-15, 10_000, Convention::ExpectedRow).unwrap();
    let oracle_grid = simplex_grid(&a(3), 100);
    for trial in 0..100u64 {
        let mut rng = trial_rng(SEED, trial);
        let likelihood = random_channel(&mut rng, a(3), a(4));
        let initial = random_dist(&mut rng, a(3));
        let context = random_dist(&mut rng, a(4));
        let stream = vec![context.clone(); 10_000];
        let trace = run_h1(&initial, &stream, &likelihood, &cfg).unwrap();
        let last = trace.steps.last().unwrap();
        assert!(
            last.kl_step < 1e-9,
            "trial {trial}: KL step stuck at {} after {} steps",
            last.kl_step,
            trace.steps.len()
        );
        let schema = schema_fixed_point(&trace, &likelihood, &cfg, 1e-9)
            .unwrap()
            .unwrap_or_else(|| panic!("trial {trial}: no self-consistent fixed point"));
        // Grid oracle: the stationary objective is linear in the content,
        // so its grid minimum sits at the cheapest vertex.
        let oracle = oracle_grid
            .iter()
            .min_by(|x, y| {
                let sx =
                    context_surprisal(x, &context, &likelihood, Convention::ExpectedRow).unwrap();
                let sy =
                    context_surprisal(y, &context, &likelihood, Convention::ExpectedRow).unwrap();
                sx.partial_cmp(&sy).unwrap()
            })
            .unwrap();
        let tv = schema.total_variation(oracle).unwrap();
        assert!(
            tv <= 1e-4,
            "trial {trial}: fixed point missed the grid oracle by TV {tv}"
        );
    }
}

#[test]
fn multiscale_runs_reduce_to_streaming_and_settle_across_scales() {
    // A single-level stack must be the streaming schedule, bit for bit.
    let mut rng = trial_rng(SEED, 0);
    let likelihood = random_channel(&mut rng, a(3), a(4));
    let contexts: Vec<Dist> = (0..40).map(|_| random_dist(&mut rng, a(4))).collect();
    let spec = HierarchySpec::new(vec![LevelSpec {
        alphabet: a(3),
        lambda: 0.8,
        mu: 0.0,
        gamma: 0.5,
        epsilon: 0.1,
        cadence: 1,
        aggregator: 1,
        composer: Composer::Product,
    }])
    .unwrap();
    let (traces, _) = run_h2(&spec, &contexts, std::slice::from_ref(&likelihood)).unwrap();
    let cfg = TemporalConfig::new(0.8, f64::MIN_POSITIVE, 40, Convention::ExpectedRow).unwrap();
    let streaming = run_h1(&Dist::uniform(a(3)), &contexts, &likelihood, &cfg).unwrap();
    assert_eq!(
        traces[0], streaming,
        "single-level stack diverged from the streaming schedule"
    );

    // Three stacked levels on stationary streams: the final inter-scale
    // divergence must not exceed its first post-burn-in value.
    let mut settled = 0usize;
    let mut drifted = Vec::new();
    for trial in 0..100u64 {
        let mut rng = trial_rng(SEED, trial);
        let channel = random_channel(&mut rng, a(3), a(4));
        let context = random_dist(&mut rng, a(4));
        let stream = vec![context; 128];
        let spec = HierarchySpec::new(
            [(1usize, 1usize), (2, 2), (4, 4)]
                .iter()
                .enumerate()
                .map(|(i, &(cadence, window))| LevelSpec {
                    alphabet: a(3),
                    lambda: 1.0,
                    mu: if i == 2 { 0.0 } else { 0.5 },
                    gamma: 0.5,
                    epsilon: 0.1,
                    cadence,
                    aggregator: window,
                    composer: Composer::Product,
                })
                .collect(),
        )
        .unwrap();
        let likelihoods = vec![channel.clone(), channel.clone(), channel];
        let (_, report) = run_h2(&spec, &stream, &likelihoods).unwrap();
        let reference = &report.ticks[3];
        let last = report.ticks.last().unwrap();
        if (0..2).all(|p| last.inter_scale_kl[p] <= reference.inter_scale_kl[p] + 1e-12) {
            settled += 1;
        } else {
            drifted.push(trial);
        }
    }
    assert!(
        settled >= 95,
        "only {settled}/100 settled; drifting trials: {drifted:?}"
    );
}

#[test]
fn two_view_composition_sharpens_on_the_entire_family() {
    let trace = run_experiment(&config(
        "kind = \"hierarchy\"\nseed = 1\ntrials = 1\n[model_dims]\ncontent = 3\nlatent = 3\ncontext = 3\n",
    ))
    .unwrap();
    let stat = |name: &str| {
        trace
            .stats
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.clone())
            .unwrap()
    };
    assert_eq!(stat("instances"), "57", "the family must be exhaustive");
    assert_eq!(
        stat("alignment_pass"),
        "57",
        "every instance must strictly reduce predictive entropy"
    );
    assert!(trace.pass());
}

#[test]
fn structured_priors_win_on_the_favorable_stratum_and_match_the_fixture() {
    let trace = run_sbs_comparison(&config(
        "kind = \"sbs\"\nseed = 42\ntrials = 500\n[model_dims]\ncontent = 3\nlatent = 3\ncontext = 5\n",
    ))
    .unwrap();
    let stat = |name: &str| {
        trace
            .stats
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.clone())
            .unwrap()
    };
    let gap: f64 = stat("favorable_mean_gap").parse().unwrap();
    assert!(
        gap <= 0.0,
        "structured arms lost on the favorable stratum: mean gap {gap}"
    );
    assert!(trace.pass());

    let fixture_path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sbs_500_42.trace");
    let fixture = std::fs::read_to_string(&fixture_path)
        .unwrap_or_else(|e| panic!("missing regression fixture {}: {e}", fixture_path.display()));
    assert_eq!(
        comparable_body(&trace.render()),
        comparable_body(&fixture),
        "paired sweep drifted from the committed regression fixture"
    );
}

#[test]
fn every_experiment_is_bit_reproducible() {
    let configs = [
        "kind = \"laws\"\nseed = 42\ntrials = 50\n[model_dims]\ncontent = 3\nlatent = 3\ncontext = 3\n",
        "kind = \"sbs\"\nseed = 42\ntrials = 20\n[model_dims]\ncontent = 3\nlatent = 3\ncontext = 5\n",
        "kind = \"cycle\"\nseed = 42\ntrials = 20\n[model_dims]\ncontent = 3\nlatent = 3\ncontext = 3\n",
        "kind = \"temporal\"\nseed = 42\ntrials = 10\n[model_dims]\ncontent = 3\nlatent = 3\ncontext = 4\n[parameters]\nstream_len = 200\n",
        "kind = \"multiscale\"\nseed = 42\ntrials = 5\n[model_dims]\ncontent = 3\nlatent = 3\ncontext = 4\n[parameters]\nstream_len = 64\n",
        "kind = \"hierarchy\"\nseed = 42\ntrials = 1\n[model_dims]\ncontent = 3\nlatent = 3\ncontext = 3\n",
        "kind = \"control\"\nseed = 42\ntrials = 30\n[model_dims]\ncontent = 3\nlatent = 3\ncontext = 3\n",
    ];
    for text in configs {
        let cfg = config(text);
        let first = run_experiment(&cfg).unwrap().render();
        let second = run_experiment(&cfg).unwrap().render();
        assert_eq!(
            comparable_body(&first),
            comparable_body(&second),
            "kind `{}` is not reproducible",
            cfg.kind
        );
    }
}
