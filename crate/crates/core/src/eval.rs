//! Prequential evaluation: drive a learner over a stream, collect accuracy
//! curves and memory statistics, aggregate across seeds, and measure
//! empirical regret against the Bayes oracle on synthetic streams.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::learner::{AblationFlags, Learner, LearnerConfig, StepOutcome, Variant};
use crate::model::PROB_FLOOR;
use crate::scalar::Scalar;
use crate::stream::{
    drift_budget, gen_piecewise_stream, Example, RegimeSpec, StreamData,
};

/// Default sliding window for the accuracy curve and "final accuracy".
pub const DEFAULT_WINDOW: usize = 1000;

/// Everything recorded from one prequential run. The JSON form carries the
/// scalars; the per-step vectors feed the curve CSV instead.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetrics {
    pub variant: String,
    pub config_id: String,
    pub seed: u64,
    pub steps: usize,
    pub window: usize,
    /// Sliding-window accuracy at stream end.
    pub final_acc: f64,
    /// Mean of the per-step correctness indicators.
    pub avg_acc: f64,
    /// Fraction of retrieval attempts that produced at least one usable
    /// neighbour. Absent for the baseline.
    pub coverage: Option<f64>,
    /// Fraction of used (post-gate) neighbours sharing the current label.
    pub label_match: Option<f64>,
    /// Same fraction over all retrieved neighbours, before gating.
    pub label_match_pre_gate: Option<f64>,
    /// Accumulated prequential cross-entropy.
    pub cum_loss: f64,
    pub wall_clock_s: f64,
    #[serde(skip)]
    pub per_step_correct: Vec<bool>,
    #[serde(skip)]
    pub window_acc_curve: Vec<f64>,
}

impl RunMetrics {
    /// Write the per-step curve as CSV: `step,a_t,window_acc`.
    pub fn write_curve_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "step,correct,window_acc")?;
        for (i, (&a, &w)) in self
            .per_step_correct
            .iter()
            .zip(&self.window_acc_curve)
            .enumerate()
        {
            writeln!(out, "{i},{},{w}", u8::from(a))?;
        }
        Ok(())
    }
}

/// Seed-aggregated metrics. `runtime_factor` is filled by comparing against
/// a baseline aggregate; the baseline's own factor is 1 by definition.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateMetrics {
    pub variant: String,
    pub config_id: String,
    pub n_runs: usize,
    pub final_mean: f64,
    /// Sample standard deviation (n - 1); zero when only one run exists.
    pub final_std: f64,
    pub avg_mean: f64,
    pub avg_std: f64,
    pub wall_clock_mean_s: f64,
    /// Set when the aggregate covers a single seed (std is degenerate).
    pub single_seed: bool,
    pub runtime_factor: Option<f64>,
}

impl AggregateMetrics {
    pub fn runtime_factor_vs(&self, baseline: &AggregateMetrics) -> f64 {
        self.wall_clock_mean_s / baseline.wall_clock_mean_s
    }
}

/// Cumulative loss of the learner against the per-regime Bayes oracle.
#[derive(Debug, Clone, Serialize)]
pub struct RegretRecord {
    pub steps: usize,
    pub learner_cum_ce: f64,
    pub oracle_cum_ce: f64,
    /// `learner_cum_ce - oracle_cum_ce`.
    pub ce_regret: f64,
    pub learner_errors: u64,
    pub oracle_errors: u64,
    /// `learner_errors - oracle_errors`.
    pub zero_one_regret: i64,
    /// Drift budget of the regime list that produced the stream.
    pub drift_budget: f64,
}

fn run_with_observer<S, F>(
    cfg: &LearnerConfig<S>,
    data: &StreamData<S>,
    window: usize,
    mut observe: F,
) -> Result<(RunMetrics, Learner<S>)>
where
    S: Scalar,
    F: FnMut(usize, &Example<S>, &StepOutcome) -> Result<()>,
{
    if data.is_empty() {
        return Err(Error::Data("empty stream".into()));
    }
    if window == 0 {
        return Err(Error::Config("window must be positive".into()));
    }
    let mut learner = Learner::new(cfg.clone(), data.dim, data.classes)?;
    let n = data.len();
    let mut correct = Vec::with_capacity(n);
    let mut curve = Vec::with_capacity(n);
    let mut prefix = 0u64;
    let mut window_hits = 0u64;
    let mut cum_loss = 0.0;
    let mut attempts = 0u64;
    let mut covered = 0u64;
    let mut sum_retrieved = 0u64;
    let mut sum_used = 0u64;
    let mut matches_retrieved = 0u64;
    let mut matches_used = 0u64;

    let start = Instant::now();
    for (i, ex) in data.examples.iter().enumerate() {
        let out = learner.step(ex)?;
        observe(i, ex, &out)?;
        correct.push(out.correct);
        prefix += u64::from(out.correct);
        window_hits += u64::from(out.correct);
        if i >= window {
            window_hits -= u64::from(correct[i - window]);
        }
        let span = (i + 1).min(window) as f64;
        curve.push(window_hits as f64 / span);
        cum_loss += out.loss;
        if out.retrieval_attempted {
            attempts += 1;
            if out.n_after_gates >= 1 {
                covered += 1;
            }
        }
        sum_retrieved += out.n_retrieved as u64;
        sum_used += out.n_after_gates as u64;
        matches_retrieved += out.label_matches_retrieved as u64;
        matches_used += out.label_matches_used as u64;
    }
    let wall_clock_s = start.elapsed().as_secs_f64();

    let is_memory_variant = cfg.variant != Variant::Baseline;
    let metrics = RunMetrics {
        variant: cfg.variant.to_string(),
        config_id: cfg.fingerprint(),
        seed: cfg.seed,
        steps: n,
        window,
        final_acc: *curve.last().expect("nonempty stream"),
        avg_acc: prefix as f64 / n as f64,
        coverage: (is_memory_variant && attempts > 0).then(|| covered as f64 / attempts as f64),
        label_match: (is_memory_variant && sum_used > 0)
            .then(|| matches_used as f64 / sum_used as f64),
        label_match_pre_gate: (is_memory_variant && sum_retrieved > 0)
            .then(|| matches_retrieved as f64 / sum_retrieved as f64),
        cum_loss,
        wall_clock_s,
        per_step_correct: correct,
        window_acc_curve: curve,
    };
    Ok((metrics, learner))
}

/// Run one learner over a materialised stream under the prequential
/// (test-then-train) protocol.
pub fn prequential_run<S: Scalar>(
    cfg: &LearnerConfig<S>,
    data: &StreamData<S>,
    window: usize,
) -> Result<RunMetrics> {
    Ok(prequential_run_full(cfg, data, window)?.0)
}

/// Like [`prequential_run`], additionally returning the finished learner
/// (for parameter checkpoints and buffer snapshots).
pub fn prequential_run_full<S: Scalar>(
    cfg: &LearnerConfig<S>,
    data: &StreamData<S>,
    window: usize,
) -> Result<(RunMetrics, Learner<S>)> {
    run_with_observer(cfg, data, window, |_, _, _| Ok(()))
}

/// Like [`prequential_run`], but repeats the loop and keeps the median wall
/// clock. Metrics are identical across repeats (runs are deterministic), so
/// the last run's metrics are returned with the median timing.
pub fn timed_prequential_run<S: Scalar>(
    cfg: &LearnerConfig<S>,
    data: &StreamData<S>,
    window: usize,
    repeats: usize,
) -> Result<RunMetrics> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be positive".into()));
    }
    let mut times = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats {
        let metrics = prequential_run(cfg, data, window)?;
        times.push(metrics.wall_clock_s);
        last = Some(metrics);
    }
    times.sort_by(f64::total_cmp);
    let mut metrics = last.expect("repeats >= 1");
    metrics.wall_clock_s = times[times.len() / 2];
    Ok(metrics)
}

/// Aggregate runs that share a configuration (up to seed).
pub fn aggregate(runs: &[RunMetrics]) -> Result<AggregateMetrics> {
    let first = runs
        .first()
        .ok_or_else(|| Error::Config("aggregate needs at least one run".into()))?;
    if runs
        .iter()
        .any(|r| r.config_id != first.config_id || r.variant != first.variant)
    {
        return Err(Error::Config(
            "aggregate over mixed configurations".into(),
        ));
    }
    let n = runs.len() as f64;
    // Sum in a canonical order so aggregation is exactly permutation
    // invariant in seed order.
    let sorted_sum = |values: &mut Vec<f64>| -> f64 {
        values.sort_by(f64::total_cmp);
        values.iter().sum()
    };
    let mean = |f: fn(&RunMetrics) -> f64| sorted_sum(&mut runs.iter().map(f).collect()) / n;
    let std = |f: fn(&RunMetrics) -> f64, m: f64| {
        if runs.len() < 2 {
            0.0
        } else {
            let mut sq: Vec<f64> = runs.iter().map(|r| (f(r) - m).powi(2)).collect();
            (sorted_sum(&mut sq) / (n - 1.0)).sqrt()
        }
    };
    let final_mean = mean(|r| r.final_acc);
    let avg_mean = mean(|r| r.avg_acc);
    Ok(AggregateMetrics {
        variant: first.variant.clone(),
        config_id: first.config_id.clone(),
        n_runs: runs.len(),
        final_mean,
        final_std: std(|r| r.final_acc, final_mean),
        avg_mean,
        avg_std: std(|r| r.avg_acc, avg_mean),
        wall_clock_mean_s: mean(|r| r.wall_clock_s),
        single_seed: runs.len() == 1,
        runtime_factor: None,
    })
}

/// Drive a learner over a synthetic stream while scoring the active regime's
/// Bayes classifier on the same examples.
pub fn regret_run<S: Scalar>(
    cfg: &LearnerConfig<S>,
    regimes: &[RegimeSpec<S>],
    stream_seed: u64,
    window: usize,
    drift_samples: usize,
    drift_seed: u64,
) -> Result<(RunMetrics, RegretRecord)> {
    let (metrics, record, _) =
        regret_run_full(cfg, regimes, stream_seed, window, drift_samples, drift_seed)?;
    Ok((metrics, record))
}

/// [`regret_run`] variant that also returns the finished learner.
pub fn regret_run_full<S: Scalar>(
    cfg: &LearnerConfig<S>,
    regimes: &[RegimeSpec<S>],
    stream_seed: u64,
    window: usize,
    drift_samples: usize,
    drift_seed: u64,
) -> Result<(RunMetrics, RegretRecord, Learner<S>)> {
    let stream = gen_piecewise_stream(regimes.to_vec(), stream_seed)?;
    let schedule = stream.schedule();
    let data = stream.collect_data()?;

    let mut oracle_cum_ce = 0.0;
    let mut oracle_errors = 0u64;
    let (metrics, learner) = run_with_observer(cfg, &data, window, |i, ex, _| {
        let regime_idx = schedule
            .regime_index_at(i as u64)
            .ok_or_else(|| Error::Data("step outside regime schedule".into()))?;
        let regime = &regimes[regime_idx];
        let posterior = regime.bayes_posterior(&ex.features)?;
        let mut best = 0;
        for (c, &p) in posterior.iter().enumerate().skip(1) {
            if p > posterior[best] {
                best = c;
            }
        }
        if best != ex.label {
            oracle_errors += 1;
        }
        oracle_cum_ce += -posterior[ex.label].max(PROB_FLOOR).ln();
        Ok(())
    })?;

    let learner_errors = metrics
        .per_step_correct
        .iter()
        .filter(|&&c| !c)
        .count() as u64;
    let record = RegretRecord {
        steps: metrics.steps,
        learner_cum_ce: metrics.cum_loss,
        oracle_cum_ce,
        ce_regret: metrics.cum_loss - oracle_cum_ce,
        learner_errors,
        oracle_errors,
        zero_one_regret: learner_errors as i64 - oracle_errors as i64,
        drift_budget: drift_budget(regimes, drift_samples, drift_seed)?,
    };
    Ok((metrics, record, learner))
}

/// The six ablation variants, in report order.
pub fn ablation_variants() -> [(&'static str, Variant, AblationFlags); 6] {
    let none = AblationFlags::default();
    [
        ("baseline", Variant::Baseline, none),
        ("ram_naive", Variant::RamNaive, none),
        ("gated_full", Variant::RamGated, none),
        (
            "gated_no_time",
            Variant::RamGated,
            AblationFlags {
                no_time: true,
                ..none
            },
        ),
        (
            "gated_no_sim",
            Variant::RamGated,
            AblationFlags {
                no_sim: true,
                ..none
            },
        ),
        (
            "gated_no_decay",
            Variant::RamGated,
            AblationFlags {
                no_decay: true,
                ..none
            },
        ),
    ]
}

/// Derive the configuration for one ablation row from shared hyperparameters.
/// `base` supplies everything except variant and flags; the naive variant
/// always retrieves without a time window.
pub fn derive_variant_config<S: Scalar>(
    base: &LearnerConfig<S>,
    variant: Variant,
    flags: AblationFlags,
    seed: u64,
) -> LearnerConfig<S> {
    let mut cfg = base.clone();
    cfg.variant = variant;
    cfg.seed = seed;
    cfg.ablation = if variant == Variant::RamGated {
        flags
    } else {
        AblationFlags::default()
    };
    cfg.horizon = match variant {
        Variant::RamGated => base.horizon.or(Some(2000)),
        _ => None,
    };
    cfg
}

/// Run the six ablation variants under a single seed.
pub fn ablation_suite<S: Scalar>(
    base: &LearnerConfig<S>,
    data: &StreamData<S>,
    seed: u64,
    window: usize,
) -> Result<Vec<(String, RunMetrics)>> {
    ablation_variants()
        .into_iter()
        .map(|(name, variant, flags)| {
            let cfg = derive_variant_config(base, variant, flags, seed);
            Ok((name.to_string(), prequential_run(&cfg, data, window)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{ClassModel, GaussComponent};
    use crate::testutil::{two_class_regime, two_class_regime_2d};
    use approx::assert_relative_eq;

    fn stream(n: usize, sep: f64, seed: u64) -> StreamData<f64> {
        gen_piecewise_stream(vec![two_class_regime("A", n, sep)], seed)
            .unwrap()
            .collect_data()
            .unwrap()
    }

    #[test]
    fn avg_acc_matches_recount() {
        let data = stream(400, 3.0, 1);
        let cfg = LearnerConfig::<f64>::new(Variant::RamNaive);
        let m = prequential_run(&cfg, &data, 100).unwrap();
        let recount = m.per_step_correct.iter().filter(|&&c| c).count() as f64
            / m.per_step_correct.len() as f64;
        assert_eq!(m.avg_acc, recount);
        assert_eq!(m.steps, 400);
        assert_eq!(m.window_acc_curve.len(), 400);
        assert_relative_eq!(*m.window_acc_curve.last().unwrap(), m.final_acc);
    }

    #[test]
    fn window_longer_than_stream_falls_back_to_all_steps() {
        let data = stream(50, 3.0, 2);
        let cfg = LearnerConfig::<f64>::new(Variant::Baseline);
        let m = prequential_run(&cfg, &data, 1000).unwrap();
        assert_relative_eq!(m.final_acc, m.avg_acc);
    }

    #[test]
    fn single_class_stream_learns_to_near_perfect() {
        let regime = RegimeSpec::<f64>::new(
            "onehot",
            2000,
            vec![
                ClassModel {
                    prior: 1.0,
                    components: vec![GaussComponent {
                        weight: 1.0,
                        mean: vec![0.0],
                        var: vec![1.0],
                    }],
                },
                ClassModel {
                    prior: 0.0,
                    components: vec![GaussComponent {
                        weight: 1.0,
                        mean: vec![5.0],
                        var: vec![1.0],
                    }],
                },
            ],
        )
        .unwrap();
        let data = gen_piecewise_stream(vec![regime], 3)
            .unwrap()
            .collect_data()
            .unwrap();
        let cfg = LearnerConfig::<f64>::new(Variant::Baseline);
        let m = prequential_run(&cfg, &data, 500).unwrap();
        assert!(m.final_acc >= 0.95, "final {}", m.final_acc);
        assert!(m.avg_acc >= 0.9, "avg {}", m.avg_acc);
    }

    #[test]
    fn baseline_reports_no_memory_stats() {
        let data = stream(100, 3.0, 4);
        let cfg = LearnerConfig::<f64>::new(Variant::Baseline);
        let m = prequential_run(&cfg, &data, 50).unwrap();
        assert!(m.coverage.is_none());
        assert!(m.label_match.is_none());
        assert!(m.label_match_pre_gate.is_none());
    }

    #[test]
    fn memory_variant_covers_nearly_all_steps() {
        let data = stream(500, 3.0, 5);
        let cfg = LearnerConfig::<f64>::new(Variant::RamGated);
        let m = prequential_run(&cfg, &data, 100).unwrap();
        assert!(m.coverage.unwrap() >= 0.99);
        let lm = m.label_match.unwrap();
        assert!((0.0..=1.0).contains(&lm));
        assert!(m.label_match_pre_gate.is_some());
    }

    #[test]
    fn aggregate_hand_arithmetic() {
        let data = stream(60, 3.0, 6);
        let cfg = LearnerConfig::<f64>::new(Variant::Baseline);
        let mut a = prequential_run(&cfg, &data, 30).unwrap();
        let mut b = prequential_run(&cfg, &data, 30).unwrap();
        a.final_acc = 0.8;
        b.final_acc = 0.9;
        let agg = aggregate(&[a, b]).unwrap();
        assert_relative_eq!(agg.final_mean, 0.85, epsilon = 1e-12);
        assert_relative_eq!(agg.final_std, 0.05f64 * 2.0f64.sqrt(), epsilon = 1e-12);
        assert!(!agg.single_seed);
    }

    #[test]
    fn aggregate_identical_runs_has_zero_std() {
        let data = stream(60, 3.0, 7);
        let cfg = LearnerConfig::<f64>::new(Variant::Baseline);
        let a = prequential_run(&cfg, &data, 30).unwrap();
        let b = prequential_run(&cfg, &data, 30).unwrap();
        let agg = aggregate(&[a, b]).unwrap();
        assert_eq!(agg.final_std, 0.0);
        assert_eq!(agg.avg_std, 0.0);
    }

    #[test]
    fn aggregate_is_permutation_invariant_and_rejects_mixed_configs() {
        let data = stream(60, 3.0, 8);
        let runs: Vec<RunMetrics> = [1u64, 2, 3]
            .iter()
            .map(|&s| {
                let cfg = LearnerConfig::<f64>::new(Variant::Baseline).with_seed(s);
                prequential_run(&cfg, &data, 30).unwrap()
            })
            .collect();
        let fwd = aggregate(&runs).unwrap();
        let rev: Vec<RunMetrics> = runs.iter().rev().cloned().collect();
        let bwd = aggregate(&rev).unwrap();
        assert_eq!(fwd.final_mean, bwd.final_mean);
        assert_eq!(fwd.final_std, bwd.final_std);

        let other_cfg = LearnerConfig::<f64>::new(Variant::RamNaive);
        let other = prequential_run(&other_cfg, &data, 30).unwrap();
        let mixed = [runs[0].clone(), other];
        assert!(aggregate(&mixed).is_err());

        let single = aggregate(&runs[..1]).unwrap();
        assert!(single.single_seed);
        assert_eq!(single.final_std, 0.0);
    }

    #[test]
    fn runtime_factor_against_self_is_one() {
        let data = stream(60, 3.0, 9);
        let cfg = LearnerConfig::<f64>::new(Variant::Baseline);
        let agg = aggregate(&[prequential_run(&cfg, &data, 30).unwrap()]).unwrap();
        assert_relative_eq!(agg.runtime_factor_vs(&agg), 1.0);
    }

    #[test]
    fn regret_accounting_identity() {
        let regimes = vec![two_class_regime("A", 300, 2.0)];
        let cfg = LearnerConfig::<f64>::new(Variant::Baseline);
        let (metrics, record) = regret_run(&cfg, &regimes, 11, 100, 1000, 0).unwrap();
        assert_relative_eq!(
            record.ce_regret,
            record.learner_cum_ce - record.oracle_cum_ce
        );
        assert_relative_eq!(record.learner_cum_ce, metrics.cum_loss);
        assert_eq!(
            record.zero_one_regret,
            record.learner_errors as i64 - record.oracle_errors as i64
        );
        assert_eq!(record.drift_budget, 0.0);
    }

    #[test]
    fn oracle_error_matches_analytic_bayes_error() {
        // Two unit-variance classes separated by 2 with equal priors:
        // error = P(N(0,1) > 1) = 1 - Phi(1) = 0.158655...
        let regimes = vec![two_class_regime("A", 20_000, 2.0)];
        let cfg = LearnerConfig::<f64>::new(Variant::Baseline);
        let (_, record) = regret_run(&cfg, &regimes, 13, 1000, 100, 0).unwrap();
        let oracle_error = record.oracle_errors as f64 / record.steps as f64;
        assert!(
            (oracle_error - 0.158655).abs() < 0.02,
            "oracle error {oracle_error}"
        );
    }

    #[test]
    fn stationary_regret_rate_decreases() {
        let regimes = vec![two_class_regime_2d("A", 4000, 4.0, 1.0)];
        let cfg = LearnerConfig::<f64>::new(Variant::Baseline);
        let stream = gen_piecewise_stream(regimes.clone(), 21).unwrap();
        let data = stream.collect_data().unwrap();

        // Per-step CE regret over the two halves of the run.
        let mut learner = Learner::new(cfg, data.dim, data.classes).unwrap();
        let regime = &regimes[0];
        let mut halves = [0.0f64; 2];
        let half = data.len() / 2;
        for (i, ex) in data.examples.iter().enumerate() {
            let out = learner.step(ex).unwrap();
            let posterior = regime.bayes_posterior(&ex.features).unwrap();
            let oracle_ce = -posterior[ex.label].max(PROB_FLOOR).ln();
            halves[usize::from(i >= half)] += out.loss - oracle_ce;
        }
        assert!(
            halves[1] < halves[0],
            "regret rate grew: {halves:?}"
        );
    }

    #[test]
    fn ablation_suite_shape() {
        let data = stream(200, 3.0, 14);
        let base = LearnerConfig::<f64>::new(Variant::RamGated);
        let rows = ablation_suite(&base, &data, 42, 100).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].0, "baseline");
        assert!(rows[0].1.coverage.is_none());
        for (name, metrics) in &rows[1..] {
            assert!(
                metrics.coverage.unwrap() > 0.99,
                "{name} coverage {:?}",
                metrics.coverage
            );
        }
        // no_time must drop the horizon in the derived config.
        let (_, _, flags) = ablation_variants()[3];
        let cfg = derive_variant_config(&base, Variant::RamGated, flags, 42);
        assert!(crate::learner::apply_ablation(&cfg).unwrap().horizon.is_none());
    }

    #[test]
    fn timed_run_keeps_metrics_and_median_time() {
        let data = stream(100, 3.0, 15);
        let cfg = LearnerConfig::<f64>::new(Variant::Baseline);
        let plain = prequential_run(&cfg, &data, 50).unwrap();
        let timed = timed_prequential_run(&cfg, &data, 50, 3).unwrap();
        assert_eq!(plain.avg_acc, timed.avg_acc);
        assert!(timed.wall_clock_s > 0.0);
        assert!(timed_prequential_run(&cfg, &data, 50, 0).is_err());
    }

    #[test]
    fn empty_stream_is_an_error() {
        let data = StreamData::<f64>::new(1, 2, vec![]).unwrap();
        let cfg = LearnerConfig::<f64>::new(Variant::Baseline);
        assert!(prequential_run(&cfg, &data, 10).is_err());
    }
}
