//! Trial orchestration: in-domain splits, budget sweeps and cross-domain
//! calibration matrices.
//!
//! Every trial draws its split from a seed derived from the master seed,
//! the trial index, the position of alpha in the configured list and the
//! (calibration, test) domain pair, so results do not depend on scheduling.
//! The harness works in `f64`.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::answer::{score_pool, ScoreKind};
use crate::conformal::{calibrate, nonconformity, prediction_set, PredictionSet};
use crate::error::{Error, Result};
use crate::li::{LayerSelection, DEFAULT_EPS};
use crate::metrics::{self, mean, sample_std, DEFAULT_MIN_BIN};
use crate::seed::{combine, hash_label, CounterRng};
use crate::trace::{admissible_units, build_pool};
use crate::{AnswerScoreTable, ExtendedScore, MetricReport, QuestionTrace, ScoreWeights};

/// Smallest data set a split accepts.
pub const MIN_QUESTIONS: usize = 4;

/// Domain label used when a data set mixes domains.
pub const MIXED_DOMAIN: &str = "*";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha_list: Vec<f64>,
    pub cal_ratio: f64,
    pub n_trials: usize,
    pub score_kind: ScoreKind,
    /// Second score kind of cross-domain difference matrices.
    pub comparator: ScoreKind,
    pub weights: ScoreWeights,
    pub layer_selection: LayerSelection,
    pub eps: f64,
    pub ssm_min_bin: usize,
    pub master_seed: u64,
    /// Enables the Fano bound when set.
    pub label_space_size: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alpha_list: vec![0.1, 0.2, 0.3],
            cal_ratio: 0.5,
            n_trials: 100,
            score_kind: ScoreKind::Layerwise,
            comparator: ScoreKind::FrequencyOnly,
            weights: ScoreWeights::default(),
            layer_selection: LayerSelection::All,
            eps: DEFAULT_EPS,
            ssm_min_bin: DEFAULT_MIN_BIN,
            master_seed: 0,
            label_space_size: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_list.is_empty() {
            return Err(Error::InvalidConfig("alpha_list is empty".into()));
        }
        for &a in &self.alpha_list {
            crate::conformal::check_alpha(a)?;
        }
        if !(self.cal_ratio > 0.0 && self.cal_ratio < 1.0) {
            return Err(Error::InvalidConfig(format!("cal_ratio must lie in (0, 1), got {}", self.cal_ratio)));
        }
        if self.n_trials == 0 {
            return Err(Error::InvalidConfig("n_trials must be positive".into()));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(Error::InvalidConfig(format!("eps must be positive, got {}", self.eps)));
        }
        if self.ssm_min_bin == 0 {
            return Err(Error::InvalidConfig("ssm_min_bin must be positive".into()));
        }
        Ok(())
    }

    fn alpha_index(&self, alpha: f64) -> u64 {
        self.alpha_list.iter().position(|&a| a == alpha).unwrap_or(0) as u64
    }
}

/// Seed of one trial.
pub fn trial_seed(master_seed: u64, trial: usize, alpha_index: u64, cal_domain: &str, test_domain: &str) -> u64 {
    combine(&[
        master_seed,
        trial as u64,
        alpha_index,
        combine(&[hash_label(cal_domain), hash_label(test_domain)]),
    ])
}

/// One question reduced to what calibration and prediction need.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredQuestion {
    pub question_id: String,
    pub admissible: BTreeSet<String>,
    pub table: AnswerScoreTable,
}

impl ScoredQuestion {
    pub fn nonconformity(&self) -> Result<ExtendedScore> {
        nonconformity(&self.table, &self.admissible)
    }
}

/// Scores every question under one score kind.
pub fn score_questions(data: &[QuestionTrace], cfg: &ExperimentConfig, kind: ScoreKind) -> Result<Vec<ScoredQuestion>> {
    data.par_iter()
        .map(|q| {
            let pool = build_pool(q);
            let table = score_pool(q, &pool, &cfg.layer_selection, &cfg.weights, kind, cfg.eps)?;
            Ok(ScoredQuestion {
                question_id: q.question_id.clone(),
                admissible: admissible_units(&pool),
                table,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub score_kind: ScoreKind,
    pub alpha: f64,
    pub q_hat: ExtendedScore,
    pub risk_floor: f64,
    /// Requested alpha is below the calibration risk floor.
    pub alpha_below_floor: bool,
    pub n_cal: usize,
    pub n_cal_empty: usize,
    /// Share of test questions without an admissible unit.
    pub test_empty_fraction: f64,
    pub metrics: MetricReport,
    pub trial_seed: u64,
    pub cal_domain: String,
    pub test_domain: String,
}

fn calibrate_and_test(
    cal: &[&ScoredQuestion],
    test: &[&ScoredQuestion],
    cfg: &ExperimentConfig,
    kind: ScoreKind,
    alpha: f64,
    seed: u64,
    domains: (&str, &str),
) -> Result<TrialResult> {
    let scores = cal.iter().map(|q| q.nonconformity()).collect::<Result<Vec<_>>>()?;
    let cal_result = calibrate(&scores, alpha)?;
    let sets: Vec<PredictionSet> = test
        .iter()
        .map(|q| {
            let mut s = prediction_set(&q.question_id, &q.table, cal_result.q_hat);
            s.label(&q.admissible);
            s
        })
        .collect();
    let fano = cfg.label_space_size.map(|y| (alpha, cal.len(), y));
    let report = metrics::evaluate(&sets, cfg.ssm_min_bin, fano)?;
    let test_empty = test.iter().filter(|q| q.admissible.is_empty()).count();
    Ok(TrialResult {
        score_kind: kind,
        alpha,
        q_hat: cal_result.q_hat,
        risk_floor: cal_result.risk_floor,
        alpha_below_floor: cal_result.alpha_below_floor(),
        n_cal: cal_result.n_cal,
        n_cal_empty: cal_result.n_empty,
        test_empty_fraction: test_empty as f64 / test.len() as f64,
        metrics: report,
        trial_seed: seed,
        cal_domain: domains.0.to_string(),
        test_domain: domains.1.to_string(),
    })
}

fn split_sizes(n: usize, cal_ratio: f64) -> Result<(usize, usize)> {
    let n_cal = (n as f64 * cal_ratio).round() as usize;
    let n_test = n.saturating_sub(n_cal);
    if n < MIN_QUESTIONS || n_cal == 0 || n_test == 0 {
        return Err(Error::DegenerateSplit { n_cal, n_test });
    }
    Ok((n_cal, n_test))
}

/// Shuffles with `trial_seed`, splits at `cal_ratio`, calibrates and
/// evaluates on pre-scored questions.
pub fn run_trial_scored(
    scored: &[ScoredQuestion],
    cfg: &ExperimentConfig,
    kind: ScoreKind,
    trial_seed: u64,
    alpha: f64,
    domain: &str,
) -> Result<TrialResult> {
    let (n_cal, _) = split_sizes(scored.len(), cfg.cal_ratio)?;
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.shuffle(&mut CounterRng::new(trial_seed));
    let cal: Vec<&ScoredQuestion> = order[..n_cal].iter().map(|&i| &scored[i]).collect();
    let test: Vec<&ScoredQuestion> = order[n_cal..].iter().map(|&i| &scored[i]).collect();
    calibrate_and_test(&cal, &test, cfg, kind, alpha, trial_seed, (domain, domain))
}

/// One calibration/test split of `data` under `cfg.score_kind`.
pub fn run_trial(data: &[QuestionTrace], cfg: &ExperimentConfig, trial_seed: u64, alpha: f64) -> Result<TrialResult> {
    cfg.validate()?;
    let scored = score_questions(data, cfg, cfg.score_kind)?;
    run_trial_scored(&scored, cfg, cfg.score_kind, trial_seed, alpha, &domain_label(data))
}

/// The shared domain of `data`, or [`MIXED_DOMAIN`].
pub fn domain_label(data: &[QuestionTrace]) -> String {
    match data.first() {
        Some(first) if data.iter().all(|q| q.domain == first.domain) => first.domain.clone(),
        _ => MIXED_DOMAIN.to_string(),
    }
}

/// Mean and sample standard deviation of one metric across trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        Self {
            mean: mean(values),
            std: sample_std(values),
        }
    }

    /// Monte Carlo standard error of the mean.
    pub fn se(&self, n: usize) -> f64 {
        self.std / (n as f64).sqrt()
    }
}

/// Aggregate of one (score kind, alpha, domain pair) group of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub score_kind: ScoreKind,
    pub alpha: f64,
    pub cal_domain: String,
    pub test_domain: String,
    pub n_trials: usize,
    pub emr: Summary,
    pub apss: Summary,
    pub ssm: Summary,
    pub risk_floor: Summary,
    pub fano_bound: Option<Summary>,
    pub alpha_below_floor_trials: usize,
}

impl Aggregate {
    pub fn from_trials(trials: &[TrialResult]) -> Self {
        let first = &trials[0];
        let collect = |f: &dyn Fn(&TrialResult) -> f64| trials.iter().map(f).collect::<Vec<_>>();
        let fano: Option<Vec<f64>> = trials.iter().map(|t| t.metrics.fano_bound).collect();
        Self {
            score_kind: first.score_kind,
            alpha: first.alpha,
            cal_domain: first.cal_domain.clone(),
            test_domain: first.test_domain.clone(),
            n_trials: trials.len(),
            emr: Summary::of(&collect(&|t| t.metrics.emr)),
            apss: Summary::of(&collect(&|t| t.metrics.apss)),
            ssm: Summary::of(&collect(&|t| t.metrics.ssm)),
            risk_floor: Summary::of(&collect(&|t| t.risk_floor)),
            fano_bound: fano.map(|v| Summary::of(&v)),
            alpha_below_floor_trials: trials.iter().filter(|t| t.alpha_below_floor).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub ssm_def: String,
    pub config: ExperimentConfig,
    pub rows: Vec<Aggregate>,
    pub trials: Vec<TrialResult>,
}

fn run_trials(scored: &[ScoredQuestion], cfg: &ExperimentConfig, kind: ScoreKind, alpha: f64, domain: &str) -> Result<Vec<TrialResult>> {
    let alpha_index = cfg.alpha_index(alpha);
    (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(cfg.master_seed, t, alpha_index, domain, domain);
            run_trial_scored(scored, cfg, kind, seed, alpha, domain)
        })
        .collect()
}

/// Runs `n_trials` splits per alpha for each score kind in `kinds`.
pub fn sweep_kinds(data: &[QuestionTrace], cfg: &ExperimentConfig, kinds: &[ScoreKind]) -> Result<SweepResult> {
    cfg.validate()?;
    let domain = domain_label(data);
    split_sizes(data.len(), cfg.cal_ratio)?;
    let mut rows = Vec::new();
    let mut trials = Vec::new();
    for &kind in kinds {
        let scored = score_questions(data, cfg, kind)?;
        for &alpha in &cfg.alpha_list {
            let batch = run_trials(&scored, cfg, kind, alpha, &domain)?;
            rows.push(Aggregate::from_trials(&batch));
            trials.extend(batch);
        }
    }
    Ok(SweepResult {
        ssm_def: metrics::ssm_definition(cfg.ssm_min_bin),
        config: cfg.clone(),
        rows,
        trials,
    })
}

/// Budget sweep under `cfg.score_kind`.
pub fn sweep_budgets(data: &[QuestionTrace], cfg: &ExperimentConfig) -> Result<SweepResult> {
    sweep_kinds(data, cfg, &[cfg.score_kind])
}

/// Questions grouped by domain, in label order.
pub fn group_by_domain(data: &[QuestionTrace]) -> BTreeMap<String, Vec<QuestionTrace>> {
    let mut groups: BTreeMap<String, Vec<QuestionTrace>> = BTreeMap::new();
    for q in data {
        groups.entry(q.domain.clone()).or_default().push(q.clone());
    }
    groups
}

/// Square matrix indexed `[cal][test]` in domain order.
pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindMatrices {
    pub score_kind: ScoreKind,
    pub emr: Matrix,
    pub apss: Matrix,
    /// Unweighted means over off-diagonal cells.
    pub off_diagonal_emr: f64,
    pub off_diagonal_apss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossDomainResult {
    pub alpha: f64,
    pub domains: Vec<String>,
    pub primary: KindMatrices,
    pub comparator: KindMatrices,
    /// `comparator - primary`.
    pub emr_diff: Matrix,
    pub apss_diff: Matrix,
    pub ssm_def: String,
    pub config: ExperimentConfig,
    pub cells: Vec<Aggregate>,
    pub trials: Vec<TrialResult>,
}

/// Calibrates on a random `cal_ratio` share of the calibration domain and
/// tests on a random `1 - cal_ratio` share of the test domain. Diagonal
/// cells are ordinary in-domain trials.
pub fn run_cross_trial(
    cal: &[ScoredQuestion],
    test: &[ScoredQuestion],
    cfg: &ExperimentConfig,
    kind: ScoreKind,
    seed: u64,
    alpha: f64,
    domains: (&str, &str),
) -> Result<TrialResult> {
    let (n_cal, _) = split_sizes(cal.len(), cfg.cal_ratio)?;
    let (_, n_test) = split_sizes(test.len(), cfg.cal_ratio)?;
    let mut rng = CounterRng::new(seed);
    let mut cal_order: Vec<usize> = (0..cal.len()).collect();
    cal_order.shuffle(&mut rng);
    let mut test_order: Vec<usize> = (0..test.len()).collect();
    test_order.shuffle(&mut rng);
    let cal_refs: Vec<&ScoredQuestion> = cal_order[..n_cal].iter().map(|&i| &cal[i]).collect();
    let test_refs: Vec<&ScoredQuestion> = test_order[..n_test].iter().map(|&i| &test[i]).collect();
    calibrate_and_test(&cal_refs, &test_refs, cfg, kind, alpha, seed, domains)
}

fn kind_matrices(kind: ScoreKind, domains: &[String], cells: &[Aggregate]) -> KindMatrices {
    let d = domains.len();
    let mut emr = vec![vec![0.0; d]; d];
    let mut apss = vec![vec![0.0; d]; d];
    for c in cells.iter().filter(|c| c.score_kind == kind) {
        let i = domains.iter().position(|x| *x == c.cal_domain).expect("known domain");
        let j = domains.iter().position(|x| *x == c.test_domain).expect("known domain");
        emr[i][j] = c.emr.mean;
        apss[i][j] = c.apss.mean;
    }
    let off = |m: &Matrix| {
        let v: Vec<f64> = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j])
            .collect();
        mean(&v)
    };
    KindMatrices {
        score_kind: kind,
        off_diagonal_emr: off(&emr),
        off_diagonal_apss: off(&apss),
        emr,
        apss,
    }
}

fn diff(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect()
}

/// Full calibration-domain x test-domain matrix for `cfg.score_kind` and
/// `cfg.comparator`.
pub fn cross_domain_matrix(groups: &BTreeMap<String, Vec<QuestionTrace>>, cfg: &ExperimentConfig, alpha: f64) -> Result<CrossDomainResult> {
    cfg.validate()?;
    crate::conformal::check_alpha(alpha)?;
    if groups.len() < 2 {
        return Err(Error::InvalidConfig(format!("cross-domain evaluation needs at least 2 domains, found {}", groups.len())));
    }
    for (domain, qs) in groups {
        if split_sizes(qs.len(), cfg.cal_ratio).is_err() {
            return Err(Error::TooFewQuestions {
                domain: domain.clone(),
                count: qs.len(),
                required: MIN_QUESTIONS,
            });
        }
    }
    let domains: Vec<String> = groups.keys().cloned().collect();
    let alpha_index = cfg.alpha_index(alpha);
    let kinds = [cfg.score_kind, cfg.comparator];

    let mut cells = Vec::new();
    let mut trials = Vec::new();
    for kind in kinds {
        if cells.iter().any(|c: &Aggregate| c.score_kind == kind) {
            continue;
        }
        let scored: BTreeMap<&str, Vec<ScoredQuestion>> = groups
            .iter()
            .map(|(d, qs)| Ok((d.as_str(), score_questions(qs, cfg, kind)?)))
            .collect::<Result<_>>()?;
        for cal_d in &domains {
            for test_d in &domains {
                let batch: Vec<TrialResult> = (0..cfg.n_trials)
                    .into_par_iter()
                    .map(|t| {
                        let seed = trial_seed(cfg.master_seed, t, alpha_index, cal_d, test_d);
                        if cal_d == test_d {
                            run_trial_scored(&scored[cal_d.as_str()], cfg, kind, seed, alpha, cal_d)
                        } else {
                            run_cross_trial(&scored[cal_d.as_str()], &scored[test_d.as_str()], cfg, kind, seed, alpha, (cal_d, test_d))
                        }
                    })
                    .collect::<Result<_>>()?;
                cells.push(Aggregate::from_trials(&batch));
                trials.extend(batch);
            }
        }
    }

    let primary = kind_matrices(cfg.score_kind, &domains, &cells);
    let comparator = kind_matrices(cfg.comparator, &domains, &cells);
    Ok(CrossDomainResult {
        alpha,
        emr_diff: diff(&comparator.emr, &primary.emr),
        apss_diff: diff(&comparator.apss, &primary.apss),
        domains,
        primary,
        comparator,
        ssm_def: metrics::ssm_definition(cfg.ssm_min_bin),
        config: cfg.clone(),
        cells,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::fixtures::{question, response};

    /// `n` questions whose pools alternate between covered and empty.
    fn data(n: usize, domain: &str, empty_every: usize) -> Vec<QuestionTrace> {
        (0..n)
            .map(|i| {
                let empty = empty_every > 0 && i % empty_every == 0;
                let v = -((i % 7) as f64) / 10.0;
                let mut q = question(
                    &format!("{domain}-{i}"),
                    vec![
                        response("A", !empty, v, -1.0),
                        response("B", false, -0.9, -1.0),
                        response("A", !empty, v - 0.05, -1.0),
                    ],
                );
                q.domain = domain.to_string();
                q
            })
            .collect()
    }

    fn cfg(trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            n_trials: trials,
            ..Default::default()
        }
    }

    #[test]
    fn default_config_is_valid() {
        ExperimentConfig::default().validate().unwrap();
        let bad = ExperimentConfig {
            cal_ratio: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let json = serde_json::to_string(&ExperimentConfig::default()).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn trial_is_deterministic() {
        let d = data(40, "x", 0);
        let a = run_trial(&d, &cfg(1), 7, 0.2).unwrap();
        let b = run_trial(&d, &cfg(1), 7, 0.2).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.n_cal, 20);
        assert_eq!(a.metrics.n_test, 20);
    }

    #[test]
    fn all_empty_pools_miss_everything() {
        let d = data(21, "x", 1);
        for alpha in [0.1, 0.5, 0.9] {
            let t = run_trial(&d, &cfg(1), 3, alpha).unwrap();
            assert_eq!(t.metrics.emr, 1.0);
            let n = t.n_cal as f64;
            assert!((t.risk_floor - n / (n + 1.0)).abs() < 1e-15);
            assert!(t.alpha_below_floor || alpha >= t.risk_floor);
        }
    }

    #[test]
    fn degenerate_split_rejected() {
        let d = data(3, "x", 0);
        assert!(matches!(run_trial(&d, &cfg(1), 0, 0.1), Err(Error::DegenerateSplit { .. })));
    }

    #[test]
    fn single_alpha_single_trial_sweep() {
        let d = data(30, "x", 4);
        let c = ExperimentConfig {
            alpha_list: vec![0.2],
            ..cfg(1)
        };
        let s = sweep_budgets(&d, &c).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.rows[0].emr.std, 0.0);
        assert_eq!(s.rows[0].apss.std, 0.0);
    }

    #[test]
    fn aggregates_match_stored_trials() {
        let d = data(30, "x", 5);
        let s = sweep_kinds(&d, &cfg(12), &ScoreKind::ALL).unwrap();
        assert_eq!(s.rows.len(), 9);
        for row in &s.rows {
            let emr: Vec<f64> = s
                .trials
                .iter()
                .filter(|t| t.score_kind == row.score_kind && t.alpha == row.alpha)
                .map(|t| t.metrics.emr)
                .collect();
            assert_eq!(emr.len(), 12);
            let m = emr.iter().sum::<f64>() / 12.0;
            let var = emr.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 11.0;
            assert!((row.emr.mean - m).abs() < 1e-12);
            assert!((row.emr.std - var.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn trials_are_independent_of_count() {
        let d = data(30, "x", 5);
        let few = sweep_budgets(&d, &cfg(3)).unwrap();
        let many = sweep_budgets(&d, &cfg(9)).unwrap();
        for t in &few.trials {
            assert!(many.trials.contains(t));
        }
    }

    #[test]
    fn cross_domain_shapes_and_diagonal() {
        let mut all = data(24, "a", 0);
        all.extend(data(30, "b", 3));
        let groups = group_by_domain(&all);
        let c = cfg(5);
        let r = cross_domain_matrix(&groups, &c, 0.1).unwrap();
        assert_eq!(r.domains, vec!["a".to_string(), "b".to_string()]);
        assert_eq!(r.cells.len(), 8);
        for i in 0..2 {
            for j in 0..2 {
                assert!((r.emr_diff[i][j] - (r.comparator.emr[i][j] - r.primary.emr[i][j])).abs() < 1e-15);
            }
        }
        // diagonal cells are in-domain trials with the recorded seed
        let diag = r
            .trials
            .iter()
            .find(|t| t.cal_domain == "b" && t.test_domain == "b" && t.score_kind == ScoreKind::Layerwise)
            .unwrap();
        let direct = run_trial(&groups["b"], &c, diag.trial_seed, 0.1).unwrap();
        assert_eq!(&direct, diag);
    }

    #[test]
    fn cross_domain_rejects_tiny_domain() {
        let mut all = data(24, "a", 0);
        all.extend(data(2, "b", 0));
        let err = cross_domain_matrix(&group_by_domain(&all), &cfg(1), 0.1).unwrap_err();
        assert!(matches!(err, Error::TooFewQuestions { .. }));
        assert!(cross_domain_matrix(&group_by_domain(&data(10, "a", 0)), &cfg(1), 0.1).is_err());
    }

    #[test]
    fn seeds_depend_on_every_part() {
        let base = trial_seed(1, 2, 0, "a", "b");
        assert_ne!(base, trial_seed(2, 2, 0, "a", "b"));
        assert_ne!(base, trial_seed(1, 3, 0, "a", "b"));
        assert_ne!(base, trial_seed(1, 2, 1, "a", "b"));
        assert_ne!(base, trial_seed(1, 2, 0, "b", "a"));
    }
}
