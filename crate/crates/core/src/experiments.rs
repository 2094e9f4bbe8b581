//! Simulation studies comparing tuning selectors.
//!
//! Data follow `y = x'beta + sigma * eps` with AR(1)-correlated Gaussian
//! predictors. Every replicate draws from its own random sub-stream keyed by
//! `(seed, replicate)`, and every (penalty, selector) cell within a replicate
//! from a sub-stream keyed by the cell, so reports are independent of the
//! number of worker threads.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::report::{fmt_float, parse_float};
use crate::rng::{child_seed, substream, StreamRng};
use crate::solvers::{default_grid, ActiveSet, PenaltyKind};
use crate::stability::{estimate_stability, select_index, DEFAULT_ALPHA, DEFAULT_SPLITS};
use crate::tuning::{tune_prepared, PreparedPath, Selector, TuningSettings};

pub const SCENARIO1_BETA: [f64; 8] = [3.0, 1.5, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0];
pub const SCENARIO1_SIZES: [usize; 3] = [40, 60, 80];
pub const AR1_RHO: f64 = 0.5;
pub const DEFAULT_REPLICATES: usize = 100;
pub const DEFAULT_SEED: u64 = 2013;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n: usize,
    pub p: usize,
    pub beta_true: Vec<f64>,
    pub sigma: f64,
    pub rho: f64,
    pub replicates: usize,
    pub penalties: Vec<PenaltyKind>,
    pub criteria: Vec<Selector>,
    pub lambda_grid: Vec<f64>,
    /// Number of half-splits for the kappa selector.
    pub splits: usize,
    pub alpha: f64,
    pub folds: usize,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beta_true.len() != self.p {
            return Err(Error::Argument(format!(
                "beta has {} entries for p = {}",
                self.beta_true.len(),
                self.p
            )));
        }
        if self.p0() == 0 {
            return Err(Error::Argument("true coefficient vector has no support".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Argument(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::Argument(format!("|rho| must be below 1, got {}", self.rho)));
        }
        if self.replicates == 0 {
            return Err(Error::Argument("at least one replicate is required".into()));
        }
        crate::solvers::check_grid(&self.lambda_grid)
    }

    /// Number of truly nonzero coefficients.
    pub fn p0(&self) -> usize {
        self.beta_true.iter().filter(|b| **b != 0.0).count()
    }

    pub fn settings(&self) -> TuningSettings {
        TuningSettings {
            alpha: self.alpha,
            splits: self.splits,
            folds: self.folds,
        }
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        ar1_covariance(self.p, self.rho)
    }
}

fn base_config(n: usize, beta_true: Vec<f64>, sigma: f64) -> SimulationConfig {
    SimulationConfig {
        n,
        p: beta_true.len(),
        beta_true,
        sigma,
        rho: AR1_RHO,
        replicates: DEFAULT_REPLICATES,
        penalties: vec![PenaltyKind::Lasso, PenaltyKind::AdaptiveLasso, PenaltyKind::scad()],
        criteria: Selector::ALL.to_vec(),
        lambda_grid: default_grid(),
        splits: DEFAULT_SPLITS,
        alpha: DEFAULT_ALPHA,
        folds: crate::criteria::DEFAULT_FOLDS,
        seed: DEFAULT_SEED,
    }
}

/// Fixed-dimension scenario: `p = 8`, `beta = (3, 1.5, 0, 0, 2, 0, 0, 0)`, `sigma = 1`.
/// The studied sizes are 40, 60 and 80; other `n` are accepted (see
/// [`scenario1_standard_n`]).
pub fn scenario1_config(n: usize) -> SimulationConfig {
    base_config(n, SCENARIO1_BETA.to_vec(), 1.0)
}

pub fn scenario1_standard_n(n: usize) -> bool {
    SCENARIO1_SIZES.contains(&n)
}

/// Dimension of the diverging-`p` scenario: `sqrt(n)` rounded, which reproduces
/// the studied pairs 100→10, 200→14, 400→20, 800→28.
pub fn scenario2_dimension(n: usize) -> usize {
    match n {
        100 => 10,
        200 => 14,
        400 => 20,
        800 => 28,
        _ => ((n as f64).sqrt().round() as usize).max(5),
    }
}

/// Diverging-dimension scenario: `beta = (5, 4, 3, 2, 1, 0, ..., 0)`.
pub fn scenario2_config(n: usize, sigma: f64) -> SimulationConfig {
    let p = scenario2_dimension(n);
    let mut beta = vec![0.0; p];
    for (j, b) in beta.iter_mut().take(5).enumerate() {
        *b = (5 - j) as f64;
    }
    base_config(n, beta, sigma)
}

/// `Sigma_ij = rho^|i-j|`.
pub fn ar1_covariance(p: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| rho.powi((i as i32 - j as i32).abs()))
}

/// `n` i.i.d. rows from `N(0, Sigma)` with AR(1) covariance, via the Cholesky
/// factor of `Sigma`.
pub fn gen_ar1_design<R: Rng + ?Sized>(n: usize, p: usize, rho: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    if !(rho.abs() < 1.0) {
        return Err(Error::Argument(format!("|rho| must be below 1, got {rho}")));
    }
    let chol = ar1_covariance(p, rho)
        .cholesky()
        .ok_or_else(|| Error::Argument("AR(1) covariance is not positive definite".into()))?;
    let z: DMatrix<f64> = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(rng));
    Ok(z * chol.l().transpose())
}

/// `y = X beta + sigma * eps` with standard normal `eps`.
pub fn gen_response<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    beta_true: &[f64],
    sigma: f64,
    rng: &mut R,
) -> DVector<f64> {
    let mean = x * DVector::from_column_slice(beta_true);
    let noise = DVector::from_fn(x.nrows(), |_, _| {
        let e: f64 = StandardNormal.sample(rng);
        e
    });
    if sigma == 0.0 {
        mean
    } else {
        mean + noise * sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionOutcome {
    pub exact_recovery: bool,
    pub correct_zeros: usize,
    pub incorrect_zeros: usize,
}

/// Compare a selected set with the support of the true coefficients.
pub fn evaluate_selection(active: &ActiveSet, beta_true: &[f64]) -> SelectionOutcome {
    let mut correct = 0;
    let mut incorrect = 0;
    let mut exact = true;
    for (j, b) in beta_true.iter().enumerate() {
        let selected = active.contains(j);
        match (*b != 0.0, selected) {
            (false, false) => correct += 1,
            (true, false) => {
                incorrect += 1;
                exact = false
            }
            (false, true) => exact = false,
            (true, true) => {}
        }
    }
    SelectionOutcome {
        exact_recovery: exact,
        correct_zeros: correct,
        incorrect_zeros: incorrect,
    }
}

/// Relative prediction error `(b - beta)' Sigma (b - beta) / sigma^2`.
pub fn rpe(beta_hat: &[f64], beta_true: &[f64], cov: &DMatrix<f64>, sigma: f64) -> f64 {
    let d = DVector::from_iterator(
        beta_hat.len(),
        beta_hat.iter().zip(beta_true).map(|(a, b)| a - b),
    );
    (d.transpose() * cov * &d)[(0, 0)] / (sigma * sigma)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMetrics {
    pub lambda_hat: f64,
    pub exact_recovery: bool,
    pub correct_zeros: usize,
    pub incorrect_zeros: usize,
    pub rpe: f64,
}

/// One (replicate, penalty, selector) cell. Failures are kept in the row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateMetrics {
    pub replicate: usize,
    pub penalty: String,
    pub criterion: Selector,
    pub outcome: std::result::Result<CellMetrics, String>,
}

fn selector_code(s: Selector) -> u64 {
    match s {
        Selector::Kappa => 0,
        Selector::Cp => 1,
        Selector::Bic => 2,
        Selector::Cv => 3,
        Selector::Gcv => 4,
    }
}

fn cell_stream(cell_seed: u64, penalty: &PenaltyKind, selector: Selector) -> StreamRng {
    substream(cell_seed, penalty.code() * 8 + selector_code(selector))
}

/// A replicate's raw dataset together with the seed its cells derive from.
pub fn replicate_data(config: &SimulationConfig, index: usize) -> Result<(Dataset, u64)> {
    let mut rng = substream(config.seed, index as u64);
    let x = gen_ar1_design(config.n, config.p, config.rho, &mut rng)?;
    let y = gen_response(&x, &config.beta_true, config.sigma, &mut rng);
    let cell_seed = child_seed(&mut rng);
    Ok((Dataset::from_arrays(x, y)?, cell_seed))
}

/// Draw replicate `index` and run every (penalty × selector) cell on it.
pub fn run_replicate(config: &SimulationConfig, index: usize) -> Result<Vec<ReplicateMetrics>> {
    let (raw, cell_seed) = replicate_data(config, index)?;
    let cov = config.covariance();
    let settings = config.settings();
    let mut rows = Vec::with_capacity(config.penalties.len() * config.criteria.len());
    for method in &config.penalties {
        let prepared = PreparedPath::new(&raw, method, &config.lambda_grid);
        for &selector in &config.criteria {
            let outcome = match &prepared {
                Err(e) => Err(e.to_string()),
                Ok(prepared) => {
                    let mut rng = cell_stream(cell_seed, method, selector);
                    tune_prepared(&raw, method, prepared, selector, &settings, &mut rng)
                        .map(|model| {
                            let sel = evaluate_selection(&model.active, &config.beta_true);
                            CellMetrics {
                                lambda_hat: model.selection.lambda_hat,
                                exact_recovery: sel.exact_recovery,
                                correct_zeros: sel.correct_zeros,
                                incorrect_zeros: sel.incorrect_zeros,
                                rpe: rpe(
                                    model.coefficients.as_slice(),
                                    &config.beta_true,
                                    &cov,
                                    config.sigma,
                                ),
                            }
                        })
                        .map_err(|e| e.to_string())
                }
            };
            rows.push(ReplicateMetrics {
                replicate: index,
                penalty: method.name().to_string(),
                criterion: selector,
                outcome,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub penalty: String,
    pub criterion: Selector,
    pub replicates: usize,
    pub errors: usize,
    pub true_set_pct: f64,
    pub mean_correct_zeros: f64,
    pub mean_incorrect_zeros: f64,
    pub rpe_mean: f64,
    pub rpe_q1: f64,
    pub rpe_median: f64,
    pub rpe_q3: f64,
}

#[derive(Debug, Clone)]
pub struct StudyReport {
    pub config: SimulationConfig,
    pub rows: Vec<ReplicateMetrics>,
    pub aggregates: Vec<AggregateRow>,
}

impl StudyReport {
    pub fn aggregate(&self, penalty: &str, criterion: Selector) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|a| a.penalty == penalty && a.criterion == criterion)
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Summaries per (penalty, criterion), in order of first appearance in `rows`.
/// Rows are expected sorted by replicate.
pub fn aggregate_rows(rows: &[ReplicateMetrics]) -> Vec<AggregateRow> {
    let mut order: Vec<(String, Selector)> = Vec::new();
    let mut groups: BTreeMap<(String, Selector), Vec<&ReplicateMetrics>> = BTreeMap::new();
    for r in rows {
        let key = (r.penalty.clone(), r.criterion);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let group = &groups[&key];
            let ok: Vec<&CellMetrics> = group.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let m = ok.len() as f64;
            let mut rpes: Vec<f64> = ok.iter().map(|c| c.rpe).collect();
            let rpe_mean = rpes.iter().sum::<f64>() / m;
            rpes.sort_by(f64::total_cmp);
            AggregateRow {
                penalty: key.0.clone(),
                criterion: key.1,
                replicates: ok.len(),
                errors: group.len() - ok.len(),
                true_set_pct: ok.iter().filter(|c| c.exact_recovery).count() as f64 / m,
                mean_correct_zeros: ok.iter().map(|c| c.correct_zeros as f64).sum::<f64>() / m,
                mean_incorrect_zeros: ok.iter().map(|c| c.incorrect_zeros as f64).sum::<f64>() / m,
                rpe_mean,
                rpe_q1: quantile(&rpes, 0.25),
                rpe_median: quantile(&rpes, 0.5),
                rpe_q3: quantile(&rpes, 0.75),
            }
        })
        .collect()
}

/// Run all replicates (in parallel on the current rayon pool) and aggregate.
pub fn run_study(config: &SimulationConfig) -> Result<StudyReport> {
    config.validate()?;
    let per_rep: Vec<Vec<ReplicateMetrics>> = (0..config.replicates)
        .into_par_iter()
        .map(|i| run_replicate(config, i))
        .collect::<Result<_>>()?;
    let rows: Vec<ReplicateMetrics> = per_rep.into_iter().flatten().collect();
    let aggregates = aggregate_rows(&rows);
    Ok(StudyReport {
        config: config.clone(),
        rows,
        aggregates,
    })
}

/// [`run_study`] on a dedicated pool of `jobs` threads.
pub fn run_study_with_jobs(config: &SimulationConfig, jobs: usize) -> Result<StudyReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Argument(format!("cannot start {jobs} worker threads: {e}")))?;
    pool.install(|| run_study(config))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub mean_rpe: f64,
    pub replicates: usize,
}

/// Mean RPE of lasso + kappa selection for each `alpha`. The stability curve of
/// a replicate does not depend on `alpha`, so it is computed once and only the
/// ratio rule and refit are repeated. Uses the same random streams as the
/// (lasso, kappa) cell of [`run_replicate`].
pub fn alpha_sensitivity(config: &SimulationConfig, alphas: &[f64]) -> Result<Vec<AlphaRow>> {
    config.validate()?;
    if let Some(a) = alphas.iter().find(|a| !(0.0..1.0).contains(*a)) {
        return Err(Error::Argument(format!("alpha must be in [0, 1), got {a}")));
    }
    let method = PenaltyKind::Lasso;
    let cov = config.covariance();
    let per_rep: Vec<Vec<Option<f64>>> = (0..config.replicates)
        .into_par_iter()
        .map(|i| -> Result<Vec<Option<f64>>> {
            let (raw, cell_seed) = replicate_data(config, i)?;
            let prepared = PreparedPath::new(&raw, &method, &config.lambda_grid)?;
            let mut rng = cell_stream(cell_seed, &method, Selector::Kappa);
            let curve = estimate_stability(&raw, &method, &config.lambda_grid, config.splits, &mut rng)?;
            Ok(alphas
                .iter()
                .map(|&alpha| {
                    let k = select_index(&config.lambda_grid, &curve.s_hat, alpha).ok()?;
                    let (_, refit) = prepared.refit(k).ok()?;
                    let (_, coef) = prepared.prepared.coefficients_to_original(&refit);
                    Some(rpe(coef.as_slice(), &config.beta_true, &cov, config.sigma))
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(alphas
        .iter()
        .enumerate()
        .map(|(a, &alpha)| {
            let vals: Vec<f64> = per_rep.iter().filter_map(|r| r[a]).collect();
            AlphaRow {
                alpha,
                mean_rpe: vals.iter().sum::<f64>() / vals.len() as f64,
                replicates: vals.len(),
            }
        })
        .collect())
}

/// How a real dataset is divided into training and test rows.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainSplit {
    /// A fresh uniform split with this many training rows per repeat.
    Random(usize),
    /// A fixed split, `true` marking training rows.
    Mask(Vec<bool>),
}

#[derive(Debug, Clone)]
pub struct RealDataConfig {
    pub penalties: Vec<PenaltyKind>,
    pub criteria: Vec<Selector>,
    pub lambda_grid: Vec<f64>,
    pub settings: TuningSettings,
    pub split: TrainSplit,
    pub repeats: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealDataCell {
    pub lambda_hat: f64,
    /// Mean squared prediction error on the test rows.
    pub test_pe: f64,
    pub active: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealDataRow {
    pub repeat: usize,
    pub penalty: String,
    pub criterion: Selector,
    pub outcome: std::result::Result<RealDataCell, String>,
}

/// Tune every (penalty × selector) cell on the training rows of each split and
/// score the refitted model on the test rows. Repeat `r` draws its split and
/// cell streams from `(seed, r)`.
pub fn real_data_study(raw: &Dataset, config: &RealDataConfig) -> Result<Vec<RealDataRow>> {
    crate::solvers::check_grid(&config.lambda_grid)?;
    if config.repeats == 0 {
        return Err(Error::Argument("at least one repeat is required".into()));
    }
    match &config.split {
        TrainSplit::Random(n_train) => {
            if *n_train == 0 || *n_train >= raw.n() {
                return Err(Error::Argument(format!(
                    "training size must be in [1, {}), got {n_train}",
                    raw.n()
                )));
            }
        }
        TrainSplit::Mask(_) if config.repeats > 1 => {
            return Err(Error::Argument("a fixed split column allows only one repeat".into()));
        }
        TrainSplit::Mask(_) => {}
    }
    let per_repeat: Vec<Vec<RealDataRow>> = (0..config.repeats)
        .into_par_iter()
        .map(|r| -> Result<Vec<RealDataRow>> {
            let mut rng = substream(config.seed, r as u64);
            let (train, test) = match &config.split {
                TrainSplit::Random(n_train) => raw.train_test_split(*n_train, &mut rng)?,
                TrainSplit::Mask(mask) => raw.split_by_mask(mask)?,
            };
            let cell_seed = child_seed(&mut rng);
            let test_x = test.raw_x();
            let test_y = test.raw_y();
            let mut rows = Vec::new();
            for method in &config.penalties {
                let prepared = PreparedPath::new(&train, method, &config.lambda_grid);
                for &selector in &config.criteria {
                    let outcome = match &prepared {
                        Err(e) => Err(e.to_string()),
                        Ok(prepared) => {
                            let mut rng = cell_stream(cell_seed, method, selector);
                            tune_prepared(&train, method, prepared, selector, &config.settings, &mut rng)
                                .map(|model| {
                                    let resid = model.predict(&test_x) - &test_y;
                                    RealDataCell {
                                        lambda_hat: model.selection.lambda_hat,
                                        test_pe: resid.norm_squared() / test_y.len() as f64,
                                        active: model
                                            .active
                                            .indices()
                                            .iter()
                                            .map(|&j| raw.column_names()[j].clone())
                                            .collect(),
                                    }
                                })
                                .map_err(|e| e.to_string())
                        }
                    };
                    rows.push(RealDataRow {
                        repeat: r,
                        penalty: method.name().to_string(),
                        criterion: selector,
                        outcome,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per_repeat.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealDataSummary {
    pub penalty: String,
    pub criterion: Selector,
    pub repeats: usize,
    pub errors: usize,
    pub median_pe: f64,
    pub mean_pe: f64,
    /// Fraction of successful repeats selecting each column, in column order.
    pub selection_frequency: Vec<f64>,
}

pub fn summarize_real_data(rows: &[RealDataRow], column_names: &[String]) -> Vec<RealDataSummary> {
    let mut order: Vec<(String, Selector)> = Vec::new();
    for r in rows {
        let key = (r.penalty.clone(), r.criterion);
        if !order.contains(&key) {
            order.push(key);
        }
    }
    order
        .into_iter()
        .map(|(penalty, criterion)| {
            let group: Vec<&RealDataRow> = rows
                .iter()
                .filter(|r| r.penalty == penalty && r.criterion == criterion)
                .collect();
            let ok: Vec<&RealDataCell> = group.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let mut pes: Vec<f64> = ok.iter().map(|c| c.test_pe).collect();
            let mean_pe = pes.iter().sum::<f64>() / pes.len() as f64;
            pes.sort_by(f64::total_cmp);
            let selection_frequency = column_names
                .iter()
                .map(|name| ok.iter().filter(|c| c.active.contains(name)).count() as f64 / ok.len() as f64)
                .collect();
            RealDataSummary {
                errors: group.len() - ok.len(),
                repeats: ok.len(),
                penalty,
                criterion,
                median_pe: quantile(&pes, 0.5),
                mean_pe,
                selection_frequency,
            }
        })
        .collect()
}

pub fn write_real_data_csv(path: &Path, rows: &[RealDataRow]) -> Result<()> {
    let mut w = crate::report::csv_writer(path)?;
    w.write_record(["repeat", "penalty", "criterion", "lambda_hat", "test_pe", "size", "active", "error"])
        .map_err(|e| crate::report::csv_io(path, e))?;
    for r in rows {
        let record = match &r.outcome {
            Ok(c) => [
                r.repeat.to_string(),
                r.penalty.clone(),
                r.criterion.to_string(),
                fmt_float(c.lambda_hat),
                fmt_float(c.test_pe),
                c.active.len().to_string(),
                c.active.join(";"),
                String::new(),
            ],
            Err(e) => [
                r.repeat.to_string(),
                r.penalty.clone(),
                r.criterion.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ],
        };
        w.write_record(&record).map_err(|e| crate::report::csv_io(path, e))?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn write_real_data_summary_csv(
    path: &Path,
    summaries: &[RealDataSummary],
    column_names: &[String],
) -> Result<()> {
    let mut w = crate::report::csv_writer(path)?;
    let mut header: Vec<String> = ["penalty", "criterion", "repeats", "errors", "median_pe", "mean_pe"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(column_names.iter().map(|c| format!("freq_{c}")));
    w.write_record(&header).map_err(|e| crate::report::csv_io(path, e))?;
    for s in summaries {
        let mut record = vec![
            s.penalty.clone(),
            s.criterion.to_string(),
            s.repeats.to_string(),
            s.errors.to_string(),
            fmt_float(s.median_pe),
            fmt_float(s.mean_pe),
        ];
        record.extend(s.selection_frequency.iter().map(|f| fmt_float(*f)));
        w.write_record(&record).map_err(|e| crate::report::csv_io(path, e))?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub const REPLICATE_HEADER: [&str; 9] = [
    "replicate", "penalty", "criterion", "lambda_hat", "exact", "C", "I", "rpe", "error",
];

pub fn write_replicates_csv(path: &Path, rows: &[ReplicateMetrics]) -> Result<()> {
    let mut w = crate::report::csv_writer(path)?;
    w.write_record(REPLICATE_HEADER).map_err(|e| crate::report::csv_io(path, e))?;
    for r in rows {
        let record: Vec<String> = match &r.outcome {
            Ok(c) => vec![
                r.replicate.to_string(),
                r.penalty.clone(),
                r.criterion.to_string(),
                fmt_float(c.lambda_hat),
                c.exact_recovery.to_string(),
                c.correct_zeros.to_string(),
                c.incorrect_zeros.to_string(),
                fmt_float(c.rpe),
                String::new(),
            ],
            Err(e) => vec![
                r.replicate.to_string(),
                r.penalty.clone(),
                r.criterion.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ],
        };
        w.write_record(&record).map_err(|e| crate::report::csv_io(path, e))?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn read_replicates_csv(path: &Path) -> Result<Vec<ReplicateMetrics>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| crate::report::csv_io(path, e))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| crate::report::csv_io(path, e))?;
        let bad = |column: &str| Error::Parse {
            row: i + 2,
            column: column.to_string(),
            message: "unreadable value".into(),
        };
        let replicate = rec[0].parse().map_err(|_| bad("replicate"))?;
        let criterion: Selector = rec[2].parse()?;
        let outcome = if rec[8].is_empty() {
            Ok(CellMetrics {
                lambda_hat: parse_float(&rec[3]).ok_or_else(|| bad("lambda_hat"))?,
                exact_recovery: rec[4].parse().map_err(|_| bad("exact"))?,
                correct_zeros: rec[5].parse().map_err(|_| bad("C"))?,
                incorrect_zeros: rec[6].parse().map_err(|_| bad("I"))?,
                rpe: parse_float(&rec[7]).ok_or_else(|| bad("rpe"))?,
            })
        } else {
            Err(rec[8].to_string())
        };
        rows.push(ReplicateMetrics {
            replicate,
            penalty: rec[1].to_string(),
            criterion,
            outcome,
        });
    }
    Ok(rows)
}

pub const AGGREGATE_HEADER: [&str; 11] = [
    "penalty",
    "criterion",
    "replicates",
    "errors",
    "true_set_pct",
    "mean_C",
    "mean_I",
    "rpe_mean",
    "rpe_q1",
    "rpe_median",
    "rpe_q3",
];

pub fn write_aggregate_csv(path: &Path, aggregates: &[AggregateRow]) -> Result<()> {
    let mut w = crate::report::csv_writer(path)?;
    w.write_record(AGGREGATE_HEADER).map_err(|e| crate::report::csv_io(path, e))?;
    for a in aggregates {
        w.write_record([
            a.penalty.clone(),
            a.criterion.to_string(),
            a.replicates.to_string(),
            a.errors.to_string(),
            fmt_float(a.true_set_pct),
            fmt_float(a.mean_correct_zeros),
            fmt_float(a.mean_incorrect_zeros),
            fmt_float(a.rpe_mean),
            fmt_float(a.rpe_q1),
            fmt_float(a.rpe_median),
            fmt_float(a.rpe_q3),
        ])
        .map_err(|e| crate::report::csv_io(path, e))?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn write_alpha_csv(path: &Path, rows: &[AlphaRow]) -> Result<()> {
    let mut w = crate::report::csv_writer(path)?;
    w.write_record(["alpha", "mean_rpe", "replicates"])
        .map_err(|e| crate::report::csv_io(path, e))?;
    for r in rows {
        w.write_record([fmt_float(r.alpha), fmt_float(r.mean_rpe), r.replicates.to_string()])
            .map_err(|e| crate::report::csv_io(path, e))?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
