//! Penalized least squares by cyclic coordinate descent.
//!
//! The objective is
//!
//! ```text
//! (1/n) ||y - X b||^2 + sum_j pen_lambda(|b_j|)
//! ```
//!
//! with no factor 1/2 on the loss, so every univariate minimizer thresholds at
//! `lambda / 2` rather than `lambda`. Data must be centered and standardized
//! (`x_jᵀx_j = n`) before fitting.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result, ResultExt};

/// Coefficients with `|b_j|` above this are considered selected.
pub const ACTIVE_TOL: f64 = 1e-8;
/// Stop when the largest coefficient change in a sweep falls below this.
pub const CONVERGENCE_TOL: f64 = 1e-7;
pub const MAX_SWEEPS: usize = 10_000;
pub const DEFAULT_SCAD_GAMMA: f64 = 3.7;
/// Adaptive-lasso weights are capped here when an initial estimate is ~0.
pub const MAX_ADAPTIVE_WEIGHT: f64 = 1e8;

/// A base variable-selection method, before any data-dependent quantities are
/// computed. Adaptive-lasso weights are resolved per dataset, so the same method
/// can be applied to half-samples and CV folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PenaltyKind {
    Lasso,
    AdaptiveLasso,
    Scad { gamma: f64 },
}

impl PenaltyKind {
    pub fn scad() -> Self {
        PenaltyKind::Scad {
            gamma: DEFAULT_SCAD_GAMMA,
        }
    }

    /// Stable small integer per kind, used to key random sub-streams.
    pub fn code(&self) -> u64 {
        match self {
            PenaltyKind::Lasso => 0,
            PenaltyKind::AdaptiveLasso => 1,
            PenaltyKind::Scad { .. } => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PenaltyKind::Lasso => "lasso",
            PenaltyKind::AdaptiveLasso => "adalasso",
            PenaltyKind::Scad { .. } => "scad",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lasso" => Ok(PenaltyKind::Lasso),
            "adalasso" | "adaptive_lasso" | "adaptive-lasso" => Ok(PenaltyKind::AdaptiveLasso),
            "scad" => Ok(PenaltyKind::scad()),
            other => Err(Error::Argument(format!("unknown penalty '{other}'"))),
        }
    }

    /// Concrete penalty for a (centered, standardized) dataset.
    pub fn resolve(&self, ds: &Dataset) -> Result<PenaltySpec> {
        match *self {
            PenaltyKind::Lasso => Ok(PenaltySpec::Lasso),
            PenaltyKind::AdaptiveLasso => PenaltySpec::adaptive(adaptive_weights(ds)?),
            PenaltyKind::Scad { gamma } => PenaltySpec::scad(gamma),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PenaltySpec {
    Lasso,
    AdaptiveLasso { weights: Vec<f64> },
    Scad { gamma: f64 },
}

impl PenaltySpec {
    pub fn scad(gamma: f64) -> Result<Self> {
        if !(gamma > 2.0) || !gamma.is_finite() {
            return Err(Error::Argument(format!("SCAD gamma must exceed 2, got {gamma}")));
        }
        Ok(PenaltySpec::Scad { gamma })
    }

    pub fn adaptive(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::Argument(
                "adaptive-lasso weights must be finite and positive".into(),
            ));
        }
        Ok(PenaltySpec::AdaptiveLasso { weights })
    }

    pub fn kind(&self) -> PenaltyKind {
        match self {
            PenaltySpec::Lasso => PenaltyKind::Lasso,
            PenaltySpec::AdaptiveLasso { .. } => PenaltyKind::AdaptiveLasso,
            PenaltySpec::Scad { gamma } => PenaltyKind::Scad { gamma: *gamma },
        }
    }

    fn check_dim(&self, p: usize) -> Result<()> {
        match self {
            PenaltySpec::AdaptiveLasso { weights } if weights.len() != p => Err(Error::Argument(
                format!("{} adaptive weights for {} columns", weights.len(), p),
            )),
            _ => Ok(()),
        }
    }

    /// `pen_lambda(theta)` for coordinate `j`.
    pub fn value(&self, j: usize, theta: f64, lambda: f64) -> f64 {
        match self {
            PenaltySpec::Lasso => lambda * theta,
            PenaltySpec::AdaptiveLasso { weights } => lambda * weights[j] * theta,
            PenaltySpec::Scad { gamma } => scad_value(theta, lambda, *gamma),
        }
    }

    /// `pen'_lambda(theta)` for coordinate `j`, `theta >= 0`.
    pub fn derivative(&self, j: usize, theta: f64, lambda: f64) -> f64 {
        match self {
            PenaltySpec::Lasso => lambda,
            PenaltySpec::AdaptiveLasso { weights } => lambda * weights[j],
            PenaltySpec::Scad { gamma } => scad_derivative(theta, lambda, *gamma),
        }
    }

    /// Exact minimizer of `g b^2 - 2 z b + pen_lambda(|b|)` over `b`.
    fn coordinate_minimizer(&self, j: usize, z: f64, g: f64, lambda: f64) -> f64 {
        match self {
            PenaltySpec::Lasso => soft_threshold(z, lambda / 2.0) / g,
            PenaltySpec::AdaptiveLasso { weights } => {
                soft_threshold(z, lambda * weights[j] / 2.0) / g
            }
            PenaltySpec::Scad { gamma } => scad_threshold(z, g, lambda, *gamma),
        }
    }
}

/// `sign(z) * max(|z| - t, 0)`.
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// SCAD derivative `lambda * (1{theta <= lambda} + (gamma*lambda - theta)_+ / ((gamma-1) lambda) 1{theta > lambda})`.
pub fn scad_derivative(theta: f64, lambda: f64, gamma: f64) -> f64 {
    if theta <= lambda {
        lambda
    } else {
        (gamma * lambda - theta).max(0.0) / (gamma - 1.0)
    }
}

/// SCAD penalty obtained by integrating [`scad_derivative`] from 0.
pub fn scad_value(theta: f64, lambda: f64, gamma: f64) -> f64 {
    if theta <= lambda {
        lambda * theta
    } else if theta <= gamma * lambda {
        (2.0 * gamma * lambda * theta - theta * theta - lambda * lambda) / (2.0 * (gamma - 1.0))
    } else {
        lambda * lambda * (gamma + 1.0) / 2.0
    }
}

/// Minimizer of `g b^2 - 2 z b + scad(|b|)`. The function is convex in `b`
/// whenever `2 (gamma - 1) g > 1`, which holds for standardized columns.
fn scad_threshold(z: f64, g: f64, lambda: f64, gamma: f64) -> f64 {
    let a = z.abs();
    let b = if a <= lambda / 2.0 {
        0.0
    } else if a <= lambda * (g + 0.5) {
        (a - lambda / 2.0) / g
    } else if a <= g * gamma * lambda {
        (2.0 * (gamma - 1.0) * a - gamma * lambda) / (2.0 * (gamma - 1.0) * g - 1.0)
    } else {
        a / g
    };
    b.copysign(z)
}

/// Sorted, duplicate-free set of selected column indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActiveSet {
    indices: Vec<usize>,
    p: usize,
}

impl ActiveSet {
    pub fn new(mut indices: Vec<usize>, p: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.last().is_some_and(|&j| j >= p) {
            return Err(Error::Argument(format!("active index out of range for p = {p}")));
        }
        Ok(ActiveSet { indices, p })
    }

    pub fn empty(p: usize) -> Self {
        ActiveSet {
            indices: Vec::new(),
            p,
        }
    }

    pub fn full(p: usize) -> Self {
        ActiveSet {
            indices: (0..p).collect(),
            p,
        }
    }

    pub fn from_coefficients(beta: &[f64]) -> Self {
        ActiveSet {
            indices: (0..beta.len())
                .filter(|&j| beta[j].abs() > ACTIVE_TOL)
                .collect(),
            p: beta.len(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// 1-based indices, as usually printed.
    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|j| j + 1).collect()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.p
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    pub fn is_subset_of(&self, other: &ActiveSet) -> bool {
        self.indices.iter().all(|&j| other.contains(j))
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta: DVector<f64>,
    pub lambda: f64,
    pub active: ActiveSet,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: CONVERGENCE_TOL,
            max_sweeps: MAX_SWEEPS,
        }
    }
}

/// Coordinate-descent solver bound to one standardized dataset. Precomputes the
/// Gram matrix `XᵀX/n` and `Xᵀy/n` so each coordinate update costs `O(p)`.
#[derive(Debug, Clone)]
pub struct Solver<'a> {
    ds: &'a Dataset,
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    options: SolverOptions,
}

impl<'a> Solver<'a> {
    pub fn new(ds: &'a Dataset) -> Result<Self> {
        if !ds.is_centered() || !ds.is_standardized() {
            return Err(Error::Argument(
                "solver requires a centered and standardized dataset".into(),
            ));
        }
        let nf = ds.n() as f64;
        let gram = ds.x().tr_mul(ds.x()) / nf;
        let xty = ds.x().tr_mul(ds.y()) / nf;
        Ok(Solver {
            ds,
            gram,
            xty,
            options: SolverOptions::default(),
        })
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn dataset(&self) -> &Dataset {
        self.ds
    }

    /// Smallest lasso lambda at which the zero vector is optimal: `max_j |(2/n) x_jᵀy|`.
    pub fn lambda_max(&self) -> f64 {
        2.0 * self.xty.amax()
    }

    /// Objective evaluated directly from the residual.
    pub fn objective(&self, penalty: &PenaltySpec, lambda: f64, beta: &DVector<f64>) -> f64 {
        let r = self.ds.y() - self.ds.x() * beta;
        r.norm_squared() / self.ds.n() as f64
            + beta
                .iter()
                .enumerate()
                .map(|(j, b)| penalty.value(j, b.abs(), lambda))
                .sum::<f64>()
    }

    /// Solve at a single lambda. SCAD without a warm start begins from the lasso
    /// solution at the same lambda.
    pub fn fit(
        &self,
        penalty: &PenaltySpec,
        lambda: f64,
        warm_start: Option<&DVector<f64>>,
    ) -> Result<FitResult> {
        self.fit_traced(penalty, lambda, warm_start, None)
    }

    /// Like [`Solver::fit`], additionally recording the objective after each sweep.
    pub fn fit_with_trace(
        &self,
        penalty: &PenaltySpec,
        lambda: f64,
        warm_start: Option<&DVector<f64>>,
    ) -> Result<(FitResult, Vec<f64>)> {
        let mut trace = Vec::new();
        let fit = self.fit_traced(penalty, lambda, warm_start, Some(&mut trace))?;
        Ok((fit, trace))
    }

    fn fit_traced(
        &self,
        penalty: &PenaltySpec,
        lambda: f64,
        warm_start: Option<&DVector<f64>>,
        trace: Option<&mut Vec<f64>>,
    ) -> Result<FitResult> {
        let p = self.ds.p();
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Argument(format!("lambda must be >= 0, got {lambda}")));
        }
        penalty.check_dim(p)?;
        let start = match (warm_start, penalty) {
            (Some(w), _) => {
                if w.len() != p {
                    return Err(Error::Argument(format!(
                        "warm start has length {}, expected {}",
                        w.len(),
                        p
                    )));
                }
                w.clone()
            }
            (None, PenaltySpec::Scad { .. }) => self.descend(&PenaltySpec::Lasso, lambda, DVector::zeros(p), None)?.beta,
            (None, _) => DVector::zeros(p),
        };
        self.descend(penalty, lambda, start, trace)
    }

    fn descend(
        &self,
        penalty: &PenaltySpec,
        lambda: f64,
        mut beta: DVector<f64>,
        mut trace: Option<&mut Vec<f64>>,
    ) -> Result<FitResult> {
        let p = self.ds.p();
        // gb = G beta, kept in sync with every coordinate move
        let mut gb = &self.gram * &beta;
        let mut sweeps = 0;
        let mut converged = false;
        while sweeps < self.options.max_sweeps {
            sweeps += 1;
            let mut max_change: f64 = 0.0;
            for j in 0..p {
                let g = self.gram[(j, j)];
                let old = beta[j];
                let z = self.xty[j] - gb[j] + g * old;
                let new = penalty.coordinate_minimizer(j, z, g, lambda);
                let delta = new - old;
                if delta != 0.0 {
                    beta[j] = new;
                    gb.axpy(delta, &self.gram.column(j), 1.0);
                    max_change = max_change.max(delta.abs());
                }
            }
            if !max_change.is_finite() || beta.iter().any(|b| !b.is_finite()) {
                return Err(Error::Divergence { lambda });
            }
            if let Some(t) = trace.as_deref_mut() {
                t.push(self.objective(penalty, lambda, &beta));
            }
            if max_change < self.options.tol {
                converged = true;
                break;
            }
        }
        let objective = self.objective(penalty, lambda, &beta);
        if !objective.is_finite() {
            return Err(Error::Divergence { lambda });
        }
        let active = ActiveSet::from_coefficients(beta.as_slice());
        Ok(FitResult {
            beta,
            lambda,
            active,
            objective,
            iterations: sweeps,
            converged,
        })
    }

    /// Fit every lambda of a non-increasing grid, warm-starting each fit from
    /// the previous one. SCAD fits start from the lasso path at the same lambda.
    pub fn fit_path(&self, penalty: &PenaltySpec, lambda_grid: &[f64]) -> Result<Vec<FitResult>> {
        check_grid(lambda_grid)?;
        let p = self.ds.p();
        let mut out: Vec<FitResult> = Vec::with_capacity(lambda_grid.len());
        // A repeated grid point reuses the previous fit rather than descending again.
        let repeat = |out: &[FitResult], lambda: f64| out.last().filter(|f| f.lambda == lambda).cloned();
        match penalty {
            PenaltySpec::Scad { .. } => {
                let mut lasso = DVector::zeros(p);
                for &lambda in lambda_grid {
                    if let Some(fit) = repeat(&out, lambda) {
                        out.push(fit);
                        continue;
                    }
                    let lf = self
                        .descend(&PenaltySpec::Lasso, lambda, lasso, None)
                        .context_with(|| format!("lasso start at lambda = {lambda}"))?;
                    let fit = self
                        .descend(penalty, lambda, lf.beta.clone(), None)
                        .context_with(|| format!("lambda = {lambda}"))?;
                    lasso = lf.beta;
                    out.push(fit);
                }
            }
            _ => {
                let mut warm = DVector::zeros(p);
                for &lambda in lambda_grid {
                    if let Some(fit) = repeat(&out, lambda) {
                        out.push(fit);
                        continue;
                    }
                    let fit = self
                        .descend(penalty, lambda, warm, None)
                        .context_with(|| format!("lambda = {lambda}"))?;
                    warm = fit.beta.clone();
                    out.push(fit);
                }
            }
        }
        Ok(out)
    }
}

/// Grid must be non-empty, finite, positive and non-increasing.
pub fn check_grid(lambda_grid: &[f64]) -> Result<()> {
    if lambda_grid.is_empty() {
        return Err(Error::Argument("lambda grid is empty".into()));
    }
    if lambda_grid.iter().any(|l| !l.is_finite() || *l <= 0.0) {
        return Err(Error::Argument("lambda grid must hold positive finite values".into()));
    }
    if lambda_grid.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Argument("lambda grid must be sorted in descending order".into()));
    }
    Ok(())
}

/// `points` values `10^(lo + (hi - lo) l / (points - 1))`, returned largest first.
pub fn log_grid(log10_min: f64, log10_max: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 || !(log10_max >= log10_min) || !log10_min.is_finite() || !log10_max.is_finite() {
        return Err(Error::Argument(format!(
            "bad grid ({log10_min}, {log10_max}, {points})"
        )));
    }
    if points == 1 {
        return Ok(vec![10f64.powf(log10_min)]);
    }
    let step = (log10_max - log10_min) / (points - 1) as f64;
    Ok((0..points)
        .rev()
        .map(|l| 10f64.powf(log10_min + step * l as f64))
        .collect())
}

/// The default search space: 100 points from 10^-2 to 10^2.
pub fn default_grid() -> Vec<f64> {
    log_grid(-2.0, 2.0, 100).expect("static grid")
}

/// Least squares `y ~ X` without intercept. Fails when `X` is not of full
/// column rank (relative singular-value threshold 1e-10).
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, p) = x.shape();
    if p == 0 {
        return Ok(DVector::zeros(0));
    }
    if n <= p {
        return Err(Error::Rank(format!("{n} rows for {p} columns")));
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::Rank(format!(
            "condition number {:.3e} exceeds 1e10",
            smax / smin
        )));
    }
    svd.solve(y, 0.0).map_err(|e| Error::Rank(e.to_string()))
}

/// `w_j = 1 / |b_j|` from the OLS fit on `ds`, capped at [`MAX_ADAPTIVE_WEIGHT`].
pub fn adaptive_weights(ds: &Dataset) -> Result<Vec<f64>> {
    let beta = ols(ds.x(), ds.y()).context_with(|| "adaptive lasso unavailable".to_string())?;
    Ok(beta.iter().map(|b| weight_from_initial(*b)).collect())
}

pub(crate) fn weight_from_initial(b: f64) -> f64 {
    if b.abs() < 1.0 / MAX_ADAPTIVE_WEIGHT {
        MAX_ADAPTIVE_WEIGHT
    } else {
        1.0 / b.abs()
    }
}

/// OLS restricted to `active`; inactive coordinates are exactly zero.
pub fn ols_refit(ds: &Dataset, active: &ActiveSet) -> Result<DVector<f64>> {
    let p = ds.p();
    if active.p() != p {
        return Err(Error::Argument(format!(
            "active set over {} columns for a {p}-column dataset",
            active.p()
        )));
    }
    let mut beta = DVector::zeros(p);
    if active.is_empty() {
        return Ok(beta);
    }
    let sub = ds.x().select_columns(active.indices());
    let coef = ols(&sub, ds.y())?;
    for (k, &j) in active.indices().iter().enumerate() {
        beta[j] = coef[k];
    }
    Ok(beta)
}
