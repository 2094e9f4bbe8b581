//! Classical tuning criteria: Mallows' Cp, BIC, K-fold CV and GCV.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result, ResultExt};
use crate::solvers::{check_grid, ols, FitResult, PenaltyKind, Solver};

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Cp,
    Bic,
    Cv,
    Gcv,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [Criterion::Cp, Criterion::Bic, Criterion::Cv, Criterion::Gcv];

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Cp => "cp",
            Criterion::Bic => "bic",
            Criterion::Cv => "cv",
            Criterion::Gcv => "gcv",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionScore {
    pub criterion: Criterion,
    pub lambda: f64,
    pub score: f64,
    pub df_hat: usize,
    pub sse: f64,
}

/// Number of selected variables.
pub fn df_hat(fit: &FitResult) -> usize {
    fit.active.len()
}

/// `SSE = ||y - X b||^2` on the fit's own dataset.
pub fn sse(ds: &Dataset, fit: &FitResult) -> f64 {
    (ds.y() - ds.x() * &fit.beta).norm_squared()
}

/// Residual variance of the all-variables OLS fit, `SSE / (n - p)`.
pub fn sigma2_saturated(ds: &Dataset) -> Result<f64> {
    let (n, p) = (ds.n(), ds.p());
    if n <= p {
        return Err(Error::SaturatedModel(format!(
            "needs more rows than columns (n = {n}, p = {p})"
        )));
    }
    let beta = ols(ds.x(), ds.y()).map_err(|e| Error::SaturatedModel(e.to_string()))?;
    Ok((ds.y() - ds.x() * beta).norm_squared() / (n - p) as f64)
}

/// `SSE / sigma2 - n + 2 df`.
pub fn cp_score(sse: f64, sigma2: f64, n: usize, df: usize) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::SaturatedModel(format!(
            "saturated residual variance is {sigma2}; Cp is undefined"
        )));
    }
    Ok(sse / sigma2 - n as f64 + 2.0 * df as f64)
}

/// `log(SSE / n) + log(n) df / n`.
pub fn bic_score(sse: f64, n: usize, df: usize) -> Result<f64> {
    if !(sse > 0.0) {
        return Err(Error::LogDomain(sse));
    }
    let nf = n as f64;
    Ok((sse / nf).ln() + nf.ln() * df as f64 / nf)
}

/// `SSE / (n (1 - df/n)^2)`.
pub fn gcv_score(sse: f64, n: usize, df: usize) -> Result<f64> {
    if df >= n {
        return Err(Error::DivisionByZero(n));
    }
    let nf = n as f64;
    let shrink = 1.0 - df as f64 / nf;
    Ok(sse / (nf * shrink * shrink))
}

/// Random size-balanced fold labels: a shuffled `0, 1, .., folds-1, 0, 1, ..`.
pub fn fold_assignment<R: Rng + ?Sized>(n: usize, folds: usize, rng: &mut R) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Argument(format!("need at least 2 folds, got {folds}")));
    }
    if n < folds {
        return Err(Error::TooFewRows { n, required: folds });
    }
    let mut labels: Vec<usize> = (0..n).map(|i| i % folds).collect();
    labels.shuffle(rng);
    for fold in 0..folds {
        let size = labels.iter().filter(|&&l| l == fold).count();
        if size < 2 {
            return Err(Error::FoldSize { fold, size });
        }
    }
    Ok(labels)
}

/// K-fold cross-validation error summed over all held-out rows, for every
/// lambda of the grid. The fold partition is shared across the grid; each
/// training part is centered and standardized on its own and errors are
/// measured in the original units.
pub fn cv_curve<R: Rng + ?Sized>(
    ds: &Dataset,
    method: &PenaltyKind,
    lambda_grid: &[f64],
    folds: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_grid(lambda_grid)?;
    let labels = fold_assignment(ds.n(), folds, rng)?;
    let per_fold: Vec<Vec<f64>> = (0..folds)
        .into_par_iter()
        .map(|s| {
            let (train, held): (Vec<usize>, Vec<usize>) =
                (0..ds.n()).partition(|&i| labels[i] != s);
            fold_errors(&ds.select_rows(&train), &ds.select_rows(&held), method, lambda_grid)
                .context_with(|| format!("fold {s}"))
        })
        .collect::<Result<_>>()?;
    Ok((0..lambda_grid.len())
        .map(|k| per_fold.iter().map(|f| f[k]).sum())
        .collect())
}

fn fold_errors(
    train: &Dataset,
    held: &Dataset,
    method: &PenaltyKind,
    lambda_grid: &[f64],
) -> Result<Vec<f64>> {
    let prepared = train.center_and_scale(true)?;
    let penalty = method.resolve(&prepared)?;
    let path = Solver::new(&prepared)?.fit_path(&penalty, lambda_grid)?;
    let raw_x = held.raw_x();
    let raw_y = held.raw_y();
    Ok(path
        .iter()
        .map(|fit| (&raw_y - prepared.predict_original(&fit.beta, &raw_x)).norm_squared())
        .collect())
}

/// Cross-validation error at a single lambda.
pub fn cv_score<R: Rng + ?Sized>(
    ds: &Dataset,
    method: &PenaltyKind,
    lambda: f64,
    folds: usize,
    rng: &mut R,
) -> Result<f64> {
    Ok(cv_curve(ds, method, &[lambda], folds, rng)?[0])
}

/// Score every fit of a path computed on `prepared` (centered, standardized).
/// `cv` must hold the CV curve when the criterion is [`Criterion::Cv`].
pub fn score_path(
    prepared: &Dataset,
    path: &[FitResult],
    criterion: Criterion,
    cv: Option<&[f64]>,
) -> Result<Vec<CriterionScore>> {
    let n = prepared.n();
    let sigma2 = match criterion {
        Criterion::Cp => Some(sigma2_saturated(prepared)?),
        _ => None,
    };
    path.iter()
        .enumerate()
        .map(|(k, fit)| {
            let sse = sse(prepared, fit);
            let df = df_hat(fit);
            let score = match criterion {
                Criterion::Cp => cp_score(sse, sigma2.unwrap_or_default(), n, df)?,
                Criterion::Bic => bic_score(sse, n, df)?,
                Criterion::Gcv => gcv_score(sse, n, df)?,
                Criterion::Cv => cv
                    .and_then(|c| c.get(k).copied())
                    .ok_or_else(|| Error::Argument("missing CV curve".into()))?,
            };
            Ok(CriterionScore {
                criterion,
                lambda: fit.lambda,
                score,
                df_hat: df,
                sse,
            })
        })
        .collect::<Result<_>>()
        .context_with(|| criterion.name().to_string())
}

/// Position of the minimum score; ties go to the earliest (largest) lambda.
pub fn argmin_index(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            continue;
        }
        match best {
            Some(b) if scores[b] <= s => {}
            _ => best = Some(k),
        }
    }
    best
}

/// Tune `method` on `ds` by minimizing `criterion` over a descending grid.
/// Returns the selected lambda and the full score curve.
pub fn select_lambda_by_criterion<R: Rng + ?Sized>(
    ds: &Dataset,
    method: &PenaltyKind,
    lambda_grid: &[f64],
    criterion: Criterion,
    rng: &mut R,
) -> Result<(f64, Vec<CriterionScore>)> {
    check_grid(lambda_grid)?;
    let prepared = ds.center_and_scale(true)?;
    let penalty = method.resolve(&prepared)?;
    let path = Solver::new(&prepared)?.fit_path(&penalty, lambda_grid)?;
    let cv = match criterion {
        Criterion::Cv => Some(cv_curve(ds, method, lambda_grid, DEFAULT_FOLDS, rng)?),
        _ => None,
    };
    let scores = score_path(&prepared, &path, criterion, cv.as_deref())?;
    let values: Vec<f64> = scores.iter().map(|s| s.score).collect();
    let k = argmin_index(&values).ok_or_else(|| Error::Argument("no finite criterion score".into()))?;
    Ok((lambda_grid[k], scores))
}
