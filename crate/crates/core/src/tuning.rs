//! End-to-end tuning: pick lambda with one selector, then refit least squares on
//! the selected variables.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::criteria::{argmin_index, cv_curve, score_path, Criterion, CriterionScore, DEFAULT_FOLDS};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::solvers::{check_grid, ols_refit, ActiveSet, FitResult, PenaltyKind, PenaltySpec, Solver};
use crate::stability::{estimate_stability, select_index, StabilityCurve, DEFAULT_ALPHA, DEFAULT_SPLITS};

/// The five ways of choosing lambda.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    Kappa,
    Cp,
    Bic,
    Cv,
    Gcv,
}

impl Selector {
    pub const ALL: [Selector; 5] = [
        Selector::Kappa,
        Selector::Cp,
        Selector::Bic,
        Selector::Cv,
        Selector::Gcv,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Selector::Kappa => "kappa",
            Selector::Cp => "cp",
            Selector::Bic => "bic",
            Selector::Cv => "cv",
            Selector::Gcv => "gcv",
        }
    }

    pub fn criterion(&self) -> Option<Criterion> {
        match self {
            Selector::Kappa => None,
            Selector::Cp => Some(Criterion::Cp),
            Selector::Bic => Some(Criterion::Bic),
            Selector::Cv => Some(Criterion::Cv),
            Selector::Gcv => Some(Criterion::Gcv),
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kappa" | "ks" => Ok(Selector::Kappa),
            "cp" => Ok(Selector::Cp),
            "bic" => Ok(Selector::Bic),
            "cv" => Ok(Selector::Cv),
            "gcv" => Ok(Selector::Gcv),
            other => Err(Error::Argument(format!("unknown criterion '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningSettings {
    pub alpha: f64,
    pub splits: usize,
    pub folds: usize,
}

impl Default for TuningSettings {
    fn default() -> Self {
        TuningSettings {
            alpha: DEFAULT_ALPHA,
            splits: DEFAULT_SPLITS,
            folds: DEFAULT_FOLDS,
        }
    }
}

/// The full-sample path of one method, shared by every selector.
#[derive(Debug, Clone)]
pub struct PreparedPath {
    pub prepared: Dataset,
    pub penalty: PenaltySpec,
    pub lambda_grid: Vec<f64>,
    pub path: Vec<FitResult>,
}

impl PreparedPath {
    pub fn new(raw: &Dataset, method: &PenaltyKind, lambda_grid: &[f64]) -> Result<Self> {
        check_grid(lambda_grid)?;
        let prepared = raw.center_and_scale(true)?;
        let penalty = method.resolve(&prepared)?;
        let path = Solver::new(&prepared)?.fit_path(&penalty, lambda_grid)?;
        Ok(PreparedPath {
            prepared,
            penalty,
            lambda_grid: lambda_grid.to_vec(),
            path,
        })
    }

    /// OLS refit on the active set of grid point `index`, returned on the
    /// standardized scale.
    pub fn refit(&self, index: usize) -> Result<(ActiveSet, DVector<f64>)> {
        let active = self.path[index].active.clone();
        let beta = ols_refit(&self.prepared, &active)?;
        Ok((active, beta))
    }
}

#[derive(Debug, Clone)]
pub enum SelectionCurve {
    Stability(StabilityCurve),
    Scores(Vec<CriterionScore>),
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub selector: Selector,
    pub index: usize,
    pub lambda_hat: f64,
    pub curve: SelectionCurve,
}

/// Run `selector` on a prepared path. `raw` is the dataset the path was built
/// from; the kappa and CV selectors resample it.
pub fn select<R: Rng + ?Sized>(
    raw: &Dataset,
    method: &PenaltyKind,
    prepared: &PreparedPath,
    selector: Selector,
    settings: &TuningSettings,
    rng: &mut R,
) -> Result<Selection> {
    let grid = &prepared.lambda_grid;
    let (index, curve) = match selector.criterion() {
        None => {
            let curve = estimate_stability(raw, method, grid, settings.splits, rng)?;
            let index = select_index(grid, &curve.s_hat, settings.alpha)?;
            (index, SelectionCurve::Stability(curve))
        }
        Some(criterion) => {
            let cv = match criterion {
                Criterion::Cv => Some(cv_curve(raw, method, grid, settings.folds, rng)?),
                _ => None,
            };
            let scores = score_path(&prepared.prepared, &prepared.path, criterion, cv.as_deref())?;
            let values: Vec<f64> = scores.iter().map(|s| s.score).collect();
            let index = argmin_index(&values)
                .ok_or_else(|| Error::Argument("no finite criterion score".into()))?;
            (index, SelectionCurve::Scores(scores))
        }
    };
    Ok(Selection {
        selector,
        index,
        lambda_hat: grid[index],
        curve,
    })
}

/// A tuned and refitted model.
#[derive(Debug, Clone)]
pub struct TunedModel {
    pub selection: Selection,
    pub fit: FitResult,
    pub active: ActiveSet,
    /// OLS refit on the active set, standardized scale.
    pub refit: DVector<f64>,
    pub intercept: f64,
    /// OLS refit on the active set, original scale.
    pub coefficients: DVector<f64>,
}

impl TunedModel {
    pub fn predict(&self, raw_x: &nalgebra::DMatrix<f64>) -> DVector<f64> {
        (raw_x * &self.coefficients).add_scalar(self.intercept)
    }
}

/// Select lambda on `raw` with `selector` and refit OLS on the selected variables.
pub fn tune<R: Rng + ?Sized>(
    raw: &Dataset,
    method: &PenaltyKind,
    lambda_grid: &[f64],
    selector: Selector,
    settings: &TuningSettings,
    rng: &mut R,
) -> Result<TunedModel> {
    let prepared = PreparedPath::new(raw, method, lambda_grid)?;
    tune_prepared(raw, method, &prepared, selector, settings, rng)
}

pub fn tune_prepared<R: Rng + ?Sized>(
    raw: &Dataset,
    method: &PenaltyKind,
    prepared: &PreparedPath,
    selector: Selector,
    settings: &TuningSettings,
    rng: &mut R,
) -> Result<TunedModel> {
    let selection = select(raw, method, prepared, selector, settings, rng)?;
    let (active, refit) = prepared.refit(selection.index)?;
    let (intercept, coefficients) = prepared.prepared.coefficients_to_original(&refit);
    Ok(TunedModel {
        fit: prepared.path[selection.index].clone(),
        selection,
        active,
        refit,
        intercept,
        coefficients,
    })
}
