//! Variable-selection stability and the kappa selection rule.
//!
//! Stability of a base method at a given lambda is the expected Cohen's kappa
//! between the active sets it produces on two independent samples. It is
//! estimated by repeatedly splitting the data into halves, fitting the whole
//! lambda path on each half and averaging the per-lambda kappa values. The
//! selected lambda is the smallest one whose average stability is within a
//! factor `1 - alpha` of the best.

use rand::Rng;
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result, ResultExt};
use crate::rng::{child_seed, substream};
use crate::solvers::{check_grid, ActiveSet, PenaltyKind, Solver};

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_SPLITS: usize = 20;

/// 2×2 agreement table between two active sets over `p` variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KappaInputs {
    /// selected by both
    pub n11: usize,
    /// selected by the first only
    pub n12: usize,
    /// selected by the second only
    pub n21: usize,
    /// selected by neither
    pub n22: usize,
}

impl KappaInputs {
    pub fn from_sets(a1: &ActiveSet, a2: &ActiveSet) -> Result<Self> {
        if a1.p() != a2.p() {
            return Err(Error::Argument(format!(
                "active sets over different dimensions ({} vs {})",
                a1.p(),
                a2.p()
            )));
        }
        let p = a1.p();
        let n11 = a1.indices().iter().filter(|&&j| a2.contains(j)).count();
        let n12 = a1.len() - n11;
        let n21 = a2.len() - n11;
        Ok(KappaInputs {
            n11,
            n12,
            n21,
            n22: p - n11 - n12 - n21,
        })
    }

    pub fn p(&self) -> usize {
        self.n11 + self.n12 + self.n21 + self.n22
    }

    /// Observed agreement.
    pub fn pr_agree(&self) -> f64 {
        (self.n11 + self.n22) as f64 / self.p() as f64
    }

    /// Agreement expected by chance from the marginals.
    pub fn pr_chance(&self) -> f64 {
        let p2 = (self.p() * self.p()) as f64;
        ((self.n11 + self.n12) * (self.n11 + self.n21)) as f64 / p2
            + ((self.n12 + self.n22) * (self.n21 + self.n22)) as f64 / p2
    }

    /// Cohen's kappa. Two empty or two full sets are assigned -1; these are the
    /// only tables where the chance agreement equals 1.
    pub fn kappa(&self) -> f64 {
        let p = self.p();
        let both_empty = self.n11 + self.n12 + self.n21 == 0;
        let both_full = self.n11 == p;
        if both_empty || both_full {
            return -1.0;
        }
        let pe = self.pr_chance();
        (self.pr_agree() - pe) / (1.0 - pe)
    }
}

/// Cohen's kappa agreement between two active sets over the same `p >= 2` variables.
pub fn kappa(a1: &ActiveSet, a2: &ActiveSet) -> Result<f64> {
    let table = KappaInputs::from_sets(a1, a2)?;
    if table.p() < 2 {
        return Err(Error::Argument(format!(
            "kappa needs at least 2 variables, got {}",
            table.p()
        )));
    }
    Ok(table.kappa())
}

#[derive(Debug, Clone)]
pub struct StabilityCurve {
    pub lambda_grid: Vec<f64>,
    /// Average kappa per lambda.
    pub s_hat: Vec<f64>,
    /// Row `b` holds the kappa values of split `b` across the grid.
    pub per_split_kappa: Vec<Vec<f64>>,
    pub splits: usize,
    /// Half-sample size.
    pub m: usize,
}

impl StabilityCurve {
    /// Assemble a curve from per-split rows; `s_hat` is their column mean.
    pub fn from_rows(lambda_grid: Vec<f64>, per_split_kappa: Vec<Vec<f64>>, m: usize) -> Result<Self> {
        if per_split_kappa.is_empty() {
            return Err(Error::Argument("stability curve needs at least one split".into()));
        }
        if per_split_kappa.iter().any(|r| r.len() != lambda_grid.len()) {
            return Err(Error::Argument("kappa row length differs from grid length".into()));
        }
        let b = per_split_kappa.len();
        let s_hat = (0..lambda_grid.len())
            .map(|k| per_split_kappa.iter().map(|row| row[k]).sum::<f64>() / b as f64)
            .collect();
        Ok(StabilityCurve {
            lambda_grid,
            s_hat,
            per_split_kappa,
            splits: b,
            m,
        })
    }
}

/// Estimate stability across `lambda_grid` from `splits` random half-splits.
///
/// Each half is centered and standardized on its own and the base method
/// (including adaptive weights) is resolved on that half. Split `b` draws from
/// sub-stream `b` of a seed taken from `rng`, so the result does not depend on
/// thread scheduling.
pub fn estimate_stability<R: Rng + ?Sized>(
    ds: &Dataset,
    method: &PenaltyKind,
    lambda_grid: &[f64],
    splits: usize,
    rng: &mut R,
) -> Result<StabilityCurve> {
    if splits == 0 {
        return Err(Error::Argument("number of splits must be at least 1".into()));
    }
    if ds.n() < 4 {
        return Err(Error::TooFewRows {
            n: ds.n(),
            required: 4,
        });
    }
    check_grid(lambda_grid)?;
    let seed = child_seed(rng);
    let rows: Vec<Vec<f64>> = (0..splits)
        .into_par_iter()
        .map(|b| {
            split_kappa_row(ds, method, lambda_grid, &mut substream(seed, b as u64))
                .context_with(|| format!("split {b}"))
        })
        .collect::<Result<_>>()?;
    StabilityCurve::from_rows(lambda_grid.to_vec(), rows, ds.n() / 2)
}

fn split_kappa_row<R: Rng + ?Sized>(
    ds: &Dataset,
    method: &PenaltyKind,
    lambda_grid: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let pair = ds.random_half_split(rng)?;
    let first = half_path_active_sets(&pair.first, method, lambda_grid)?;
    let second = half_path_active_sets(&pair.second, method, lambda_grid)?;
    first
        .iter()
        .zip(&second)
        .map(|(a1, a2)| kappa(a1, a2))
        .collect()
}

fn half_path_active_sets(
    half: &Dataset,
    method: &PenaltyKind,
    lambda_grid: &[f64],
) -> Result<Vec<ActiveSet>> {
    let prepared = half.center_and_scale(true)?;
    let penalty = method.resolve(&prepared)?;
    let path = Solver::new(&prepared)?.fit_path(&penalty, lambda_grid)?;
    Ok(path.into_iter().map(|f| f.active).collect())
}

#[derive(Debug, Clone)]
pub struct KappaSelection {
    pub lambda_hat: f64,
    /// Position of `lambda_hat` in the curve's grid.
    pub index: usize,
    pub alpha: f64,
    pub s_max: f64,
    pub curve: StabilityCurve,
}

/// Smallest grid lambda with `s_hat(lambda) / max s_hat >= 1 - alpha`.
///
/// `alpha` must lie in `[0, 1)`; zero selects the smallest maximizer. A
/// non-positive maximum is reported as [`Error::NoStableModel`].
pub fn select_lambda_kappa(curve: StabilityCurve, alpha: f64) -> Result<KappaSelection> {
    let index = select_index(&curve.lambda_grid, &curve.s_hat, alpha)?;
    let s_max = curve.s_hat.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(KappaSelection {
        lambda_hat: curve.lambda_grid[index],
        index,
        alpha,
        s_max,
        curve,
    })
}

/// Index form of [`select_lambda_kappa`], usable without moving the curve.
pub fn select_index(lambda_grid: &[f64], s_hat: &[f64], alpha: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Argument(format!("alpha must be in [0, 1), got {alpha}")));
    }
    if s_hat.is_empty() || s_hat.len() != lambda_grid.len() {
        return Err(Error::Argument("empty or mismatched stability curve".into()));
    }
    let s_max = s_hat.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(s_max > 0.0) {
        return Err(Error::NoStableModel { s_max });
    }
    let threshold = 1.0 - alpha;
    (0..s_hat.len())
        .filter(|&k| s_hat[k] / s_max >= threshold)
        .min_by(|&a, &b| lambda_grid[a].total_cmp(&lambda_grid[b]).then(b.cmp(&a)))
        .ok_or(Error::NoStableModel { s_max })
}
