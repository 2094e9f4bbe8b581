//! Datasets, preprocessing and random row splits.
//!
//! A [`Dataset`] always remembers how its values relate to the raw data it was
//! loaded from: `x_raw = x * scale + mean` column-wise and `y_raw = y + y_mean`.
//! Row subsets keep that map, so a half-sample or CV fold can be re-centered and
//! re-standardized on its own and predictions can still be reported in raw units.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

const CENTER_TOL: f64 = 1e-10;
const SCALE_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
    column_names: Vec<String>,
    centered: bool,
    standardized: bool,
    column_means: Vec<f64>,
    column_scales: Vec<f64>,
    y_mean: f64,
}

/// Two disjoint random halves of a dataset, each of size `m = floor(n / 2)`.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub first: Dataset,
    pub second: Dataset,
    pub m: usize,
    pub first_rows: Vec<usize>,
    pub second_rows: Vec<usize>,
}

impl Dataset {
    /// Build a raw (untransformed) dataset.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, column_names: Vec<String>) -> Result<Self> {
        let (n, p) = x.shape();
        if y.len() != n {
            return Err(Error::InvalidData(format!(
                "response has {} entries but design has {} rows",
                y.len(),
                n
            )));
        }
        if n < 2 {
            return Err(Error::TooFewRows { n, required: 2 });
        }
        if p < 1 {
            return Err(Error::InvalidData("design has no columns".into()));
        }
        if column_names.len() != p {
            return Err(Error::InvalidData(format!(
                "{} column names for {} columns",
                column_names.len(),
                p
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite entry".into()));
        }
        Ok(Dataset {
            y,
            x,
            column_names,
            centered: false,
            standardized: false,
            column_means: vec![0.0; p],
            column_scales: vec![1.0; p],
            y_mean: 0.0,
        })
    }

    /// Raw dataset with generated column names `x1..xp`.
    pub fn from_arrays(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(x, y, names)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn column_means(&self) -> &[f64] {
        &self.column_means
    }

    pub fn column_scales(&self) -> &[f64] {
        &self.column_scales
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    /// Center `y` and every column; with `scale`, also rescale columns so that
    /// `x_jᵀx_j = n`. The recorded means and scales always refer to the raw data.
    pub fn center_and_scale(&self, scale: bool) -> Result<Dataset> {
        let n = self.n();
        let nf = n as f64;
        let mut x = self.x.clone();
        let mut means = self.column_means.clone();
        let mut scales = self.column_scales.clone();
        for j in 0..self.p() {
            let mut col = x.column_mut(j);
            let magnitude = col.amax().max(1.0);
            let mean = col.sum() / nf;
            col.add_scalar_mut(-mean);
            means[j] += scales[j] * mean;
            if scale {
                let factor = (col.norm_squared() / nf).sqrt();
                if factor <= 1e-12 * magnitude {
                    return Err(Error::DegenerateColumn(self.column_names[j].clone()));
                }
                col /= factor;
                scales[j] *= factor;
            }
        }
        let y_shift = self.y.sum() / nf;
        let y = self.y.add_scalar(-y_shift);
        Ok(Dataset {
            y,
            x,
            column_names: self.column_names.clone(),
            centered: true,
            standardized: scale || self.standardized && self.centered,
            column_means: means,
            column_scales: scales,
            y_mean: self.y_mean + y_shift,
        })
    }

    /// Check the centering / standardization flags against the data itself.
    pub fn check_invariants(&self) -> Result<()> {
        let nf = self.n() as f64;
        if self.centered {
            if (self.y.sum() / nf).abs() > CENTER_TOL {
                return Err(Error::InvalidData("response is not centered".into()));
            }
            for (j, col) in self.x.column_iter().enumerate() {
                if (col.sum() / nf).abs() > CENTER_TOL {
                    return Err(Error::InvalidData(format!(
                        "column '{}' is not centered",
                        self.column_names[j]
                    )));
                }
            }
        }
        if self.standardized {
            for (j, col) in self.x.column_iter().enumerate() {
                if ((col.norm_squared() - nf) / nf).abs() > SCALE_REL_TOL {
                    return Err(Error::InvalidData(format!(
                        "column '{}' is not standardized",
                        self.column_names[j]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Rows `rows` (in the given order). The result is flagged raw again, but keeps
    /// the map back to the original units.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let x = self.x.select_rows(rows);
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i]));
        Dataset {
            y,
            x,
            column_names: self.column_names.clone(),
            centered: false,
            standardized: false,
            column_means: self.column_means.clone(),
            column_scales: self.column_scales.clone(),
            y_mean: self.y_mean,
        }
    }

    /// Design matrix in original units.
    pub fn raw_x(&self) -> DMatrix<f64> {
        let mut x = self.x.clone();
        for (j, mut col) in x.column_iter_mut().enumerate() {
            col *= self.column_scales[j];
            col.add_scalar_mut(self.column_means[j]);
        }
        x
    }

    /// Response in original units.
    pub fn raw_y(&self) -> DVector<f64> {
        self.y.add_scalar(self.y_mean)
    }

    /// Map coefficients fitted on this dataset's scale to `(intercept, slopes)` on
    /// the original scale.
    pub fn coefficients_to_original(&self, beta: &DVector<f64>) -> (f64, DVector<f64>) {
        let slopes = DVector::from_iterator(
            self.p(),
            beta.iter().zip(&self.column_scales).map(|(b, s)| b / s),
        );
        let intercept = self.y_mean
            - slopes
                .iter()
                .zip(&self.column_means)
                .map(|(b, m)| b * m)
                .sum::<f64>();
        (intercept, slopes)
    }

    /// Predictions for rows given in original units, from coefficients on this
    /// dataset's scale.
    pub fn predict_original(&self, beta: &DVector<f64>, raw_x: &DMatrix<f64>) -> DVector<f64> {
        let (intercept, slopes) = self.coefficients_to_original(beta);
        (raw_x * slopes).add_scalar(intercept)
    }

    /// Uniform random partition into two disjoint halves of size `floor(n/2)`;
    /// for odd `n` one random row is left out.
    pub fn random_half_split<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SplitPair> {
        let n = self.n();
        if n < 4 {
            return Err(Error::TooFewRows { n, required: 4 });
        }
        let m = n / 2;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let first_rows = order[..m].to_vec();
        let second_rows = order[m..2 * m].to_vec();
        Ok(SplitPair {
            first: self.select_rows(&first_rows),
            second: self.select_rows(&second_rows),
            m,
            first_rows,
            second_rows,
        })
    }

    /// Uniform random train/test split with `n_train` training rows.
    pub fn train_test_split<R: Rng + ?Sized>(
        &self,
        n_train: usize,
        rng: &mut R,
    ) -> Result<(Dataset, Dataset)> {
        let n = self.n();
        if n_train == 0 || n_train >= n {
            return Err(Error::Argument(format!(
                "training size must be in [1, {}), got {}",
                n, n_train
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Ok((
            self.select_rows(&order[..n_train]),
            self.select_rows(&order[n_train..]),
        ))
    }

    /// Split by a boolean mask (`true` = training row).
    pub fn split_by_mask(&self, train: &[bool]) -> Result<(Dataset, Dataset)> {
        if train.len() != self.n() {
            return Err(Error::InvalidData(format!(
                "split mask has {} entries for {} rows",
                train.len(),
                self.n()
            )));
        }
        let (tr, te): (Vec<usize>, Vec<usize>) = (0..self.n()).partition(|&i| train[i]);
        if tr.is_empty() || te.is_empty() {
            return Err(Error::Argument(
                "split column must mark at least one training and one test row".into(),
            ));
        }
        Ok((self.select_rows(&tr), self.select_rows(&te)))
    }
}

/// Load a raw dataset from a comma-delimited file with a header row.
pub fn load_csv(path: impl AsRef<Path>, response_column: &str) -> Result<Dataset> {
    load_csv_with_split(path, response_column, None).map(|(ds, _)| ds)
}

/// Like [`load_csv`], optionally pulling out a boolean column that marks training
/// rows. Accepted values: `true/false`, `t/f`, `1/0`, `train/test` (case-insensitive).
pub fn load_csv_with_split(
    path: impl AsRef<Path>,
    response_column: &str,
    split_column: Option<&str>,
) -> Result<(Dataset, Option<Vec<bool>>)> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let response_idx = headers
        .iter()
        .position(|h| h == response_column)
        .ok_or_else(|| Error::Schema(format!("response column '{response_column}' not found")))?;
    let split_idx = match split_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Schema(format!("split column '{name}' not found")))?,
        ),
        None => None,
    };
    let predictors: Vec<usize> = (0..headers.len())
        .filter(|&i| i != response_idx && Some(i) != split_idx)
        .collect();
    if predictors.is_empty() {
        return Err(Error::Schema("no predictor columns".into()));
    }

    let mut values = Vec::new();
    let mut y = Vec::new();
    let mut mask = Vec::new();
    for (r, record) in reader.records().enumerate() {
        // header is row 1
        let row = r + 2;
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        y.push(parse_cell(&record[response_idx], row, &headers[response_idx])?);
        for &j in &predictors {
            values.push(parse_cell(&record[j], row, &headers[j])?);
        }
        if let Some(s) = split_idx {
            mask.push(parse_flag(&record[s], row, &headers[s])?);
        }
    }
    let n = y.len();
    let x = DMatrix::from_row_slice(n, predictors.len(), &values);
    let names = predictors.iter().map(|&j| headers[j].clone()).collect();
    let ds = Dataset::new(x, DVector::from_vec(y), names)?;
    Ok((ds, split_idx.map(|_| mask)))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let position = e.position().map(|p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Parse {
            row: position.unwrap_or(0),
            column: String::new(),
            message: format!("{other:?}"),
        },
    }
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    let parse_err = |message: String| Error::Parse {
        row,
        column: column.to_string(),
        message,
    };
    let v: f64 = cell
        .parse()
        .map_err(|_| parse_err(format!("'{cell}' is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(format!("'{cell}' is not finite")));
    }
    Ok(v)
}

fn parse_flag(cell: &str, row: usize, column: &str) -> Result<bool> {
    match cell.to_ascii_lowercase().as_str() {
        "true" | "t" | "1" | "train" => Ok(true),
        "false" | "f" | "0" | "test" => Ok(false),
        _ => Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("'{cell}' is not a boolean"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use std::io::Write;

    fn ds(cols: &[&[f64]], y: &[f64]) -> Dataset {
        let n = y.len();
        let x = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        Dataset::from_arrays(x, DVector::from_column_slice(y)).unwrap()
    }

    #[test]
    fn centering_only() {
        let d = ds(&[&[1.0, 2.0, 3.0]], &[1.0, 1.0, 4.0]);
        let c = d.center_and_scale(false).unwrap();
        assert_eq!(c.x().column(0).as_slice(), &[-1.0, 0.0, 1.0]);
        assert_eq!(c.y_mean(), 2.0);
        assert!(c.is_centered() && !c.is_standardized());
        c.check_invariants().unwrap();
    }

    #[test]
    fn standardizing_gives_unit_mean_square() {
        let d = ds(&[&[-1.0, 0.0, 1.0]], &[0.0, 1.0, 2.0]);
        let c = d.center_and_scale(true).unwrap();
        let expect = (1.5f64).sqrt();
        let col = c.x().column(0);
        assert!((col[0] + expect).abs() < 1e-15);
        assert_eq!(col[1], 0.0);
        assert!((col[2] - expect).abs() < 1e-15);
        c.check_invariants().unwrap();
    }

    #[test]
    fn constant_column_is_degenerate() {
        let d = Dataset::new(
            DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]),
            DVector::from_vec(vec![1.0, 2.0, 3.0]),
            vec!["a".into(), "flat".into()],
        )
        .unwrap();
        match d.center_and_scale(true) {
            Err(Error::DegenerateColumn(name)) => assert_eq!(name, "flat"),
            other => panic!("expected degenerate column, got {other:?}"),
        }
        // centering alone is fine
        d.center_and_scale(false).unwrap();
    }

    #[test]
    fn rejects_non_finite_and_tiny_inputs() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, f64::NAN]);
        assert!(Dataset::from_arrays(x, DVector::from_vec(vec![1.0, 2.0])).is_err());
        let x = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(matches!(
            Dataset::from_arrays(x, DVector::from_vec(vec![1.0])),
            Err(Error::TooFewRows { .. })
        ));
    }

    #[test]
    fn half_split_sizes_and_determinism() {
        let n = 40;
        let x = DMatrix::from_fn(n, 2, |i, j| (i * 3 + j) as f64);
        let d = Dataset::from_arrays(x, DVector::from_fn(n, |i, _| i as f64)).unwrap();
        let s = d.random_half_split(&mut substream(1, 0)).unwrap();
        assert_eq!((s.m, s.first.n(), s.second.n()), (20, 20, 20));
        let again = d.random_half_split(&mut substream(1, 0)).unwrap();
        assert_eq!(s.first_rows, again.first_rows);
        assert_eq!(s.second_rows, again.second_rows);

        let x = DMatrix::from_fn(5, 1, |i, _| i as f64);
        let d = Dataset::from_arrays(x, DVector::from_fn(5, |i, _| i as f64)).unwrap();
        let s = d.random_half_split(&mut substream(3, 0)).unwrap();
        assert_eq!((s.first.n(), s.second.n()), (2, 2));
        // halves follow draw order: y equals the row index here
        let ys: Vec<usize> = s.first.y().iter().map(|v| *v as usize).collect();
        assert_eq!(ys, s.first_rows);

        let x = DMatrix::from_fn(3, 1, |i, _| i as f64);
        let d = Dataset::from_arrays(x, DVector::from_fn(3, |i, _| i as f64)).unwrap();
        assert!(matches!(
            d.random_half_split(&mut substream(3, 0)),
            Err(Error::TooFewRows { n: 3, required: 4 })
        ));
    }

    #[test]
    fn train_test_split_bounds() {
        let x = DMatrix::from_fn(10, 1, |i, _| i as f64);
        let d = Dataset::from_arrays(x, DVector::from_fn(10, |i, _| i as f64)).unwrap();
        let (tr, te) = d.train_test_split(9, &mut substream(1, 0)).unwrap();
        assert_eq!((tr.n(), te.n()), (9, 1));
        assert!(matches!(
            d.train_test_split(0, &mut substream(1, 0)),
            Err(Error::Argument(_))
        ));
        assert!(d.train_test_split(10, &mut substream(1, 0)).is_err());
    }

    #[test]
    fn raw_values_survive_transform_and_subsetting() {
        let d = ds(&[&[1.0, 4.0, 2.0, 8.0], &[3.0, -1.0, 0.5, 2.0]], &[1.0, 2.0, 0.0, 5.0]);
        let c = d.center_and_scale(true).unwrap();
        let sub = c.select_rows(&[3, 1]);
        let again = sub.center_and_scale(true).unwrap();
        let raw = again.raw_x();
        assert!((raw[(0, 0)] - 8.0).abs() < 1e-12);
        assert!((raw[(1, 1)] + 1.0).abs() < 1e-12);
        let ry = again.raw_y();
        assert!((ry[0] - 5.0).abs() < 1e-12 && (ry[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn load_csv_shapes_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.csv");
        let mut f = std::fs::File::create(&good).unwrap();
        writeln!(f, "a,resp\n1.5,2\n-3,4").unwrap();
        let d = load_csv(&good, "resp").unwrap();
        assert_eq!((d.n(), d.p()), (2, 1));
        assert_eq!(d.column_names(), &["a".to_string()]);
        assert!(!d.is_centered());

        assert!(matches!(load_csv(&good, "missing"), Err(Error::Schema(_))));

        let bad = dir.path().join("bad.csv");
        let mut f = std::fs::File::create(&bad).unwrap();
        writeln!(f, "a,b,resp\n1,2,3\n4,oops,6").unwrap();
        match load_csv(&bad, "resp") {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "b");
            }
            other => panic!("expected parse error, got {other:?}"),
        }

        let nan = dir.path().join("nan.csv");
        let mut f = std::fs::File::create(&nan).unwrap();
        writeln!(f, "a,resp\n1,NaN\n2,3").unwrap();
        assert!(matches!(load_csv(&nan, "resp"), Err(Error::Parse { row: 2, .. })));
    }

    #[test]
    fn load_csv_with_split_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "a,b,y,train\n1,2,3,T\n2,1,0,F\n3,5,1,TRUE\n0,0,2,false").unwrap();
        let (d, mask) = load_csv_with_split(&path, "y", Some("train")).unwrap();
        assert_eq!(d.p(), 2);
        assert_eq!(mask.unwrap(), vec![true, false, true, false]);
    }
}
