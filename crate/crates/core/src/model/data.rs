//! Regression datasets and column standardization.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shrinkage::{GlmFamily, ShrinkageContext};

/// Predictor matrix. `Identity(n)` is the `n × n` identity, used by the
/// sequence model `y_i = β_i + ε_i` without materializing the matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    Dense(DMatrix<f64>),
    Identity(usize),
}

impl Design {
    pub fn rows(&self) -> usize {
        match self {
            Design::Dense(x) => x.nrows(),
            Design::Identity(n) => *n,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Design::Dense(x) => x.ncols(),
            Design::Identity(n) => *n,
        }
    }

    /// `X β`.
    pub fn mul(&self, beta: &[f64]) -> Vec<f64> {
        match self {
            Design::Dense(x) => (x * DVector::from_column_slice(beta)).data.into(),
            Design::Identity(_) => beta.to_vec(),
        }
    }

    /// `Xᵀ v`.
    pub fn tr_mul(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Design::Dense(x) => x.tr_mul(&DVector::from_column_slice(v)).data.into(),
            Design::Identity(_) => v.to_vec(),
        }
    }

    /// Row `i` as a dense vector.
    pub fn row(&self, i: usize) -> Vec<f64> {
        match self {
            Design::Dense(x) => x.row(i).iter().copied().collect(),
            Design::Identity(n) => (0..*n).map(|j| f64::from(u8::from(i == j))).collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Design::Dense(x) => x.clone(),
            Design::Identity(n) => DMatrix::identity(*n, *n),
        }
    }
}

/// Column means and standard deviations removed by [`Dataset::standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardizer {
    /// Applies the stored transform to raw-scale predictors.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.means.len() {
            return Err(Error::Data(format!("expected {} columns, found {}", self.means.len(), x.ncols())));
        }
        let mut out = x.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col.apply(|v| *v = (*v - self.means[j]) / self.sds[j]);
        }
        Ok(out)
    }

    /// Converts standardized-scale coefficients to the raw predictor scale.
    pub fn raw_coefficients(&self, beta: &[f64], beta0: f64) -> (Vec<f64>, f64) {
        let raw: Vec<f64> = beta.iter().zip(&self.sds).map(|(b, s)| b / s).collect();
        let shift: f64 = raw.iter().zip(&self.means).map(|(b, m)| b * m).sum();
        (raw, beta0 - shift)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub design: Design,
    pub y: Vec<f64>,
    pub family: GlmFamily,
    pub standardized: bool,
}

fn column_stats(x: &DMatrix<f64>, j: usize) -> (f64, f64) {
    let n = x.nrows() as f64;
    let col = x.column(j);
    let mean = col.sum() / n;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl Dataset {
    pub fn new(design: Design, y: Vec<f64>, family: GlmFamily) -> Result<Self> {
        if design.rows() != y.len() {
            return Err(Error::Data(format!("design has {} rows but target has {} entries", design.rows(), y.len())));
        }
        if y.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        match family {
            GlmFamily::Gaussian => {}
            GlmFamily::BinomialLogit => {
                if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
                    return Err(Error::Data(format!("row {i}: target {} is not 0 or 1", y[i])));
                }
            }
            _ => return Err(Error::Data("only gaussian and bernoulli likelihoods can be fitted".into())),
        }
        if let Design::Dense(x) = &design {
            if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "non-finite predictor at row {}, column {}",
                    pos % x.nrows(),
                    pos / x.nrows()
                )));
            }
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("row {i}: non-finite target")));
        }
        Ok(Self { design, y, family, standardized: false })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.design.cols()
    }

    /// Centers each column and scales it to unit sample standard deviation.
    pub fn standardize(&self) -> Result<(Dataset, Standardizer)> {
        let Design::Dense(x) = &self.design else {
            return Err(Error::Data("identity designs are not standardized".into()));
        };
        if x.nrows() < 2 {
            return Err(Error::Data("standardization needs at least two rows".into()));
        }
        let (means, sds): (Vec<f64>, Vec<f64>) = (0..x.ncols()).map(|j| column_stats(x, j)).unzip();
        if let Some(j) = sds.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::Data(format!("column {j} is constant")));
        }
        let st = Standardizer { means, sds };
        let data = Dataset {
            design: Design::Dense(st.transform(x)?),
            y: self.y.clone(),
            family: self.family,
            standardized: true,
        };
        Ok((data, st))
    }

    /// Shrinkage context for this design. An identity design contributes a
    /// single unit observation per coefficient.
    pub fn shrinkage_context(&self, sigma: f64) -> Result<ShrinkageContext> {
        match &self.design {
            Design::Identity(n) => ShrinkageContext::with_scales(1, sigma, vec![1.0; *n]),
            Design::Dense(x) => {
                let scales = (0..x.ncols()).map(|j| column_stats(x, j).1).collect();
                ShrinkageContext::with_scales(x.nrows(), sigma, scales)
            }
        }
    }

    /// Subset of rows, preserving order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let x = self.design.to_dense();
        let sub = DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)]);
        Dataset {
            design: Design::Dense(sub),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            family: self.family,
            standardized: self.standardized,
        }
    }
}
