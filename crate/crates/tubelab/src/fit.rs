//! Power-law fits `y ~ C x^a` over report rows.

use serde::Serialize;

pub const MIN_ROWS: usize = 8;
/// Smallest `max x / min x` for which the exponent is identifiable.
pub const MIN_SPREAD: f64 = 4.0;

/// Numeric view of a report row by column name.
pub trait Columns {
    fn column(&self, name: &str) -> Option<f64>;
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FitError {
    #[error("need at least {MIN_ROWS} rows, got {0}")]
    TooFewRows(usize),
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("column {column} has a non-positive value {value}")]
    NonPositive { column: String, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantFit {
    pub rows: usize,
    /// Least-squares slope of `log y` against `log x`; absent when skipped.
    pub exponent: Option<f64>,
    pub constant: Option<f64>,
    /// Smallest C with `y <= C x^exponent` on every row.
    pub max_ratio: Option<f64>,
    pub warning: Option<String>,
}

fn extract<R: Columns>(rows: &[R], col: &str) -> Result<Vec<f64>, FitError> {
    rows.iter()
        .map(|r| {
            let v = r.column(col).ok_or_else(|| FitError::UnknownColumn(col.into()))?;
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(FitError::NonPositive {
                    column: col.into(),
                    value: v,
                })
            }
        })
        .collect()
}

pub fn fit_constant<R: Columns>(rows: &[R], x_col: &str, y_col: &str) -> Result<ConstantFit, FitError> {
    if rows.len() < MIN_ROWS {
        return Err(FitError::TooFewRows(rows.len()));
    }
    let xs = extract(rows, x_col)?;
    let ys = extract(rows, y_col)?;
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
    if hi / lo < MIN_SPREAD {
        return Ok(ConstantFit {
            rows: rows.len(),
            exponent: None,
            constant: None,
            max_ratio: None,
            warning: Some(format!("{x_col} spans only a factor {:.3}; fit skipped", hi / lo)),
        });
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let exponent = sxy / sxx;
    let constant = (my - exponent * mx).exp();
    let max_ratio = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y / x.powf(exponent))
        .fold(0.0f64, f64::max);
    Ok(ConstantFit {
        rows: rows.len(),
        exponent: Some(exponent),
        constant: Some(constant),
        max_ratio: Some(max_ratio),
        warning: None,
    })
}
