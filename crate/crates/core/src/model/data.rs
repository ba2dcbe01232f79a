use nalgebra::{DMatrix, DVector};

use super::dependence::spd_inverse;
use crate::{Error, Result};

/// Centered regression data with the Gram quantities used by every sampler.
///
/// The intercept is integrated out of the likelihood under a flat prior, so
/// all inference works on the centered response and predictors.
#[derive(Debug, Clone)]
pub struct RegressionData {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub y_mean: f64,
    pub x_means: DVector<f64>,
    /// Column divisors applied after centering; all 1.0 when unscaled.
    pub x_scales: DVector<f64>,
    pub n: usize,
    pub p: usize,
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
}

/// Center `raw_y` and the columns of `raw_x`; optionally scale columns so
/// that `x_j' x_j = n - 1`.
pub fn center_data(raw_y: &[f64], raw_x: &DMatrix<f64>, scale_columns: bool) -> Result<RegressionData> {
    let (n, p) = raw_x.shape();
    if raw_y.len() != n {
        return Err(Error::Dimension(format!(
            "response has {} entries but predictor matrix has {n} rows",
            raw_y.len()
        )));
    }
    if p == 0 || n <= p {
        return Err(Error::Dimension(format!("need n > p >= 1 (got n={n}, p={p})")));
    }
    if raw_y.iter().any(|v| !v.is_finite()) || raw_x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("data contain non-finite values".into()));
    }

    let y_mean = raw_y.iter().sum::<f64>() / n as f64;
    let y = DVector::from_iterator(n, raw_y.iter().map(|v| v - y_mean));

    let mut x = raw_x.clone();
    let mut x_means = DVector::zeros(p);
    let mut x_scales = DVector::from_element(p, 1.0);
    for j in 0..p {
        let mut col = x.column_mut(j);
        let mean = col.sum() / n as f64;
        let magnitude = col.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        col.add_scalar_mut(-mean);
        if col.amax() <= 1e-12 * magnitude {
            return Err(Error::DegeneratePredictor { column: j });
        }
        x_means[j] = mean;
        if scale_columns {
            let sd = (col.norm_squared() / (n - 1) as f64).sqrt();
            col /= sd;
            x_scales[j] = sd;
        }
    }
    Ok(RegressionData::assemble(y, x, y_mean, x_means, x_scales))
}

impl RegressionData {
    fn assemble(
        y: DVector<f64>,
        x: DMatrix<f64>,
        y_mean: f64,
        x_means: DVector<f64>,
        x_scales: DVector<f64>,
    ) -> Self {
        let (n, p) = x.shape();
        let xtx = x.tr_mul(&x);
        let xty = x.tr_mul(&y);
        let yty = y.norm_squared();
        Self {
            y,
            x,
            y_mean,
            x_means,
            x_scales,
            n,
            p,
            xtx,
            xty,
            yty,
        }
    }

    pub fn xtx(&self) -> &DMatrix<f64> {
        &self.xtx
    }

    pub fn xty(&self) -> &DVector<f64> {
        &self.xty
    }

    pub fn yty(&self) -> f64 {
        self.yty
    }

    /// `(y - X b)'(y - X b)`.
    pub fn rss(&self, beta: &DVector<f64>) -> f64 {
        (&self.y - &self.x * beta).norm_squared()
    }

    /// Least squares estimate `(X'X)^{-1} X'y`.
    pub fn ols(&self) -> Result<DVector<f64>> {
        let (inv, _, _) = spd_inverse(&self.xtx)?;
        Ok(inv * &self.xty)
    }

    /// Classical unbiased residual variance `RSS / (n - p - 1)`.
    pub fn residual_variance(&self) -> Result<f64> {
        let beta = self.ols()?;
        let df = (self.n - self.p).saturating_sub(1).max(1);
        Ok(self.rss(&beta) / df as f64)
    }

    /// Maps coefficients on the centered (and possibly scaled) predictors back
    /// to the original columns, returning `(intercept, slopes)`.
    pub fn to_original_scale(&self, beta: &DVector<f64>) -> (f64, DVector<f64>) {
        let slopes = beta.component_div(&self.x_scales);
        let intercept = self.y_mean - self.x_means.dot(&slopes);
        (intercept, slopes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_input_is_unchanged() {
        let x = DMatrix::from_column_slice(4, 1, &[-1.5, -0.5, 0.5, 1.5]);
        let y = [-1.0, 2.0, 0.0, -1.0];
        let d = center_data(&y, &x, false).unwrap();
        assert_eq!(d.y_mean, 0.0);
        assert_eq!(d.y.as_slice(), &y);
        assert_eq!(d.x, x);
    }

    #[test]
    fn three_point_example() {
        let x = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 2.0]);
        let d = center_data(&[1.0, 2.0, 3.0], &x, false).unwrap();
        assert_eq!(d.y.as_slice(), &[-1.0, 0.0, 1.0]);
        assert_eq!(d.x.as_slice(), &[-1.0, 0.0, 1.0]);
        let s = center_data(&[1.0, 2.0, 3.0], &x, true).unwrap();
        assert!((s.x.column(0).norm_squared() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn scaling_gives_unit_sample_variance() {
        let x = DMatrix::from_fn(10, 3, |i, j| ((i * (j + 2)) % 7) as f64 * (j + 1) as f64);
        let y: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let d = center_data(&y, &x, true).unwrap();
        for j in 0..3 {
            assert!(d.x.column(j).sum().abs() < 1e-12);
            assert!((d.x.column(j).norm_squared() - 9.0).abs() < 1e-12);
        }
        assert!(d.y.sum().abs() < 1e-10);
    }

    #[test]
    fn constant_column_is_rejected() {
        let x = DMatrix::from_fn(5, 2, |i, j| if j == 1 { 3.0 } else { i as f64 });
        let err = center_data(&[1.0, 2.0, 3.0, 4.0, 6.0], &x, false).unwrap_err();
        assert!(matches!(err, Error::DegeneratePredictor { column: 1 }));
    }

    #[test]
    fn requires_more_rows_than_columns() {
        let x = DMatrix::from_fn(2, 2, |i, j| (i + 2 * j) as f64);
        assert!(matches!(center_data(&[1.0, 2.0], &x, false), Err(Error::Dimension(_))));
    }

    #[test]
    fn back_transformation_reproduces_fitted_values() {
        let x = DMatrix::from_fn(8, 2, |i, j| (i as f64) * (j as f64 + 1.0) + ((i * 3 + j) % 4) as f64);
        let y: Vec<f64> = (0..8).map(|i| 2.0 + 0.5 * i as f64).collect();
        let d = center_data(&y, &x, true).unwrap();
        let beta = DVector::from_vec(vec![0.3, -0.2]);
        let (b0, b) = d.to_original_scale(&beta);
        let fitted_orig = x * &b + DVector::from_element(8, b0);
        let fitted_centered = &d.x * &beta + DVector::from_element(8, d.y_mean);
        assert!((fitted_orig - fitted_centered).amax() < 1e-12);
    }
}
