use nalgebra::{DMatrix, DVector};

use crate::model::{spd_inverse, RegressionData};
use crate::{Error, Result};

/// Multivariate t posterior of β under Zellner's g prior.
#[derive(Debug, Clone)]
pub struct ZellnerPosterior {
    pub location: DVector<f64>,
    pub scale: DMatrix<f64>,
    pub df: f64,
    pub s2_g: f64,
}

impl ZellnerPosterior {
    pub fn marginal_sd(&self, j: usize) -> f64 {
        (self.scale[(j, j)] * self.df / (self.df - 2.0)).sqrt()
    }
}

/// Location `g/(1+g) β_ols`, scale `g/(1+g) s²_g (X'X)^{-1}` and `n - 1`
/// degrees of freedom, where
/// `s²_g = (y'(I - g/(1+g) P_X) y + ν_b) / (n - 1 + ν_a)`.
pub fn zellner_posterior(data: &RegressionData, g: f64, nu_a: f64, nu_b: f64) -> Result<ZellnerPosterior> {
    zellner_posterior_with_df(data, g, nu_a, nu_b, data.n as f64 - 1.0)
}

pub fn zellner_posterior_with_df(
    data: &RegressionData,
    g: f64,
    nu_a: f64,
    nu_b: f64,
    df: f64,
) -> Result<ZellnerPosterior> {
    if !(g > 0.0 && nu_a > 0.0 && nu_b > 0.0 && df > 0.0) {
        return Err(Error::InvalidParameter("g, nu_a, nu_b and df must be positive".into()));
    }
    let (xtx_inv, _, _) = spd_inverse(data.xtx())?;
    let ols = &xtx_inv * data.xty();
    let shrink = g / (1.0 + g);
    // y' P_X y = (X'y)' (X'X)^{-1} X'y
    let explained = data.xty().dot(&ols);
    let s2_g = (data.yty() - shrink * explained + nu_b) / (data.n as f64 - 1.0 + nu_a);
    Ok(ZellnerPosterior {
        location: ols * shrink,
        scale: xtx_inv * (shrink * s2_g),
        df,
        s2_g,
    })
}
