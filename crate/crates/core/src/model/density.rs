use nalgebra::{DMatrix, DVector};

use super::data::RegressionData;
use super::dependence::{spd_inverse, PrecisionPack};
use crate::{Error, Result};

/// Sign vector identifying an orthant; every entry is +1 or -1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter("sign vector entries must be +1 or -1".into()));
        }
        Ok(Self(signs))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.0.len(), self.0.iter().map(|&s| f64::from(s)))
    }

    /// True when every coordinate of `beta` lies in this orthant.
    pub fn contains(&self, beta: &DVector<f64>) -> bool {
        beta.len() == self.len()
            && beta
                .iter()
                .zip(&self.0)
                .all(|(&b, &s)| if s > 0 { b >= 0.0 } else { b < 0.0 })
    }

    /// All `2^p` orthants in a fixed order.
    pub fn all(p: usize) -> Vec<SignVector> {
        assert!(p < 24, "orthant enumeration is limited to small p");
        (0..1usize << p)
            .map(|mask| SignVector((0..p).map(|j| if mask >> j & 1 == 0 { 1 } else { -1 }).collect()))
            .collect()
    }
}

/// Orthant containing `beta`; zero (including -0.0) maps to +1.
pub fn orthant_of(beta: &DVector<f64>) -> SignVector {
    SignVector(beta.iter().map(|&b| if b >= 0.0 { 1 } else { -1 }).collect())
}

/// Log prior density of β up to a β-free constant:
/// `-(λ2 β'Ωβ + λ1 |β|_1) / (2σ²)`.
pub fn log_prior_density_unnorm(
    beta: &DVector<f64>,
    sigma2: f64,
    lambda1: f64,
    lambda2: f64,
    pack: &PrecisionPack,
) -> f64 {
    debug_assert!(sigma2 > 0.0 && lambda1 >= 0.0 && lambda2 > 0.0);
    let l1 = beta.iter().map(|b| b.abs()).sum::<f64>();
    -(lambda2 * pack.quad_form(beta) + lambda1 * l1) / (2.0 * sigma2)
}

/// Location and dependence of the normal component attached to orthant `z`.
/// The component covariance is `sigma_z_scale * shape`.
#[derive(Debug, Clone)]
pub struct OrthantParams {
    pub z: SignVector,
    pub mu_z: DVector<f64>,
    pub sigma_z_scale: f64,
    pub shape: DMatrix<f64>,
    /// Generalized ridge estimate `G X'y` (posterior parameters only).
    pub ridge: Option<DVector<f64>>,
}

impl OrthantParams {
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.shape * self.sigma_z_scale
    }
}

pub fn prior_orthant_params(
    z: &SignVector,
    sigma2: f64,
    lambda1: f64,
    lambda2: f64,
    pack: &PrecisionPack,
) -> Result<OrthantParams> {
    if z.len() != pack.dim() {
        return Err(Error::Dimension(format!("sign vector has length {} but p = {}", z.len(), pack.dim())));
    }
    let mu_z = (&pack.sigma_mat * z.to_vector()) * (-lambda1 / (2.0 * lambda2));
    Ok(OrthantParams {
        z: z.clone(),
        mu_z,
        sigma_z_scale: sigma2 / lambda2,
        shape: pack.sigma_mat.clone(),
        ridge: None,
    })
}

pub fn posterior_orthant_params(
    z: &SignVector,
    data: &RegressionData,
    sigma2: f64,
    lambda1: f64,
    lambda2: f64,
    pack: &PrecisionPack,
) -> Result<OrthantParams> {
    if z.len() != data.p || pack.dim() != data.p {
        return Err(Error::Dimension("sign vector, data and dependence matrix disagree on p".into()));
    }
    let a = &pack.omega * lambda2 + data.xtx();
    let (g, _, _) = spd_inverse(&a).map_err(|e| Error::Numeric(format!("posterior precision: {e}")))?;
    let ridge = &g * data.xty();
    let mu_z = &ridge - (&g * z.to_vector()) * (lambda1 / 2.0);
    Ok(OrthantParams {
        z: z.clone(),
        mu_z,
        sigma_z_scale: sigma2,
        shape: g,
        ridge: Some(ridge),
    })
}
