use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How the ℓ1 term is scaled relative to σ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    /// Penalty `(λ2 β'Ωβ + λ1 |β|_1) / (2σ²)`.
    #[default]
    Common,
    /// Penalty `λ2 β'Ωβ / (2σ²) + λ1* |β|_1 / σ`.
    Differential,
}

/// Base prior hyperparameters: σ² ~ IG(ν_a/2, ν_b/2), λ1 ~ Gamma(L, ν1/2),
/// λ2 ~ Gamma(R, ν2/2) (shape, rate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    pub nu_a: f64,
    pub nu_b: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub nu_1: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub nu_2: f64,
    #[serde(default)]
    pub scaling: Scaling,
}

impl Hyperparams {
    pub fn new(nu_a: f64, nu_b: f64, l: f64, nu_1: f64, r: f64, nu_2: f64) -> Result<Self> {
        let h = Self {
            nu_a,
            nu_b,
            l,
            nu_1,
            r,
            nu_2,
            scaling: Scaling::Common,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn with_scaling(mut self, scaling: Scaling) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("nu_a", self.nu_a),
            ("nu_b", self.nu_b),
            ("L", self.l),
            ("nu_1", self.nu_1),
            ("R", self.r),
            ("nu_2", self.nu_2),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("hyperparameter {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Uniform base prior on α: L = R = 1, ν1 = ν2 = 2, with σ² ~ IG(5, 2).
    pub fn base_uniform() -> Self {
        Self {
            nu_a: 10.0,
            nu_b: 4.0,
            l: 1.0,
            nu_1: 2.0,
            r: 1.0,
            nu_2: 2.0,
            scaling: Scaling::Common,
        }
    }

    /// ℓ1-regularized t prior: L = (p + ν2)/2 and R = ν2/2.
    pub fn l1_t(p: usize, nu_1: f64, nu_2: f64, nu_a: f64, nu_b: f64) -> Self {
        Self {
            nu_a,
            nu_b,
            l: (p as f64 + nu_2) / 2.0,
            nu_1,
            r: nu_2 / 2.0,
            nu_2,
            scaling: Scaling::Common,
        }
    }

    /// Hyperparameter settings 1-4 of the simulation study (ν_a = 3, ν_b = 6).
    pub fn study_setting(id: usize, p: usize) -> Result<Self> {
        let (l, nu_1, r, nu_2) = match id {
            1 => ((p as f64 + 1.0) / 2.0, 1.0, 1.0, 1.0),
            2 => ((p as f64 + 1.0) / 2.0, 0.1, 1.0, 1.0),
            3 => (1.0, 1.0, 1.0, 1.0),
            4 => (9.0, 1.0, 1.0, 1.0),
            _ => return Err(Error::InvalidParameter(format!("unknown hyperparameter setting {id}"))),
        };
        Self::new(3.0, 6.0, l, nu_1, r, nu_2)
    }
}

/// Current values of one chain. Under differential scaling `lambda1` holds λ1*.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub beta: DVector<f64>,
    pub sigma2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl ModelState {
    pub fn new(beta: DVector<f64>, sigma2: f64, lambda1: f64, lambda2: f64) -> Result<Self> {
        let s = Self {
            beta,
            sigma2,
            lambda1,
            lambda2,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter("beta must be finite".into()));
        }
        for (name, v) in [("sigma2", self.sigma2), ("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn l1_norm(&self) -> f64 {
        self.beta.iter().map(|b| b.abs()).sum()
    }
}
