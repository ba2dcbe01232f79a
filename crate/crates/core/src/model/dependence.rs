use nalgebra::{DMatrix, DVector};

use super::data::RegressionData;
use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;

/// How the shared dependence matrix Σ is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum DependenceSpec {
    Identity,
    /// Σ = scale · (X'X)^{-1}; `scale = n` gives the unit-information choice.
    GPrior { scale: f64 },
    /// Σ_jk = ρ^{|j-k|}.
    Ar1 { rho: f64 },
    Block(BlockSpec),
    Explicit(DMatrix<f64>),
}

/// Block-structured Σ: contiguous blocks with a common diagonal and
/// within-block value, plus optional constant values linking block pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    pub sizes: Vec<usize>,
    pub diag: f64,
    pub within: f64,
    pub links: Vec<BlockLink>,
}

/// Constant entry shared by every cell between blocks `a` and `b` (0-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockLink {
    pub a: usize,
    pub b: usize,
    pub value: f64,
}

/// Σ together with Ω = Σ^{-1}, the lower Cholesky factor of Σ and log|Σ|.
#[derive(Debug, Clone)]
pub struct PrecisionPack {
    pub sigma_mat: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub chol_sigma: DMatrix<f64>,
    pub log_det_sigma: f64,
}

impl BlockSpec {
    pub fn dim(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::InvalidParameter("block sizes must be positive".into()));
        }
        let nb = self.sizes.len();
        let mut starts = Vec::with_capacity(nb);
        let mut acc = 0;
        for &s in &self.sizes {
            starts.push(acc);
            acc += s;
        }
        let block_of = |i: usize| starts.iter().rposition(|&s| s <= i).unwrap_or(0);
        let mut link = DMatrix::<f64>::zeros(nb, nb);
        for l in &self.links {
            if l.a >= nb || l.b >= nb || l.a == l.b {
                return Err(Error::InvalidParameter(format!(
                    "block link ({}, {}) is invalid for {nb} blocks",
                    l.a, l.b
                )));
            }
            link[(l.a, l.b)] = l.value;
            link[(l.b, l.a)] = l.value;
        }
        let p = acc;
        Ok(DMatrix::from_fn(p, p, |i, j| {
            let (bi, bj) = (block_of(i), block_of(j));
            if i == j {
                self.diag
            } else if bi == bj {
                self.within
            } else {
                link[(bi, bj)]
            }
        }))
    }
}

impl DependenceSpec {
    /// Materializes Σ for dimension `p`. The g-prior form needs the data.
    pub fn sigma_matrix(&self, p: usize, data: Option<&RegressionData>) -> Result<DMatrix<f64>> {
        let m = match self {
            DependenceSpec::Identity => DMatrix::identity(p, p),
            DependenceSpec::GPrior { scale } => {
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::InvalidParameter(format!("g-prior scale must be positive, got {scale}")));
                }
                let d = data.ok_or_else(|| {
                    Error::InvalidParameter("g-prior dependence requires regression data".into())
                })?;
                let (inv, _, _) = spd_inverse(d.xtx())?;
                inv * *scale
            }
            DependenceSpec::Ar1 { rho } => {
                if !(0.0..1.0).contains(rho) {
                    return Err(Error::InvalidParameter(format!("AR(1) rho must lie in [0, 1), got {rho}")));
                }
                DMatrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32))
            }
            DependenceSpec::Block(b) => b.matrix()?,
            DependenceSpec::Explicit(m) => m.clone(),
        };
        if m.nrows() != p || m.ncols() != p {
            return Err(Error::Dimension(format!(
                "dependence matrix is {}x{} but the model has p = {p}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(m)
    }

    pub fn build(&self, p: usize, data: Option<&RegressionData>) -> Result<PrecisionPack> {
        PrecisionPack::from_sigma(self.sigma_matrix(p, data)?)
    }
}

/// Builds the precision pack for `spec` with the dimension taken from `data`.
pub fn build_dependence(spec: &DependenceSpec, data: &RegressionData) -> Result<PrecisionPack> {
    spec.build(data.p, Some(data))
}

impl PrecisionPack {
    pub fn from_sigma(sigma: DMatrix<f64>) -> Result<Self> {
        if !sigma.is_square() || sigma.nrows() == 0 {
            return Err(Error::Dimension("dependence matrix must be square and non-empty".into()));
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("dependence matrix has non-finite entries".into()));
        }
        let scale = sigma.amax();
        let p = sigma.nrows();
        for i in 0..p {
            for j in 0..i {
                if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidParameter(format!(
                        "dependence matrix is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let sigma = (&sigma + sigma.transpose()) * 0.5;
        let (omega, chol, log_det) = spd_inverse(&sigma)?;
        Ok(Self {
            sigma_mat: sigma,
            omega,
            chol_sigma: chol,
            log_det_sigma: log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma_mat.nrows()
    }

    /// True when every off-diagonal entry of Σ is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        let p = self.dim();
        (0..p).all(|i| (0..p).all(|j| i == j || self.sigma_mat[(i, j)] == 0.0))
    }

    /// `β'Ωβ`.
    pub fn quad_form(&self, beta: &DVector<f64>) -> f64 {
        beta.dot(&(&self.omega * beta))
    }
}

/// Lower Cholesky factor with a relative pivot tolerance. Failure reports
/// the 1-based order of the first leading minor that is not positive.
pub fn cholesky_lower(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = m.nrows();
    let mut l = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > PIVOT_TOL * m[(j, j)].abs()) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { minor: j + 1, pivot: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..p {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive definite matrix via its Cholesky factor.
/// Returns `(inverse, lower factor, log determinant)`.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>, f64)> {
    let l = cholesky_lower(m)?;
    let p = m.nrows();
    let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let l_inv = l
        .solve_lower_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::Numeric("triangular solve failed".into()))?;
    let inv = l_inv.tr_mul(&l_inv);
    let inv = (&inv + inv.transpose()) * 0.5;
    Ok((inv, l, log_det))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn identity_pack() {
        let pack = DependenceSpec::Identity.build(3, None).unwrap();
        assert_eq!(pack.omega, DMatrix::identity(3, 3));
        assert_eq!(pack.log_det_sigma, 0.0);
        assert!(pack.is_diagonal());
    }

    #[test]
    fn ar1_inverse_matches_hand_inversion() {
        let pack = DependenceSpec::Ar1 { rho: 0.5 }.build(3, None).unwrap();
        let o = &pack.omega;
        assert!((o[(0, 0)] - 4.0 / 3.0).abs() < 1e-12);
        assert!((o[(1, 1)] - 5.0 / 3.0).abs() < 1e-12);
        assert!((o[(0, 1)] + 2.0 / 3.0).abs() < 1e-12);
        assert!(o[(0, 2)].abs() < 1e-12);
        assert!((pack.sigma_mat[(0, 2)] - 0.25).abs() < 1e-15);
        // |Σ| = (1 - ρ²)^{p-1}
        assert!((pack.log_det_sigma - 2.0 * (0.75f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn pack_invariants_hold() {
        let spec = DependenceSpec::Block(BlockSpec {
            sizes: vec![3, 4, 2],
            diag: 1.0,
            within: 0.5,
            links: vec![BlockLink { a: 0, b: 2, value: 0.3 }],
        });
        let pack = spec.build(9, None).unwrap();
        let id = DMatrix::identity(9, 9);
        assert!(rel_frob(&(&pack.sigma_mat * &pack.omega), &id) < 1e-8);
        let llt = &pack.chol_sigma * pack.chol_sigma.transpose();
        assert!(rel_frob(&llt, &pack.sigma_mat) < 1e-10);
        assert_eq!(pack.sigma_mat[(0, 7)], 0.3);
        assert_eq!(pack.sigma_mat[(3, 7)], 0.0);
        assert_eq!(pack.sigma_mat[(4, 5)], 0.5);
    }

    #[test]
    fn names_failing_minor() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        match PrecisionPack::from_sigma(m) {
            Err(Error::NotPositiveDefinite { minor, .. }) => assert_eq!(minor, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_asymmetric_and_bad_rho() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.1, 1.0]);
        assert!(matches!(PrecisionPack::from_sigma(m), Err(Error::InvalidParameter(_))));
        assert!(DependenceSpec::Ar1 { rho: 1.0 }.build(2, None).is_err());
        assert!(DependenceSpec::Ar1 { rho: -0.1 }.build(2, None).is_err());
        assert!(DependenceSpec::GPrior { scale: 1.0 }.build(2, None).is_err());
    }

    #[test]
    fn explicit_dimension_mismatch() {
        let spec = DependenceSpec::Explicit(DMatrix::identity(2, 2));
        assert!(matches!(spec.build(3, None), Err(Error::Dimension(_))));
    }
}
