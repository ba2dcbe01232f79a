use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::model::{BlockLink, BlockSpec, DependenceSpec};
use crate::{Error, Result};

/// One data-generating configuration: rows of X are N(0, V) and
/// `y = X β + N(0, σ² I)`.
#[derive(Debug, Clone)]
pub struct SimSetting {
    pub id: usize,
    pub n: usize,
    pub p: usize,
    pub beta_true: DVector<f64>,
    pub sigma2_true: f64,
    pub v: DMatrix<f64>,
}

pub fn make_setting(id: usize) -> Result<SimSetting> {
    let (n, p, beta, sigma2, v) = match id {
        1 | 2 => {
            let beta = if id == 1 {
                vec![3.0, 1.5, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0]
            } else {
                vec![0.85; 8]
            };
            let v = DMatrix::from_fn(8, 8, |i, j| 0.5f64.powi(i.abs_diff(j) as i32));
            (20, 8, beta, 9.0, v)
        }
        3 => {
            let beta = (0..40).map(|j| if (j / 10) % 2 == 1 { 2.0 } else { 0.0 }).collect();
            let v = DMatrix::from_fn(40, 40, |i, j| if i == j { 1.0 } else { 0.5 });
            (100, 40, beta, 225.0, v)
        }
        4 => {
            let beta = (0..40).map(|j| if j < 15 { 3.0 } else { 0.0 }).collect();
            let v = DMatrix::from_fn(40, 40, |i, j| match (i == j, i < 15 && j < 15 && i / 5 == j / 5) {
                (true, _) if i < 15 => 1.01,
                (true, _) => 1.0,
                (false, true) => 1.0,
                (false, false) => 0.0,
            });
            (100, 40, beta, 225.0, v)
        }
        _ => return Err(Error::InvalidParameter(format!("simulation setting must be 1-4, got {id}"))),
    };
    Ok(SimSetting {
        id,
        n,
        p,
        beta_true: DVector::from_vec(beta),
        sigma2_true: sigma2,
        v,
    })
}

/// Symmetric square root of V from its eigendecomposition, with negative
/// eigenvalues clipped to zero.
fn psd_root(v: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(v.clone());
    let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Raw `(X, y)` for one replicate.
pub fn simulate_dataset<R: Rng + ?Sized>(setting: &SimSetting, rng: &mut R) -> (DMatrix<f64>, Vec<f64>) {
    simulate_dataset_scaled(setting, 1.0, rng)
}

/// As [`simulate_dataset`] with the noise standard deviation multiplied by
/// `noise_scale` (0 gives `y = X β` exactly).
pub fn simulate_dataset_scaled<R: Rng + ?Sized>(
    setting: &SimSetting,
    noise_scale: f64,
    rng: &mut R,
) -> (DMatrix<f64>, Vec<f64>) {
    let root = psd_root(&setting.v);
    let e = DMatrix::from_fn(setting.n, setting.p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = e * root;
    let sd = setting.sigma2_true.sqrt() * noise_scale;
    let mean = &x * &setting.beta_true;
    let y = mean.iter().map(|m| m + sd * rng.sample::<f64, _>(StandardNormal)).collect();
    (x, y)
}

/// Prior dependence matrix encoding the known coefficient pattern of a setting.
pub fn informative_sigma(id: usize) -> Result<DependenceSpec> {
    let spec = match id {
        1 => return Err(Error::Unsupported("setting 1 has no informative prior".into())),
        2 => BlockSpec {
            sizes: vec![8],
            diag: 1.0,
            within: 0.8,
            links: vec![],
        },
        3 => BlockSpec {
            sizes: vec![10; 4],
            diag: 1.0,
            within: 0.5,
            links: vec![BlockLink { a: 0, b: 2, value: 0.5 }, BlockLink { a: 1, b: 3, value: 0.5 }],
        },
        4 => BlockSpec {
            sizes: vec![15, 25],
            diag: 1.0,
            within: 0.5,
            links: vec![],
        },
        _ => return Err(Error::InvalidParameter(format!("simulation setting must be 1-4, got {id}"))),
    };
    Ok(DependenceSpec::Block(spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PrecisionPack;
    use crate::rng::stream_rng;

    #[test]
    fn setting_contents() {
        let s1 = make_setting(1).unwrap();
        assert_eq!(s1.beta_true[4], 2.0);
        assert_eq!(s1.v[(0, 7)], 0.5f64.powi(7));
        let s3 = make_setting(3).unwrap();
        assert_eq!(s3.beta_true.iter().filter(|&&b| b == 2.0).count(), 20);
        assert_eq!(s3.beta_true.iter().filter(|&&b| b != 0.0).count(), 20);
        let s4 = make_setting(4).unwrap();
        assert_eq!(s4.v[(0, 4)], 1.0);
        assert_eq!(s4.v[(4, 5)], 0.0);
        assert_eq!(s4.v[(14, 14)], 1.01);
        assert_eq!(s4.v[(15, 15)], 1.0);
        assert_eq!(s4.v[(20, 21)], 0.0);
        assert!(make_setting(0).is_err());
    }

    #[test]
    fn setting4_v_is_positive_definite() {
        let s4 = make_setting(4).unwrap();
        let eig = SymmetricEigen::new(s4.v.clone());
        let min = eig.eigenvalues.min();
        assert!((min - 0.01).abs() < 1e-10);
        assert!(PrecisionPack::from_sigma(s4.v).is_ok());
    }

    #[test]
    fn informative_matrices() {
        let s2 = informative_sigma(2).unwrap().build(8, None).unwrap();
        let mut eig: Vec<f64> = SymmetricEigen::new(s2.sigma_mat.clone()).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        assert!((eig[7] - 6.6).abs() < 1e-10);
        assert!(eig[..7].iter().all(|e| (e - 0.2).abs() < 1e-10));
        let s3 = informative_sigma(3).unwrap().build(40, None).unwrap();
        assert_eq!(s3.sigma_mat[(0, 20)], 0.5);
        assert_eq!(s3.sigma_mat[(0, 10)], 0.0);
        assert_eq!(s3.sigma_mat[(15, 35)], 0.5);
        assert_eq!(s3.sigma_mat[(0, 1)], 0.5);
        let s4 = informative_sigma(4).unwrap().build(40, None).unwrap();
        assert_eq!(s4.sigma_mat[(14, 15)], 0.0);
        assert_eq!(s4.sigma_mat[(16, 39)], 0.5);
        assert!(informative_sigma(1).is_err());
    }

    #[test]
    fn noiseless_hook_and_covariance() {
        let s = make_setting(2).unwrap();
        let mut rng = stream_rng(5, 0);
        let (x, y) = simulate_dataset_scaled(&s, 0.0, &mut rng);
        let fit = &x * &s.beta_true;
        assert!(y.iter().zip(fit.iter()).all(|(a, b)| a == b));

        let big = SimSetting { n: 10_000, ..make_setting(1).unwrap() };
        let (x, _) = simulate_dataset(&big, &mut rng);
        let cov = x.tr_mul(&x) / 10_000.0;
        assert!((cov - &big.v).amax() < 0.05);
    }
}
