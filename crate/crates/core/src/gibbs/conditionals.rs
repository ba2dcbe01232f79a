use nalgebra::DVector;
use rand::Rng;

use crate::dist::{
    gamma_logpdf, inv_gamma_logpdf, log_phi_ratio, mhn_log_normalizer, mhn_logpdf_unnorm,
    sample_gamma, sample_inv_gamma, sample_mhn, sample_trunc_normal, trunc_normal_logpdf,
    MhnParams, TruncSide,
};
use crate::model::{Hyperparams, ModelState, PrecisionPack, RegressionData, Scaling};
use crate::{Error, Result};

/// Two-piece full conditional of one coefficient:
/// `(1 - phi) N-(mu_minus, s2) + phi N+(mu_plus, s2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaFullConditional {
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub s2: f64,
    pub phi: f64,
    /// `log(phi / (1 - phi))`, kept so both weights stay accurate near 0 and 1.
    pub log_odds: f64,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl BetaFullConditional {
    /// Builds the conditional from the unpenalized numerator `base`, the
    /// precision-like denominator `denom` and the ℓ1 shift `pen`.
    pub(crate) fn from_parts(base: f64, denom: f64, pen: f64, sigma2: f64) -> Self {
        let mu_plus = (base - pen) / denom;
        let mu_minus = (base + pen) / denom;
        let s2 = sigma2 / denom;
        let s = s2.sqrt();
        let log_odds = log_phi_ratio(mu_plus / s) - log_phi_ratio(-mu_minus / s);
        Self {
            mu_plus,
            mu_minus,
            s2,
            phi: logistic(log_odds),
            log_odds,
        }
    }

    pub fn log_phi(&self) -> f64 {
        -softplus(-self.log_odds)
    }

    pub fn log_one_minus_phi(&self) -> f64 {
        -softplus(self.log_odds)
    }

    pub fn logpdf(&self, x: f64) -> f64 {
        let s = self.s2.sqrt();
        if x >= 0.0 {
            self.log_phi() + trunc_normal_logpdf(x, self.mu_plus, s, TruncSide::NonNegative)
        } else {
            self.log_one_minus_phi() + trunc_normal_logpdf(x, self.mu_minus, s, TruncSide::Negative)
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.logpdf(x).exp()
    }

    /// Mean of the two-piece mixture.
    pub fn mean(&self) -> f64 {
        let s = self.s2.sqrt();
        let upper = self.mu_plus + s * (-log_phi_ratio(self.mu_plus / s)).exp();
        let lower = self.mu_minus - s * (-log_phi_ratio(-self.mu_minus / s)).exp();
        self.phi * upper + (1.0 - self.phi) * lower
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let s = self.s2.sqrt();
        let u: f64 = rng.random();
        if u < self.phi {
            sample_trunc_normal(self.mu_plus, s, TruncSide::NonNegative, rng)
        } else {
            sample_trunc_normal(self.mu_minus, s, TruncSide::Negative, rng)
        }
    }
}

/// Running products `X'X β` and `Ωβ` used by the coordinate sweep.
#[derive(Debug, Clone)]
pub(crate) struct SweepCache {
    gram_beta: Option<DVector<f64>>,
    omega_beta: DVector<f64>,
}

impl SweepCache {
    pub(crate) fn new(beta: &DVector<f64>, data: Option<&RegressionData>, pack: &PrecisionPack) -> Self {
        Self {
            gram_beta: data.map(|d| d.xtx() * beta),
            omega_beta: &pack.omega * beta,
        }
    }

    fn shift(&mut self, j: usize, delta: f64, data: Option<&RegressionData>, pack: &PrecisionPack) {
        if delta == 0.0 {
            return;
        }
        if let (Some(g), Some(d)) = (self.gram_beta.as_mut(), data) {
            g.axpy(delta, &d.xtx().column(j), 1.0);
        }
        self.omega_beta.axpy(delta, &pack.omega.column(j), 1.0);
    }
}

fn penalty_shift(state: &ModelState, scaling: Scaling) -> f64 {
    match scaling {
        Scaling::Common => state.lambda1 / 2.0,
        Scaling::Differential => state.sigma2.sqrt() * state.lambda1,
    }
}

pub(crate) fn cached_conditional(
    j: usize,
    state: &ModelState,
    data: Option<&RegressionData>,
    pack: &PrecisionPack,
    scaling: Scaling,
    cache: &SweepCache,
) -> BetaFullConditional {
    let bj = state.beta[j];
    let l2 = state.lambda2;
    let ojj = pack.omega[(j, j)];
    let mut denom = l2 * ojj;
    let mut base = -l2 * (cache.omega_beta[j] - ojj * bj);
    if let (Some(d), Some(g)) = (data, cache.gram_beta.as_ref()) {
        let xjj = d.xtx()[(j, j)];
        denom += xjj;
        base += d.xty()[j] - (g[j] - xjj * bj);
    }
    BetaFullConditional::from_parts(base, denom, penalty_shift(state, scaling), state.sigma2)
}

/// Full conditional of `β_j` given everything else under the posterior.
pub fn beta_conditional(
    j: usize,
    state: &ModelState,
    data: &RegressionData,
    pack: &PrecisionPack,
    scaling: Scaling,
) -> BetaFullConditional {
    let cache = SweepCache::new(&state.beta, Some(data), pack);
    cached_conditional(j, state, Some(data), pack, scaling, &cache)
}

/// Full conditional of `β_j` under the prior (no likelihood contribution).
pub fn prior_beta_conditional(
    j: usize,
    state: &ModelState,
    pack: &PrecisionPack,
    scaling: Scaling,
) -> BetaFullConditional {
    let cache = SweepCache::new(&state.beta, None, pack);
    cached_conditional(j, state, None, pack, scaling, &cache)
}

/// One sweep over the coordinates in `order`, updating `state.beta` in place.
/// Returns the conditional used for each coordinate, indexed by coordinate.
pub(crate) fn sweep_in_order<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: Option<&RegressionData>,
    pack: &PrecisionPack,
    scaling: Scaling,
    order: &[usize],
    rng: &mut R,
) -> Vec<BetaFullConditional> {
    let p = state.beta.len();
    let mut cache = SweepCache::new(&state.beta, data, pack);
    let mut used = vec![
        BetaFullConditional {
            mu_plus: 0.0,
            mu_minus: 0.0,
            s2: 1.0,
            phi: 0.5,
            log_odds: 0.0,
        };
        p
    ];
    for &j in order {
        let cond = cached_conditional(j, state, data, pack, scaling, &cache);
        let new = cond.sample(rng);
        cache.shift(j, new - state.beta[j], data, pack);
        state.beta[j] = new;
        used[j] = cond;
    }
    used
}

/// Systematic-scan sweep `j = 1..p` over the posterior (or the prior when
/// `data` is `None`).
pub fn sample_beta_sweep<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: Option<&RegressionData>,
    pack: &PrecisionPack,
    scaling: Scaling,
    rng: &mut R,
) -> Vec<BetaFullConditional> {
    let order: Vec<usize> = (0..state.beta.len()).collect();
    sweep_in_order(state, data, pack, scaling, &order, rng)
}

/// Full conditional of a scalar parameter, recorded for Rao-Blackwellization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarConditional {
    InvGamma { shape: f64, rate: f64 },
    Gamma { shape: f64, rate: f64 },
    /// σ² = 1/x² with x modified half-normal.
    InvSquareMhn(MhnParams),
    /// The parameter was held fixed.
    Fixed(f64),
}

impl ScalarConditional {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ScalarConditional::InvGamma { shape, rate } => sample_inv_gamma(shape, rate, rng),
            ScalarConditional::Gamma { shape, rate } => sample_gamma(shape, rate, rng),
            ScalarConditional::InvSquareMhn(m) => {
                let x = sample_mhn(m, rng);
                1.0 / (x * x)
            }
            ScalarConditional::Fixed(v) => v,
        }
    }

    /// Log normalizing constant of the unnormalized density used by
    /// [`Self::log_density_with`]; only the MHN case needs it.
    pub fn log_normalizer(&self) -> Result<f64> {
        match *self {
            ScalarConditional::InvSquareMhn(m) => mhn_log_normalizer(m),
            ScalarConditional::Fixed(_) => Err(Error::Contract("fixed parameter has no density".into())),
            _ => Ok(0.0),
        }
    }

    pub fn log_density_with(&self, v: f64, log_norm: f64) -> f64 {
        match *self {
            ScalarConditional::InvGamma { shape, rate } => inv_gamma_logpdf(v, shape, rate),
            ScalarConditional::Gamma { shape, rate } => gamma_logpdf(v, shape, rate),
            ScalarConditional::InvSquareMhn(m) => {
                if v <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let x = 1.0 / v.sqrt();
                mhn_logpdf_unnorm(x, m) - log_norm + (0.5f64).ln() - 1.5 * v.ln()
            }
            ScalarConditional::Fixed(_) => f64::NAN,
        }
    }

    pub fn log_density(&self, v: f64) -> Result<f64> {
        Ok(self.log_density_with(v, self.log_normalizer()?))
    }
}

fn quad_terms(state: &ModelState, data: Option<&RegressionData>, pack: &PrecisionPack) -> (f64, f64, f64) {
    let rss = data.map_or(0.0, |d| d.rss(&state.beta));
    (rss, pack.quad_form(&state.beta), state.l1_norm())
}

/// Full conditional of σ² (posterior when `data` is given, prior otherwise).
pub fn sigma2_conditional(
    state: &ModelState,
    data: Option<&RegressionData>,
    pack: &PrecisionPack,
    hyper: &Hyperparams,
) -> Result<ScalarConditional> {
    let p = state.beta.len() as f64;
    let n_extra = data.map_or(0.0, |d| d.n as f64 - 1.0);
    let (rss, q, l1) = quad_terms(state, data, pack);
    match hyper.scaling {
        Scaling::Common => Ok(ScalarConditional::InvGamma {
            shape: (n_extra + p + hyper.nu_a) / 2.0,
            rate: (rss + state.lambda2 * q + state.lambda1 * l1 + hyper.nu_b) / 2.0,
        }),
        Scaling::Differential => Ok(ScalarConditional::InvSquareMhn(MhnParams::new(
            p + hyper.nu_a + n_extra,
            (rss + state.lambda2 * q + hyper.nu_b) / 2.0,
            state.lambda1 * l1,
        )?)),
    }
}

/// Full conditional of λ1 (λ1* under differential scaling).
pub fn lambda1_conditional(state: &ModelState, hyper: &Hyperparams) -> ScalarConditional {
    let l1 = state.l1_norm();
    let rate = match hyper.scaling {
        Scaling::Common => (l1 / state.sigma2 + hyper.nu_1) / 2.0,
        Scaling::Differential => l1 / state.sigma2.sqrt() + hyper.nu_1 / 2.0,
    };
    ScalarConditional::Gamma { shape: hyper.l, rate }
}

pub fn lambda2_conditional(state: &ModelState, pack: &PrecisionPack, hyper: &Hyperparams) -> ScalarConditional {
    let p = state.beta.len() as f64;
    ScalarConditional::Gamma {
        shape: hyper.r + p / 2.0,
        rate: (pack.quad_form(&state.beta) / state.sigma2 + hyper.nu_2) / 2.0,
    }
}

fn require(hyper: &Hyperparams, scaling: Scaling, what: &str) -> Result<()> {
    if hyper.scaling == scaling {
        Ok(())
    } else {
        Err(Error::Contract(format!("{what} requires {scaling:?} scaling")))
    }
}

/// σ² draw under common scaling.
pub fn sample_sigma2_posterior<R: Rng + ?Sized>(
    state: &ModelState,
    data: &RegressionData,
    pack: &PrecisionPack,
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<f64> {
    require(hyper, Scaling::Common, "sample_sigma2_posterior")?;
    Ok(sigma2_conditional(state, Some(data), pack, hyper)?.sample(rng))
}

/// σ² draw under differential scaling, obtained by sampling 1/σ.
pub fn sample_inv_sigma_mhn<R: Rng + ?Sized>(
    state: &ModelState,
    data: &RegressionData,
    pack: &PrecisionPack,
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<f64> {
    require(hyper, Scaling::Differential, "sample_inv_sigma_mhn")?;
    Ok(sigma2_conditional(state, Some(data), pack, hyper)?.sample(rng))
}

pub fn sample_lambda1_posterior<R: Rng + ?Sized>(state: &ModelState, hyper: &Hyperparams, rng: &mut R) -> Result<f64> {
    require(hyper, Scaling::Common, "sample_lambda1_posterior")?;
    Ok(lambda1_conditional(state, hyper).sample(rng))
}

pub fn sample_lambda1star<R: Rng + ?Sized>(state: &ModelState, hyper: &Hyperparams, rng: &mut R) -> Result<f64> {
    require(hyper, Scaling::Differential, "sample_lambda1star")?;
    Ok(lambda1_conditional(state, hyper).sample(rng))
}

pub fn sample_lambda2_posterior<R: Rng + ?Sized>(
    state: &ModelState,
    pack: &PrecisionPack,
    hyper: &Hyperparams,
    rng: &mut R,
) -> f64 {
    lambda2_conditional(state, pack, hyper).sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::quad::integrate;
    use crate::model::{center_data, DependenceSpec};
    use crate::rng::stream_rng;
    use nalgebra::DMatrix;

    fn toy(n: usize, p: usize) -> RegressionData {
        let x = DMatrix::from_fn(n, p, |i, j| ((i * 37 + j * 17) % 23) as f64 / 7.0 - 1.5 + (j as f64) * 0.1 * (i as f64).sin());
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos() * 2.0 + x[(i, 0)]).collect();
        center_data(&y, &x, false).unwrap()
    }

    fn state(beta: &[f64], sigma2: f64, lambda1: f64, lambda2: f64) -> ModelState {
        ModelState {
            beta: DVector::from_column_slice(beta),
            sigma2,
            lambda1,
            lambda2,
        }
    }

    #[test]
    fn zero_l1_collapses_to_single_normal() {
        let data = toy(12, 3);
        let pack = DependenceSpec::Ar1 { rho: 0.4 }.build(3, None).unwrap();
        let st = state(&[0.2, -0.3, 0.5], 1.3, 0.0, 0.7);
        let c = beta_conditional(1, &st, &data, &pack, Scaling::Common);
        assert_eq!(c.mu_plus, c.mu_minus);
        let expect = crate::dist::log_norm_cdf(c.mu_plus / c.s2.sqrt()).exp();
        assert!((c.phi - expect).abs() < 1e-14);
    }

    #[test]
    fn iid_prior_matches_standard_elastic_net() {
        let data = toy(15, 3);
        let pack = DependenceSpec::Identity.build(3, None).unwrap();
        let st = state(&[0.4, -1.1, 0.3], 0.9, 1.7, 2.1);
        let r = data.y.clone() - &data.x * &st.beta;
        for j in 0..3 {
            let c = beta_conditional(j, &st, &data, &pack, Scaling::Common);
            let xj = data.x.column(j);
            let denom = xj.norm_squared() + st.lambda2;
            let partial = xj.dot(&r) + xj.norm_squared() * st.beta[j];
            assert!((c.s2 - st.sigma2 / denom).abs() < 1e-14);
            assert!((c.mu_plus - (partial - st.lambda1 / 2.0) / denom).abs() < 1e-12);
            assert!((c.mu_minus - (partial + st.lambda1 / 2.0) / denom).abs() < 1e-12);
        }
    }

    #[test]
    fn g_prior_simplification() {
        let data = toy(20, 3);
        let pack = DependenceSpec::GPrior { scale: 1.0 }.build(3, Some(&data)).unwrap();
        let st = state(&[0.4, -1.1, 0.3], 0.9, 1.7, 0.6);
        for j in 0..3 {
            let c = beta_conditional(j, &st, &data, &pack, Scaling::Common);
            let xjj = data.xtx()[(j, j)];
            assert!((c.s2 / (st.sigma2 / ((1.0 + st.lambda2) * xjj)) - 1.0).abs() < 1e-10);
            let cross: f64 = (0..3).filter(|&k| k != j).map(|k| data.xtx()[(j, k)] * st.beta[k]).sum();
            let mu = (data.xty()[j] - (1.0 + st.lambda2) * cross - st.lambda1 / 2.0) / ((1.0 + st.lambda2) * xjj);
            assert!((c.mu_plus - mu).abs() < 1e-10);
        }
    }

    #[test]
    fn matches_conditioning_the_orthant_normal() {
        let data = toy(18, 3);
        let pack = DependenceSpec::Ar1 { rho: 0.6 }.build(3, None).unwrap();
        let st = state(&[0.8, -0.2, 1.4], 1.1, 0.9, 1.6);
        let a = &pack.omega * st.lambda2 + data.xtx();
        let g = a.clone().try_inverse().unwrap();
        for j in 0..3 {
            let c = beta_conditional(j, &st, &data, &pack, Scaling::Common);
            for (zj, mu) in [(1.0, c.mu_plus), (-1.0, c.mu_minus)] {
                let mut z = DVector::from_element(3, 1.0);
                z[j] = zj;
                let mstar = &g * (data.xty() - z * (st.lambda1 / 2.0));
                let mut shift = 0.0;
                for k in 0..3 {
                    if k != j {
                        shift += a[(j, k)] * (st.beta[k] - mstar[k]);
                    }
                }
                let expect = mstar[j] - shift / a[(j, j)];
                assert!((mu - expect).abs() < 1e-10, "j={j} zj={zj}");
            }
            assert!((c.s2 - st.sigma2 / a[(j, j)]).abs() < 1e-14);
        }
    }

    #[test]
    fn phi_matches_quadrature_of_conditional() {
        let data = toy(10, 2);
        let pack = DependenceSpec::Ar1 { rho: 0.3 }.build(2, None).unwrap();
        for &(l1, b1) in &[(0.5, 0.3), (4.0, -0.8), (12.0, 2.0)] {
            let st = state(&[0.1, b1], 0.7, l1, 1.2);
            let c = beta_conditional(0, &st, &data, &pack, Scaling::Common);
            let denom = data.xtx()[(0, 0)] + st.lambda2 * pack.omega[(0, 0)];
            let mid = (c.mu_plus + c.mu_minus) / 2.0;
            let f = |x: f64| (-(denom * x * x - 2.0 * denom * mid * x + l1 * x.abs()) / (2.0 * st.sigma2)).exp();
            let pos = integrate(f, 0.0, 60.0);
            let neg = integrate(f, -60.0, 0.0);
            assert!((c.phi - pos / (pos + neg)).abs() < 1e-10);
            let total = integrate(|x| c.pdf(x), -60.0, 0.0) + integrate(|x| c.pdf(x), 0.0, 60.0);
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn extreme_weights_stay_finite() {
        let c = BetaFullConditional::from_parts(1e3, 1.0, 0.5, 1.0);
        assert_eq!(c.phi, 1.0);
        assert!(c.log_one_minus_phi().is_finite());
        let c = BetaFullConditional::from_parts(-1e3, 1.0, 0.5, 1.0);
        assert_eq!(c.phi, 0.0);
        assert!(c.log_phi().is_finite());
        assert!(c.logpdf(-1e3).is_finite());
    }

    #[test]
    fn differential_shift_uses_sigma() {
        let data = toy(10, 2);
        let pack = DependenceSpec::Identity.build(2, None).unwrap();
        let st = state(&[0.1, 0.2], 4.0, 0.75, 1.0);
        let d = beta_conditional(0, &st, &data, &pack, Scaling::Differential);
        let common = state(&[0.1, 0.2], 4.0, 2.0 * 2.0 * 0.75, 1.0);
        let c = beta_conditional(0, &common, &data, &pack, Scaling::Common);
        assert!((d.mu_plus - c.mu_plus).abs() < 1e-14 && (d.phi - c.phi).abs() < 1e-14);
    }

    #[test]
    fn scalar_conditionals_at_zero_beta() {
        let data = toy(10, 2);
        let pack = DependenceSpec::Identity.build(2, None).unwrap();
        let hyper = Hyperparams::new(3.0, 6.0, 2.0, 1.0, 1.5, 0.5).unwrap();
        let st = state(&[0.0, 0.0], 2.0, 1.0, 1.0);
        match sigma2_conditional(&st, Some(&data), &pack, &hyper).unwrap() {
            ScalarConditional::InvGamma { shape, rate } => {
                assert_eq!(shape, (10.0 + 2.0 + 3.0 - 1.0) / 2.0);
                assert!((rate - (data.yty() + 6.0) / 2.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(lambda1_conditional(&st, &hyper), ScalarConditional::Gamma { shape: 2.0, rate: 0.5 });
        assert_eq!(lambda2_conditional(&st, &pack, &hyper), ScalarConditional::Gamma { shape: 2.5, rate: 0.25 });
        let mut rng = stream_rng(1, 0);
        let diff = hyper.with_scaling(Scaling::Differential);
        assert!(sample_sigma2_posterior(&st, &data, &pack, &diff, &mut rng).is_err());
        assert!(sample_inv_sigma_mhn(&st, &data, &pack, &hyper, &mut rng).is_err());
        assert!(sample_lambda1_posterior(&st, &diff, &mut rng).is_err());
        assert!(sample_lambda1star(&st, &hyper, &mut rng).is_err());
    }

    #[test]
    fn inv_square_mhn_density_normalizes() {
        let c = ScalarConditional::InvSquareMhn(MhnParams::new(9.0, 3.0, 1.5).unwrap());
        let ln = c.log_normalizer().unwrap();
        let f = |v: f64| c.log_density_with(v, ln).exp();
        let total = integrate(f, 1e-9, 50.0) + integrate(f, 50.0, 1e7);
        assert!((total - 1.0).abs() < 1e-7, "{total}");
        assert!(ScalarConditional::Fixed(1.0).log_normalizer().is_err());
    }

    #[test]
    fn sweep_cache_matches_fresh_evaluation() {
        let data = toy(25, 4);
        let pack = DependenceSpec::Ar1 { rho: 0.5 }.build(4, None).unwrap();
        let mut st = state(&[0.1, 0.2, -0.3, 0.0], 1.0, 1.0, 1.0);
        let mut rng = stream_rng(3, 0);
        for _ in 0..20 {
            let before = st.clone();
            let conds = sample_beta_sweep(&mut st, Some(&data), &pack, Scaling::Common, &mut rng);
            let mut replay = before;
            for j in 0..4 {
                let fresh = beta_conditional(j, &replay, &data, &pack, Scaling::Common);
                assert!((fresh.mu_plus - conds[j].mu_plus).abs() < 1e-10);
                replay.beta[j] = st.beta[j];
            }
        }
    }
}
