mod common;

use approx::assert_relative_eq;
use nalgebra::DMatrix;

use common::omega_bruteforce_2d;
use common::quad::integrate;
use orthant_enet::normconst::{expectation_term_diagonal, expectation_term_mc_sharded};
use orthant_enet::{omega_full, DependenceSpec, OmegaMethod, OmegaStrategy, PrecisionPack};

fn pack2(s: [[f64; 2]; 2]) -> PrecisionPack {
    PrecisionPack::from_sigma(DMatrix::from_row_slice(2, 2, &[s[0][0], s[0][1], s[1][0], s[1][1]])).unwrap()
}

#[test]
fn p1_closed_form_matches_direct_integral() {
    for &(s2, l1, l2, v) in &[(1.0, 1.0, 1.0, 1.0), (3.0, 6.0, 3.0, 0.5), (0.2, 10.0, 0.1, 4.0), (2.0, 0.01, 5.0, 1.0)] {
        let pack = DependenceSpec::Explicit(DMatrix::from_element(1, 1, v)).build(1, None).unwrap();
        let est = omega_full(s2, l1, l2, &pack, OmegaStrategy::DiagonalClosedForm).unwrap();
        let direct = 2.0 * integrate(|b| (-(l2 * b * b / v + l1 * b) / (2.0 * s2)).exp(), 0.0, 200.0);
        assert_relative_eq!(est.log_value, direct.ln(), epsilon = 1e-10);
        assert_eq!(est.method, OmegaMethod::DiagonalClosedForm);
        assert_eq!(est.std_error, 0.0);
    }
}

#[test]
fn zero_l1_penalty_gives_the_gaussian_integral() {
    let pack = DependenceSpec::Ar1 { rho: 0.3 }.build(3, None).unwrap();
    let e = expectation_term_diagonal(1.0, 0.0, 2.0, &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(e, 0.0);
    let mc = expectation_term_mc_sharded(1.0, 0.0, 2.0, &pack, 100, 1, 2).unwrap();
    assert_eq!(mc.log_value, 0.0);
}

#[test]
fn two_dimensional_mc_agrees_with_quadrature() {
    for (i, &(s2, l1, l2, s)) in [
        (3.0, 6.0, 3.0, [[1.0, 0.6], [0.6, 1.0]]),
        (1.0, 2.0, 1.0, [[1.5, -0.4], [-0.4, 0.8]]),
    ]
    .iter()
    .enumerate()
    {
        let oracle = omega_bruteforce_2d(s2, l1, l2, s);
        let est = omega_full(s2, l1, l2, &pack2(s), OmegaStrategy::MonteCarlo { samples: 400_000, seed: 5, shards: 2 })
            .unwrap();
        assert!(
            (est.log_value - oracle).abs() < 4.0 * est.std_error,
            "config {i}: {} vs {oracle} (se {})",
            est.log_value,
            est.std_error
        );
    }
}

#[test]
fn diagonal_closed_form_matches_2d_quadrature() {
    let s = [[1.3, 0.0], [0.0, 0.6]];
    let oracle = omega_bruteforce_2d(1.1, 2.2, 0.9, s);
    let est = omega_full(1.1, 2.2, 0.9, &pack2(s), OmegaStrategy::DiagonalClosedForm).unwrap();
    assert_relative_eq!(est.log_value, oracle, epsilon = 1e-8);
}

#[test]
fn sharded_mc_is_reproducible_and_rejects_bad_input() {
    let pack = pack2([[1.0, 0.5], [0.5, 1.0]]);
    let a = expectation_term_mc_sharded(1.0, 1.0, 1.0, &pack, 10_000, 3, 4).unwrap();
    let b = expectation_term_mc_sharded(1.0, 1.0, 1.0, &pack, 10_000, 3, 4).unwrap();
    assert_eq!(a.log_value, b.log_value);
    assert!(a.log_value < 0.0 && a.std_error > 0.0);
    assert!(expectation_term_mc_sharded(1.0, 1.0, 1.0, &pack, 10_000, 3, 0).is_err());
    assert!(omega_full(1.0, 1.0, 1.0, &pack, OmegaStrategy::DiagonalClosedForm).is_err());
    assert!(expectation_term_diagonal(-1.0, 1.0, 1.0, &[1.0]).is_err());
}
