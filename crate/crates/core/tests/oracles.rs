//! Independent oracles for the exact sums: direct numerical integration of
//! the beta-function moments and brute-force enumeration of outcome strings.

mod common;

use common::{close, enumerate_axis_error, likelihood, simpson};
use spinhalf::analytic::{bayes_joint_error, bayes_single_error};
use spinhalf::estimators::{beta_int, single_moments};

#[test]
fn beta_moments_match_direct_integration() {
    for n in 1..=20u64 {
        for r in 0..=n {
            let (i0, i1) = single_moments(r, n).unwrap();
            let d0 = simpson(|u| likelihood(r, n, u), 20_000);
            let d1 = simpson(|u| u * likelihood(r, n, u), 20_000);
            assert!(close(i0, d0, 1e-9), "I0 n={n} r={r}: {i0} vs {d0}");
            // I1 can vanish (r = n/2), so compare on the scale of I0.
            assert!((i1 - d1).abs() <= 1e-9 * d0, "I1 n={n} r={r}: {i1} vs {d1}");
        }
    }
}

#[test]
fn identity_without_the_extra_factor_is_wrong() {
    // 4B(r+2, N−r) − 2B(r+1, N−r+1) drops a factor of (1 − p) from the
    // first term; it disagrees with the integral for every r < N.
    let mut worst: f64 = 0.0;
    for n in 2..=10u64 {
        for r in 0..n {
            let printed = 4.0 * beta_int(r + 2, n - r) - 2.0 * beta_int(r + 1, n - r + 1);
            let direct = simpson(|u| u * likelihood(r, n, u), 20_000);
            let scale = simpson(|u| likelihood(r, n, u), 20_000);
            worst = worst.max((printed - direct).abs() / scale);
        }
    }
    assert!(worst > 0.1, "{worst}");
}

#[test]
fn single_observable_sum_equals_closed_form() {
    for n in 1..=50 {
        let e = bayes_single_error(n).unwrap();
        assert!(e.discrepancy() < 1e-10, "n={n}: {e:?}");
    }
}

#[test]
fn double_sum_matches_brute_force_enumeration() {
    for n in 1..=6usize {
        for c in [0.0, 0.3, 0.5, 0.8, 0.95, 1.0] {
            // The two observables enter symmetrically, so the total is twice
            // one axis; the enumeration does not group by counts.
            let brute = 2.0 * enumerate_axis_error(n, c);
            let sum = bayes_joint_error(n as u32, c, 64).unwrap();
            assert!((brute - sum).abs() < 1e-9, "n={n} c={c}: {brute} vs {sum}");
        }
    }
}

#[test]
fn enumeration_reproduces_the_limits() {
    for n in 1..=5usize {
        let nf = n as f64;
        assert!((2.0 * enumerate_axis_error(n, 0.0) - 4.0 / (3.0 * (nf + 2.0))).abs() < 1e-12);
        assert!((2.0 * enumerate_axis_error(n, 1.0) - 2.0 / (3.0 * (nf + 1.0))).abs() < 1e-12);
    }
}
