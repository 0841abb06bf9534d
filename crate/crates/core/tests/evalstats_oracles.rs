use clinprog_core::evalstats::{fisher_exact_2x2, normal_quantile, wilson_interval};
use proptest::prelude::*;

mod support;
use support::wilson_monotone;
use statrs::distribution::{ContinuousCDF, Normal};

fn binom(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Exact two-sided Fisher p by integer enumeration.
fn fisher_oracle(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let (r1, r2, c1) = (a + b, c + d, a + c);
    let weight = |x: u64| binom(r1, x) * binom(r2, c1 - x);
    let observed = weight(a);
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let total: u128 = (lo..=hi).map(weight).sum();
    let tail: u128 = (lo..=hi).map(weight).filter(|&w| w <= observed).sum();
    tail as f64 / total as f64
}

#[test]
fn quantile_matches_statrs() {
    let n = Normal::new(0.0, 1.0).unwrap();
    for i in 1..1000 {
        let p = i as f64 / 1000.0;
        let ours = normal_quantile(p).unwrap();
        assert!((ours - n.inverse_cdf(p)).abs() < 1e-9, "p={p}");
    }
    for p in [1e-12, 1e-8, 1e-4, 1.0 - 1e-6] {
        let ours = normal_quantile(p).unwrap();
        assert!((n.cdf(ours) - p).abs() / p.min(1.0 - p) < 1e-8, "p={p}");
    }
}

#[test]
fn fisher_against_enumeration() {
    let cases = [(40, 0, 22, 18), (3, 1, 1, 3), (10, 2, 3, 15), (0, 5, 5, 0), (7, 7, 7, 7), (1, 9, 11, 3)];
    for (a, b, c, d) in cases {
        let p = fisher_exact_2x2(a, b, c, d).unwrap();
        let o = fisher_oracle(a, b, c, d);
        assert!((p - o).abs() < 1e-10, "{a} {b} {c} {d}: {p} vs {o}");
    }
    let p = fisher_exact_2x2(40, 0, 22, 18).unwrap();
    assert!(p < 1e-5, "{p}");
}

#[test]
fn wilson_closed_form() {
    let z = 1.959963984540054_f64;
    let (k, n) = (352.0, 398.0);
    let p = k / n;
    let c = (p + z * z / (2.0 * n)) / (1.0 + z * z / n);
    let h = z / (1.0 + z * z / n) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
    let (lo, hi) = wilson_interval(352, 398, 0.95).unwrap();
    assert!((lo - (c - h)).abs() < 1e-12);
    assert!((hi - (c + h)).abs() < 1e-12);
}

proptest! {
    #[test]
    fn fisher_symmetric_under_swaps(a in 0u64..30, b in 0u64..30, c in 0u64..30, d in 0u64..30) {
        prop_assume!(a + b > 0 && c + d > 0 && a + c > 0 && b + d > 0);
        let p = fisher_exact_2x2(a, b, c, d).unwrap();
        prop_assert!((p - fisher_exact_2x2(c, d, a, b).unwrap()).abs() < 1e-9);
        prop_assert!((p - fisher_exact_2x2(a, c, b, d).unwrap()).abs() < 1e-9);
        prop_assert!((p - fisher_oracle(a, b, c, d)).abs() < 1e-10);
        prop_assert!(p > 0.0 && p <= 1.0);
    }

    #[test]
    fn wilson_contains_point_and_narrows(k in 0u64..200, extra in 0u64..200, g in 0.5f64..0.999) {
        wilson_monotone(k, extra, g)?;
    }
}
