mod common;

use common::gaussian;
use lmr_core::goodness::null_space_ascent;
use lmr_core::rip::{
    goodness_from_rip, guarantee_table, rip_exact_full_rank, rip_sample_lower, rip_sample_profile,
    GuaranteeStatus,
};
use lmr_core::LinearTransformation;

#[test]
fn sampled_estimate_matches_exact_value_at_full_order() {
    for k in 0..10u64 {
        let t = gaussian(4, 4, 20, 200 + k);
        let exact = rip_exact_full_rank(&t).unwrap();
        let est = rip_sample_lower(&t, 4, 2000, k).unwrap();
        assert!(est.delta_lower <= exact + 1e-8);
        assert!(
            (est.delta_lower - exact).abs() <= 0.05 * exact,
            "{} vs {exact}",
            est.delta_lower
        );
        assert_eq!(est.delta_exact, Some(exact));
    }
}

#[test]
fn sampled_estimates_are_monotone_in_s() {
    for k in 0..4u64 {
        let t = gaussian(3, 4, 9, 300 + k);
        let prof = rip_sample_profile(&t, 3, 500, k).unwrap();
        for w in prof.windows(2) {
            assert!(w[0].delta_lower <= w[1].delta_lower + 1e-9);
        }
        let exact = rip_exact_full_rank(&t).unwrap();
        assert!(prof.iter().all(|e| e.delta_lower <= exact + 1e-8));
    }
}

#[test]
fn isometry_has_zero_constants() {
    let t = LinearTransformation::vectorization(3, 3);
    for e in rip_sample_profile(&t, 3, 200, 1).unwrap() {
        assert!(e.delta_lower.abs() < 1e-12);
    }
    let est = rip_sample_lower(&t, 3, 10, 0).unwrap();
    let table = guarantee_table(Some(&est), Some(&est), Some(&est), Some(&est));
    assert!(table.iter().all(|e| e.status == GuaranteeStatus::Satisfied));
}

#[test]
fn rip_bound_dominates_null_space_lower_bound() {
    // With m = n = 2 and s = 1 the order 2s equals r, so δ_{2s} is exact.
    let mut checked = 0;
    for k in 0..20u64 {
        let p = 4 + (k % 5) as usize;
        let t = gaussian(2, 2, p, 700 + k);
        let delta = rip_exact_full_rank(&t).unwrap();
        let bound = goodness_from_rip(delta, 1).unwrap().gamma_hat_bound;
        let lower = null_space_ascent(&t, 1, 8, k).unwrap().value;
        assert!(bound >= lower - 1e-9, "instance {k}: {bound} < {lower}");
        checked += 1;
    }
    assert_eq!(checked, 20);
}

#[test]
fn boundary_value() {
    for s in 1..5 {
        let g = goodness_from_rip(std::f64::consts::SQRT_2 - 1.0, s).unwrap();
        assert!((g.gamma_hat_bound - 0.5).abs() < 1e-12);
        assert!(!g.certifying);
    }
}
