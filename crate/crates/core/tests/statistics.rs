mod support;

use proptest::prelude::*;

use clep::stats::{
    chi2_sf, friedman_test, median, signed_rank_sum_counts, significance_stars,
    wilcoxon_signed_rank, PairedSamples, WilcoxonMethod,
};

fn samples(rows: Vec<Vec<f64>>) -> PairedSamples {
    let k = rows[0].len();
    PairedSamples::new(
        (0..rows.len()).map(|i| format!("u{i}")).collect(),
        (0..k).map(|j| format!("t{j}")).collect(),
        rows,
    )
    .unwrap()
}

#[test]
fn chi2_sf_with_two_df_is_an_exponential_tail() {
    for x in [0.1, 1.0, 5.5, 20.0, 60.0] {
        let want = (-x / 2.0f64).exp();
        assert!(
            (chi2_sf(x, 2) - want).abs() <= 1e-12 * want.max(1e-300),
            "x={x}"
        );
    }
}

#[test]
fn chi2_sf_matches_the_insignificant_table_entries() {
    for (chi, p) in [(1.595, 0.451), (2.083, 0.353), (1.916, 0.384), (1.0, 0.607)] {
        assert!((chi2_sf(chi, 2) - p).abs() <= 1e-3, "chi={chi}");
    }
}

#[test]
fn stars_follow_the_thresholds() {
    assert_eq!(significance_stars(0.0005), "***");
    assert_eq!(significance_stars(0.005), "**");
    assert_eq!(significance_stars(0.03), "*");
    assert_eq!(significance_stars(0.2), "");
}

#[test]
fn wilcoxon_with_all_zero_differences_is_degenerate() {
    let r = wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
    assert_eq!(r.method, WilcoxonMethod::Degenerate);
    assert_eq!(r.p_value, 1.0);
}

#[test]
fn normal_approximation_tracks_the_exact_distribution_at_moderate_n() {
    // n = 30, one tie-free sign pattern; exact null from the rank-sum counts.
    let diffs: Vec<f64> = (1..=30)
        .map(|i| if i % 3 == 0 { -(i as f64) } else { i as f64 })
        .collect();
    let zeros = vec![0.0; 30];
    let r = wilcoxon_signed_rank(&diffs, &zeros).unwrap();
    assert_eq!(r.method, WilcoxonMethod::NormalApprox);
    let counts = signed_rank_sum_counts(&(1..=30).collect::<Vec<_>>());
    let w = r.w_plus as usize;
    let total: f64 = counts.iter().sum();
    let upper: f64 = counts[w..].iter().sum::<f64>() / total;
    let lower: f64 = counts[..=w].iter().sum::<f64>() / total;
    let exact = (2.0 * upper.min(lower)).min(1.0);
    assert!(
        (r.p_value - exact).abs() < 5e-3,
        "approx {} exact {exact}",
        r.p_value
    );
}

#[test]
fn median_handles_even_and_empty() {
    assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), Some(2.5));
    assert_eq!(median(&[]), None);
}

proptest! {
    #[test]
    fn exact_wilcoxon_matches_enumeration(diffs in prop::collection::vec(-10.0f64..10.0, 1..=12)) {
        let zeros = vec![0.0; diffs.len()];
        let got = wilcoxon_signed_rank(&diffs, &zeros).unwrap().p_value;
        prop_assert!((got - support::brute_force_wilcoxon_p(&diffs)).abs() <= 1e-12);
    }

    #[test]
    fn friedman_is_invariant_under_increasing_transforms(
        rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 2..30),
    ) {
        let a = friedman_test(&samples(rows.clone())).unwrap();
        let b = friedman_test(&samples(rows.iter().map(|r| r.iter().map(|v| v.exp() * 3.0 + 1.0).collect()).collect())).unwrap();
        prop_assert!((a.chi_square - b.chi_square).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&a.p_value));
    }
}
