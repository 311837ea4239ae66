use proptest::prelude::*;

use persona_probe::stats::{bonferroni, chi_square, fisher_exact, mann_whitney, odds_ratio, ContingencyTable};

fn cells() -> impl Strategy<Value = (u64, u64, u64, u64)> {
    (0u64..80, 0u64..80, 0u64..80, 0u64..80)
}

proptest! {
    #[test]
    fn chi_square_matches_the_closed_form((a, b, c, d) in cells()) {
        let (r1, r2, c1, c2) = (a + b, c + d, a + c, b + d);
        prop_assume!(r1 > 0 && r2 > 0 && c1 > 0 && c2 > 0);
        let n = (a + b + c + d) as f64;
        let diff = a as f64 * d as f64 - b as f64 * c as f64;
        let want = n * diff * diff / (r1 as f64 * r2 as f64 * c1 as f64 * c2 as f64);
        let got = chi_square(&ContingencyTable::two_by_two(a, b, c, d), false).unwrap();
        prop_assert!((got.statistic - want).abs() <= 1e-9 * want.max(1.0));
        prop_assert_eq!(got.df, Some(1));
    }

    #[test]
    fn yates_never_increases_the_statistic((a, b, c, d) in cells()) {
        prop_assume!(a + b > 0 && c + d > 0 && a + c > 0 && b + d > 0);
        let t = ContingencyTable::two_by_two(a, b, c, d);
        let plain = chi_square(&t, false).unwrap();
        let yates = chi_square(&t, true).unwrap();
        prop_assert!(yates.statistic <= plain.statistic + 1e-12);
        prop_assert!(yates.p_value >= plain.p_value - 1e-12);
    }

    #[test]
    fn fisher_is_invariant_under_table_symmetries((a, b, c, d) in (0u64..30, 0u64..30, 0u64..30, 0u64..30)) {
        prop_assume!(a + b + c + d > 0);
        let p = fisher_exact(a, b, c, d).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        for q in [fisher_exact(c, d, a, b), fisher_exact(b, a, d, c), fisher_exact(a, c, b, d)] {
            prop_assert!((q.unwrap() - p).abs() <= 1e-12);
        }
    }

    #[test]
    fn u_and_u_prime_sum_to_n1_n2(
        xs in prop::collection::vec(0u8..10, 1..20),
        ys in prop::collection::vec(0u8..10, 1..20),
    ) {
        let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
        let ys: Vec<f64> = ys.into_iter().map(f64::from).collect();
        let fwd = mann_whitney(&xs, &ys).unwrap();
        let rev = mann_whitney(&ys, &xs).unwrap();
        let nn = (xs.len() * ys.len()) as f64;
        prop_assert!((fwd.u + fwd.u_prime - nn).abs() < 1e-9);
        prop_assert!((fwd.u - rev.u_prime).abs() < 1e-9);
        prop_assert!((fwd.p_value - rev.p_value).abs() < 1e-12);
        prop_assert!((fwd.rank_biserial + rev.rank_biserial).abs() < 1e-12);
    }

    #[test]
    fn bonferroni_is_monotone_and_capped(ps in prop::collection::vec(0.0f64..=1.0, 1..12)) {
        let adj = bonferroni(&ps);
        for (i, (&p, &q)) in ps.iter().zip(&adj).enumerate() {
            prop_assert!(q >= p && q <= 1.0);
            for (&p2, &q2) in ps.iter().zip(&adj).skip(i + 1) {
                if p <= p2 {
                    prop_assert!(q <= q2);
                }
            }
        }
    }

    #[test]
    fn swapping_rows_inverts_the_odds_ratio((a, b, c, d) in cells()) {
        let or = odds_ratio(a, b, c, d, 0.5).unwrap();
        let flipped = odds_ratio(c, d, a, b, 0.5).unwrap();
        prop_assert!((or * flipped - 1.0).abs() < 1e-9);
    }
}
