mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn bvi_bounds_are_monotone_and_ordered(g in small_game()) {
        check_bvi_monotone(&g)?;
    }

    #[test]
    fn pre_duality((g, v) in game_with_valuation()) {
        check_duality(&g, &v)?;
    }

    #[test]
    fn deflate_preserves_order((g, lo, hi) in game_with_ordered_pair()) {
        check_deflate_order(&g, &lo, &hi)?;
    }

    #[test]
    fn deflate_inflate_complement_on_fixtures((i, u) in fixture_with_valuation()) {
        check_complement_identity(&fixture(i), &u, COMPLEMENT_TOL_FIXTURES)?;
    }

    #[test]
    fn deflate_inflate_complement_on_random_games((g, u) in game_with_valuation()) {
        check_complement_identity(&g, &u, COMPLEMENT_TOL_RANDOM)?;
    }

    #[test]
    fn strategies_certify_bounds(g in small_game()) {
        check_certificates(&g)?;
    }
}
