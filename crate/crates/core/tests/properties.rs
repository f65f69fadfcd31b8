use std::sync::{Arc, OnceLock};

use gerbe_sym::cech::{coboundary, sup_over_overlaps, Cochain, Sampling};
use gerbe_sym::courant as ca;
use gerbe_sym::flows;
use gerbe_sym::geometry::{make_torus_cover, random_vector_field, CoveredManifold, KForm, TrigForm};
use gerbe_sym::gerbe::{self, ConnectiveStructureData, CoverSpec, GerbeDataset};
use gerbe_sym::jet::Jet;
use gerbe_sym::lifts;
use gerbe_sym::suite::SuiteConfig;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cover() -> &'static Arc<CoveredManifold> {
    static C: OnceLock<Arc<CoveredManifold>> = OnceLock::new();
    C.get_or_init(|| make_torus_cover(2, 4, 0.04).unwrap())
}

fn conn() -> &'static ConnectiveStructureData {
    static C: OnceLock<ConnectiveStructureData> = OnceLock::new();
    C.get_or_init(|| gerbe::solve_chain(&gerbe::random_gerbe(cover(), 11)).unwrap().0.conn)
}

fn sampling(seed: u64) -> Sampling {
    Sampling::new(3, seed)
}

fn jet(coeffs: &[f64]) -> Jet {
    Jet::from_coeffs(2, 3, coeffs.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jet_products_associate_and_distribute(
        a in prop::collection::vec(-2.0..2.0f64, 10),
        b in prop::collection::vec(-2.0..2.0f64, 10),
        c in prop::collection::vec(-2.0..2.0f64, 10),
    ) {
        let (a, b, c) = (jet(&a), jet(&b), jet(&c));
        let l = &(&a * &b) * &c;
        let r = &a * &(&b * &c);
        prop_assert!((&l - &r).max_abs() < 1e-12);
        let l = &a * &(&b + &c);
        let r = &(&a * &b) + &(&a * &c);
        prop_assert!((&l - &r).max_abs() < 1e-12);
    }

    #[test]
    fn coboundary_squares_to_zero(seed in any::<u64>(), p in 0usize..2, fd in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Cochain<KForm> = Cochain::from_fn(cover(), p, fd, |_| TrigForm::random(2, fd, 2, 3, 1.0, &mut rng).to_form(2));
        let dd = coboundary(&coboundary(&c));
        let (v, _, _) = sup_over_overlaps(cover(), p + 2, sampling(seed), |s, ctx| dd.get(s).unwrap().max_abs(ctx));
        prop_assert!(v < 1e-10, "δδc = {v}");
    }

    #[test]
    fn lifts_are_linear_in_the_vector_field(seed in any::<u64>(), k in -2.0..2.0f64) {
        let g = &conn().gerbe;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xi = random_vector_field(2, 2, 2, 0.5, &mut rng);
        let eta = random_vector_field(2, 2, 2, 0.5, &mut rng);
        let sum = lifts::lift_add(&lifts::solve_lift(&xi, g).unwrap(), &lifts::lift_scale(k, &lifts::solve_lift(&eta, g).unwrap()));
        prop_assert!(sum.invariant_residual(g, sampling(seed)) < 1e-9);
    }

    #[test]
    fn courant_pairing_is_symmetric_and_bracket_antisymmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = ca::random_section(conn(), &mut rng);
        let y = ca::random_section(conn(), &mut rng);
        let s = sampling(seed);
        let (pxy, pyx) = (ca::pairing_local(&x, &y), ca::pairing_local(&y, &x));
        prop_assert!(pxy.max_deviation(&pyx, s) <= 1e-12);
        let sum = ca::CourantSection::linear_combination(&[(1.0, &ca::courant_bracket(&x, &y)), (1.0, &ca::courant_bracket(&y, &x))]);
        prop_assert!(sum.sup_norm(s).0 <= 1e-12);
    }

    #[test]
    fn anchor_preserves_brackets(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = ca::random_section(conn(), &mut rng);
        let y = ca::random_section(conn(), &mut rng);
        let lhs = ca::project(&ca::courant_bracket(&x, &y));
        let rhs = ca::project(&x).bracket(&ca::project(&y));
        let d = lifts::vector_field_distance(cover(), &lhs, &rhs, sampling(seed));
        prop_assert!(d <= 1e-9);
    }

    #[test]
    fn flows_compose(seed in 0u64..1000, t in -0.09..0.09f64, t2 in -0.09..0.09f64, x in 0.4..0.6f64, y in 0.4..0.6f64) {
        let flow = flows::preset_flow(2, seed).unwrap();
        let r = flow.group_law_residual(&[(vec![x, y], t, t2)]).unwrap();
        prop_assert!(r <= 1e-7);
    }

    #[test]
    fn datasets_round_trip_exactly(seed in any::<u64>(), trivial in any::<bool>()) {
        let d = GerbeDataset::generate(CoverSpec { dim: 1, splits: 3, margin: 0.05 }, seed, trivial).unwrap();
        let back = GerbeDataset::from_json(&d.to_json()).unwrap();
        prop_assert_eq!(&back, &d);
        prop_assert_eq!(back.to_json(), d.to_json());
    }

    #[test]
    fn configs_round_trip(seed in any::<u64>(), samples in 1usize..500, splits in 3usize..8) {
        let c = SuiteConfig { seed, samples, splits, margin: 0.5 / splits as f64 - 0.01, ..SuiteConfig::default() };
        let back = SuiteConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }
}
