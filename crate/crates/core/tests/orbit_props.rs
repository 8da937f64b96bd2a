use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use stripemat_core::transform::{canonical_form, decompose, decompose_detailed, equivalent, scramble, Budget};
use stripemat_core::{BlockMatrix, StripeLabel, TransformSchema, Variant};

fn small_local3(vals: &[u32]) -> BlockMatrix {
    let rows = [(StripeLabel::sphere_row(0), 2)];
    let cols = [(StripeLabel::sphere_col(3), 2)];
    let mut entries = Vec::new();
    for (k, &v) in vals.iter().enumerate() {
        entries.push((k / 2, k % 2, (v % 3) as i64));
    }
    BlockMatrix::from_entries(Variant::Local3, &rows, &cols, &entries).unwrap()
}

fn small_integral(vals: &[u32]) -> BlockMatrix {
    let rows = [(StripeLabel::sphere_row(0), 1), (StripeLabel::sphere_row(1), 1)];
    let cols = [(StripeLabel::sphere_col(3), 1), (StripeLabel::sphere_col(4), 1)];
    // rows S0, S1; cols S3, S4: Z24, 0 / Z2, Z24
    let entries = [(0, 0, (vals[0] % 24) as i64), (1, 0, (vals[1] % 2) as i64), (1, 1, (vals[2] % 24) as i64)];
    BlockMatrix::from_entries(Variant::Integral, &rows, &cols, &entries).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn canonical_form_is_orbit_invariant(vals in prop::collection::vec(0u32..3, 4), seed in any::<u64>()) {
        let a = small_local3(&vals);
        let sch = TransformSchema::new(Variant::Local3);
        let b = scramble(&a, &sch, 20, &mut StdRng::seed_from_u64(seed));
        let budget = Budget::default();
        prop_assert_eq!(canonical_form(&a, &sch, &budget).unwrap(), canonical_form(&b, &sch, &budget).unwrap());
        prop_assert!(equivalent(&a, &b, &sch, &budget).unwrap());
    }

    #[test]
    fn integral_scramble_keeps_decomposition(vals in prop::collection::vec(0u32..24, 3), seed in any::<u64>()) {
        let a = small_integral(&vals);
        let sch = TransformSchema::new(Variant::Integral);
        let b = scramble(&a, &sch, 30, &mut StdRng::seed_from_u64(seed));
        let budget = Budget::default();
        prop_assert_eq!(decompose(&a, &sch, &budget).unwrap(), decompose(&b, &sch, &budget).unwrap());
        prop_assert!(equivalent(&a, &b, &sch, &budget).unwrap());
    }

    #[test]
    fn decomposition_ignores_search_seed(vals in prop::collection::vec(0u32..24, 3), seed in 1u64..1000) {
        let a = small_integral(&vals);
        let sch = TransformSchema::new(Variant::Integral);
        let budget = Budget::default();
        let x: Vec<_> = decompose_detailed(&a, &sch, &budget, 0).unwrap().into_iter().map(|s| s.canonical).collect();
        let y: Vec<_> = decompose_detailed(&a, &sch, &budget, seed).unwrap().into_iter().map(|s| s.canonical).collect();
        prop_assert_eq!(x, y);
    }
}
