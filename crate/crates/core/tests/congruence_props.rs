use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use stripemat_core::congruence::{has_closed_string, merge_like, ClassKind, Classifier, CongruenceClass};
use stripemat_core::shape::Generator;
use stripemat_core::transform::{scramble, Budget};
use stripemat_core::{BlockMatrix, StripeLabel, TransformSchema, Variant};

fn classifier() -> Classifier {
    Classifier::new(&Budget::default()).unwrap()
}

/// Small integral matrix: spheres in every slot plus an optional cone row
/// and Moore row, entries drawn per cell.
fn sample(shape: (usize, usize, bool, bool, usize), vals: &[i64]) -> BlockMatrix {
    let (s0, s3, cone, moore, s4) = shape;
    let mut rows = vec![(StripeLabel::sphere_row(0), s0), (StripeLabel::sphere_row(1), 1)];
    if cone {
        rows.push((StripeLabel::row(Generator::CetaN2, 0), 1));
    }
    if moore {
        rows.push((StripeLabel::row(Generator::MooreN(1), 0), 1));
    }
    let cols = [(StripeLabel::sphere_col(3), s3), (StripeLabel::sphere_col(4), s4)];
    let mut m = BlockMatrix::zeros(Variant::Integral, &rows, &cols).unwrap();
    let mut k = 0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            m.set(i, j, vals[k % vals.len()]);
            k += 1;
        }
    }
    m
}

fn shapes() -> impl Strategy<Value = (usize, usize, bool, bool, usize)> {
    (1usize..=2, 1usize..=2, any::<bool>(), any::<bool>(), 0usize..=1)
}

/// Wider mix of stripes for the reassembly check.
fn sample_wide(flags: [bool; 4], s4: usize, vals: &[i64]) -> BlockMatrix {
    let mut rows = vec![(StripeLabel::sphere_row(0), 1), (StripeLabel::sphere_row(1), 1)];
    if flags[0] {
        rows.push((StripeLabel::row(Generator::Ceta2N3, 0), 1));
    }
    if flags[1] {
        rows.push((StripeLabel::row(Generator::CetaN3, 1), 1));
    }
    if flags[2] {
        rows.push((StripeLabel::sphere_row(2), 1));
    }
    let mut cols = vec![(StripeLabel::sphere_col(3), 1), (StripeLabel::sphere_col(4), s4)];
    if flags[3] {
        cols.push((StripeLabel::col(Generator::MooreN3(1), 3), 1));
    }
    let mut m = BlockMatrix::zeros(Variant::Integral, &rows, &cols).unwrap();
    let mut k = 0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            m.set(i, j, vals[k % vals.len()]);
            k += 1;
        }
    }
    m
}

fn names(c: &[CongruenceClass]) -> Vec<String> {
    c.iter().map(|x| x.to_string()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merge_of_localizations_round_trips(shape in shapes(), vals in prop::collection::vec(0i64..24, 12)) {
        let a = sample(shape, &vals);
        let back = merge_like(&a.localize(2).unwrap(), &a.localize(3).unwrap(), &a).unwrap();
        prop_assert_eq!(back.trimmed(), a.trimmed());
    }

    #[test]
    fn classification_is_a_congruence_invariant(
        shape in shapes(),
        vals in prop::collection::vec(0i64..24, 12),
        seed in any::<u64>(),
    ) {
        let a = sample(shape, &vals);
        let b = scramble(&a, &TransformSchema::new(Variant::Integral), 25, &mut StdRng::seed_from_u64(seed));
        let c = classifier();
        prop_assert!(c.congruent(&a, &b).unwrap());
        prop_assert_eq!(names(&c.classify(&a).unwrap()), names(&c.classify(&b).unwrap()));
    }

    #[test]
    fn classes_reassemble_the_input(shape in shapes(), vals in prop::collection::vec(0i64..24, 12)) {
        let a = sample(shape, &vals);
        let c = classifier();
        let out = c.classify(&a).unwrap();
        let parts: Vec<BlockMatrix> = out.iter().map(|x| x.matrix.clone()).collect();
        let sum = BlockMatrix::direct_sum_all(Variant::Integral, &parts).unwrap();
        prop_assert!(c.congruent(&a, &sum).unwrap(), "{:?}", names(&out));
        for x in &out {
            prop_assert!(!has_closed_string(&x.graph));
            prop_assert!(x.kind != ClassKind::Unclassified || x.parts2.iter().any(|p| p.to_string().starts_with("unknown")), "{}", x);
        }
    }

    #[test]
    fn wide_classes_reassemble(flags in any::<[bool; 4]>(), s4 in 0usize..=2, vals in prop::collection::vec(0i64..24, 15)) {
        let a = sample_wide(flags, s4, &vals);
        let c = classifier();
        let out = c.classify(&a).unwrap();
        let parts: Vec<BlockMatrix> = out.iter().map(|x| x.matrix.clone()).collect();
        let sum = BlockMatrix::direct_sum_all(Variant::Integral, &parts).unwrap();
        prop_assert!(c.congruent(&a, &sum).unwrap(), "{:?}", names(&out));
        for x in &out {
            prop_assert!(!has_closed_string(&x.graph));
            prop_assert!(x.kind != ClassKind::Unclassified || x.parts2.iter().any(|p| p.to_string().starts_with("unknown")), "{}", x);
        }
    }

    #[test]
    fn rigid_ext_summand_splits_off(seed in any::<u64>()) {
        let rows = [(StripeLabel::sphere_row(0), 2), (StripeLabel::sphere_row(3), 1)];
        let cols = [(StripeLabel::sphere_col(3), 2)];
        let a = BlockMatrix::from_entries(Variant::IntegralExt, &rows, &cols, &[(0, 0, 8), (1, 1, 9), (2, 0, 3)]).unwrap();
        let b = scramble(&a, &TransformSchema::new(Variant::IntegralExt), 25, &mut StdRng::seed_from_u64(seed));
        let got = names(&classifier().classify(&b).unwrap());
        prop_assert_eq!(got, ["liststar List*(48) C_v^{n+4}{v=9}", "liststarstar C_8^{n+4}(1) r=1"]);
    }
}
