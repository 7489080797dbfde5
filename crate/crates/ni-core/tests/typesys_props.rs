//! Property and enumeration tests for the type algebra: subtyping is a
//! partial order, stamping is idempotent and absorbing, joins are least
//! upper bounds, and flatness is stable under high stamping.

use ni_core::typesys::{
    enumerate_types, is_flat, join_type, meet_type, shape_key, stamp, subtype, Label, SecType,
};
use proptest::prelude::*;

fn arb_label() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::L), Just(Label::H)]
}

fn arb_type() -> impl Strategy<Value = SecType> {
    let leaf = prop_oneof![
        Just(SecType::Unit),
        arb_label().prop_map(SecType::Int),
        arb_label().prop_map(SecType::Bool),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| SecType::prod(a, b)),
            inner.clone().prop_map(SecType::reference),
            (inner.clone(), inner, arb_label())
                .prop_map(|(a, b, l)| SecType::arrow(a, b, l)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn subtype_is_reflexive(t in arb_type()) {
        prop_assert!(subtype(&t, &t));
    }

    #[test]
    fn subtype_is_transitive(a in arb_type(), b in arb_type(), c in arb_type()) {
        if subtype(&a, &b) && subtype(&b, &c) {
            prop_assert!(subtype(&a, &c));
        }
    }

    #[test]
    fn stamp_low_is_identity(t in arb_type()) {
        prop_assert_eq!(stamp(&t, Label::L), t);
    }

    #[test]
    fn stamp_is_idempotent(t in arb_type(), l in arb_label()) {
        prop_assert_eq!(stamp(&stamp(&t, l), l), stamp(&t, l));
    }

    #[test]
    fn stamping_moves_up(t in arb_type(), l in arb_label()) {
        prop_assert!(subtype(&t, &stamp(&t, l)));
    }

    #[test]
    fn join_is_an_upper_bound(a in arb_type(), b in arb_type()) {
        if let Some(j) = join_type(&a, &b) {
            prop_assert!(subtype(&a, &j));
            prop_assert!(subtype(&b, &j));
        }
    }

    #[test]
    fn meet_is_a_lower_bound(a in arb_type(), b in arb_type()) {
        if let Some(m) = meet_type(&a, &b) {
            prop_assert!(subtype(&m, &a));
            prop_assert!(subtype(&m, &b));
        }
    }

    #[test]
    fn flatness_is_stable_under_high_stamp(t in arb_type()) {
        if is_flat(&t) {
            prop_assert!(is_flat(&stamp(&t, Label::H)));
        }
    }

    #[test]
    fn subtype_implies_equal_shapes(a in arb_type(), b in arb_type()) {
        if subtype(&a, &b) {
            prop_assert_eq!(shape_key(&a), shape_key(&b));
        }
    }

    #[test]
    fn type_syntax_round_trips(t in arb_type()) {
        let printed = t.to_string();
        let reparsed = ni_core::lang::parse_type(&printed)
            .unwrap_or_else(|e| panic!("reparse of `{printed}` failed: {e}"));
        prop_assert_eq!(t, reparsed);
    }
}

// Join minimality by enumeration at small depth: the computed join is
// below every common upper bound drawn from the depth-2 universe, and a
// join exists exactly when a common upper bound does.
#[test]
fn join_is_minimal_among_small_upper_bounds() {
    let universe = enumerate_types(2);
    for a in &universe {
        for b in &universe {
            let uppers: Vec<&SecType> = universe
                .iter()
                .filter(|u| subtype(a, u) && subtype(b, u))
                .collect();
            match join_type(a, b) {
                Some(j) => {
                    assert!(subtype(a, &j) && subtype(b, &j), "join not an upper bound");
                    for u in &uppers {
                        assert!(
                            subtype(&j, u),
                            "join {j} of {a} and {b} is not minimal: {u} is smaller"
                        );
                    }
                }
                None => assert!(
                    uppers.is_empty(),
                    "no join for {a} and {b} but {} is an upper bound",
                    uppers[0]
                ),
            }
        }
    }
}

#[test]
fn meet_is_maximal_among_small_lower_bounds() {
    let universe = enumerate_types(2);
    for a in &universe {
        for b in &universe {
            let lowers: Vec<&SecType> = universe
                .iter()
                .filter(|l| subtype(l, a) && subtype(l, b))
                .collect();
            match meet_type(a, b) {
                Some(m) => {
                    for l in &lowers {
                        assert!(subtype(l, &m), "meet {m} of {a} and {b} below {l}");
                    }
                }
                None => assert!(lowers.is_empty()),
            }
        }
    }
}
