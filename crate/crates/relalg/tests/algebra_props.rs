//! Property tests for the value/tuple layer.

use proptest::prelude::*;
use relalg::{fresh_attribute, Attribute, Tuple, Value};

fn value_strategy() -> impl Strategy<Value = Value> {
    prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        (-3i64..10).prop_map(Value::Int),
        "[a-z]{0,3}".prop_map(Value::Str),
    ]
}

fn values(max: usize) -> impl Strategy<Value = Vec<Value>> {
    proptest::collection::vec(value_strategy(), 0..=max)
}

fn tuple_from(prefix: &str, vals: Vec<Value>) -> (Vec<Attribute>, Tuple) {
    let attrs: Vec<Attribute> =
        (0..vals.len()).map(|i| fresh_attribute(format!("{prefix}{i}"))).collect();
    let tuple = Tuple::from_pairs(attrs.iter().cloned().zip(vals)).expect("distinct attrs");
    (attrs, tuple)
}

proptest! {
    #[test]
    fn restrict_to_full_set_is_identity(vals in values(4)) {
        let (_, t) = tuple_from("a", vals);
        let full = t.attr_set();
        prop_assert_eq!(t.restrict(full.iter()).unwrap(), t);
    }

    #[test]
    fn restrict_keeps_exactly_the_requested_attributes(vals in values(4), mask in any::<u8>()) {
        let (attrs, t) = tuple_from("a", vals);
        let keep: Vec<&Attribute> =
            attrs.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, a)| a).collect();
        let r = t.restrict(keep.iter().copied()).unwrap();
        prop_assert_eq!(r.len(), keep.len());
        for a in keep {
            prop_assert_eq!(r.get(a), t.get(a));
        }
    }

    #[test]
    fn concat_is_commutative_and_associative_on_disjoint_tuples(
        va in values(3), vb in values(3), vc in values(3)
    ) {
        let (_, ta) = tuple_from("a", va);
        let (_, tb) = tuple_from("b", vb);
        let (_, tc) = tuple_from("c", vc);

        prop_assert_eq!(ta.concat(&tb).unwrap(), tb.concat(&ta).unwrap());
        let left = ta.concat(&tb).unwrap().concat(&tc).unwrap();
        let right = ta.concat(&tb.concat(&tc).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn fresh_attributes_with_equal_bases_differ(base in "[a-z]{1,4}") {
        let a = fresh_attribute(base.clone());
        let b = fresh_attribute(base);
        prop_assert_ne!(a, b);
    }
}
