use proptest::prelude::*;

mod support;
use support::{records, store_round_trip};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn put_then_get_keeps_the_digest(items in records()) {
        store_round_trip(items)?;
    }
}
