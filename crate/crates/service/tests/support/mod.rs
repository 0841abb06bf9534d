//! Store generators and the round-trip property, shared with the acceptance run.
#![allow(dead_code)]

use clinprog_service::store::{Kind, Store};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use serde_json::Value;

pub fn json_value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        any::<i64>().prop_map(Value::from),
        (-1e9f64..1e9).prop_map(Value::from),
        "\\PC{0,24}".prop_map(Value::String),
    ];
    leaf.prop_recursive(3, 40, 5, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..5).prop_map(Value::Array),
            prop::collection::btree_map("[a-z_]{1,8}", inner, 0..5).prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

pub fn records() -> impl Strategy<Value = Vec<(Kind, Value)>> {
    prop::collection::vec((prop::sample::select(Kind::ALL.to_vec()), json_value()), 1..8)
}

/// Put, get, reopen, get again: payloads and digests survive.
pub fn store_round_trip(items: Vec<(Kind, Value)>) -> Result<(), TestCaseError> {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let mut put = Vec::new();
    for (k, v) in items {
        let r = store.put(k, v.clone()).unwrap();
        prop_assert_eq!(&r.payload, &v);
        put.push(r);
    }
    for r in &put {
        let got = store.get(r.kind, &r.id).unwrap();
        prop_assert_eq!(&got.digest, &r.digest);
        prop_assert!(got.verify());
    }
    drop(store);
    let store = Store::open(dir.path()).unwrap();
    prop_assert!(store.quarantined().is_empty());
    for r in &put {
        prop_assert_eq!(&store.get(r.kind, &r.id).unwrap(), r);
    }
    Ok(())
}
