use proptest::prelude::*;
use serde_json::{json, Map, Value};

use tier_core::exec::{echo_backend, ToolBackend};
use tier_core::ir::{parse_as, serialize, ArgValue, IrFormat, ReturnMode, ToolCall, ToolCallSequence};
use tier_core::schema::{load_registry, Dialect};

// Strings shaped like a placeholder parse as references by design.
#[allow(clippy::ptr_arg)]
fn plain(s: &String) -> bool {
    tier_core::ir::placeholder_target(s).is_none()
}

fn scalar() -> impl Strategy<Value = ArgValue> {
    prop_oneof![
        "[ -~]{0,12}".prop_filter("plain", plain).prop_map(ArgValue::Str),
        "\\PC{0,6}".prop_filter("plain", plain).prop_map(ArgValue::Str),
        any::<i64>().prop_map(ArgValue::Int),
        any::<f64>().prop_filter("finite", |f| f.is_finite()).prop_map(ArgValue::Float),
        any::<bool>().prop_map(ArgValue::Bool),
    ]
}

fn call(id: usize) -> impl Strategy<Value = ToolCall> {
    let value = if id == 0 {
        scalar().boxed()
    } else {
        prop_oneof![3 => scalar(), 1 => (0..id).prop_map(ArgValue::Ref)].boxed()
    };
    (
        "[A-Za-z][A-Za-z0-9_]{0,10}",
        prop::collection::btree_map("[a-z][a-z0-9_]{0,6}", value, 0..5),
    )
        .prop_map(move |(name, args)| args.into_iter().fold(ToolCall::new(id, name), |c, (k, v)| c.arg(k, v)))
}

fn sequence() -> impl Strategy<Value = ToolCallSequence> {
    (0usize..6, any::<bool>())
        .prop_flat_map(|(n, all)| {
            let calls: Vec<_> = (0..n).map(call).collect();
            (calls, Just(if all { ReturnMode::All } else { ReturnMode::One }))
        })
        .prop_map(|(calls, mode)| ToolCallSequence::new(calls, mode).unwrap())
}

proptest! {
    #[test]
    fn every_format_round_trips(seq in sequence()) {
        let mut parsed = Vec::new();
        for f in IrFormat::ALL {
            let text = serialize(&seq, f).unwrap();
            // The return mode lives on the wrapper, not in the payload.
            let back = parse_as(f, &text).unwrap().with_return_mode(seq.return_mode);
            prop_assert_eq!(&back, &seq, "format {}: {}", f, text);
            prop_assert_eq!(serialize(&back, f).unwrap(), text);
            parsed.push(back);
        }
        prop_assert!(parsed.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn echo_treats_explicit_default_as_omitted(
        dtype in prop::sample::select(vec!["string", "integer", "float", "boolean"]),
        seed in any::<i32>(),
        required in "[ -~]{0,8}",
    ) {
        let default = match dtype {
            "string" => json!(seed.to_string()),
            "integer" => json!(seed),
            "float" => json!(f64::from(seed) / 7.0),
            _ => json!(seed % 2 == 0),
        };
        let doc = json!([{"name": "F", "parameters": [
            {"name": "req", "type": "string", "required": true},
            {"name": "opt", "type": dtype, "required": false, "default": default},
        ]}]);
        let backend = echo_backend(load_registry(&doc.to_string(), Dialect::Native).unwrap());
        let mut omitted = Map::new();
        omitted.insert("req".into(), Value::String(required));
        let mut supplied = omitted.clone();
        supplied.insert("opt".into(), default);
        prop_assert_eq!(backend.invoke("F", &omitted).unwrap(), backend.invoke("F", &supplied).unwrap());
    }
}
