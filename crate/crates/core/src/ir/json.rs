//! `{"0": {"Tool": {"arg": value, ...}}, "1": ...}`

use std::fmt;

use indexmap::IndexMap;
use serde::de::{Deserialize, Deserializer, MapAccess, SeqAccess, Visitor};
use serde_json::{Map, Value};

use super::{
    check_plain_string, float_text, placeholder, unrepresentable, ArgValue, Args, FormatError,
    FormatErrorKind, IrFormat, ParseOutcome, ReturnMode, SerializeError, ToolCall,
    ToolCallSequence,
};

/// JSON tree that keeps every object entry, so duplicate keys stay visible.
#[derive(Debug)]
enum Raw {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Array(Vec<Raw>),
    Object(Vec<(String, Raw)>),
}

impl<'de> Deserialize<'de> for Raw {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct RawVisitor;

        impl<'de> Visitor<'de> for RawVisitor {
            type Value = Raw;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON value")
            }

            fn visit_bool<E>(self, v: bool) -> Result<Raw, E> {
                Ok(Raw::Bool(v))
            }

            fn visit_i64<E>(self, v: i64) -> Result<Raw, E> {
                Ok(Raw::Int(v))
            }

            fn visit_u64<E>(self, v: u64) -> Result<Raw, E> {
                Ok(i64::try_from(v).map_or(Raw::Float(v as f64), Raw::Int))
            }

            fn visit_f64<E>(self, v: f64) -> Result<Raw, E> {
                Ok(Raw::Float(v))
            }

            fn visit_str<E>(self, v: &str) -> Result<Raw, E> {
                Ok(Raw::Str(v.to_string()))
            }

            fn visit_string<E>(self, v: String) -> Result<Raw, E> {
                Ok(Raw::Str(v))
            }

            fn visit_unit<E>(self) -> Result<Raw, E> {
                Ok(Raw::Null)
            }

            fn visit_none<E>(self) -> Result<Raw, E> {
                Ok(Raw::Null)
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Raw, A::Error> {
                let mut items = Vec::new();
                while let Some(v) = seq.next_element()? {
                    items.push(v);
                }
                Ok(Raw::Array(items))
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Raw, A::Error> {
                let mut entries = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Raw>()? {
                    entries.push((k, v));
                }
                Ok(Raw::Object(entries))
            }
        }

        d.deserialize_any(RawVisitor)
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

fn syntax_error(payload: &str, e: &serde_json::Error) -> FormatError {
    let pos = byte_offset(payload, e.line(), e.column());
    FormatError::syntax(format!("invalid JSON: {e}"), pos)
}

fn call_id(key: &str) -> Result<usize, FormatError> {
    let canonical = !key.is_empty()
        && key.bytes().all(|b| b.is_ascii_digit())
        && (key == "0" || !key.starts_with('0'));
    canonical.then(|| key.parse().ok()).flatten().ok_or_else(|| {
        FormatError::new(
            FormatErrorKind::BadId,
            format!("call key `{key}` is not a zero-based decimal id"),
        )
    })
}

fn arg_value(raw: Raw, path: &str) -> Result<ArgValue, FormatError> {
    Ok(match raw {
        Raw::Null => {
            return Err(FormatError::new(
                FormatErrorKind::UnsupportedValue,
                format!("argument `{path}` is null"),
            ))
        }
        Raw::Bool(b) => ArgValue::Bool(b),
        Raw::Int(i) => ArgValue::Int(i),
        Raw::Float(f) => ArgValue::Float(f),
        Raw::Str(s) => ArgValue::from_string(s),
        Raw::Array(items) => ArgValue::Array(
            items
                .into_iter()
                .enumerate()
                .map(|(i, v)| arg_value(v, &format!("{path}[{i}]")))
                .collect::<Result<_, _>>()?,
        ),
        Raw::Object(entries) => ArgValue::Object(arg_map(entries, path)?),
    })
}

fn arg_map(entries: Vec<(String, Raw)>, path: &str) -> Result<Args, FormatError> {
    let mut args = IndexMap::with_capacity(entries.len());
    for (k, v) in entries {
        let sub = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
        let value = arg_value(v, &sub)?;
        if args.insert(k, value).is_some() {
            return Err(FormatError::new(
                FormatErrorKind::DuplicateArgument,
                format!("argument `{sub}` given more than once"),
            ));
        }
    }
    Ok(args)
}

/// Parses the JSON AST form.
pub fn parse_json_ast(payload: &str) -> ParseOutcome {
    let raw: Raw = serde_json::from_str(payload).map_err(|e| syntax_error(payload, &e))?;
    let Raw::Object(entries) = raw else {
        return Err(FormatError::new(
            FormatErrorKind::Syntax,
            "top level must be an object keyed by call id",
        ));
    };
    let mut calls = Vec::with_capacity(entries.len());
    for (key, body) in entries {
        let id = call_id(&key)?;
        let Raw::Object(mut named) = body else {
            return Err(FormatError::new(
                FormatErrorKind::Syntax,
                format!("call `{key}` must be an object holding one tool name"),
            ));
        };
        if named.len() != 1 {
            return Err(FormatError::new(
                FormatErrorKind::MultipleToolNames,
                format!("call `{key}` names {} tools; exactly one is required", named.len()),
            ));
        }
        let (tool, params) = named.pop().expect("one entry");
        let args = match params {
            Raw::Object(entries) => arg_map(entries, "")?,
            _ => {
                return Err(FormatError::new(
                    FormatErrorKind::Syntax,
                    format!("parameters of call `{key}` must be an object"),
                ))
            }
        };
        calls.push(ToolCall {
            id,
            tool_name: tool,
            args,
        });
    }
    ToolCallSequence::new(calls, ReturnMode::One)
}

fn to_json(v: &ArgValue) -> Result<Value, SerializeError> {
    Ok(match v {
        ArgValue::Str(s) => {
            check_plain_string(IrFormat::Json, s)?;
            Value::String(s.clone())
        }
        ArgValue::Int(i) => Value::from(*i),
        ArgValue::Float(f) => {
            float_text(IrFormat::Json, *f)?;
            Value::from(*f)
        }
        ArgValue::Bool(b) => Value::Bool(*b),
        ArgValue::Array(items) => Value::Array(items.iter().map(to_json).collect::<Result<_, _>>()?),
        ArgValue::Object(map) => Value::Object(
            map.iter()
                .map(|(k, v)| Ok((k.clone(), to_json(v)?)))
                .collect::<Result<Map<_, _>, SerializeError>>()?,
        ),
        ArgValue::Ref(k) => Value::String(placeholder(*k)),
    })
}

pub fn serialize_json(seq: &ToolCallSequence) -> Result<String, SerializeError> {
    if seq.is_no_call() {
        return Ok("{}".to_string());
    }
    let mut root = Map::new();
    for call in seq.calls() {
        let args = call
            .args
            .iter()
            .map(|(k, v)| Ok((k.clone(), to_json(v)?)))
            .collect::<Result<Map<_, _>, SerializeError>>()?;
        let mut named = Map::new();
        named.insert(call.tool_name.clone(), Value::Object(args));
        root.insert(call.id.to_string(), Value::Object(named));
    }
    serde_json::to_string_pretty(&Value::Object(root))
        .map_err(|e| unrepresentable(IrFormat::Json, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restaurant_trace() {
        let p = r#"{"0": {"GetTime": {}}, "1": {"GetCurrentLocation": {}},
                    "2": {"FindRestaurantsByLocation": {"location": "API_RESPONSE_1"}}}"#;
        let seq = parse_json_ast(p).unwrap();
        assert_eq!(seq.len(), 3);
        assert_eq!(seq.calls()[2].args["location"], ArgValue::Ref(1));
    }

    #[test]
    fn empty_object_is_no_call() {
        assert!(parse_json_ast("{}").unwrap().is_no_call());
        assert!(parse_json_ast(" {\n} ").unwrap().is_no_call());
        assert_eq!(serialize_json(&ToolCallSequence::no_call()).unwrap(), "{}");
    }

    #[test]
    fn self_reference_is_forward() {
        let err = parse_json_ast(r#"{"0": {"A": {"x": "API_RESPONSE_0"}}}"#).unwrap_err();
        assert_eq!(err.kind, FormatErrorKind::ForwardReference);
    }

    #[test]
    fn structural_errors() {
        let kind = |p: &str| parse_json_ast(p).unwrap_err().kind;
        assert_eq!(kind(r#"{"1": {"A": {}}}"#), FormatErrorKind::NonContiguousIds);
        assert_eq!(kind(r#"{"0": {"A": {}, "B": {}}}"#), FormatErrorKind::MultipleToolNames);
        assert_eq!(kind(r#"{"0": {}}"#), FormatErrorKind::MultipleToolNames);
        assert_eq!(kind(r#"{"0": {"A": {}}, "0": {"B": {}}}"#), FormatErrorKind::DuplicateId);
        assert_eq!(kind(r#"{"00": {"A": {}}}"#), FormatErrorKind::BadId);
        assert_eq!(kind(r#"{"a": {"A": {}}}"#), FormatErrorKind::BadId);
        assert_eq!(kind(r#"{"0": {"A": {"x": 1, "x": 2}}}"#), FormatErrorKind::DuplicateArgument);
        assert_eq!(kind(r#"{"0": {"A": {"x": null}}}"#), FormatErrorKind::UnsupportedValue);
        assert_eq!(kind(r#"{"0": {"A": []}}"#), FormatErrorKind::Syntax);
        assert_eq!(kind(r#"[1]"#), FormatErrorKind::Syntax);
        assert_eq!(kind(r#"{"0": {"A": {}}"#), FormatErrorKind::Syntax);
    }

    #[test]
    fn syntax_error_span_points_at_line() {
        let p = "{\n  \"0\": {\"A\": {,}}\n}";
        let err = parse_json_ast(p).unwrap_err();
        let (s, _) = err.span.unwrap();
        assert!(s > 2, "span {s} should be on the second line");
    }

    #[test]
    fn nested_placeholders_are_refs() {
        let p = r#"{"0": {"A": {}}, "1": {"B": {"xs": ["API_RESPONSE_0", {"y": "API_RESPONSE_0"}], "note": "see API_RESPONSE_0"}}}"#;
        let seq = parse_json_ast(p).unwrap();
        let args = &seq.calls()[1].args;
        let ArgValue::Array(xs) = &args["xs"] else { panic!() };
        assert_eq!(xs[0], ArgValue::Ref(0));
        assert_eq!(args["note"], ArgValue::Str("see API_RESPONSE_0".into()));
        assert_eq!(seq.calls()[1].refs(), vec![0, 0]);
    }

    #[test]
    fn round_trip() {
        let p = r#"{"0": {"Get_Crypto_Price": {"ticker": "BTC", "price_time": "2026-01-11"}},
                    "1": {"Currency_conversion_API": {"amount": "API_RESPONSE_0", "scale": 1.0, "n": 3, "ok": true}}}"#;
        let seq = parse_json_ast(p).unwrap();
        let again = parse_json_ast(&serialize_json(&seq).unwrap()).unwrap();
        assert_eq!(seq, again);
        assert_eq!(again.calls()[1].args["scale"], ArgValue::Float(1.0));
    }

    #[test]
    fn plain_placeholder_string_is_unrepresentable() {
        let seq = ToolCallSequence::new(
            vec![ToolCall::new(0, "A").arg("x", ArgValue::Str("API_RESPONSE_0".into()))],
            ReturnMode::One,
        )
        .unwrap();
        assert!(serialize_json(&seq).is_err());
    }
}
