use serde_json::{json, Map, Value};

use super::{check_invocation, ToolBackend, ToolError};
use crate::schema::ToolRegistry;

/// Backend for corpora without golden tool outputs: a call returns
/// `{"tool": name, "args": {...}}` with omitted optionals filled in from
/// their declared defaults, so leaving an optional out and passing its
/// default produce the same response.
#[derive(Debug, Clone)]
pub struct EchoBackend {
    registry: ToolRegistry,
}

pub fn echo_backend(registry: ToolRegistry) -> EchoBackend {
    EchoBackend { registry }
}

impl ToolBackend for EchoBackend {
    fn invoke(&self, tool: &str, args: &Map<String, Value>) -> Result<Value, ToolError> {
        let schema = self
            .registry
            .lookup(tool)
            .ok_or_else(|| ToolError::unknown_tool(tool))?;
        check_invocation(schema, args)?;
        // Schema order, so the record does not depend on how the call ordered its arguments.
        let mut echoed = Map::new();
        for spec in &schema.parameters {
            if let Some(v) = args.get(&spec.name).or(spec.default.as_ref()) {
                echoed.insert(spec.name.clone(), v.clone());
            }
        }
        Ok(json!({ "tool": tool, "args": echoed }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::ToolErrorKind;
    use crate::schema::{load_registry, Dialect};

    fn backend() -> EchoBackend {
        echo_backend(
            load_registry(
                r#"[{"name": "F", "parameters": [
                    {"name": "a", "type": "integer", "required": true},
                    {"name": "b", "type": "integer", "required": false, "default": 10}]}]"#,
                Dialect::Native,
            )
            .unwrap(),
        )
    }

    fn args(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn fills_defaults() {
        let b = backend();
        let out = b.invoke("F", &args(json!({"a": 1}))).unwrap();
        assert_eq!(out, json!({"tool": "F", "args": {"a": 1, "b": 10}}));
        let explicit = b.invoke("F", &args(json!({"b": 10, "a": 1}))).unwrap();
        assert_eq!(serde_json::to_string(&out).unwrap(), serde_json::to_string(&explicit).unwrap());
    }

    #[test]
    fn rejections() {
        let b = backend();
        assert_eq!(b.invoke("G", &Map::new()).unwrap_err().kind, ToolErrorKind::UnknownTool);
        assert_eq!(
            b.invoke("F", &args(json!({"b": 3}))).unwrap_err().kind,
            ToolErrorKind::ArgumentRejected
        );
        assert_eq!(
            b.invoke("F", &args(json!({"a": "one"}))).unwrap_err().kind,
            ToolErrorKind::ArgumentRejected
        );
        assert_eq!(
            b.invoke("F", &args(json!({"a": 1, "c": 2}))).unwrap_err().kind,
            ToolErrorKind::ArgumentRejected
        );
    }
}
