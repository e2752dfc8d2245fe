//! Deterministic execution of parsed sequences.
//!
//! Calls run in id order. A call whose references point at a failed call is
//! recorded as [`ToolErrorKind::UnresolvedReference`] without reaching the
//! backend; independent later calls still run so the trace stays complete.

mod echo;
mod fixtures;

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::ir::{ArgValue, ReturnMode, ToolCall, ToolCallSequence};
use crate::schema::{Dtype, FunctionSchema};

pub use echo::{echo_backend, EchoBackend};
pub use fixtures::{fixture_backend, FixtureBackend, Fixtures};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ToolErrorKind {
    UnknownTool,
    ArgumentRejected,
    RuntimeFault,
    UnresolvedReference,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{kind:?}: {message}")]
pub struct ToolError {
    pub kind: ToolErrorKind,
    pub message: String,
}

impl ToolError {
    pub fn new(kind: ToolErrorKind, message: impl Into<String>) -> Self {
        ToolError {
            kind,
            message: message.into(),
        }
    }

    pub fn unknown_tool(name: &str) -> Self {
        ToolError::new(ToolErrorKind::UnknownTool, format!("no tool named `{name}`"))
    }

    pub fn rejected(message: impl Into<String>) -> Self {
        ToolError::new(ToolErrorKind::ArgumentRejected, message)
    }

    pub fn fault(message: impl Into<String>) -> Self {
        ToolError::new(ToolErrorKind::RuntimeFault, message)
    }
}

/// A deterministic tool implementation: equal inputs give equal outputs.
pub trait ToolBackend: Send + Sync {
    fn invoke(&self, tool: &str, args: &Map<String, Value>) -> Result<Value, ToolError>;
}

impl<B: ToolBackend + ?Sized> ToolBackend for &B {
    fn invoke(&self, tool: &str, args: &Map<String, Value>) -> Result<Value, ToolError> {
        (**self).invoke(tool, args)
    }
}

impl<B: ToolBackend + ?Sized> ToolBackend for Box<B> {
    fn invoke(&self, tool: &str, args: &Map<String, Value>) -> Result<Value, ToolError> {
        (**self).invoke(tool, args)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum StepOutcome {
    Ok(Value),
    Error(ToolError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step {
    pub id: usize,
    pub tool_name: String,
    /// Absent when a reference could not be resolved.
    pub resolved_args: Option<Map<String, Value>>,
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum FinalAnswer {
    Value(Value),
    /// Outputs of every call, by id.
    All(Vec<(usize, Value)>),
    NoCall,
}

impl FinalAnswer {
    /// The answer as a single value; `All` becomes an array in id order.
    pub fn to_value(&self) -> Option<Value> {
        match self {
            FinalAnswer::Value(v) => Some(v.clone()),
            FinalAnswer::All(outs) => Some(Value::Array(outs.iter().map(|(_, v)| v.clone()).collect())),
            FinalAnswer::NoCall => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionTrace {
    pub steps: Vec<Step>,
    pub all_succeeded: bool,
    pub final_answer: Option<FinalAnswer>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no final answer: at least one call failed")]
pub struct AnswerUnavailable;

/// Literal argument value as a runtime value. References must be resolved first.
pub(crate) fn literal_json(v: &ArgValue, prior: &BTreeMap<usize, Value>) -> Result<Value, ToolError> {
    Ok(match v {
        ArgValue::Str(s) => Value::String(s.clone()),
        ArgValue::Int(i) => Value::from(*i),
        ArgValue::Float(f) => serde_json::Number::from_f64(*f)
            .map(Value::Number)
            .ok_or_else(|| ToolError::rejected(format!("non-finite float {f}")))?,
        ArgValue::Bool(b) => Value::Bool(*b),
        ArgValue::Array(items) => Value::Array(
            items
                .iter()
                .map(|x| literal_json(x, prior))
                .collect::<Result<_, _>>()?,
        ),
        ArgValue::Object(map) => Value::Object(
            map.iter()
                .map(|(k, x)| Ok((k.clone(), literal_json(x, prior)?)))
                .collect::<Result<_, ToolError>>()?,
        ),
        ArgValue::Ref(k) => prior.get(k).cloned().ok_or_else(|| {
            ToolError::new(
                ToolErrorKind::UnresolvedReference,
                format!("API_RESPONSE_{k} has no output"),
            )
        })?,
    })
}

/// Substitutes prior outputs for every response reference in the call's arguments.
pub fn resolve_arguments(
    call: &ToolCall,
    prior_outputs: &BTreeMap<usize, Value>,
) -> Result<Map<String, Value>, ToolError> {
    call.args
        .iter()
        .map(|(k, v)| Ok((k.clone(), literal_json(v, prior_outputs)?)))
        .collect()
}

pub fn execute_sequence(seq: &ToolCallSequence, backend: &dyn ToolBackend) -> ExecutionTrace {
    let mut outputs = BTreeMap::new();
    let mut steps = Vec::with_capacity(seq.len());
    for call in seq.calls() {
        let (resolved_args, outcome) = match resolve_arguments(call, &outputs) {
            Err(e) => (None, StepOutcome::Error(e)),
            Ok(args) => {
                let outcome = match backend.invoke(&call.tool_name, &args) {
                    Ok(v) => {
                        outputs.insert(call.id, v.clone());
                        StepOutcome::Ok(v)
                    }
                    Err(e) => StepOutcome::Error(e),
                };
                (Some(args), outcome)
            }
        };
        steps.push(Step {
            id: call.id,
            tool_name: call.tool_name.clone(),
            resolved_args,
            outcome,
        });
    }
    let mut trace = ExecutionTrace {
        all_succeeded: steps.iter().all(|s| matches!(s.outcome, StepOutcome::Ok(_))),
        steps,
        final_answer: None,
    };
    trace.final_answer = final_answer(&trace, seq.return_mode).ok();
    trace
}

/// Extracts the answer a sequence returns under its return mode.
pub fn final_answer(trace: &ExecutionTrace, mode: ReturnMode) -> Result<FinalAnswer, AnswerUnavailable> {
    if !trace.all_succeeded {
        return Err(AnswerUnavailable);
    }
    let outputs: Vec<(usize, Value)> = trace
        .steps
        .iter()
        .filter_map(|s| match &s.outcome {
            StepOutcome::Ok(v) => Some((s.id, v.clone())),
            StepOutcome::Error(_) => None,
        })
        .collect();
    if outputs.is_empty() {
        return Ok(FinalAnswer::NoCall);
    }
    Ok(match mode {
        ReturnMode::One => FinalAnswer::Value(outputs.last().expect("non-empty").1.clone()),
        ReturnMode::All => FinalAnswer::All(outputs),
    })
}

/// Whether a runtime value satisfies a declared type (integers widen to float).
pub fn json_conforms(value: &Value, dtype: Dtype) -> bool {
    match dtype {
        Dtype::Any => true,
        Dtype::String => value.is_string(),
        Dtype::Integer => value.is_i64() || value.is_u64(),
        Dtype::Float => value.is_number(),
        Dtype::Boolean => value.is_boolean(),
        Dtype::Object => value.is_object(),
        Dtype::Array => value.is_array(),
    }
}

/// Runtime argument check shared by the built-in backends: every argument
/// must be declared, every required parameter present, and every resolved
/// value must fit its declared type.
pub fn check_invocation(schema: &FunctionSchema, args: &Map<String, Value>) -> Result<(), ToolError> {
    for name in args.keys() {
        if schema.param(name).is_none() {
            return Err(ToolError::rejected(format!(
                "`{}` has no parameter `{name}`",
                schema.name
            )));
        }
    }
    for spec in &schema.parameters {
        match args.get(&spec.name) {
            None if spec.required => {
                return Err(ToolError::rejected(format!(
                    "`{}` requires `{}`",
                    schema.name, spec.name
                )))
            }
            Some(v) if !json_conforms(v, spec.dtype) => {
                return Err(ToolError::rejected(format!(
                    "`{}.{}` expects {}, got {v}",
                    schema.name, spec.name, spec.dtype
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_json_ast;
    use serde_json::json;

    /// Backend where `Fail` always faults and everything else echoes its args.
    struct Scripted;

    impl ToolBackend for Scripted {
        fn invoke(&self, tool: &str, args: &Map<String, Value>) -> Result<Value, ToolError> {
            match tool {
                "Fail" => Err(ToolError::fault("scripted failure")),
                _ => Ok(json!({ "tool": tool, "args": args })),
            }
        }
    }

    #[test]
    fn resolve_substitutes_outputs() {
        let call = ToolCall::new(2, "F").arg("location", ArgValue::Ref(1));
        let prior = BTreeMap::from([(1, json!("San Diego"))]);
        assert_eq!(resolve_arguments(&call, &prior).unwrap()["location"], json!("San Diego"));

        let plain = ToolCall::new(0, "F").arg("x", ArgValue::Int(3));
        assert_eq!(resolve_arguments(&plain, &BTreeMap::new()).unwrap()["x"], json!(3));

        let nested = ToolCall::new(1, "F").arg("o", ArgValue::Array(vec![ArgValue::Ref(0)]));
        let err = resolve_arguments(&nested, &BTreeMap::new()).unwrap_err();
        assert_eq!(err.kind, ToolErrorKind::UnresolvedReference);
    }

    #[test]
    fn failure_propagates_along_references_only() {
        let seq = parse_json_ast(
            r#"{"0": {"A": {}}, "1": {"Fail": {"x": "API_RESPONSE_0"}},
                "2": {"C": {"y": "API_RESPONSE_1"}}, "3": {"D": {"z": "API_RESPONSE_0"}},
                "4": {"E": {"w": ["API_RESPONSE_2"]}}}"#,
        )
        .unwrap();
        let trace = execute_sequence(&seq, &Scripted);
        let kinds: Vec<Option<ToolErrorKind>> = trace
            .steps
            .iter()
            .map(|s| match &s.outcome {
                StepOutcome::Ok(_) => None,
                StepOutcome::Error(e) => Some(e.kind),
            })
            .collect();
        assert_eq!(
            kinds,
            vec![
                None,
                Some(ToolErrorKind::RuntimeFault),
                Some(ToolErrorKind::UnresolvedReference),
                None,
                Some(ToolErrorKind::UnresolvedReference)
            ]
        );
        assert!(!trace.all_succeeded);
        assert_eq!(trace.final_answer, None);
        assert!(trace.steps[2].resolved_args.is_none());
    }

    #[test]
    fn no_call_trace() {
        let trace = execute_sequence(&ToolCallSequence::no_call(), &Scripted);
        assert!(trace.steps.is_empty());
        assert!(trace.all_succeeded);
        assert_eq!(trace.final_answer, Some(FinalAnswer::NoCall));
    }

    #[test]
    fn return_modes() {
        let seq = parse_json_ast(r#"{"0": {"A": {}}, "1": {"B": {}}}"#).unwrap();
        let trace = execute_sequence(&seq, &Scripted);
        assert_eq!(
            final_answer(&trace, ReturnMode::One).unwrap(),
            FinalAnswer::Value(json!({"tool": "B", "args": {}}))
        );
        let FinalAnswer::All(outs) = final_answer(&trace, ReturnMode::All).unwrap() else {
            panic!()
        };
        assert_eq!(outs.iter().map(|(i, _)| *i).collect::<Vec<_>>(), vec![0, 1]);

        let failing = execute_sequence(&parse_json_ast(r#"{"0": {"Fail": {}}}"#).unwrap(), &Scripted);
        assert_eq!(final_answer(&failing, ReturnMode::One), Err(AnswerUnavailable));
    }

    #[test]
    fn runtime_type_checks() {
        assert!(json_conforms(&json!(3), Dtype::Float));
        assert!(!json_conforms(&json!(3.5), Dtype::Integer));
        assert!(json_conforms(&json!(null), Dtype::Any));
        assert!(!json_conforms(&json!("x"), Dtype::Array));
    }
}
