//! Static schema checks over a parsed sequence.
//!
//! One mismatch unit is charged per offending parameter name per call:
//! a missing required parameter, an argument the schema does not declare,
//! or a declared argument whose literal value fails its type. Nested object
//! specs are checked the same way, with dotted paths in the diagnostics.
//! Response references are never type-checked here.

use serde::Serialize;

use crate::ir::{ArgValue, Args, ToolCallSequence};
use crate::schema::{Dtype, ParameterSpec, ToolRegistry};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CallCheck {
    pub id: usize,
    pub tool_name: String,
    pub name_valid: bool,
    pub missing_required: Vec<String>,
    pub unknown: Vec<String>,
    pub type_failed: Vec<String>,
}

impl CallCheck {
    pub fn param_mismatches(&self) -> usize {
        self.missing_required.len() + self.unknown.len()
    }

    pub fn dtype_mismatches(&self) -> usize {
        self.type_failed.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub all_names_valid: bool,
    pub invalid_names: Vec<(usize, String)>,
    pub param_mismatches: usize,
    pub dtype_mismatches: usize,
    pub per_call: Vec<CallCheck>,
}

impl VerificationReport {
    /// False when some call names an unregistered tool.
    pub fn verifiable(&self) -> bool {
        self.all_names_valid
    }
}

/// Whether a literal value satisfies a declared type. Integers widen to float.
pub fn value_conforms(value: &ArgValue, dtype: Dtype) -> bool {
    matches!(
        (dtype, value),
        (Dtype::Any, _)
            | (_, ArgValue::Ref(_))
            | (Dtype::String, ArgValue::Str(_))
            | (Dtype::Integer, ArgValue::Int(_))
            | (Dtype::Float, ArgValue::Int(_) | ArgValue::Float(_))
            | (Dtype::Boolean, ArgValue::Bool(_))
            | (Dtype::Object, ArgValue::Object(_))
            | (Dtype::Array, ArgValue::Array(_))
    )
}

fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

fn check_args(specs: &[ParameterSpec], args: &Args, prefix: &str, out: &mut CallCheck) {
    for spec in specs.iter().filter(|s| s.required) {
        if !args.contains_key(&spec.name) {
            out.missing_required.push(join(prefix, &spec.name));
        }
    }
    for (name, value) in args {
        let Some(spec) = specs.iter().find(|s| &s.name == name) else {
            out.unknown.push(join(prefix, name));
            continue;
        };
        if !value_conforms(value, spec.dtype) {
            out.type_failed.push(join(prefix, name));
            continue;
        }
        if let (Some(nested), ArgValue::Object(inner)) = (&spec.properties, value) {
            check_args(nested, inner, &join(prefix, name), out);
        }
    }
}

fn check_calls(seq: &ToolCallSequence, registry: &ToolRegistry) -> Vec<CallCheck> {
    seq.calls()
        .iter()
        .map(|call| {
            let mut check = CallCheck {
                id: call.id,
                tool_name: call.tool_name.clone(),
                ..CallCheck::default()
            };
            if let Some(schema) = registry.lookup(&call.tool_name) {
                check.name_valid = true;
                check_args(&schema.parameters, &call.args, "", &mut check);
            }
            check
        })
        .collect()
}

/// Returns whether every call names a registered tool, plus the offenders.
pub fn verify_names(seq: &ToolCallSequence, registry: &ToolRegistry) -> (bool, Vec<(usize, String)>) {
    let invalid: Vec<_> = seq
        .calls()
        .iter()
        .filter(|c| !registry.contains(&c.tool_name))
        .map(|c| (c.id, c.tool_name.clone()))
        .collect();
    (invalid.is_empty(), invalid)
}

/// Missing-required plus unknown argument names, summed over calls with valid names.
pub fn count_param_mismatches(seq: &ToolCallSequence, registry: &ToolRegistry) -> usize {
    check_calls(seq, registry).iter().map(CallCheck::param_mismatches).sum()
}

/// Declared arguments whose literal value fails the declared type, summed over calls.
pub fn count_dtype_mismatches(seq: &ToolCallSequence, registry: &ToolRegistry) -> usize {
    check_calls(seq, registry).iter().map(CallCheck::dtype_mismatches).sum()
}

pub fn verify_sequence(seq: &ToolCallSequence, registry: &ToolRegistry) -> VerificationReport {
    let per_call = check_calls(seq, registry);
    let (all_names_valid, invalid_names) = verify_names(seq, registry);
    VerificationReport {
        all_names_valid,
        invalid_names,
        param_mismatches: per_call.iter().map(CallCheck::param_mismatches).sum(),
        dtype_mismatches: per_call.iter().map(CallCheck::dtype_mismatches).sum(),
        per_call,
    }
}
