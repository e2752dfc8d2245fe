//! Canonical tool-call sequences and the three textual encodings that map
//! onto them.
//!
//! Every parser produces the same [`ToolCallSequence`]. Structural rules are
//! shared: ids are `0..n` with no gaps, each call names exactly one tool,
//! argument names are distinct within a call, and `API_RESPONSE_<k>`
//! placeholders may only point at an earlier call.

mod direct;
mod json;
mod wrapper;
mod xml;

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub use direct::{parse_direct_list, serialize_direct};
pub use json::{parse_json_ast, serialize_json};
pub use wrapper::{extract_tool_call_block, wrap_response, ToolCallBlock};
pub use xml::{parse_xml_ast, serialize_xml};

pub(crate) const PLACEHOLDER_PREFIX: &str = "API_RESPONSE_";

/// Argument value as written by the model.
#[derive(Debug, Clone, PartialEq)]
pub enum ArgValue {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Array(Vec<ArgValue>),
    Object(IndexMap<String, ArgValue>),
    /// Placeholder bound to the output of the call with this id.
    Ref(usize),
}

impl ArgValue {
    /// Visits every response reference reachable from this value.
    pub fn refs(&self, out: &mut Vec<usize>) {
        match self {
            ArgValue::Ref(k) => out.push(*k),
            ArgValue::Array(items) => items.iter().for_each(|v| v.refs(out)),
            ArgValue::Object(map) => map.values().for_each(|v| v.refs(out)),
            _ => {}
        }
    }

    /// Tags the model-facing string form: plain strings that match the
    /// placeholder pattern become references.
    pub(crate) fn from_string(s: String) -> ArgValue {
        match placeholder_target(&s) {
            Some(k) => ArgValue::Ref(k),
            None => ArgValue::Str(s),
        }
    }

    pub fn is_composite(&self) -> bool {
        matches!(self, ArgValue::Array(_) | ArgValue::Object(_))
    }

    /// Equality used for relaxed trajectory matching: integers and floats
    /// compare by numeric value, everything else structurally.
    pub fn numeric_eq(&self, other: &ArgValue) -> bool {
        match (self, other) {
            (ArgValue::Int(a), ArgValue::Float(b)) | (ArgValue::Float(b), ArgValue::Int(a)) => {
                *a as f64 == *b
            }
            (ArgValue::Array(a), ArgValue::Array(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.numeric_eq(y))
            }
            (ArgValue::Object(a), ArgValue::Object(b)) => {
                a.len() == b.len()
                    && a.iter().all(|(k, v)| b.get(k).is_some_and(|w| v.numeric_eq(w)))
            }
            _ => self == other,
        }
    }
}

/// Returns `k` when `s` is exactly `API_RESPONSE_<digits>`.
pub fn placeholder_target(s: &str) -> Option<usize> {
    let digits = s.strip_prefix(PLACEHOLDER_PREFIX)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

pub(crate) fn placeholder(k: usize) -> String {
    format!("{PLACEHOLDER_PREFIX}{k}")
}

pub type Args = IndexMap<String, ArgValue>;

#[derive(Debug, Clone, PartialEq)]
pub struct ToolCall {
    pub id: usize,
    pub tool_name: String,
    pub args: Args,
}

impl ToolCall {
    pub fn new(id: usize, tool_name: impl Into<String>) -> Self {
        ToolCall {
            id,
            tool_name: tool_name.into(),
            args: IndexMap::new(),
        }
    }

    pub fn arg(mut self, name: impl Into<String>, value: ArgValue) -> Self {
        self.args.insert(name.into(), value);
        self
    }

    pub fn refs(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.args.values().for_each(|v| v.refs(&mut out));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnMode {
    #[default]
    One,
    All,
}

impl ReturnMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReturnMode::One => "one",
            ReturnMode::All => "all",
        }
    }
}

impl FromStr for ReturnMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one" => Ok(ReturnMode::One),
            "all" => Ok(ReturnMode::All),
            other => Err(format!("return mode must be `one` or `all`, got `{other}`")),
        }
    }
}

/// Parsed tool-call emission. An empty call list is the NO-CALL response.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ToolCallSequence {
    calls: Vec<ToolCall>,
    pub return_mode: ReturnMode,
}

impl ToolCallSequence {
    /// Builds a sequence, enforcing the structural rules every parser applies.
    /// Calls may be supplied in any order; they are stored by ascending id.
    pub fn new(mut calls: Vec<ToolCall>, return_mode: ReturnMode) -> Result<Self, FormatError> {
        calls.sort_by_key(|c| c.id);
        for pair in calls.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(FormatError::new(
                    FormatErrorKind::DuplicateId,
                    format!("call id {} appears more than once", pair[0].id),
                ));
            }
        }
        for (expected, call) in calls.iter().enumerate() {
            if call.id != expected {
                return Err(FormatError::new(
                    FormatErrorKind::NonContiguousIds,
                    format!("call ids must be 0..{}; missing id {expected}", calls.len()),
                ));
            }
            if call.tool_name.is_empty() {
                return Err(FormatError::new(
                    FormatErrorKind::MissingName,
                    format!("call {} has an empty tool name", call.id),
                ));
            }
            if let Some(k) = call.refs().into_iter().find(|&k| k >= call.id) {
                return Err(FormatError::new(
                    FormatErrorKind::ForwardReference,
                    format!(
                        "call {} references API_RESPONSE_{k}; only earlier calls may be referenced",
                        call.id
                    ),
                ));
            }
        }
        Ok(ToolCallSequence { calls, return_mode })
    }

    pub fn no_call() -> Self {
        ToolCallSequence::default()
    }

    pub fn calls(&self) -> &[ToolCall] {
        &self.calls
    }

    pub fn len(&self) -> usize {
        self.calls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.calls.is_empty()
    }

    pub fn is_no_call(&self) -> bool {
        self.calls.is_empty()
    }

    pub fn with_return_mode(mut self, mode: ReturnMode) -> Self {
        self.return_mode = mode;
        self
    }

    /// Canonical document: `{"return_mode", "calls": [{"id", "name", "args"}]}`
    /// with references written as placeholder strings.
    pub fn to_document(&self) -> serde_json::Value {
        let calls: Vec<serde_json::Value> = self
            .calls
            .iter()
            .map(|c| {
                let args: serde_json::Map<String, serde_json::Value> =
                    c.args.iter().map(|(k, v)| (k.clone(), document_value(v))).collect();
                serde_json::json!({ "id": c.id, "name": c.tool_name, "args": args })
            })
            .collect();
        serde_json::json!({ "return_mode": self.return_mode, "calls": calls })
    }

    /// Inverse of [`ToolCallSequence::to_document`]; applies the same rules as the parsers.
    pub fn from_document(doc: &serde_json::Value) -> ParseOutcome {
        let bad = |reason: &str| FormatError::new(FormatErrorKind::Syntax, format!("sequence document: {reason}"));
        let obj = doc.as_object().ok_or_else(|| bad("not an object"))?;
        let mode = match obj.get("return_mode") {
            None => ReturnMode::One,
            Some(v) => v.as_str().ok_or_else(|| bad("return_mode is not a string"))?.parse().map_err(|e: String| bad(&e))?,
        };
        let calls = obj.get("calls").and_then(|c| c.as_array()).ok_or_else(|| bad("missing calls array"))?;
        let mut ast = serde_json::Map::new();
        for call in calls {
            let id = call.get("id").and_then(|v| v.as_u64()).ok_or_else(|| bad("call without integer id"))?;
            let name = call.get("name").and_then(|v| v.as_str()).ok_or_else(|| bad("call without name"))?;
            let args = call.get("args").cloned().unwrap_or_else(|| serde_json::json!({}));
            if ast.insert(id.to_string(), serde_json::json!({ name: args })).is_some() {
                return Err(FormatError::new(FormatErrorKind::DuplicateId, format!("call id {id} appears more than once")));
            }
        }
        Ok(parse_json_ast(&serde_json::Value::Object(ast).to_string())?.with_return_mode(mode))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FormatErrorKind {
    Syntax,
    NonContiguousIds,
    MultipleToolNames,
    ForwardReference,
    DuplicateId,
    DuplicateArgument,
    BadId,
    MissingName,
    PositionalArgument,
    UnsupportedValue,
    MissingToolBlock,
    MultipleToolBlocks,
    InvalidReturnAttribute,
    UnclosedTag,
    UnrecognizedFormat,
}

/// Why a payload failed to parse. Carries a byte span into the input when
/// the failure can be localised.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{kind:?}: {reason}")]
pub struct FormatError {
    pub kind: FormatErrorKind,
    pub reason: String,
    pub span: Option<(usize, usize)>,
}

impl FormatError {
    pub fn new(kind: FormatErrorKind, reason: impl Into<String>) -> Self {
        let reason = reason.into();
        debug_assert!(!reason.is_empty());
        FormatError {
            kind,
            reason,
            span: None,
        }
    }

    pub fn at(mut self, start: usize, end: usize) -> Self {
        self.span = Some((start, end));
        self
    }

    pub(crate) fn syntax(reason: impl Into<String>, pos: usize) -> Self {
        FormatError::new(FormatErrorKind::Syntax, reason).at(pos, pos + 1)
    }
}

fn document_value(v: &ArgValue) -> serde_json::Value {
    match v {
        ArgValue::Str(s) => serde_json::Value::String(s.clone()),
        ArgValue::Int(i) => (*i).into(),
        ArgValue::Float(f) => serde_json::Number::from_f64(*f).map_or(serde_json::Value::Null, Into::into),
        ArgValue::Bool(b) => (*b).into(),
        ArgValue::Array(items) => items.iter().map(document_value).collect(),
        ArgValue::Object(map) => map.iter().map(|(k, x)| (k.clone(), document_value(x))).collect(),
        ArgValue::Ref(k) => format!("{PLACEHOLDER_PREFIX}{k}").into(),
    }
}

pub type ParseOutcome = Result<ToolCallSequence, FormatError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IrFormat {
    Json,
    Xml,
    Direct,
}

impl IrFormat {
    pub const ALL: [IrFormat; 3] = [IrFormat::Json, IrFormat::Xml, IrFormat::Direct];
}

impl fmt::Display for IrFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IrFormat::Json => "json",
            IrFormat::Xml => "xml",
            IrFormat::Direct => "direct",
        })
    }
}

impl FromStr for IrFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(IrFormat::Json),
            "xml" => Ok(IrFormat::Xml),
            "direct" => Ok(IrFormat::Direct),
            other => Err(format!("unknown IR format `{other}`")),
        }
    }
}

/// Picks a parser from the first non-whitespace character.
pub fn parse_auto(payload: &str) -> ParseOutcome {
    let Some((pos, first)) = payload.char_indices().find(|(_, c)| !c.is_whitespace()) else {
        return Err(FormatError::new(FormatErrorKind::UnrecognizedFormat, "empty payload"));
    };
    match first {
        '{' => parse_json_ast(payload),
        '<' => parse_xml_ast(payload),
        '[' => parse_direct_list(payload),
        c => Err(FormatError::new(
            FormatErrorKind::UnrecognizedFormat,
            format!("payload starts with `{c}`; expected `{{`, `<` or `[`"),
        )
        .at(pos, pos + c.len_utf8())),
    }
}

pub fn parse_as(format: IrFormat, payload: &str) -> ParseOutcome {
    match format {
        IrFormat::Json => parse_json_ast(payload),
        IrFormat::Xml => parse_xml_ast(payload),
        IrFormat::Direct => parse_direct_list(payload),
    }
}

/// Parses a full model response: extracts the `<tool_call>` block, parses
/// its payload with [`parse_auto`] and applies the block's return mode.
pub fn parse_model_response(response: &str) -> ParseOutcome {
    let block = extract_tool_call_block(response)?;
    let seq = parse_auto(&block.payload).map_err(|mut e| {
        if let Some((s, t)) = e.span {
            e.span = Some((s + block.offset, t + block.offset));
        }
        e
    })?;
    Ok(seq.with_return_mode(block.return_mode))
}

/// Accepts either a wrapped model response or a bare payload.
pub fn parse_any(text: &str, format: Option<IrFormat>) -> ParseOutcome {
    if text.contains("<tool_call") {
        let block = extract_tool_call_block(text)?;
        let seq = match format {
            Some(f) => parse_as(f, &block.payload)?,
            None => parse_auto(&block.payload)?,
        };
        return Ok(seq.with_return_mode(block.return_mode));
    }
    match format {
        Some(f) => parse_as(f, text),
        None => parse_auto(text),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SerializeError {
    #[error("value cannot be written in {format} form: {reason}")]
    UnrepresentableValue { format: IrFormat, reason: String },
}

pub fn serialize(seq: &ToolCallSequence, format: IrFormat) -> Result<String, SerializeError> {
    match format {
        IrFormat::Json => serialize_json(seq),
        IrFormat::Xml => serialize_xml(seq),
        IrFormat::Direct => serialize_direct(seq),
    }
}

pub(crate) fn unrepresentable(format: IrFormat, reason: impl Into<String>) -> SerializeError {
    SerializeError::UnrepresentableValue {
        format,
        reason: reason.into(),
    }
}

/// Checks a string value can be written without turning into a placeholder.
pub(crate) fn check_plain_string(format: IrFormat, s: &str) -> Result<(), SerializeError> {
    if placeholder_target(s).is_some() {
        return Err(unrepresentable(
            format,
            format!("plain string `{s}` would read back as a response reference"),
        ));
    }
    Ok(())
}

/// Shortest round-trip float text that still reads back as a float.
pub(crate) fn float_text(format: IrFormat, v: f64) -> Result<String, SerializeError> {
    if !v.is_finite() {
        return Err(unrepresentable(format, format!("non-finite float {v}")));
    }
    Ok(format!("{v:?}"))
}

/// Lexical scalar classification shared by the XML and direct parsers.
pub(crate) enum Lexeme {
    Int(i64),
    Float(f64),
}

pub(crate) fn classify_number(text: &str) -> Option<Lexeme> {
    let b = text.as_bytes();
    let mut i = 0;
    if b.first() == Some(&b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    if i == int_start {
        return None;
    }
    let mut is_float = false;
    if i < b.len() && b[i] == b'.' {
        is_float = true;
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == frac_start {
            return None;
        }
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        is_float = true;
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return None;
        }
    }
    if i != b.len() {
        return None;
    }
    if !is_float {
        if let Ok(v) = text.parse::<i64>() {
            return Some(Lexeme::Int(v));
        }
    }
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Lexeme::Float)
}
