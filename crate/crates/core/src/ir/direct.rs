//! `[Tool_a(x=1, y="s"), Tool_b(z=API_RESPONSE_0)]`
//!
//! Keyword arguments only; values are scalar literals or bare placeholders.
//! List position gives the call id.

use indexmap::IndexMap;

use super::{
    check_plain_string, classify_number, float_text, placeholder, placeholder_target,
    unrepresentable, ArgValue, FormatError, FormatErrorKind, IrFormat, Lexeme, ParseOutcome,
    ReturnMode, SerializeError, ToolCall, ToolCallSequence,
};

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char, ctx: &str) -> Result<(), FormatError> {
        if self.eat(c) {
            Ok(())
        } else {
            let found = self.peek().map_or("end of input".to_string(), |f| format!("`{f}`"));
            Err(FormatError::syntax(format!("expected `{c}` {ctx}, found {found}"), self.pos))
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        let rest = &self.src[self.pos..];
        let first = rest.chars().next()?;
        if !(first.is_ascii_alphabetic() || first == '_') {
            return None;
        }
        let len = rest
            .char_indices()
            .find(|&(_, c)| !(c.is_ascii_alphanumeric() || c == '_' || c == '.'))
            .map_or(rest.len(), |(i, _)| i);
        self.pos += len;
        Some(&rest[..len])
    }

    fn string_lit(&mut self, quote: char) -> Result<String, FormatError> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        loop {
            let Some(c) = self.peek() else {
                return Err(FormatError::new(FormatErrorKind::Syntax, "unterminated string literal")
                    .at(start, self.src.len()));
            };
            self.pos += c.len_utf8();
            match c {
                c if c == quote => return Ok(out),
                '\\' => {
                    let esc_at = self.pos - 1;
                    let Some(e) = self.peek() else { continue };
                    self.pos += e.len_utf8();
                    out.push(match e {
                        'n' => '\n',
                        't' => '\t',
                        'r' => '\r',
                        '0' => '\0',
                        'b' => '\u{8}',
                        'f' => '\u{c}',
                        '\\' | '"' | '\'' | '/' => e,
                        'u' => {
                            let hex = self.src.get(self.pos..self.pos + 4).unwrap_or("");
                            let ch = u32::from_str_radix(hex, 16)
                                .ok()
                                .and_then(char::from_u32)
                                .ok_or_else(|| FormatError::syntax("bad \\u escape", esc_at))?;
                            self.pos += 4;
                            ch
                        }
                        _ => return Err(FormatError::syntax(format!("unknown escape `\\{e}`"), esc_at)),
                    });
                }
                c => out.push(c),
            }
        }
    }

    fn number(&mut self) -> Result<ArgValue, FormatError> {
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .char_indices()
            .find(|&(_, c)| !(c.is_ascii_digit() || matches!(c, '-' | '+' | '.' | 'e' | 'E')))
            .map_or(rest.len(), |(i, _)| i);
        self.pos += len;
        match classify_number(&rest[..len]) {
            Some(Lexeme::Int(i)) => Ok(ArgValue::Int(i)),
            Some(Lexeme::Float(f)) => Ok(ArgValue::Float(f)),
            None => Err(FormatError::syntax(format!("bad number `{}`", &rest[..len]), start)),
        }
    }

    /// A literal in value position. Unsupported forms are reported with their kind.
    fn value(&mut self) -> Result<ArgValue, FormatError> {
        let at = self.pos;
        match self.peek() {
            Some(q @ ('"' | '\'')) => Ok(ArgValue::from_string(self.string_lit(q)?)),
            Some(c) if c.is_ascii_digit() || c == '-' => self.number(),
            Some('[' | '{' | '(') => Err(FormatError::new(
                FormatErrorKind::UnsupportedValue,
                "composite values are not part of the direct call grammar",
            )
            .at(at, at + 1)),
            Some(_) => match self.ident() {
                Some("True" | "true") => Ok(ArgValue::Bool(true)),
                Some("False" | "false") => Ok(ArgValue::Bool(false)),
                Some(id) => match placeholder_target(id) {
                    Some(k) => Ok(ArgValue::Ref(k)),
                    None => Err(FormatError::new(
                        FormatErrorKind::UnsupportedValue,
                        format!("bare identifier `{id}` is not a literal or response reference"),
                    )
                    .at(at, self.pos)),
                },
                None => Err(FormatError::syntax("expected a value", at)),
            },
            None => Err(FormatError::syntax("expected a value, found end of input", at)),
        }
    }

    fn call(&mut self, id: usize) -> Result<ToolCall, FormatError> {
        let at = self.pos;
        let name = self
            .ident()
            .ok_or_else(|| FormatError::new(FormatErrorKind::MissingName, "expected a tool name").at(at, at + 1))?
            .to_string();
        self.skip_ws();
        self.expect('(', "after tool name")?;
        let mut args = IndexMap::new();
        loop {
            self.skip_ws();
            if self.eat(')') {
                break;
            }
            let arg_at = self.pos;
            let key = self.ident();
            self.skip_ws();
            let key = match key {
                Some(k) if self.eat('=') => k.to_string(),
                _ => {
                    return Err(FormatError::new(
                        FormatErrorKind::PositionalArgument,
                        format!("arguments of `{name}` must be written as name=value"),
                    )
                    .at(arg_at, arg_at + 1))
                }
            };
            self.skip_ws();
            let value = self.value()?;
            if args.insert(key.clone(), value).is_some() {
                return Err(FormatError::new(
                    FormatErrorKind::DuplicateArgument,
                    format!("argument `{key}` given more than once"),
                )
                .at(arg_at, arg_at + key.len()));
            }
            self.skip_ws();
            if !self.eat(',') {
                self.skip_ws();
                self.expect(')', "to close the argument list")?;
                break;
            }
        }
        Ok(ToolCall { id, tool_name: name, args })
    }
}

/// Parses the direct call list form.
pub fn parse_direct_list(payload: &str) -> ParseOutcome {
    let mut cur = Cursor { src: payload, pos: 0 };
    cur.skip_ws();
    cur.expect('[', "to open the call list")?;
    let mut calls = Vec::new();
    loop {
        cur.skip_ws();
        if cur.eat(']') {
            break;
        }
        calls.push(cur.call(calls.len())?);
        cur.skip_ws();
        if !cur.eat(',') {
            cur.skip_ws();
            cur.expect(']', "to close the call list")?;
            break;
        }
    }
    cur.skip_ws();
    if cur.pos != payload.len() {
        return Err(FormatError::syntax("trailing input after the call list", cur.pos));
    }
    ToolCallSequence::new(calls, ReturnMode::One)
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn literal(v: &ArgValue) -> Result<String, SerializeError> {
    Ok(match v {
        ArgValue::Str(s) => {
            check_plain_string(IrFormat::Direct, s)?;
            serde_json::to_string(s).expect("strings serialize")
        }
        ArgValue::Int(i) => i.to_string(),
        ArgValue::Float(f) => float_text(IrFormat::Direct, *f)?,
        ArgValue::Bool(true) => "True".into(),
        ArgValue::Bool(false) => "False".into(),
        ArgValue::Ref(k) => placeholder(*k),
        ArgValue::Array(_) | ArgValue::Object(_) => {
            return Err(unrepresentable(
                IrFormat::Direct,
                "composite argument values have no direct-call spelling",
            ))
        }
    })
}

pub fn serialize_direct(seq: &ToolCallSequence) -> Result<String, SerializeError> {
    let mut calls = Vec::with_capacity(seq.len());
    for call in seq.calls() {
        if !is_ident(&call.tool_name) {
            return Err(unrepresentable(
                IrFormat::Direct,
                format!("tool name `{}` is not an identifier", call.tool_name),
            ));
        }
        let mut args = Vec::with_capacity(call.args.len());
        for (k, v) in &call.args {
            if !is_ident(k) || k.contains('.') {
                return Err(unrepresentable(
                    IrFormat::Direct,
                    format!("argument name `{k}` is not an identifier"),
                ));
            }
            args.push(format!("{k}={}", literal(v)?));
        }
        calls.push(format!("{}({})", call.tool_name, args.join(", ")));
    }
    Ok(format!("[{}]", calls.join(", ")))
}
