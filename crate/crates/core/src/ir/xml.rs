//! `<api id="0"><name>Tool</name><param name="p" type="string">v</param></api>`
//!
//! References are written as `<param name="p"><response api_id="0" .../></param>`.
//! Composite values nest: `<param>` children build an object, `<item>`
//! children build an array. A `type` attribute is a hint only, except that
//! `type="string"` keeps the body verbatim (otherwise the trimmed body is
//! read lexically as a boolean, integer, float, placeholder or string), and
//! `type="object"`/`type="array"` disambiguate empty composites.

use indexmap::IndexMap;

use super::{
    check_plain_string, classify_number, float_text, ArgValue, Args, FormatError,
    FormatErrorKind, IrFormat, Lexeme, ParseOutcome, ReturnMode, SerializeError, ToolCall,
    ToolCallSequence,
};

#[derive(Debug)]
struct Element {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<Node>,
    start: usize,
}

impl Element {
    fn attr(&self, key: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn elements(&self) -> impl Iterator<Item = &Element> {
        self.children.iter().filter_map(|n| match n {
            Node::Element(e) => Some(e),
            Node::Text { .. } => None,
        })
    }

    fn text(&self) -> String {
        self.children
            .iter()
            .filter_map(|n| match n {
                Node::Text { text, .. } => Some(text.as_str()),
                Node::Element(_) => None,
            })
            .collect()
    }

    fn err(&self, kind: FormatErrorKind, reason: impl Into<String>) -> FormatError {
        FormatError::new(kind, reason).at(self.start, self.start + self.name.len() + 1)
    }
}

#[derive(Debug)]
enum Node {
    Element(Element),
    Text { text: String, start: usize },
}

fn push_text(children: &mut Vec<Node>, text: &str, start: usize) {
    if let Some(Node::Text { text: prev, .. }) = children.last_mut() {
        prev.push_str(text);
    } else {
        children.push(Node::Text {
            text: text.to_string(),
            start,
        });
    }
}

struct Reader<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn name(&mut self) -> Result<String, FormatError> {
        let rest = self.rest();
        let len = rest
            .char_indices()
            .find(|&(i, c)| {
                !(c.is_ascii_alphanumeric()
                    || c == '_'
                    || c == ':'
                    || (i > 0 && (c == '-' || c == '.')))
            })
            .map_or(rest.len(), |(i, _)| i);
        if len == 0 || rest.as_bytes()[0].is_ascii_digit() {
            return Err(FormatError::syntax("expected a tag or attribute name", self.pos));
        }
        self.pos += len;
        Ok(rest[..len].to_string())
    }

    fn expect(&mut self, token: &str) -> Result<(), FormatError> {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(FormatError::syntax(format!("expected `{token}`"), self.pos))
        }
    }

    fn skip_past(&mut self, end: &str, what: &str) -> Result<&'a str, FormatError> {
        let start = self.pos;
        match self.rest().find(end) {
            Some(i) => {
                let body = &self.src[start..start + i];
                self.pos = start + i + end.len();
                Ok(body)
            }
            None => Err(FormatError::new(FormatErrorKind::UnclosedTag, format!("unterminated {what}"))
                .at(start, self.src.len())),
        }
    }

    fn parse(mut self) -> Result<Vec<Node>, FormatError> {
        let mut root: Vec<Node> = Vec::new();
        let mut stack: Vec<Element> = Vec::new();
        loop {
            if self.pos >= self.src.len() {
                if let Some(open) = stack.last() {
                    return Err(open.err(
                        FormatErrorKind::UnclosedTag,
                        format!("element <{}> is never closed", open.name),
                    ));
                }
                return Ok(root);
            }
            let at = self.pos;
            let rest = self.rest();
            if rest.starts_with("<!--") {
                self.pos += 4;
                self.skip_past("-->", "comment")?;
            } else if rest.starts_with("<![CDATA[") {
                self.pos += 9;
                let body = self.skip_past("]]>", "CDATA section")?;
                let target = stack.last_mut().map_or(&mut root, |e| &mut e.children);
                push_text(target, body, at);
            } else if rest.starts_with("<?") {
                self.skip_past("?>", "processing instruction")?;
            } else if rest.starts_with("</") {
                self.pos += 2;
                let name = self.name()?;
                self.skip_ws();
                self.expect(">")?;
                let Some(open) = stack.pop() else {
                    return Err(FormatError::syntax(format!("stray closing tag </{name}>"), at));
                };
                if open.name != name {
                    return Err(FormatError::syntax(
                        format!("</{name}> closes <{}>", open.name),
                        at,
                    ));
                }
                let target = stack.last_mut().map_or(&mut root, |e| &mut e.children);
                target.push(Node::Element(open));
            } else if rest.starts_with('<') {
                self.pos += 1;
                let name = self.name()?;
                let mut attrs: Vec<(String, String)> = Vec::new();
                let self_closing = loop {
                    let before = self.pos;
                    self.skip_ws();
                    if self.rest().starts_with("/>") {
                        self.pos += 2;
                        break true;
                    }
                    if self.rest().starts_with('>') {
                        self.pos += 1;
                        break false;
                    }
                    if self.pos == before && !attrs.is_empty() {
                        return Err(FormatError::syntax("attributes must be space separated", self.pos));
                    }
                    let key_at = self.pos;
                    let key = self.name()?;
                    self.skip_ws();
                    self.expect("=")?;
                    self.skip_ws();
                    let quote = match self.rest().chars().next() {
                        Some(q @ ('"' | '\'')) => q,
                        _ => return Err(FormatError::syntax("attribute value must be quoted", self.pos)),
                    };
                    self.pos += 1;
                    let raw = self.skip_past(&quote.to_string(), "attribute value")?;
                    let value = decode_entities(raw, self.pos - raw.len() - 1)?;
                    if attrs.iter().any(|(k, _)| *k == key) {
                        return Err(FormatError::syntax(format!("duplicate attribute `{key}`"), key_at));
                    }
                    attrs.push((key, value));
                };
                let el = Element {
                    name,
                    attrs,
                    children: Vec::new(),
                    start: at,
                };
                if self_closing {
                    let target = stack.last_mut().map_or(&mut root, |e| &mut e.children);
                    target.push(Node::Element(el));
                } else {
                    stack.push(el);
                }
            } else {
                let len = rest.find('<').unwrap_or(rest.len());
                let text = decode_entities(&rest[..len], at)?;
                self.pos += len;
                let target = stack.last_mut().map_or(&mut root, |e| &mut e.children);
                push_text(target, &text, at);
            }
        }
    }
}

fn decode_entities(raw: &str, offset: usize) -> Result<String, FormatError> {
    if !raw.contains('&') {
        return Ok(raw.to_string());
    }
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        let tail = &rest[amp..];
        let bad = || FormatError::syntax("malformed entity reference", offset + (raw.len() - tail.len()));
        let semi = tail.find(';').ok_or_else(bad)?;
        let entity = &tail[1..semi];
        let ch = match entity {
            "lt" => '<',
            "gt" => '>',
            "amp" => '&',
            "quot" => '"',
            "apos" => '\'',
            _ => {
                let code = if let Some(hex) = entity.strip_prefix("#x").or(entity.strip_prefix("#X")) {
                    u32::from_str_radix(hex, 16).ok()
                } else if let Some(dec) = entity.strip_prefix('#') {
                    dec.parse().ok()
                } else {
                    None
                };
                code.and_then(char::from_u32).ok_or_else(bad)?
            }
        };
        out.push(ch);
        rest = &tail[semi + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn only_whitespace(nodes: &[Node]) -> Result<(), FormatError> {
    for n in nodes {
        if let Node::Text { text, start } = n {
            if !text.trim().is_empty() {
                return Err(FormatError::syntax(
                    format!("unexpected text `{}`", text.trim()),
                    *start,
                ));
            }
        }
    }
    Ok(())
}

fn api_id(el: &Element) -> Result<usize, FormatError> {
    let raw = el
        .attr("id")
        .ok_or_else(|| el.err(FormatErrorKind::BadId, "<api> element without an id attribute"))?;
    let canonical = !raw.is_empty()
        && raw.bytes().all(|b| b.is_ascii_digit())
        && (raw == "0" || !raw.starts_with('0'));
    canonical
        .then(|| raw.parse().ok())
        .flatten()
        .ok_or_else(|| el.err(FormatErrorKind::BadId, format!("api id `{raw}` is not a zero-based decimal id")))
}

fn lexical(text: &str) -> ArgValue {
    match text {
        "true" | "True" => return ArgValue::Bool(true),
        "false" | "False" => return ArgValue::Bool(false),
        _ => {}
    }
    match classify_number(text) {
        Some(Lexeme::Int(i)) => ArgValue::Int(i),
        Some(Lexeme::Float(f)) => ArgValue::Float(f),
        None => ArgValue::from_string(text.to_string()),
    }
}

fn value_of(el: &Element, path: &str) -> Result<ArgValue, FormatError> {
    let hint = el.attr("type");
    let kids: Vec<&Element> = el.elements().collect();
    if kids.is_empty() {
        let text = el.text();
        return Ok(match hint {
            Some("string") => ArgValue::from_string(text),
            Some("object") | Some("array") if !text.trim().is_empty() => {
                return Err(el.err(
                    FormatErrorKind::Syntax,
                    format!("`{path}` is declared composite but holds text"),
                ))
            }
            Some("object") => ArgValue::Object(IndexMap::new()),
            Some("array") => ArgValue::Array(Vec::new()),
            _ => lexical(text.trim()),
        });
    }
    only_whitespace(&el.children)?;
    match kids[0].name.as_str() {
        "response" => {
            if kids.len() != 1 {
                return Err(el.err(
                    FormatErrorKind::Syntax,
                    format!("`{path}` must hold exactly one <response> reference"),
                ));
            }
            let r = kids[0];
            let target = r
                .attr("api_id")
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| r.err(FormatErrorKind::BadId, "<response> needs a numeric api_id"))?;
            Ok(ArgValue::Ref(target))
        }
        "param" if hint != Some("array") => {
            let mut map = IndexMap::new();
            for k in kids {
                if k.name != "param" {
                    return Err(k.err(FormatErrorKind::Syntax, format!("<{}> mixed into an object", k.name)));
                }
                insert_param(&mut map, k, path)?;
            }
            Ok(ArgValue::Object(map))
        }
        "item" if hint != Some("object") => {
            let mut items = Vec::with_capacity(kids.len());
            for (i, k) in kids.into_iter().enumerate() {
                if k.name != "item" {
                    return Err(k.err(FormatErrorKind::Syntax, format!("<{}> mixed into an array", k.name)));
                }
                items.push(value_of(k, &format!("{path}[{i}]"))?);
            }
            Ok(ArgValue::Array(items))
        }
        other => Err(kids[0].err(
            FormatErrorKind::Syntax,
            format!("unexpected <{other}> inside `{path}`"),
        )),
    }
}

fn insert_param(args: &mut Args, el: &Element, parent: &str) -> Result<(), FormatError> {
    let name = el
        .attr("name")
        .filter(|n| !n.is_empty())
        .ok_or_else(|| el.err(FormatErrorKind::Syntax, "<param> without a name attribute"))?;
    let path = if parent.is_empty() { name.to_string() } else { format!("{parent}.{name}") };
    let value = value_of(el, &path)?;
    if args.insert(name.to_string(), value).is_some() {
        return Err(el.err(
            FormatErrorKind::DuplicateArgument,
            format!("argument `{path}` given more than once"),
        ));
    }
    Ok(())
}

fn api_call(el: &Element) -> Result<ToolCall, FormatError> {
    let id = api_id(el)?;
    only_whitespace(&el.children)?;
    let mut name = None;
    let mut args = IndexMap::new();
    for child in el.elements() {
        match child.name.as_str() {
            "name" => {
                if name.is_some() {
                    return Err(child.err(
                        FormatErrorKind::MultipleToolNames,
                        format!("api {id} has more than one <name>"),
                    ));
                }
                if child.elements().next().is_some() {
                    return Err(child.err(FormatErrorKind::Syntax, "<name> must hold plain text"));
                }
                name = Some(child.text().trim().to_string());
            }
            "param" => insert_param(&mut args, child, "")?,
            other => {
                return Err(child.err(
                    FormatErrorKind::Syntax,
                    format!("unexpected <{other}> inside <api>"),
                ))
            }
        }
    }
    let tool_name = name
        .filter(|n| !n.is_empty())
        .ok_or_else(|| el.err(FormatErrorKind::MissingName, format!("api {id} has no <name>")))?;
    Ok(ToolCall { id, tool_name, args })
}

/// Parses the XML AST form. An empty payload is the NO-CALL response.
pub fn parse_xml_ast(payload: &str) -> ParseOutcome {
    let nodes = Reader { src: payload, pos: 0 }.parse()?;
    only_whitespace(&nodes)?;
    let mut calls = Vec::new();
    for n in &nodes {
        if let Node::Element(el) = n {
            if el.name != "api" {
                return Err(el.err(
                    FormatErrorKind::Syntax,
                    format!("expected <api>, found <{}>", el.name),
                ));
            }
            calls.push(api_call(el)?);
        }
    }
    ToolCallSequence::new(calls, ReturnMode::One)
}

fn escape(s: &str, attr: bool) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' if attr => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

fn write_value(
    out: &mut String,
    tag: &str,
    name: Option<&str>,
    value: &ArgValue,
    seq: &ToolCallSequence,
    depth: usize,
) -> Result<(), SerializeError> {
    let pad = "    ".repeat(depth);
    let name_attr = name.map_or(String::new(), |n| format!(" name=\"{}\"", escape(n, true)));
    let scalar = |ty: &str, text: String| format!("{pad}<{tag}{name_attr} type=\"{ty}\">{text}</{tag}>\n");
    match value {
        ArgValue::Str(s) => {
            check_plain_string(IrFormat::Xml, s)?;
            out.push_str(&scalar("string", escape(s, false)));
        }
        ArgValue::Int(i) => out.push_str(&scalar("integer", i.to_string())),
        ArgValue::Float(f) => out.push_str(&scalar("float", float_text(IrFormat::Xml, *f)?)),
        ArgValue::Bool(b) => out.push_str(&scalar("boolean", b.to_string())),
        ArgValue::Ref(k) => {
            let target = &seq.calls()[*k].tool_name;
            out.push_str(&format!(
                "{pad}<{tag}{name_attr}>\n{pad}    <response api_id=\"{k}\" api_name=\"{}\" type=\"placeholder\"/>\n{pad}</{tag}>\n",
                escape(target, true)
            ));
        }
        ArgValue::Object(map) => {
            out.push_str(&format!("{pad}<{tag}{name_attr} type=\"object\">\n"));
            for (k, v) in map {
                write_value(out, "param", Some(k), v, seq, depth + 1)?;
            }
            out.push_str(&format!("{pad}</{tag}>\n"));
        }
        ArgValue::Array(items) => {
            out.push_str(&format!("{pad}<{tag}{name_attr} type=\"array\">\n"));
            for v in items {
                write_value(out, "item", None, v, seq, depth + 1)?;
            }
            out.push_str(&format!("{pad}</{tag}>\n"));
        }
    }
    Ok(())
}

pub fn serialize_xml(seq: &ToolCallSequence) -> Result<String, SerializeError> {
    let mut out = String::new();
    for (i, call) in seq.calls().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("<api id=\"{}\">\n", call.id));
        out.push_str(&format!("    <name>{}</name>\n", escape(&call.tool_name, false)));
        for (k, v) in &call.args {
            write_value(&mut out, "param", Some(k), v, seq, 1)?;
        }
        out.push_str("</api>\n");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LISTING: &str = r#"<api id="0">
    <name>API_NAME_0</name>
    <param name="P_0" type="string">VALUE_0</param>
    <param name="P_1" type="integer">1</param>
</api>

<api id="1">
    <name>API_NAME_1</name>
    <param name="P_0">
        <response api_id="0" api_name="API_NAME_0" type="placeholder"/>
    </param>
</api>"#;

    #[test]
    fn two_call_listing() {
        let seq = parse_xml_ast(LISTING).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.calls()[0].args["P_0"], ArgValue::Str("VALUE_0".into()));
        assert_eq!(seq.calls()[0].args["P_1"], ArgValue::Int(1));
        assert_eq!(seq.calls()[1].args["P_0"], ArgValue::Ref(0));
    }

    #[test]
    fn no_argument_call() {
        let seq = parse_xml_ast(r#"<api id="0"><name>F</name></api>"#).unwrap();
        assert_eq!(seq.calls()[0].tool_name, "F");
        assert!(seq.calls()[0].args.is_empty());
    }

    #[test]
    fn id_gap() {
        let p = r#"<api id="0"><name>A</name></api><api id="2"><name>B</name></api>"#;
        assert_eq!(parse_xml_ast(p).unwrap_err().kind, FormatErrorKind::NonContiguousIds);
    }

    #[test]
    fn malformed_markup() {
        let kind = |p: &str| parse_xml_ast(p).unwrap_err().kind;
        assert_eq!(kind(r#"<api id="0"><name>A</name>"#), FormatErrorKind::UnclosedTag);
        assert_eq!(kind(r#"<api id="0"><name>A</api>"#), FormatErrorKind::Syntax);
        assert_eq!(kind(r#"<api id="0"></api>"#), FormatErrorKind::MissingName);
        assert_eq!(kind(r#"<api><name>A</name></api>"#), FormatErrorKind::BadId);
        assert_eq!(kind(r#"<api id="x"><name>A</name></api>"#), FormatErrorKind::BadId);
        assert_eq!(kind(r#"<call id="0"><name>A</name></call>"#), FormatErrorKind::Syntax);
        assert_eq!(kind(r#"junk <api id="0"><name>A</name></api>"#), FormatErrorKind::Syntax);
        assert_eq!(kind(r#"<api id="0" id="1"><name>A</name></api>"#), FormatErrorKind::Syntax);
        assert_eq!(
            kind(r#"<api id="0"><name>A</name><param name="x">1</param><param name="x">2</param></api>"#),
            FormatErrorKind::DuplicateArgument
        );
        assert_eq!(
            kind(r#"<api id="0"><name>A</name><param name="x"><response api_id="0"/></param></api>"#),
            FormatErrorKind::ForwardReference
        );
        assert_eq!(kind(r#"<api id="0"><name>A &bogus; </name></api>"#), FormatErrorKind::Syntax);
    }

    #[test]
    fn lexical_inference_and_string_hint() {
        let p = r#"<api id="0"><name>F</name>
            <param name="a">4.2</param>
            <param name="b" type="float">10</param>
            <param name="c">true</param>
            <param name="d" type="string">10</param>
            <param name="e" type="string">  padded </param>
            <param name="f">Fish &amp; Chips</param>
            <param name="g"><![CDATA[<raw>]]></param>
        </api>"#;
        let args = parse_xml_ast(p).unwrap().calls()[0].args.clone();
        assert_eq!(args["a"], ArgValue::Float(4.2));
        assert_eq!(args["b"], ArgValue::Int(10));
        assert_eq!(args["c"], ArgValue::Bool(true));
        assert_eq!(args["d"], ArgValue::Str("10".into()));
        assert_eq!(args["e"], ArgValue::Str("  padded ".into()));
        assert_eq!(args["f"], ArgValue::Str("Fish & Chips".into()));
        assert_eq!(args["g"], ArgValue::Str("<raw>".into()));
    }

    #[test]
    fn composites() {
        let p = r#"<api id="0"><name>A</name></api>
        <api id="1"><name>BookHotel</name>
            <param name="check_details">
                <param name="check_in">2024-08-01</param>
                <param name="nights">7</param>
            </param>
            <param name="tags" type="array">
                <item>a</item>
                <item><response api_id="0"/></item>
            </param>
            <param name="empty" type="object"/>
        </api>"#;
        let seq = parse_xml_ast(p).unwrap();
        let args = &seq.calls()[1].args;
        let ArgValue::Object(cd) = &args["check_details"] else { panic!() };
        assert_eq!(cd["nights"], ArgValue::Int(7));
        assert_eq!(
            args["tags"],
            ArgValue::Array(vec![ArgValue::Str("a".into()), ArgValue::Ref(0)])
        );
        assert_eq!(args["empty"], ArgValue::Object(IndexMap::new()));
        let again = parse_xml_ast(&serialize_xml(&seq).unwrap()).unwrap();
        assert_eq!(seq, again);
    }

    #[test]
    fn empty_payload_is_no_call() {
        assert!(parse_xml_ast("  \n ").unwrap().is_no_call());
        assert_eq!(serialize_xml(&ToolCallSequence::no_call()).unwrap(), "");
    }

    #[test]
    fn round_trip_escapes() {
        let seq = ToolCallSequence::new(
            vec![ToolCall::new(0, "F")
                .arg("s", ArgValue::Str("a < b & \"c\"\n".into()))
                .arg("x", ArgValue::Float(1e-7))
                .arg("n", ArgValue::Int(-5))],
            ReturnMode::One,
        )
        .unwrap();
        let text = serialize_xml(&seq).unwrap();
        assert_eq!(parse_xml_ast(&text).unwrap(), seq);
    }
}
