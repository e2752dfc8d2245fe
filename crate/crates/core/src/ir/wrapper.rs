use super::{FormatError, FormatErrorKind, ReturnMode};

const OPEN: &str = "<tool_call";
const CLOSE: &str = "</tool_call>";

/// Payload found between `<tool_call return="...">` and `</tool_call>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToolCallBlock {
    pub payload: String,
    pub return_mode: ReturnMode,
    /// Byte offset of the payload within the original response.
    pub offset: usize,
}

/// Blanks out `<think>` regions, preserving byte offsets.
fn mask_think(response: &str) -> Result<String, FormatError> {
    let mut masked = response.as_bytes().to_vec();
    // A response may open with reasoning whose `<think>` tag lives in the prompt.
    let first_close = response.find("</think>");
    let first_open = response.find("<think>");
    let mut cursor = 0;
    if let Some(close) = first_close {
        if first_open.is_none_or(|o| o > close) {
            let end = close + "</think>".len();
            masked[..end].iter_mut().for_each(|b| *b = b' ');
            cursor = end;
        }
    }
    while let Some(rel) = response[cursor..].find("<think>") {
        let start = cursor + rel;
        let Some(rel_end) = response[start..].find("</think>") else {
            return Err(FormatError::new(FormatErrorKind::UnclosedTag, "unclosed <think> tag")
                .at(start, start + "<think>".len()));
        };
        let end = start + rel_end + "</think>".len();
        masked[start..end].iter_mut().for_each(|b| *b = b' ');
        cursor = end;
    }
    // Masked ranges start and end on ASCII tag boundaries, so whole chars are blanked.
    Ok(String::from_utf8(masked).expect("masking keeps utf-8 valid"))
}

fn opening_tags(text: &str) -> Vec<usize> {
    text.match_indices(OPEN)
        .filter(|(i, _)| {
            text[i + OPEN.len()..]
                .chars()
                .next()
                .is_some_and(|c| c == '>' || c == '/' || c.is_whitespace())
        })
        .map(|(i, _)| i)
        .collect()
}

fn parse_return_attr(tag: &str, tag_start: usize) -> Result<ReturnMode, FormatError> {
    let err = |reason: String| {
        FormatError::new(FormatErrorKind::InvalidReturnAttribute, reason)
            .at(tag_start, tag_start + tag.len())
    };
    let mut rest = tag.trim();
    let mut mode = None;
    while !rest.is_empty() {
        let eq = rest
            .find('=')
            .ok_or_else(|| err(format!("malformed attribute list `{}`", tag.trim())))?;
        let key = rest[..eq].trim();
        let after = rest[eq + 1..].trim_start();
        let quote = after
            .chars()
            .next()
            .filter(|c| *c == '"' || *c == '\'')
            .ok_or_else(|| err(format!("attribute `{key}` value must be quoted")))?;
        let close = after[1..]
            .find(quote)
            .ok_or_else(|| err(format!("unterminated value for `{key}`")))?;
        let value = &after[1..1 + close];
        if key == "return" {
            if mode.is_some() {
                return Err(err("duplicate `return` attribute".into()));
            }
            mode = Some(value.parse::<ReturnMode>().map_err(err)?);
        }
        rest = after[close + 2..].trim_start();
    }
    mode.ok_or_else(|| err("missing `return` attribute".into()))
}

/// Locates the single `<tool_call>` block of a model response.
pub fn extract_tool_call_block(response: &str) -> Result<ToolCallBlock, FormatError> {
    let masked = mask_think(response)?;
    let opens = opening_tags(&masked);
    let start = match opens.as_slice() {
        [] => {
            return Err(FormatError::new(
                FormatErrorKind::MissingToolBlock,
                "no <tool_call> block in response",
            ))
        }
        [one] => *one,
        [_, second, ..] => {
            return Err(FormatError::new(
                FormatErrorKind::MultipleToolBlocks,
                format!("found {} <tool_call> blocks; exactly one is allowed", opens.len()),
            )
            .at(*second, second + OPEN.len()))
        }
    };
    let attrs_start = start + OPEN.len();
    let Some(rel_gt) = masked[attrs_start..].find('>') else {
        return Err(FormatError::new(FormatErrorKind::UnclosedTag, "unterminated <tool_call> tag")
            .at(start, masked.len()));
    };
    let tag_end = attrs_start + rel_gt;
    let attrs = &masked[attrs_start..tag_end];
    if attrs.trim_end().ends_with('/') {
        return Err(FormatError::new(
            FormatErrorKind::UnclosedTag,
            "self-closing <tool_call/> carries no payload",
        )
        .at(start, tag_end + 1));
    }
    let return_mode = parse_return_attr(attrs, attrs_start)?;
    let body_start = tag_end + 1;
    let Some(rel_close) = masked[body_start..].find(CLOSE) else {
        return Err(FormatError::new(FormatErrorKind::UnclosedTag, "missing </tool_call>")
            .at(start, body_start));
    };
    Ok(ToolCallBlock {
        payload: response[body_start..body_start + rel_close].to_string(),
        return_mode,
        offset: body_start,
    })
}

/// Wraps a payload the way a model is instructed to emit it.
pub fn wrap_response(reasoning: &str, payload: &str, mode: ReturnMode) -> String {
    format!(
        "<think>\n{reasoning}\n</think>\n<tool_call return=\"{}\">\n{payload}\n</tool_call>",
        mode.as_str()
    )
}
