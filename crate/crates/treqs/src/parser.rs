//! Line-oriented parser for tagged markdown files, plus the canonical
//! serializer, body normalizer, and content digest.
//!
//! The grammar is deliberately line-based so that git merges conflict at the
//! granularity of individual sentences: every tag sits alone on its own line,
//! and [`normalize_lines`] rewraps prose to one sentence per line.

use std::collections::BTreeSet;
use std::collections::HashSet;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::model::{
    is_token, ElementId, ElementKind, Finding, FindingCode, InvalidToken, RequirementElement,
    SourceSpan, TraceLink, TraceLinkType,
};

/// The kind and link-type names the parser accepts without a
/// `W001-unknown-kind` / `W004-unknown-link-type` warning. Defaults to the
/// built-in vocabulary; project configuration can extend it.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    kinds: BTreeSet<String>,
    link_types: BTreeSet<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self {
            kinds: ElementKind::BUILTIN.iter().map(|s| s.to_string()).collect(),
            link_types: TraceLinkType::BUILTIN
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl Vocabulary {
    /// Built-in vocabulary extended with project-declared names. Names must
    /// already be validated tokens.
    pub fn with_extras<'a>(
        extra_kinds: impl IntoIterator<Item = &'a str>,
        extra_link_types: impl IntoIterator<Item = &'a str>,
    ) -> Self {
        let mut vocab = Self::default();
        vocab
            .kinds
            .extend(extra_kinds.into_iter().map(String::from));
        vocab
            .link_types
            .extend(extra_link_types.into_iter().map(String::from));
        vocab
    }

    pub fn knows_kind(&self, kind: &ElementKind) -> bool {
        self.kinds.contains(kind.as_str())
    }

    pub fn knows_link_type(&self, link_type: &TraceLinkType) -> bool {
        self.link_types.contains(link_type.as_str())
    }

    pub fn kinds(&self) -> impl Iterator<Item = &str> {
        self.kinds.iter().map(String::as_str)
    }

    pub fn link_types(&self) -> impl Iterator<Item = &str> {
        self.link_types.iter().map(String::as_str)
    }
}

/// Everything extracted from one file: elements in order of appearance,
/// file-local findings, and enough layout information (`crlf`,
/// `trailing_newline`) to rewrite the file without disturbing its line-ending
/// convention.
#[derive(Debug, Clone)]
pub struct ParseResult {
    pub path: String,
    pub elements: Vec<RequirementElement>,
    pub findings: Vec<Finding>,
    pub total_lines: u32,
    /// True if the first line terminator in the file was CRLF.
    pub crlf: bool,
    /// True if the file ended with a line terminator.
    pub trailing_newline: bool,
}

/// Parses `content` with the built-in vocabulary. See [`parse_file_with`].
pub fn parse_file(path: &str, content: &str) -> ParseResult {
    parse_file_with(path, content, &Vocabulary::default())
}

const OPEN_TAG: &str = "<treqs-element";
const LINK_TAG: &str = "<treqs-link";
const CLOSE_TAG: &str = "</treqs-element";

/// Parses one file into elements and findings. Total: every input produces a
/// result, and malformed input degrades into `E003`/`E004` findings instead
/// of failures. `path` must be repository-relative with `/` separators
/// (panics otherwise — that is a caller bug, not an input error).
///
/// Never touches the file system; the caller supplies the content.
pub fn parse_file_with(path: &str, content: &str, vocab: &Vocabulary) -> ParseResult {
    let span = |start: u32, end: u32| {
        SourceSpan::new(path, start, end).expect("parse_file requires a repository-relative path")
    };
    // Probe the path contract once, before any element is built.
    let _ = span(1, 1);

    let crlf = match content.find('\n') {
        Some(pos) => content[..pos].ends_with('\r'),
        None => false,
    };
    let lines: Vec<&str> = content.lines().collect();
    let total_lines = lines.len() as u32;

    let mut elements = Vec::new();
    let mut findings = Vec::new();

    enum State {
        /// Narrative markdown between elements.
        Outside,
        /// Inside a well-formed element opened at `open_line`.
        Element(OpenElement),
        /// Inside a region opened by a malformed element tag; skipped
        /// entirely until the next closing tag.
        Skipping,
    }

    struct OpenElement {
        id: ElementId,
        kind: ElementKind,
        attributes: std::collections::BTreeMap<String, String>,
        open_line: u32,
        body: Vec<String>,
        links: Vec<TraceLink>,
        seen_links: BTreeSet<(ElementId, TraceLinkType)>,
    }

    let mut state = State::Outside;

    for (index, raw_line) in lines.iter().enumerate() {
        let line_no = index as u32 + 1;
        let trimmed = raw_line.trim();
        let kind_of_line = classify(trimmed);

        match &mut state {
            State::Outside => match kind_of_line {
                LineKind::Open => match parse_open_tag(trimmed, vocab) {
                    Ok((id, kind, attributes, warnings)) => {
                        for message in warnings {
                            findings.push(Finding::new(
                                FindingCode::UnknownKind,
                                message,
                                span(line_no, line_no),
                            ));
                        }
                        state = State::Element(OpenElement {
                            id,
                            kind,
                            attributes,
                            open_line: line_no,
                            body: Vec::new(),
                            links: Vec::new(),
                            seen_links: BTreeSet::new(),
                        });
                    }
                    Err(message) => {
                        findings.push(Finding::new(
                            FindingCode::MalformedTag,
                            message,
                            span(line_no, line_no),
                        ));
                        state = State::Skipping;
                    }
                },
                LineKind::Close => {
                    findings.push(Finding::new(
                        FindingCode::MalformedTag,
                        "closing tag without a matching opening tag",
                        span(line_no, line_no),
                    ));
                }
                // Narrative markdown, including link tags outside any
                // element: ignored entirely.
                LineKind::Link | LineKind::Other => {}
            },

            State::Element(open) => match kind_of_line {
                LineKind::Open => {
                    findings.push(Finding::new(
                        FindingCode::NestedElement,
                        format!(
                            "element tag nested inside `{}`; the line is kept as body text",
                            open.id
                        ),
                        span(line_no, line_no),
                    ));
                    open.body.push((*raw_line).to_string());
                }
                LineKind::Close => {
                    if trimmed == "</treqs-element>" {
                        let open = match std::mem::replace(&mut state, State::Outside) {
                            State::Element(open) => open,
                            _ => unreachable!(),
                        };
                        let element_span = span(open.open_line, line_no);
                        let title = derive_title(&open.body);
                        elements.push(RequirementElement {
                            id: open.id,
                            kind: open.kind,
                            title,
                            body: open.body,
                            links: open.links,
                            attributes: open.attributes,
                            span: element_span,
                        });
                    } else {
                        findings.push(Finding::new(
                            FindingCode::MalformedTag,
                            "malformed closing tag; the line is kept as body text",
                            span(line_no, line_no),
                        ));
                        open.body.push((*raw_line).to_string());
                    }
                }
                LineKind::Link => match parse_link_tag(trimmed) {
                    Ok((target, link_type)) => {
                        if target == open.id {
                            findings.push(Finding::new(
                                FindingCode::SelfLink,
                                format!("link from `{}` to itself is ignored", open.id),
                                span(line_no, line_no),
                            ));
                        } else if !open.seen_links.insert((target.clone(), link_type.clone())) {
                            findings.push(Finding::new(
                                FindingCode::DuplicateLink,
                                format!(
                                    "duplicate link to `{target}` (type `{link_type}`) is ignored"
                                ),
                                span(line_no, line_no),
                            ));
                        } else {
                            if !vocab.knows_link_type(&link_type) {
                                findings.push(Finding::new(
                                    FindingCode::UnknownLinkType,
                                    format!(
                                        "link type `{link_type}` is neither built in nor declared in the configuration"
                                    ),
                                    span(line_no, line_no),
                                ));
                            }
                            let link = TraceLink::new(
                                open.id.clone(),
                                target,
                                link_type,
                                span(line_no, line_no),
                            )
                            .expect("self links are filtered before construction");
                            open.links.push(link);
                        }
                    }
                    Err(message) => {
                        findings.push(Finding::new(
                            FindingCode::MalformedTag,
                            message,
                            span(line_no, line_no),
                        ));
                        open.body.push((*raw_line).to_string());
                    }
                },
                LineKind::Other => open.body.push((*raw_line).to_string()),
            },

            State::Skipping => {
                if kind_of_line == LineKind::Close && trimmed == "</treqs-element>" {
                    state = State::Outside;
                }
            }
        }
    }

    if let State::Element(open) = state {
        findings.push(Finding::new(
            FindingCode::MalformedTag,
            format!("element `{}` is never closed", open.id),
            span(open.open_line, open.open_line),
        ));
    }

    ParseResult {
        path: path.to_string(),
        elements,
        findings,
        total_lines,
        crlf,
        trailing_newline: content.ends_with('\n'),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LineKind {
    Open,
    Close,
    Link,
    Other,
}

/// Decides whether a trimmed line is an attempted treqs tag. The tag name
/// must end at a word boundary, so e.g. `<treqs-elementary>` stays narrative
/// text.
fn classify(trimmed: &str) -> LineKind {
    fn boundary(rest: &str) -> bool {
        matches!(
            rest.as_bytes().first(),
            None | Some(b' ' | b'\t' | b'>' | b'/')
        )
    }
    if let Some(rest) = trimmed.strip_prefix(CLOSE_TAG) {
        if matches!(rest.as_bytes().first(), None | Some(b' ' | b'\t' | b'>')) {
            return LineKind::Close;
        }
    }
    if let Some(rest) = trimmed.strip_prefix(OPEN_TAG) {
        if boundary(rest) {
            return LineKind::Open;
        }
    }
    if let Some(rest) = trimmed.strip_prefix(LINK_TAG) {
        if boundary(rest) {
            return LineKind::Link;
        }
    }
    LineKind::Other
}

struct RawTag {
    attrs: Vec<(String, String)>,
    self_closing: bool,
}

/// Scans one trimmed tag line: `<name key="value" ... >` or `... />`.
/// Attribute keys must be tokens; values may contain anything except `"`.
fn scan_tag(trimmed: &str, name: &str) -> Result<RawTag, String> {
    let rest = trimmed
        .strip_prefix('<')
        .and_then(|r| r.strip_prefix(name))
        .ok_or_else(|| format!("expected `<{name}`"))?;

    let mut chars = rest.char_indices().peekable();
    let mut attrs: Vec<(String, String)> = Vec::new();
    let bytes = rest;

    loop {
        // Between attributes: whitespace, then either the tag end or a key.
        let mut saw_space = false;
        while let Some((_, c)) = chars.peek() {
            if *c == ' ' || *c == '\t' {
                saw_space = true;
                chars.next();
            } else {
                break;
            }
        }
        match chars.peek() {
            None => return Err("tag is not closed with `>`".into()),
            Some((_, '/')) => {
                chars.next();
                match chars.next() {
                    Some((_, '>')) => {}
                    _ => return Err("expected `>` after `/`".into()),
                }
                let tail: String = chars.map(|(_, c)| c).collect();
                if !tail.trim().is_empty() {
                    return Err("content after the tag on the same line".into());
                }
                return Ok(RawTag {
                    attrs,
                    self_closing: true,
                });
            }
            Some((_, '>')) => {
                chars.next();
                let tail: String = chars.map(|(_, c)| c).collect();
                if !tail.trim().is_empty() {
                    return Err("content after the tag on the same line".into());
                }
                return Ok(RawTag {
                    attrs,
                    self_closing: false,
                });
            }
            Some((start, _)) => {
                if !saw_space {
                    return Err("expected a space before the attribute".into());
                }
                let key_start = *start;
                let mut key_end = key_start;
                while let Some((i, c)) = chars.peek() {
                    if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                        key_end = *i + c.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                let key = &bytes[key_start..key_end];
                if !is_token(key) {
                    return Err(format!("attribute name `{key}` is not a valid token"));
                }
                match chars.next() {
                    Some((_, '=')) => {}
                    _ => return Err(format!("attribute `{key}` is missing `=\"value\"`")),
                }
                match chars.next() {
                    Some((_, '"')) => {}
                    _ => return Err(format!("attribute `{key}` value must be double-quoted")),
                }
                let mut value = String::new();
                let mut closed = false;
                for (_, c) in chars.by_ref() {
                    if c == '"' {
                        closed = true;
                        break;
                    }
                    value.push(c);
                }
                if !closed {
                    return Err(format!(
                        "attribute `{key}` value is missing the closing quote"
                    ));
                }
                if attrs.iter().any(|(k, _)| k == key) {
                    return Err(format!("attribute `{key}` appears twice"));
                }
                attrs.push((key.to_string(), value));
            }
        }
    }
}

type OpenTagParts = (
    ElementId,
    ElementKind,
    std::collections::BTreeMap<String, String>,
    Vec<String>,
);

fn parse_open_tag(trimmed: &str, vocab: &Vocabulary) -> Result<OpenTagParts, String> {
    let tag =
        scan_tag(trimmed, "treqs-element").map_err(|e| format!("malformed element tag: {e}"))?;
    if tag.self_closing {
        return Err("malformed element tag: elements cannot be self-closing".into());
    }
    let mut id = None;
    let mut kind = None;
    let mut attributes = std::collections::BTreeMap::new();
    for (key, value) in tag.attrs {
        match key.as_str() {
            "id" => {
                id = Some(ElementId::new(&value).map_err(|_| {
                    format!("malformed element tag: id `{value}` is not a valid token")
                })?)
            }
            "type" => {
                kind = Some(ElementKind::new(&value).map_err(|_| {
                    format!("malformed element tag: type `{value}` is not a valid token")
                })?)
            }
            _ => {
                attributes.insert(key, value);
            }
        }
    }
    let id = id.ok_or("malformed element tag: missing `id` attribute")?;
    let kind = kind.ok_or("malformed element tag: missing `type` attribute")?;
    let mut warnings = Vec::new();
    if !vocab.knows_kind(&kind) {
        warnings.push(format!(
            "element kind `{kind}` is neither built in nor declared in the configuration"
        ));
    }
    Ok((id, kind, attributes, warnings))
}

fn parse_link_tag(trimmed: &str) -> Result<(ElementId, TraceLinkType), String> {
    let tag = scan_tag(trimmed, "treqs-link").map_err(|e| format!("malformed link tag: {e}"))?;
    if !tag.self_closing {
        return Err("malformed link tag: link tags must be self-closing (`/>`)".into());
    }
    let mut target = None;
    let mut link_type = None;
    for (key, value) in tag.attrs {
        match key.as_str() {
            "target" => {
                target = Some(ElementId::new(&value).map_err(|_| {
                    format!("malformed link tag: target `{value}` is not a valid token")
                })?)
            }
            "type" => {
                link_type = Some(TraceLinkType::new(&value).map_err(|_| {
                    format!("malformed link tag: type `{value}` is not a valid token")
                })?)
            }
            other => {
                return Err(format!(
                    "malformed link tag: unexpected attribute `{other}`"
                ));
            }
        }
    }
    Ok((
        target.ok_or("malformed link tag: missing `target` attribute")?,
        link_type.ok_or("malformed link tag: missing `type` attribute")?,
    ))
}

/// Text of the first markdown heading among `body` lines, or empty.
fn derive_title(body: &[String]) -> String {
    for line in body {
        let t = line.trim_start();
        if t.starts_with('#') {
            return t.trim_start_matches('#').trim().to_string();
        }
    }
    String::new()
}

/// Renders an element in canonical form: opening tag with `id`, `type`, then
/// extra attributes in alphabetical order; body lines verbatim; links in
/// declaration order; closing tag. Always ends with a newline. LF only —
/// writers that preserve a file's CRLF convention convert afterwards.
pub fn serialize_element(element: &RequirementElement) -> String {
    let mut out = String::new();
    write!(
        out,
        "<treqs-element id=\"{}\" type=\"{}\"",
        element.id, element.kind
    )
    .unwrap();
    for (key, value) in &element.attributes {
        write!(out, " {key}=\"{value}\"").unwrap();
    }
    out.push_str(">\n");
    for line in &element.body {
        out.push_str(line);
        out.push('\n');
    }
    for link in &element.links {
        writeln!(
            out,
            "<treqs-link type=\"{}\" target=\"{}\" />",
            link.link_type, link.target
        )
        .unwrap();
    }
    out.push_str("</treqs-element>\n");
    out
}

/// Returns a copy of `element` with its body normalized to the line-wise
/// convention via [`normalize_lines`].
pub fn normalize_body(element: &RequirementElement) -> RequirementElement {
    let mut normalized = element.clone();
    normalized.body = normalize_lines(&element.body);
    normalized
}

/// Rewraps prose so every line holds exactly one sentence, which keeps merge
/// conflicts confined to the sentences that actually changed.
///
/// Blank lines, heading lines (`#`), list items (`-`, `*`, `1.`), and fenced
/// code blocks pass through verbatim. Consecutive prose lines form a
/// paragraph: they are joined with single spaces and split after `.`, `!` or
/// `?` followed by whitespace and an uppercase letter. Idempotent, and no
/// non-whitespace character is added or removed.
pub fn normalize_lines(lines: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut paragraph: Vec<&str> = Vec::new();
    let mut in_fence = false;

    fn flush(paragraph: &mut Vec<&str>, out: &mut Vec<String>) {
        if paragraph.is_empty() {
            return;
        }
        let joined = paragraph.join(" ");
        out.extend(split_sentences(&joined));
        paragraph.clear();
    }

    for line in lines {
        let t = line.trim_start();
        if in_fence {
            out.push(line.clone());
            if is_fence(t) {
                in_fence = false;
            }
            continue;
        }
        if is_fence(t) {
            flush(&mut paragraph, &mut out);
            out.push(line.clone());
            in_fence = true;
        } else if t.is_empty() || t.starts_with('#') || is_list_item(t) {
            flush(&mut paragraph, &mut out);
            out.push(line.clone());
        } else {
            paragraph.push(line.trim());
        }
    }
    flush(&mut paragraph, &mut out);
    out
}

fn is_fence(trimmed_start: &str) -> bool {
    trimmed_start.starts_with("```") || trimmed_start.starts_with("~~~")
}

fn is_list_item(trimmed_start: &str) -> bool {
    if trimmed_start.starts_with('-') || trimmed_start.starts_with('*') {
        return true;
    }
    let digits = trimmed_start
        .chars()
        .take_while(|c| c.is_ascii_digit())
        .count();
    digits > 0 && trimmed_start[digits..].starts_with('.')
}

/// Splits joined paragraph text into sentences: a sentence ends at `.`, `!`
/// or `?` when followed by whitespace and an uppercase letter.
fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut parts = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        if matches!(chars[i], '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            if j > i + 1 && j < chars.len() && chars[j].is_uppercase() {
                parts.push(chars[start..=i].iter().collect());
                start = j;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    if start < chars.len() {
        parts.push(chars[start..].iter().collect());
    }
    parts
}

/// Picks the smallest `<prefix>-<n>` (n >= 1) that is not in `existing`.
/// Fails only if the prefix itself is not a valid token or the generated ID
/// would exceed the token length limit.
pub fn generate_id(existing: &HashSet<ElementId>, prefix: &str) -> Result<ElementId, InvalidToken> {
    if !is_token(prefix) {
        return Err(InvalidToken(prefix.to_string()));
    }
    for n in 1u64.. {
        let id = ElementId::new(format!("{prefix}-{n}"))?;
        if !existing.contains(&id) {
            return Ok(id);
        }
    }
    unreachable!("u64 candidate space cannot be exhausted")
}

/// Rewrites a whole file into canonical form: narrative lines and malformed
/// regions stay byte-for-byte untouched, while every well-formed element is
/// re-emitted via [`serialize_element`] with its body normalized. The file's
/// line-ending convention (CRLF vs LF) and the presence of a final newline
/// are preserved. Idempotent, and the content digest of every element is
/// unchanged.
pub fn format_content(path: &str, content: &str, vocab: &Vocabulary) -> String {
    let parsed = parse_file_with(path, content, vocab);
    let lines: Vec<&str> = content.lines().collect();

    let mut out_lines: Vec<String> = Vec::with_capacity(lines.len());
    let mut cursor = 0usize; // index into `lines`
    for element in &parsed.elements {
        let start = (element.span.start_line - 1) as usize;
        let end = element.span.end_line as usize;
        out_lines.extend(lines[cursor..start].iter().map(|l| l.to_string()));
        let canonical = serialize_element(&normalize_body(element));
        out_lines.extend(canonical.lines().map(String::from));
        cursor = end;
    }
    out_lines.extend(lines[cursor..].iter().map(|l| l.to_string()));

    let eol = if parsed.crlf { "\r\n" } else { "\n" };
    let mut out = out_lines.join(eol);
    if parsed.trailing_newline && !out_lines.is_empty() {
        out.push_str(eol);
    }
    out
}

/// Digest of an element's meaning, used to decide whether an element
/// *changed* between two revisions: covers kind, extra attributes, the
/// normalized body, and the link set (sorted, spans excluded). Whitespace
/// reflowing and moves across files leave the digest unchanged.
pub fn content_digest(element: &RequirementElement) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"kind:");
    hasher.update(element.kind.as_str().as_bytes());
    hasher.update(b"\n");
    for (key, value) in &element.attributes {
        hasher.update(b"attr:");
        hasher.update(key.as_bytes());
        hasher.update(b"=");
        hasher.update(value.as_bytes());
        hasher.update(b"\n");
    }
    for line in normalize_lines(&element.body) {
        hasher.update(b"body:");
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
    }
    let mut links: Vec<(&str, &str)> = element
        .links
        .iter()
        .map(|l| (l.link_type.as_str(), l.target.as_str()))
        .collect();
    links.sort_unstable();
    for (link_type, target) in links {
        hasher.update(b"link:");
        hasher.update(link_type.as_bytes());
        hasher.update(b"->");
        hasher.update(target.as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        write!(hex, "{byte:02x}").unwrap();
    }
    hex
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Severity;

    fn ids(result: &ParseResult) -> Vec<&str> {
        result.elements.iter().map(|e| e.id.as_str()).collect()
    }

    fn codes(result: &ParseResult) -> Vec<FindingCode> {
        result.findings.iter().map(|f| f.code).collect()
    }

    #[test]
    fn well_formed_file_with_narrative() {
        let text = "\
# Product requirements

Some intro prose that is not part of any element.

<treqs-element id=\"REQ-1\" type=\"requirement\">
## Pump shutdown
The pump shall stop within 2 seconds.
<treqs-link type=\"refines\" target=\"REQ-0\" />
</treqs-element>

Trailing narrative.
";
        let result = parse_file("docs/reqs.md", text);
        assert_eq!(ids(&result), ["REQ-1"]);
        assert!(result.findings.is_empty());
        let element = &result.elements[0];
        assert_eq!(element.kind, ElementKind::requirement());
        assert_eq!(element.title, "Pump shutdown");
        assert_eq!(
            element.body,
            ["## Pump shutdown", "The pump shall stop within 2 seconds."]
        );
        assert_eq!(element.links.len(), 1);
        assert_eq!(element.links[0].target.as_str(), "REQ-0");
        assert_eq!(element.links[0].span.start_line, 8);
        assert_eq!(element.span.start_line, 5);
        assert_eq!(element.span.end_line, 9);
        assert_eq!(result.total_lines, 11);
        assert!(!result.crlf);
        assert!(result.trailing_newline);
    }

    #[test]
    fn empty_file_yields_empty_result() {
        let result = parse_file("a.md", "");
        assert!(result.elements.is_empty());
        assert!(result.findings.is_empty());
        assert_eq!(result.total_lines, 0);
        assert!(!result.trailing_newline);
    }

    #[test]
    fn file_without_elements_counts_lines() {
        let result = parse_file("a.md", "just\nprose\n");
        assert!(result.elements.is_empty());
        assert_eq!(result.total_lines, 2);
    }

    #[test]
    fn missing_close_is_e003_at_open_line() {
        let text = "<treqs-element id=\"A\" type=\"requirement\">\nBody.\n";
        let result = parse_file("a.md", text);
        assert!(result.elements.is_empty());
        assert_eq!(codes(&result), [FindingCode::MalformedTag]);
        assert_eq!(result.findings[0].span.start_line, 1);
        assert!(result.findings[0].message.contains("never closed"));
    }

    #[test]
    fn nested_open_is_e004_and_body_text() {
        let text = "\
<treqs-element id=\"A\" type=\"requirement\">
Outer body.
  <treqs-element id=\"B\" type=\"requirement\">
Still outer body.
</treqs-element>
";
        let result = parse_file("a.md", text);
        assert_eq!(ids(&result), ["A"]);
        assert_eq!(codes(&result), [FindingCode::NestedElement]);
        assert_eq!(result.findings[0].span.start_line, 3);
        assert_eq!(
            result.elements[0].body,
            [
                "Outer body.",
                "  <treqs-element id=\"B\" type=\"requirement\">",
                "Still outer body."
            ]
        );
    }

    #[test]
    fn malformed_open_skips_region() {
        let text = "\
<treqs-element id=\"not a token\" type=\"requirement\">
This whole region is skipped.
<treqs-link type=\"tests\" target=\"X\" />
</treqs-element>

<treqs-element id=\"B\" type=\"test\">
Kept.
</treqs-element>
";
        let result = parse_file("a.md", text);
        assert_eq!(ids(&result), ["B"]);
        assert_eq!(codes(&result), [FindingCode::MalformedTag]);
        assert_eq!(result.findings[0].span.start_line, 1);
    }

    #[test]
    fn malformed_link_is_e003_and_stays_in_body() {
        let text = "\
<treqs-element id=\"A\" type=\"requirement\">
<treqs-link type=\"tests\" target= />
</treqs-element>
";
        let result = parse_file("a.md", text);
        assert_eq!(codes(&result), [FindingCode::MalformedTag]);
        assert_eq!(
            result.elements[0].body,
            ["<treqs-link type=\"tests\" target= />"]
        );
        assert!(result.elements[0].links.is_empty());
    }

    #[test]
    fn self_link_is_dropped_with_w003() {
        let text = "\
<treqs-element id=\"A\" type=\"requirement\">
<treqs-link type=\"relates-to\" target=\"A\" />
</treqs-element>
";
        let result = parse_file("a.md", text);
        assert_eq!(codes(&result), [FindingCode::SelfLink]);
        assert_eq!(result.findings[0].severity(), Severity::Warning);
        assert!(result.elements[0].links.is_empty());
        assert!(result.elements[0].body.is_empty());
    }

    #[test]
    fn duplicate_link_in_element_is_dropped_with_w005() {
        let text = "\
<treqs-element id=\"A\" type=\"requirement\">
<treqs-link type=\"refines\" target=\"B\" />
<treqs-link type=\"refines\" target=\"B\" />
<treqs-link type=\"implements\" target=\"B\" />
</treqs-element>
";
        let result = parse_file("a.md", text);
        assert_eq!(codes(&result), [FindingCode::DuplicateLink]);
        assert_eq!(result.elements[0].links.len(), 2);
    }

    #[test]
    fn unknown_kind_and_link_type_warn_with_default_vocabulary() {
        let text = "\
<treqs-element id=\"A\" type=\"hazard\">
<treqs-link type=\"mitigates\" target=\"B\" />
</treqs-element>
";
        let result = parse_file("a.md", text);
        assert_eq!(
            codes(&result),
            [FindingCode::UnknownKind, FindingCode::UnknownLinkType]
        );
        // The element and the link are both kept.
        assert_eq!(ids(&result), ["A"]);
        assert_eq!(result.elements[0].links.len(), 1);

        let vocab = Vocabulary::with_extras(["hazard"], ["mitigates"]);
        let result = parse_file_with("a.md", text, &vocab);
        assert!(result.findings.is_empty());
    }

    #[test]
    fn stray_close_tag_is_e003() {
        let result = parse_file("a.md", "prose\n</treqs-element>\n");
        assert_eq!(codes(&result), [FindingCode::MalformedTag]);
        assert_eq!(result.findings[0].span.start_line, 2);
    }

    #[test]
    fn link_tag_outside_elements_is_narrative() {
        let result = parse_file("a.md", "<treqs-link type=\"tests\" target=\"A\" />\n");
        assert!(result.elements.is_empty());
        assert!(result.findings.is_empty());
    }

    #[test]
    fn lookalike_tag_names_are_narrative() {
        let result = parse_file("a.md", "<treqs-elementary>\n<treqs-linkage />\n");
        assert!(result.elements.is_empty());
        assert!(result.findings.is_empty());
    }

    #[test]
    fn open_tag_attribute_variants() {
        for (line, reason) in [
            ("<treqs-element type=\"requirement\">", "missing `id`"),
            ("<treqs-element id=\"A\">", "missing `type`"),
            (
                "<treqs-element id=\"A\" type=\"requirement\" id=\"B\">",
                "appears twice",
            ),
            ("<treqs-element id=\"A\" type=\"requirement\"", "not closed"),
            (
                "<treqs-element id=\"A\" type=\"requirement\" x>",
                "missing `=\"value\"`",
            ),
            (
                "<treqs-element id=\"A\" type=\"requirement\" x=\"y>",
                "closing quote",
            ),
            (
                "<treqs-element id=\"A\" type=\"requirement\" />",
                "self-closing",
            ),
            (
                "<treqs-element id=\"A\" type=\"requirement\"> tail",
                "after the tag",
            ),
        ] {
            let text = format!("{line}\n</treqs-element>\n");
            let result = parse_file("a.md", &text);
            assert!(result.elements.is_empty(), "{line}");
            assert_eq!(result.findings[0].code, FindingCode::MalformedTag, "{line}");
            assert!(
                result.findings[0].message.contains(reason),
                "{line}: got {}",
                result.findings[0].message
            );
        }
    }

    #[test]
    fn extra_attributes_are_collected() {
        let text = "<treqs-element id=\"A\" type=\"requirement\" status=\"draft\" asil=\"B\">\n</treqs-element>\n";
        let result = parse_file("a.md", text);
        let element = &result.elements[0];
        assert_eq!(element.attributes.len(), 2);
        assert_eq!(element.attributes["status"], "draft");
        assert_eq!(element.attributes["asil"], "B");
    }

    #[test]
    fn crlf_files_parse_identically() {
        let lf = "<treqs-element id=\"A\" type=\"requirement\">\nBody.\n</treqs-element>\n";
        let crlf = lf.replace('\n', "\r\n");
        let a = parse_file("a.md", lf);
        let b = parse_file("a.md", &crlf);
        assert!(!a.crlf);
        assert!(b.crlf);
        assert_eq!(a.elements, b.elements);
        assert!(b.findings.is_empty());
    }

    #[test]
    fn title_is_empty_without_heading() {
        let text =
            "<treqs-element id=\"A\" type=\"requirement\">\nNo heading here.\n</treqs-element>\n";
        let result = parse_file("a.md", text);
        assert_eq!(result.elements[0].title, "");
    }

    #[test]
    fn serialize_canonical_form() {
        let text = "\
<treqs-element id=\"REQ-2\" status=\"draft\" type=\"requirement\" asil=\"B\">
## Title
Body line.
<treqs-link type=\"refines\" target=\"REQ-1\" />
</treqs-element>
";
        let element = parse_file("a.md", text).elements.remove(0);
        assert_eq!(
            serialize_element(&element),
            "\
<treqs-element id=\"REQ-2\" type=\"requirement\" asil=\"B\" status=\"draft\">
## Title
Body line.
<treqs-link type=\"refines\" target=\"REQ-1\" />
</treqs-element>
"
        );
    }

    #[test]
    fn serialize_empty_element_is_two_lines() {
        let text = "<treqs-element id=\"A\" type=\"requirement\">\n</treqs-element>\n";
        let element = parse_file("a.md", text).elements.remove(0);
        let out = serialize_element(&element);
        assert_eq!(
            out,
            "<treqs-element id=\"A\" type=\"requirement\">\n</treqs-element>\n"
        );
        assert_eq!(out.lines().count(), 2);
    }

    #[test]
    fn round_trip_preserves_element() {
        let text = "\
<treqs-element id=\"REQ-7\" type=\"requirement\" status=\"approved\">
## Heading

Prose stays verbatim.
- list item
<treqs-link type=\"refines\" target=\"REQ-1\" />
<treqs-link type=\"relates-to\" target=\"REQ-2\" />
</treqs-element>
";
        let first = parse_file("a.md", text).elements.remove(0);
        let reparsed = parse_file("a.md", &serialize_element(&first))
            .elements
            .remove(0);
        assert_eq!(reparsed.id, first.id);
        assert_eq!(reparsed.kind, first.kind);
        assert_eq!(reparsed.title, first.title);
        assert_eq!(reparsed.body, first.body);
        assert_eq!(reparsed.attributes, first.attributes);
        assert_eq!(reparsed.links.len(), first.links.len());
        for (a, b) in reparsed.links.iter().zip(&first.links) {
            assert_eq!(a.triple(), b.triple());
        }
    }

    #[test]
    fn normalize_splits_sentences() {
        let body = vec!["The pump stops. The light turns red. see below".to_string()];
        assert_eq!(
            normalize_lines(&body),
            ["The pump stops.", "The light turns red. see below"]
        );
    }

    #[test]
    fn normalize_joins_then_splits_paragraphs() {
        let body: Vec<String> = ["One sentence", "split over lines. Another one."]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(
            normalize_lines(&body),
            ["One sentence split over lines.", "Another one."]
        );
    }

    #[test]
    fn normalize_preserves_structure_lines() {
        let body: Vec<String> = [
            "## Heading",
            "",
            "Prose one. Prose two.",
            "- item one. Still item",
            "1. numbered",
            "```",
            "code. Not Split.",
            "```",
            "* star item",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        assert_eq!(
            normalize_lines(&body),
            [
                "## Heading",
                "",
                "Prose one.",
                "Prose two.",
                "- item one. Still item",
                "1. numbered",
                "```",
                "code. Not Split.",
                "```",
                "* star item",
            ]
        );
    }

    #[test]
    fn normalize_is_idempotent_on_abbreviation_text() {
        let body = vec!["See e.g. the manual. It helps.".to_string()];
        let once = normalize_lines(&body);
        // "e.g. the" does not split (lowercase continuation); ". It" does.
        assert_eq!(once, ["See e.g. the manual.", "It helps."]);
        assert_eq!(normalize_lines(&once), once);
    }

    #[test]
    fn normalize_handles_multi_punctuation() {
        let body = vec!["Really?! Yes. done".to_string()];
        assert_eq!(normalize_lines(&body), ["Really?!", "Yes. done"]);
    }

    #[test]
    fn generate_id_fills_smallest_gap() {
        let existing: HashSet<ElementId> = ["REQ-1", "REQ-2", "REQ-4"]
            .iter()
            .map(|s| ElementId::new(*s).unwrap())
            .collect();
        assert_eq!(generate_id(&existing, "REQ").unwrap().as_str(), "REQ-3");
        assert_eq!(
            generate_id(&HashSet::new(), "REQ").unwrap().as_str(),
            "REQ-1"
        );
        assert!(generate_id(&existing, "bad prefix").is_err());
    }

    #[test]
    fn content_digest_ignores_rewrapping_and_location() {
        let a = parse_file(
            "a.md",
            "<treqs-element id=\"A\" type=\"requirement\">\nOne sentence. Two\nsentence.\n</treqs-element>\n",
        )
        .elements
        .remove(0);
        let b = parse_file(
            "elsewhere/b.md",
            "\n\n<treqs-element id=\"A\" type=\"requirement\">\nOne sentence.\nTwo sentence.\n</treqs-element>\n",
        )
        .elements
        .remove(0);
        assert_eq!(content_digest(&a), content_digest(&b));
    }

    #[test]
    fn content_digest_sees_links_attrs_and_kind() {
        let base = "<treqs-element id=\"A\" type=\"requirement\">\nBody.\n</treqs-element>\n";
        let digest = |text: &str| content_digest(&parse_file("a.md", text).elements.remove(0));
        let base_digest = digest(base);
        assert_ne!(
            base_digest,
            digest("<treqs-element id=\"A\" type=\"information\">\nBody.\n</treqs-element>\n")
        );
        assert_ne!(
            base_digest,
            digest("<treqs-element id=\"A\" type=\"requirement\" status=\"draft\">\nBody.\n</treqs-element>\n")
        );
        assert_ne!(
            base_digest,
            digest("<treqs-element id=\"A\" type=\"requirement\">\nBody.\n<treqs-link type=\"refines\" target=\"B\" />\n</treqs-element>\n")
        );
        // Link order does not matter.
        assert_eq!(
            digest("<treqs-element id=\"A\" type=\"requirement\">\n<treqs-link type=\"refines\" target=\"B\" />\n<treqs-link type=\"refines\" target=\"C\" />\n</treqs-element>\n"),
            digest("<treqs-element id=\"A\" type=\"requirement\">\n<treqs-link type=\"refines\" target=\"C\" />\n<treqs-link type=\"refines\" target=\"B\" />\n</treqs-element>\n"),
        );
    }

    #[test]
    fn format_content_normalizes_elements_only() {
        let text = "\
# Narrative   heading stays untouched.

<treqs-element id=\"B\" status=\"x\" type=\"requirement\">
First sentence. Second sentence.
</treqs-element>

trailing   narrative.
";
        let formatted = format_content("a.md", text, &Vocabulary::default());
        assert_eq!(
            formatted,
            "\
# Narrative   heading stays untouched.

<treqs-element id=\"B\" type=\"requirement\" status=\"x\">
First sentence.
Second sentence.
</treqs-element>

trailing   narrative.
"
        );
        // Idempotent.
        let again = format_content("a.md", &formatted, &Vocabulary::default());
        assert_eq!(again, formatted);
    }

    #[test]
    fn format_content_preserves_crlf_and_missing_final_newline() {
        let lf = "<treqs-element id=\"A\" type=\"requirement\">\nOne. Two.\n</treqs-element>";
        let formatted = format_content("a.md", lf, &Vocabulary::default());
        assert!(!formatted.ends_with('\n'));
        assert!(formatted.contains("One.\nTwo."));

        let crlf =
            "<treqs-element id=\"A\" type=\"requirement\">\r\nOne. Two.\r\n</treqs-element>\r\n";
        let formatted = format_content("a.md", crlf, &Vocabulary::default());
        assert_eq!(
            formatted,
            "<treqs-element id=\"A\" type=\"requirement\">\r\nOne.\r\nTwo.\r\n</treqs-element>\r\n"
        );
    }

    #[test]
    fn format_content_keeps_malformed_regions_verbatim() {
        let text = "\
<treqs-element id=\"broken token\" type=\"requirement\">
Skipped  region   stays exactly as written. lower case start
</treqs-element>
<treqs-element id=\"OK-1\" type=\"requirement\">
Works. Fine.
</treqs-element>
";
        let formatted = format_content("a.md", text, &Vocabulary::default());
        assert!(formatted.contains("Skipped  region   stays exactly as written. lower case start"));
        assert!(formatted.contains("Works.\nFine."));
    }

    #[test]
    fn format_content_digest_stable() {
        let text = "\
<treqs-element id=\"A\" type=\"requirement\" asil=\"B\">
## Title
One sentence. Two sentence. Three
wrapped badly.
<treqs-link type=\"refines\" target=\"Z\" />
</treqs-element>
";
        let vocab = Vocabulary::default();
        let before = parse_file("a.md", text).elements.remove(0);
        let formatted = format_content("a.md", text, &vocab);
        let after = parse_file("a.md", &formatted).elements.remove(0);
        assert_eq!(content_digest(&before), content_digest(&after));
    }

    #[test]
    fn spans_of_links_lie_within_element_spans() {
        let text = "\
Intro.
<treqs-element id=\"A\" type=\"requirement\">
Body.
<treqs-link type=\"refines\" target=\"B\" />
</treqs-element>
<treqs-element id=\"B\" type=\"requirement\">
</treqs-element>
";
        let result = parse_file("a.md", text);
        for element in &result.elements {
            for link in &element.links {
                assert!(element.span.contains(&link.span));
            }
        }
    }
}
