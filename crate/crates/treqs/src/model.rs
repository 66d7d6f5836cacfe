//! Core domain types: identifiers, elements, trace links, findings, and the
//! repository-wide model assembled from per-file parse results.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::Serialize;

use crate::parser::ParseResult;

/// Maximum length (in bytes) of an identifier token.
pub const MAX_TOKEN_LEN: usize = 64;

/// Returns true if `s` is a valid identifier token: 1 to 64 characters from
/// `[A-Za-z0-9._-]`, the first of which must be alphanumeric.
pub fn is_token(s: &str) -> bool {
    if s.is_empty() || s.len() > MAX_TOKEN_LEN {
        return false;
    }
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphanumeric() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

/// Error produced when a string does not satisfy the token syntax shared by
/// element IDs, element kinds, and link types.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error(
    "`{0}` is not a valid token (1-64 chars of [A-Za-z0-9._-], starting with a letter or digit)"
)]
pub struct InvalidToken(pub String);

macro_rules! token_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            /// Validates `value` against the token syntax.
            pub fn new(value: impl Into<String>) -> Result<Self, InvalidToken> {
                let value = value.into();
                if is_token(&value) {
                    Ok(Self(value))
                } else {
                    Err(InvalidToken(value))
                }
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl FromStr for $name {
            type Err = InvalidToken;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::new(s)
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }
    };
}

token_newtype! {
    /// Unique identifier of a requirement element, e.g. `REQ-12`.
    ElementId
}

token_newtype! {
    /// Kind of an element. Four kinds are built in (`requirement`,
    /// `user-story`, `test`, `information`); projects may declare more in
    /// their configuration.
    ElementKind
}

token_newtype! {
    /// Type of a trace link. Five types are built in (`refines`,
    /// `implements`, `tests`, `relates-to`, `deprecates`); projects may
    /// declare more in their configuration.
    TraceLinkType
}

impl ElementKind {
    /// Names of the built-in element kinds.
    pub const BUILTIN: [&'static str; 4] = ["requirement", "user-story", "test", "information"];

    pub fn requirement() -> Self {
        Self("requirement".into())
    }

    pub fn user_story() -> Self {
        Self("user-story".into())
    }

    pub fn test() -> Self {
        Self("test".into())
    }

    pub fn information() -> Self {
        Self("information".into())
    }
}

impl TraceLinkType {
    /// Names of the built-in link types.
    pub const BUILTIN: [&'static str; 5] =
        ["refines", "implements", "tests", "relates-to", "deprecates"];

    pub fn refines() -> Self {
        Self("refines".into())
    }

    pub fn implements() -> Self {
        Self("implements".into())
    }

    pub fn tests() -> Self {
        Self("tests".into())
    }

    pub fn relates_to() -> Self {
        Self("relates-to".into())
    }

    pub fn deprecates() -> Self {
        Self("deprecates".into())
    }
}

/// Error produced by [`SourceSpan::new`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpanError {
    #[error("span path `{0}` must be a relative path with `/` separators and no `..` segments")]
    BadPath(String),
    #[error("span lines must satisfy 1 <= start <= end, got {start}..{end}")]
    BadLines { start: u32, end: u32 },
}

/// A contiguous, 1-based line range in a repository-relative file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SourceSpan {
    pub path: String,
    pub start_line: u32,
    pub end_line: u32,
}

impl SourceSpan {
    pub fn new(path: impl Into<String>, start_line: u32, end_line: u32) -> Result<Self, SpanError> {
        let path = path.into();
        let path_ok = !path.is_empty()
            && !path.starts_with('/')
            && !path.contains('\\')
            && path.split('/').all(|seg| !seg.is_empty() && seg != "..");
        if !path_ok {
            return Err(SpanError::BadPath(path));
        }
        if start_line == 0 || start_line > end_line {
            return Err(SpanError::BadLines {
                start: start_line,
                end: end_line,
            });
        }
        Ok(Self {
            path,
            start_line,
            end_line,
        })
    }

    /// True if `other` lies entirely within `self` (same file).
    pub fn contains(&self, other: &SourceSpan) -> bool {
        self.path == other.path
            && self.start_line <= other.start_line
            && other.end_line <= self.end_line
    }

    /// True if the two spans share at least one line of the same file.
    pub fn overlaps(&self, other: &SourceSpan) -> bool {
        self.path == other.path
            && self.start_line <= other.end_line
            && other.start_line <= self.end_line
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.path, self.start_line)
    }
}

/// Error produced by [`TraceLink::new`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("link from `{0}` to itself is not allowed")]
pub struct SelfLink(pub ElementId);

/// A directed trace link from the element that declares it to a target
/// element, e.g. `<treqs-link type="tests" target="REQ-12" />`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TraceLink {
    pub source: ElementId,
    pub target: ElementId,
    pub link_type: TraceLinkType,
    pub span: SourceSpan,
}

impl TraceLink {
    pub fn new(
        source: ElementId,
        target: ElementId,
        link_type: TraceLinkType,
        span: SourceSpan,
    ) -> Result<Self, SelfLink> {
        if source == target {
            return Err(SelfLink(source));
        }
        Ok(Self {
            source,
            target,
            link_type,
            span,
        })
    }

    /// The deduplication key of a link within the trace graph.
    pub fn triple(&self) -> (&ElementId, &ElementId, &TraceLinkType) {
        (&self.source, &self.target, &self.link_type)
    }
}

/// One requirement element as parsed from a tagged markdown region.
///
/// Invariants: `body` lines contain no newline characters; attribute keys are
/// tokens and never `id` or `type`; attribute values contain no `"`; every
/// link's `source` equals `id` and its span lies within `span`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RequirementElement {
    pub id: ElementId,
    pub kind: ElementKind,
    /// Text of the first markdown heading inside the body; empty if the body
    /// has no heading. Derived, not stored separately in the file.
    pub title: String,
    /// Body lines exactly as written, excluding tag lines.
    pub body: Vec<String>,
    /// Trace links in the order they appear in the file.
    pub links: Vec<TraceLink>,
    /// Extra open-tag attributes (everything except `id` and `type`).
    pub attributes: BTreeMap<String, String>,
    /// Lines of the whole element, opening tag through closing tag.
    pub span: SourceSpan,
}

/// Severity of a finding, derived from its code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Stable machine-readable codes for everything check-like commands can
/// report. The code alone determines the severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FindingCode {
    /// Same element ID defined more than once.
    DuplicateId,
    /// Link target that no element defines.
    DanglingLink,
    /// Tag line that does not parse.
    MalformedTag,
    /// Element opening tag inside an open element.
    NestedElement,
    /// Element kind neither built in nor declared in configuration.
    UnknownKind,
    /// Requirement without an inbound `tests` link from a test.
    UntestedRequirement,
    /// Link whose target is its own element.
    SelfLink,
    /// Link type neither built in nor declared in configuration.
    UnknownLinkType,
    /// Identical (source, target, type) link declared more than once.
    DuplicateLink,
    /// Cycle in the refinement hierarchy.
    RefinementCycle,
}

impl FindingCode {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingCode::DuplicateId => "E001-duplicate-id",
            FindingCode::DanglingLink => "E002-dangling-link",
            FindingCode::MalformedTag => "E003-malformed-tag",
            FindingCode::NestedElement => "E004-nested-element",
            FindingCode::UnknownKind => "W001-unknown-kind",
            FindingCode::UntestedRequirement => "W002-untested-requirement",
            FindingCode::SelfLink => "W003-self-link",
            FindingCode::UnknownLinkType => "W004-unknown-link-type",
            FindingCode::DuplicateLink => "W005-duplicate-link",
            FindingCode::RefinementCycle => "W006-refinement-cycle",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            FindingCode::DuplicateId
            | FindingCode::DanglingLink
            | FindingCode::MalformedTag
            | FindingCode::NestedElement => Severity::Error,
            FindingCode::UnknownKind
            | FindingCode::UntestedRequirement
            | FindingCode::SelfLink
            | FindingCode::UnknownLinkType
            | FindingCode::DuplicateLink
            | FindingCode::RefinementCycle => Severity::Warning,
        }
    }
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for FindingCode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

/// A diagnostic anchored to a source location.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub code: FindingCode,
    pub message: String,
    pub span: SourceSpan,
}

impl Finding {
    pub fn new(code: FindingCode, message: impl Into<String>, span: SourceSpan) -> Self {
        Self {
            code,
            message: message.into(),
            span,
        }
    }

    pub fn severity(&self) -> Severity {
        self.code.severity()
    }
}

/// Renders the canonical single-line form used by `treqs check`:
/// `<severity> <code> <path>:<line> <message>`.
impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.severity(),
            self.code,
            self.span,
            self.message
        )
    }
}

/// Sorts findings by (path, start line, code, message) — the canonical order
/// for all user-facing finding lists.
pub fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| {
        (
            &a.span.path,
            a.span.start_line,
            a.code,
            &a.message,
            a.span.end_line,
        )
            .cmp(&(
                &b.span.path,
                b.span.start_line,
                b.code,
                &b.message,
                b.span.end_line,
            ))
    });
}

/// The assembled view of every element in a revision or working tree.
///
/// `elements` is keyed by ID and iterates in (path, start line) order of the
/// winning occurrence, which makes serialization deterministic. `links`
/// contains every parsed link, including links declared by duplicate
/// occurrences whose element was suppressed.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Model {
    pub elements: IndexMap<ElementId, RequirementElement>,
    pub links: Vec<TraceLink>,
    pub findings: Vec<Finding>,
    pub file_count: usize,
}

impl Model {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Deterministic JSON rendering of the model; equal models serialize to
    /// identical bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }
}

/// Assembles per-file parse results into one [`Model`].
///
/// The caller must supply at most one result per path. Input order does not
/// matter: results are processed in path order, and elements within a file
/// are already ordered by start line, so the outcome is deterministic. When
/// an ID occurs more than once, the occurrence with the smallest
/// (path, start line) wins and every other occurrence produces an
/// `E001-duplicate-id` finding at its own span.
pub fn build_model(mut parsed: Vec<ParseResult>) -> Model {
    parsed.sort_by(|a, b| a.path.cmp(&b.path));
    debug_assert!(
        parsed.windows(2).all(|w| w[0].path != w[1].path),
        "build_model requires distinct paths"
    );

    let mut elements: IndexMap<ElementId, RequirementElement> = IndexMap::new();
    let mut links = Vec::new();
    let mut findings = Vec::new();
    let file_count = parsed.len();

    for result in parsed {
        findings.extend(result.findings);
        for element in result.elements {
            links.extend(element.links.iter().cloned());
            match elements.get(&element.id) {
                Some(first) => {
                    findings.push(Finding::new(
                        FindingCode::DuplicateId,
                        format!(
                            "duplicate element id `{}`: first defined at {}",
                            element.id, first.span
                        ),
                        element.span.clone(),
                    ));
                }
                None => {
                    elements.insert(element.id.clone(), element);
                }
            }
        }
    }

    sort_findings(&mut findings);
    Model {
        elements,
        links,
        findings,
        file_count,
    }
}

/// Lists every ID that occurs more than once across `parsed`, with all of its
/// occurrence spans in (path, start line) order. The result is sorted by ID.
pub fn find_duplicates(parsed: &[ParseResult]) -> Vec<(ElementId, Vec<SourceSpan>)> {
    let mut in_order: Vec<&ParseResult> = parsed.iter().collect();
    in_order.sort_by(|a, b| a.path.cmp(&b.path));

    let mut spans: BTreeMap<ElementId, Vec<SourceSpan>> = BTreeMap::new();
    for result in in_order {
        for element in &result.elements {
            spans
                .entry(element.id.clone())
                .or_default()
                .push(element.span.clone());
        }
    }
    spans.retain(|_, occurrences| occurrences.len() > 1);
    spans.into_iter().collect()
}
