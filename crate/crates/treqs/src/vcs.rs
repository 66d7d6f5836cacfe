//! Git access: building models from committed revisions, diffing elements
//! between revisions, and scanning commit messages for `Treqs-ref` trailers.
//!
//! Everything goes through the `git` command-line plumbing (`rev-parse`,
//! `ls-tree`, `show`, `merge-base`, `log`, `rev-list`) rather than a
//! re-implementation of the repository format: the tool then behaves
//! identically to the git the team already uses, including its config,
//! replacement objects, and alternates.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::process::Command;

use serde::Serialize;

use crate::model::{build_model, ElementId, ElementKind, Model, SourceSpan};
use crate::parser::{content_digest, parse_file_with, Vocabulary};
use crate::workspace::build_globset;

#[derive(Debug, thiserror::Error)]
pub enum VcsError {
    #[error("cannot run git: {0}")]
    Spawn(#[source] std::io::Error),
    #[error("`{0}` is not a git repository")]
    NotARepository(String),
    #[error("cannot resolve revision `{rev}`: {detail}")]
    UnresolvableRevision { rev: String, detail: String },
    #[error("`{base}` and `{branch}` have no common ancestor")]
    NoMergeBase { base: String, branch: String },
    #[error("git {args} failed with {status}: {stderr}")]
    GitFailed {
        args: String,
        status: String,
        stderr: String,
    },
    #[error("`{path}` at `{rev}` is not valid UTF-8")]
    NonUtf8File { rev: String, path: String },
    #[error(transparent)]
    Glob(#[from] crate::workspace::WorkspaceError),
}

/// A user-supplied revision expression (`HEAD`, a branch name, a hash,
/// `main~3`, ...). Only non-emptiness is checked at construction; whether it
/// resolves is checked when it is used against a repository.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct RevisionRef(String);

impl RevisionRef {
    pub fn new(value: impl Into<String>) -> Result<Self, VcsError> {
        let value = value.into();
        if value.trim().is_empty() {
            return Err(VcsError::UnresolvableRevision {
                rev: value,
                detail: "revision is empty".into(),
            });
        }
        Ok(Self(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RevisionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// How one element differs between a base and a head revision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ChangeKind {
    Added,
    Removed,
    Modified,
    Moved,
}

impl fmt::Display for ChangeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChangeKind::Added => "Added",
            ChangeKind::Removed => "Removed",
            ChangeKind::Modified => "Modified",
            ChangeKind::Moved => "Moved",
        })
    }
}

/// One element's difference between two revisions.
///
/// `Modified` means the content digest changed; `Moved` means the digest is
/// equal but the element now starts somewhere else — a different file or a
/// different start line. The digest already ignores whitespace reflowing
/// (it hashes the *normalized* body), so pure rewrapping in place is not a
/// change at all; the end line is deliberately excluded from the location so
/// that rewrapping, which can stretch or shrink the element, never counts as
/// a move either.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ElementChange {
    pub id: ElementId,
    pub kind: ChangeKind,
    /// Kind of the element (head side if present there, else base side).
    pub element_kind: ElementKind,
    /// Title of the element (head side if present there, else base side).
    pub title: String,
    pub old_span: Option<SourceSpan>,
    pub new_span: Option<SourceSpan>,
    pub old_digest: Option<String>,
    pub new_digest: Option<String>,
}

/// One commit that references elements via a `Treqs-ref` trailer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommitRef {
    /// Full commit hash.
    pub commit: String,
    /// Referenced element IDs, in trailer order, deduplicated. Never empty.
    pub referenced: Vec<ElementId>,
    /// First line of the commit message.
    pub subject: String,
}

/// Result of scanning a commit range: the referencing commits (newest first)
/// plus one warning per malformed trailer token encountered.
#[derive(Debug, Clone, Default)]
pub struct CommitScan {
    pub refs: Vec<CommitRef>,
    pub warnings: Vec<String>,
}

fn run_git(repo_root: &Path, args: &[&str]) -> Result<Vec<u8>, VcsError> {
    let output = Command::new("git")
        .arg("-C")
        .arg(repo_root)
        .args(args)
        .output()
        .map_err(VcsError::Spawn)?;
    if output.status.success() {
        return Ok(output.stdout);
    }
    let stderr = String::from_utf8_lossy(&output.stderr).trim().to_string();
    if stderr.contains("not a git repository") {
        return Err(VcsError::NotARepository(repo_root.display().to_string()));
    }
    Err(VcsError::GitFailed {
        args: args.join(" "),
        status: output.status.to_string(),
        stderr,
    })
}

fn run_git_str(repo_root: &Path, args: &[&str]) -> Result<String, VcsError> {
    let bytes = run_git(repo_root, args)?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// Resolves `rev` to a full commit hash, or fails with an error naming the
/// revision.
pub fn resolve_commit(repo_root: &Path, rev: &RevisionRef) -> Result<String, VcsError> {
    let spec = format!("{}^{{commit}}", rev.as_str());
    match run_git_str(repo_root, &["rev-parse", "--verify", "--quiet", &spec]) {
        Ok(out) => Ok(out.trim().to_string()),
        Err(VcsError::GitFailed { stderr, .. }) => Err(VcsError::UnresolvableRevision {
            rev: rev.as_str().to_string(),
            detail: if stderr.is_empty() {
                "unknown revision".into()
            } else {
                stderr
            },
        }),
        Err(other) => Err(other),
    }
}

/// The merge base of two revisions, or [`VcsError::NoMergeBase`] naming both
/// when their histories are unrelated.
pub fn merge_base(
    repo_root: &Path,
    base: &RevisionRef,
    branch: &RevisionRef,
) -> Result<String, VcsError> {
    let base_hash = resolve_commit(repo_root, base)?;
    let branch_hash = resolve_commit(repo_root, branch)?;
    match run_git_str(repo_root, &["merge-base", &base_hash, &branch_hash]) {
        Ok(out) => Ok(out.trim().to_string()),
        Err(VcsError::GitFailed { .. }) => Err(VcsError::NoMergeBase {
            base: base.as_str().to_string(),
            branch: branch.as_str().to_string(),
        }),
        Err(other) => Err(other),
    }
}

/// Builds the model of the committed tree at `rev`, without touching the
/// working tree: file list via `ls-tree`, contents via `show`. Deterministic
/// for a given commit hash.
pub fn snapshot_model(
    repo_root: &Path,
    rev: &RevisionRef,
    include_globs: &[String],
    vocab: &Vocabulary,
) -> Result<Model, VcsError> {
    let commit = resolve_commit(repo_root, rev)?;
    snapshot_model_at(repo_root, &commit, include_globs, vocab)
}

fn snapshot_model_at(
    repo_root: &Path,
    commit: &str,
    include_globs: &[String],
    vocab: &Vocabulary,
) -> Result<Model, VcsError> {
    let matcher = build_globset(include_globs)?;
    let listing = run_git(repo_root, &["ls-tree", "-r", "-z", "--name-only", commit])?;
    let listing = String::from_utf8_lossy(&listing);
    let mut paths: Vec<&str> = listing
        .split('\0')
        .filter(|p| !p.is_empty() && matcher.is_match(p))
        .collect();
    paths.sort_unstable();

    let mut parsed = Vec::with_capacity(paths.len());
    for path in paths {
        let spec = format!("{commit}:{path}");
        let bytes = run_git(repo_root, &["show", &spec])?;
        let content = String::from_utf8(bytes).map_err(|_| VcsError::NonUtf8File {
            rev: commit.to_string(),
            path: path.to_string(),
        })?;
        parsed.push(parse_file_with(path, &content, vocab));
    }
    Ok(build_model(parsed))
}

fn location(span: &SourceSpan) -> (&str, u32) {
    (span.path.as_str(), span.start_line)
}

/// Pure element diff between two already-built models. Sorted by
/// (change kind, ID). Elements with equal digest and equal location are
/// omitted. `diff_models(m, m)` is empty for every model.
pub fn diff_models(base: &Model, head: &Model) -> Vec<ElementChange> {
    let mut changes = Vec::new();

    for (id, head_el) in &head.elements {
        let new_digest = content_digest(head_el);
        match base.elements.get(id) {
            None => changes.push(ElementChange {
                id: id.clone(),
                kind: ChangeKind::Added,
                element_kind: head_el.kind.clone(),
                title: head_el.title.clone(),
                old_span: None,
                new_span: Some(head_el.span.clone()),
                old_digest: None,
                new_digest: Some(new_digest),
            }),
            Some(base_el) => {
                let old_digest = content_digest(base_el);
                let kind = if old_digest != new_digest {
                    ChangeKind::Modified
                } else if location(&base_el.span) != location(&head_el.span) {
                    ChangeKind::Moved
                } else {
                    continue;
                };
                changes.push(ElementChange {
                    id: id.clone(),
                    kind,
                    element_kind: head_el.kind.clone(),
                    title: head_el.title.clone(),
                    old_span: Some(base_el.span.clone()),
                    new_span: Some(head_el.span.clone()),
                    old_digest: Some(old_digest),
                    new_digest: Some(new_digest),
                });
            }
        }
    }

    for (id, base_el) in &base.elements {
        if !head.elements.contains_key(id) {
            changes.push(ElementChange {
                id: id.clone(),
                kind: ChangeKind::Removed,
                element_kind: base_el.kind.clone(),
                title: base_el.title.clone(),
                old_span: Some(base_el.span.clone()),
                new_span: None,
                old_digest: Some(content_digest(base_el)),
                new_digest: None,
            });
        }
    }

    changes.sort_by(|a, b| (a.kind, &a.id).cmp(&(b.kind, &b.id)));
    changes
}

/// Element-level diff between two revisions of the repository.
pub fn changed_elements(
    repo_root: &Path,
    base: &RevisionRef,
    head: &RevisionRef,
    include_globs: &[String],
    vocab: &Vocabulary,
) -> Result<Vec<ElementChange>, VcsError> {
    let base_model = snapshot_model(repo_root, base, include_globs, vocab)?;
    let head_model = snapshot_model(repo_root, head, include_globs, vocab)?;
    Ok(diff_models(&base_model, &head_model))
}

/// Outcome of scanning one commit message for `Treqs-ref` trailers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrailerScan {
    /// Valid IDs in trailer order, deduplicated.
    pub ids: Vec<ElementId>,
    /// Raw tokens that were not valid IDs.
    pub invalid: Vec<String>,
}

/// Scans a full commit message for trailers of the form
/// `Treqs-ref: REQ-1, REQ-2` (key case-insensitive, value a comma-separated
/// ID list). Only the last paragraph of the message is considered, matching
/// where git itself looks for trailers.
pub fn parse_treqs_trailers(message: &str) -> TrailerScan {
    let trimmed = message.trim_end();
    if trimmed.is_empty() {
        return TrailerScan::default();
    }
    let lines: Vec<&str> = trimmed.lines().collect();
    let paragraph_start = lines
        .iter()
        .rposition(|line| line.trim().is_empty())
        .map(|i| i + 1)
        .unwrap_or(0);

    let mut scan = TrailerScan::default();
    for line in &lines[paragraph_start..] {
        let Some((key, value)) = line.split_once(':') else {
            continue;
        };
        if !key.trim().eq_ignore_ascii_case("treqs-ref") {
            continue;
        }
        for token in value.split(',') {
            let token = token.trim();
            match ElementId::new(token) {
                Ok(id) => {
                    if !scan.ids.contains(&id) {
                        scan.ids.push(id);
                    }
                }
                Err(_) => scan.invalid.push(token.to_string()),
            }
        }
    }
    scan
}

/// Collects the commits in `base..head` (newest first) whose messages
/// reference elements via `Treqs-ref` trailers. Commits without valid
/// references are not represented; malformed tokens become warnings.
pub fn commit_refs(
    repo_root: &Path,
    base: &RevisionRef,
    head: &RevisionRef,
) -> Result<CommitScan, VcsError> {
    let base_hash = resolve_commit(repo_root, base)?;
    let head_hash = resolve_commit(repo_root, head)?;
    let range = format!("{base_hash}..{head_hash}");
    let raw = run_git_str(repo_root, &["log", "--format=%H%x1f%s%x1f%B%x1e", &range])?;

    let mut scan_result = CommitScan::default();
    for record in raw.split('\x1e') {
        let record = record.trim_start_matches('\n');
        if record.trim().is_empty() {
            continue;
        }
        let mut fields = record.splitn(3, '\x1f');
        let (Some(hash), Some(subject), Some(body)) = (fields.next(), fields.next(), fields.next())
        else {
            continue;
        };
        let trailer_scan = parse_treqs_trailers(body);
        let short = &hash[..hash.len().min(7)];
        for token in trailer_scan.invalid {
            scan_result.warnings.push(format!(
                "commit {short}: ignored `{token}` in Treqs-ref trailer (not a valid id)"
            ));
        }
        if !trailer_scan.ids.is_empty() {
            scan_result.refs.push(CommitRef {
                commit: hash.to_string(),
                referenced: trailer_scan.ids,
                subject: subject.to_string(),
            });
        }
    }
    Ok(scan_result)
}

/// Walks the first-parent chain from `HEAD` and returns, newest first, up to
/// `limit` commits in which `id` changed, together with how it changed in
/// that commit (relative to the commit's first parent; the root commit is
/// compared against an empty model).
pub fn element_history(
    repo_root: &Path,
    id: &ElementId,
    limit: usize,
    include_globs: &[String],
    vocab: &Vocabulary,
) -> Result<Vec<(String, ChangeKind)>, VcsError> {
    let raw = run_git_str(repo_root, &["rev-list", "--first-parent", "HEAD"])?;
    let commits: Vec<&str> = raw.lines().filter(|l| !l.is_empty()).collect();

    let mut snapshots: HashMap<String, Model> = HashMap::new();
    let mut snapshot = |repo_root: &Path, commit: &str| -> Result<Model, VcsError> {
        if let Some(model) = snapshots.get(commit) {
            return Ok(model.clone());
        }
        let model = snapshot_model_at(repo_root, commit, include_globs, vocab)?;
        snapshots.insert(commit.to_string(), model.clone());
        Ok(model)
    };

    let mut history = Vec::new();
    for (i, commit) in commits.iter().enumerate() {
        if history.len() >= limit {
            break;
        }
        let head_model = snapshot(repo_root, commit)?;
        let base_model = match commits.get(i + 1) {
            Some(parent) => snapshot(repo_root, parent)?,
            None => Model::empty(),
        };
        let changes = diff_models(&base_model, &head_model);
        if let Some(change) = changes.iter().find(|c| &c.id == id) {
            history.push((commit.to_string(), change.kind));
        }
    }
    Ok(history)
}

/// Element-level diff of a branch against the point where it forked from
/// `base`: `changed_elements(merge_base(base, branch), branch)`. This is the
/// review view — changes that landed on `base` in the meantime do not show
/// up.
pub fn branch_requirements_diff(
    repo_root: &Path,
    branch: &RevisionRef,
    base: &RevisionRef,
    include_globs: &[String],
    vocab: &Vocabulary,
) -> Result<Vec<ElementChange>, VcsError> {
    let fork_point = merge_base(repo_root, base, branch)?;
    let fork = RevisionRef::new(fork_point).expect("merge-base output is a hash");
    changed_elements(repo_root, &fork, branch, include_globs, vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_model;
    use crate::parser::parse_file;

    fn model_from(files: &[(&str, &str)]) -> Model {
        build_model(
            files
                .iter()
                .map(|(path, text)| parse_file(path, text))
                .collect(),
        )
    }

    fn element(id: &str, body: &str) -> String {
        format!("<treqs-element id=\"{id}\" type=\"requirement\">\n{body}\n</treqs-element>\n")
    }

    #[test]
    fn revision_ref_rejects_empty() {
        assert!(RevisionRef::new("HEAD").is_ok());
        assert!(RevisionRef::new("  ").is_err());
    }

    #[test]
    fn diff_models_is_reflexively_empty() {
        let model = model_from(&[("a.md", &element("A", "Body."))]);
        assert!(diff_models(&model, &model).is_empty());
    }

    #[test]
    fn diff_models_classifies_all_four_kinds() {
        let base = model_from(&[
            (
                "a.md",
                &format!(
                    "{}{}",
                    element("KEEP", "Same."),
                    element("MOD", "Old text.")
                ),
            ),
            ("b.md", &element("GONE", "Bye.")),
            ("c.md", &element("MOVE", "Stable.")),
        ]);
        let head = model_from(&[
            (
                "a.md",
                &format!(
                    "{}{}",
                    element("KEEP", "Same."),
                    element("MOD", "New text.")
                ),
            ),
            ("d.md", &element("MOVE", "Stable.")),
            ("a2.md", &element("NEW", "Hi.")),
        ]);
        let changes = diff_models(&base, &head);
        let got: Vec<(&str, ChangeKind)> =
            changes.iter().map(|c| (c.id.as_str(), c.kind)).collect();
        assert_eq!(
            got,
            [
                ("NEW", ChangeKind::Added),
                ("GONE", ChangeKind::Removed),
                ("MOD", ChangeKind::Modified),
                ("MOVE", ChangeKind::Moved),
            ]
        );
        let moved = &changes[3];
        assert_eq!(moved.old_span.as_ref().unwrap().path, "c.md");
        assert_eq!(moved.new_span.as_ref().unwrap().path, "d.md");
        assert_eq!(moved.old_digest, moved.new_digest);
        let removed = &changes[1];
        assert_eq!(removed.element_kind, ElementKind::requirement());
        assert!(removed.new_span.is_none());
    }

    #[test]
    fn rewrap_in_place_is_not_a_change() {
        let base = model_from(&[("a.md", &element("A", "One sentence. Two sentence."))]);
        let head = model_from(&[("a.md", &element("A", "One sentence.\nTwo sentence."))]);
        assert!(diff_models(&base, &head).is_empty());
    }

    #[test]
    fn start_line_shift_is_a_move() {
        let base = model_from(&[("a.md", &element("A", "Body."))]);
        let head = model_from(&[(
            "a.md",
            &format!("Narrative above.\n\n{}", element("A", "Body.")),
        )]);
        let changes = diff_models(&base, &head);
        assert_eq!(changes.len(), 1);
        assert_eq!(changes[0].kind, ChangeKind::Moved);
    }

    #[test]
    fn trailer_single_id() {
        let scan = parse_treqs_trailers("Fix pump timing\n\nTreqs-ref: REQ-1\n");
        assert_eq!(scan.ids.len(), 1);
        assert_eq!(scan.ids[0].as_str(), "REQ-1");
        assert!(scan.invalid.is_empty());
    }

    #[test]
    fn trailer_multiple_ids_and_case_insensitive_key() {
        let scan = parse_treqs_trailers("Subject\n\nBody text.\n\ntreqs-REF: REQ-1, REQ-2,TC-3\n");
        let ids: Vec<&str> = scan.ids.iter().map(|i| i.as_str()).collect();
        assert_eq!(ids, ["REQ-1", "REQ-2", "TC-3"]);
    }

    #[test]
    fn trailer_malformed_tokens_are_collected() {
        let scan = parse_treqs_trailers("Subject\n\nTreqs-ref: REQ-1, not a token!\n");
        assert_eq!(scan.ids.len(), 1);
        assert_eq!(scan.invalid, ["not a token!"]);
    }

    #[test]
    fn trailer_only_in_last_paragraph() {
        let scan = parse_treqs_trailers("Subject\n\nTreqs-ref: REQ-1\n\nJust prose at the end.\n");
        assert!(scan.ids.is_empty());
    }

    #[test]
    fn trailer_duplicates_are_deduplicated() {
        let scan = parse_treqs_trailers("S\n\nTreqs-ref: REQ-1, REQ-1\nTreqs-ref: REQ-1\n");
        assert_eq!(scan.ids.len(), 1);
    }

    #[test]
    fn no_trailer_no_refs() {
        assert_eq!(
            parse_treqs_trailers("Subject only\n"),
            TrailerScan::default()
        );
        assert_eq!(parse_treqs_trailers(""), TrailerScan::default());
        // A colon line whose key is not Treqs-ref is ignored.
        let scan = parse_treqs_trailers("S\n\nSigned-off-by: Someone <s@example.com>\n");
        assert!(scan.ids.is_empty() && scan.invalid.is_empty());
    }
}
