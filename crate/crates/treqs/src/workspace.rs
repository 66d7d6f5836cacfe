//! Working-tree access: discovering element files under a repository root
//! and parsing them into a model. (Historical revisions go through [`crate::vcs`]
//! instead, which reads blobs from git without touching the working tree.)

use std::path::{Path, PathBuf};

use globset::{Glob, GlobSet, GlobSetBuilder};

use crate::model::{build_model, Model};
use crate::parser::{parse_file_with, ParseResult, Vocabulary};

#[derive(Debug, thiserror::Error)]
pub enum WorkspaceError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("`{0}` is not valid UTF-8")]
    NonUtf8Content(PathBuf),
    #[error("path `{0}` is not representable as UTF-8")]
    NonUtf8Path(PathBuf),
    #[error("invalid glob pattern `{pattern}`: {source}")]
    InvalidGlob {
        pattern: String,
        #[source]
        source: globset::Error,
    },
}

/// Compiles include globs into one matcher. Patterns use `/` separators and
/// match repository-relative paths; `**` crosses directories.
pub fn build_globset(globs: &[String]) -> Result<GlobSet, WorkspaceError> {
    let mut builder = GlobSetBuilder::new();
    for pattern in globs {
        let glob = Glob::new(pattern).map_err(|source| WorkspaceError::InvalidGlob {
            pattern: pattern.clone(),
            source,
        })?;
        builder.add(glob);
    }
    builder
        .build()
        .map_err(|source| WorkspaceError::InvalidGlob {
            pattern: globs.join(", "),
            source,
        })
}

/// One file read from the working tree.
#[derive(Debug, Clone)]
pub struct SourceFile {
    /// Repository-relative path with `/` separators.
    pub rel_path: String,
    pub content: String,
}

/// The element files of a working tree, in sorted path order.
#[derive(Debug, Clone)]
pub struct WorkingTree {
    pub root: PathBuf,
    pub files: Vec<SourceFile>,
}

impl WorkingTree {
    /// Walks `root`, reads every file matching `globs`, and returns them
    /// sorted by relative path. The `.git` directory is never entered.
    pub fn read(root: &Path, globs: &[String]) -> Result<Self, WorkspaceError> {
        let matcher = build_globset(globs)?;
        let mut rel_paths = Vec::new();
        let walk = walkdir::WalkDir::new(root)
            .follow_links(false)
            .into_iter()
            .filter_entry(|entry| entry.file_name() != ".git");
        for entry in walk {
            let entry = entry.map_err(|e| WorkspaceError::Io {
                path: e
                    .path()
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| root.to_path_buf()),
                source: e
                    .io_error()
                    .map(|io| std::io::Error::new(io.kind(), io.to_string()))
                    .unwrap_or_else(|| std::io::Error::other("walk error")),
            })?;
            if !entry.file_type().is_file() {
                continue;
            }
            let rel = entry
                .path()
                .strip_prefix(root)
                .expect("walkdir yields paths under root");
            let rel = rel
                .to_str()
                .ok_or_else(|| WorkspaceError::NonUtf8Path(entry.path().to_path_buf()))?;
            let rel = rel.replace(std::path::MAIN_SEPARATOR, "/");
            if matcher.is_match(&rel) {
                rel_paths.push(rel);
            }
        }
        rel_paths.sort();

        let mut files = Vec::with_capacity(rel_paths.len());
        for rel_path in rel_paths {
            let absolute = root.join(&rel_path);
            let bytes = std::fs::read(&absolute).map_err(|source| WorkspaceError::Io {
                path: absolute.clone(),
                source,
            })?;
            let content = String::from_utf8(bytes)
                .map_err(|_| WorkspaceError::NonUtf8Content(absolute.clone()))?;
            files.push(SourceFile { rel_path, content });
        }
        Ok(Self {
            root: root.to_path_buf(),
            files,
        })
    }

    /// Parses every file with the given vocabulary.
    pub fn parse(&self, vocab: &Vocabulary) -> Vec<ParseResult> {
        self.files
            .iter()
            .map(|file| parse_file_with(&file.rel_path, &file.content, vocab))
            .collect()
    }
}

/// Convenience wrapper: read the tree and assemble the model in one step.
pub fn load_model(
    root: &Path,
    globs: &[String],
    vocab: &Vocabulary,
) -> Result<Model, WorkspaceError> {
    let tree = WorkingTree::read(root, globs)?;
    Ok(build_model(tree.parse(vocab)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(root: &Path, rel: &str, content: &str) {
        let path = root.join(rel);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, content).unwrap();
    }

    #[test]
    fn default_glob_matches_at_any_depth() {
        let matcher = build_globset(&["**/*.md".to_string()]).unwrap();
        assert!(matcher.is_match("a.md"));
        assert!(matcher.is_match("deep/nested/dir/a.md"));
        assert!(!matcher.is_match("a.txt"));
        assert!(!matcher.is_match("a.md.bak"));
    }

    #[test]
    fn invalid_glob_is_an_error() {
        assert!(matches!(
            build_globset(&["a{".to_string()]),
            Err(WorkspaceError::InvalidGlob { .. })
        ));
    }

    #[test]
    fn reads_matching_files_sorted_and_skips_git_dir() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        write(root, "b.md", "two\n");
        write(root, "sub/a.md", "one\n");
        write(root, "sub/notes.txt", "not matched\n");
        write(root, ".git/objects/p.md", "never read\n");

        let tree = WorkingTree::read(root, &["**/*.md".to_string()]).unwrap();
        let paths: Vec<&str> = tree.files.iter().map(|f| f.rel_path.as_str()).collect();
        assert_eq!(paths, ["b.md", "sub/a.md"]);
    }

    #[test]
    fn load_model_assembles_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        write(
            root,
            "reqs/core.md",
            "<treqs-element id=\"REQ-1\" type=\"requirement\">\nBody.\n</treqs-element>\n",
        );
        write(
            root,
            "tests/suite.md",
            "<treqs-element id=\"TC-1\" type=\"test\">\n<treqs-link type=\"tests\" target=\"REQ-1\" />\n</treqs-element>\n",
        );
        let model = load_model(root, &["**/*.md".to_string()], &Vocabulary::default()).unwrap();
        assert_eq!(model.elements.len(), 2);
        assert_eq!(model.links.len(), 1);
        assert_eq!(model.file_count, 2);
        assert_eq!(
            model.elements.get_index(0).unwrap().1.span.path,
            "reqs/core.md"
        );
    }

    #[test]
    fn non_utf8_content_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("bad.md"), [0xff, 0xfe, b'a']).unwrap();
        let err = WorkingTree::read(dir.path(), &["**/*.md".to_string()]).unwrap_err();
        assert!(matches!(err, WorkspaceError::NonUtf8Content(_)));
    }
}
