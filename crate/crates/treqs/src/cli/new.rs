//! `treqs new`: append an element skeleton with a generated ID.

use std::collections::HashSet;

use anyhow::Context as _;
use clap::Args;

use super::Ctx;
use crate::model::{ElementId, ElementKind};
use crate::parser::generate_id;
use crate::workspace::WorkingTree;

#[derive(Debug, Args)]
pub struct NewArgs {
    /// Element kind (built in or declared in the configuration).
    #[arg(long, value_name = "KIND")]
    pub kind: String,

    /// Title for the skeleton's heading line.
    #[arg(long, value_name = "TITLE")]
    pub title: String,

    /// File to append the element to (created if missing).
    #[arg(long, value_name = "FILE")]
    pub file: std::path::PathBuf,
}

/// Appends a skeleton element to the target file and prints the generated
/// ID. The ID is the smallest free `<prefix>-<n>` across the *whole* tree,
/// so concurrent docs cannot silently reuse a number that is only free in
/// one file.
pub fn run(ctx: &Ctx, args: &NewArgs) -> anyhow::Result<u8> {
    let kind =
        ElementKind::new(args.kind.as_str()).map_err(|e| anyhow::anyhow!("invalid --kind: {e}"))?;
    let vocab = ctx.config.vocabulary();
    if !vocab.knows_kind(&kind) {
        let known: Vec<&str> = vocab.kinds().collect();
        anyhow::bail!("unknown kind `{kind}`; known kinds: {}", known.join(", "));
    }

    let tree = WorkingTree::read(&ctx.root, &ctx.config.include_globs)?;
    let parsed = tree.parse(&vocab);
    // Consider every occurrence, including duplicates: a generated ID must
    // collide with nothing anywhere.
    let existing: HashSet<ElementId> = parsed
        .iter()
        .flat_map(|result| result.elements.iter().map(|e| e.id.clone()))
        .collect();

    let prefix = ctx.config.id_prefix(kind.as_str());
    let id = generate_id(&existing, prefix)
        .map_err(|e| anyhow::anyhow!("cannot generate an id: {e}"))?;

    let target = if args.file.is_absolute() {
        args.file.clone()
    } else {
        ctx.invocation_dir.join(&args.file)
    };
    let original = match std::fs::read_to_string(&target) {
        Ok(content) => content,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(e).with_context(|| format!("cannot read `{}`", target.display())),
    };

    // Match the file's existing line-ending convention.
    let eol = if original
        .find('\n')
        .is_some_and(|pos| original[..pos].ends_with('\r'))
    {
        "\r\n"
    } else {
        "\n"
    };

    let mut content = original.clone();
    if !content.is_empty() {
        if !content.ends_with('\n') {
            content.push_str(eol);
        }
        content.push_str(eol); // blank line between the old content and the element
    }
    let skeleton = format!(
        "<treqs-element id=\"{id}\" type=\"{kind}\">{eol}## {title}{eol}TBD.{eol}</treqs-element>{eol}",
        title = args.title
    );
    content.push_str(&skeleton);

    if let Some(parent) = target.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("cannot create `{}`", parent.display()))?;
    }
    std::fs::write(&target, &content)
        .with_context(|| format!("cannot write `{}`", target.display()))?;

    // The file must still parse to an element list containing the new ID; if
    // it does not (e.g. it ended inside an unclosed element), undo the write
    // instead of leaving a skeleton buried in a malformed region.
    let rel = super::repo_relative(ctx, &target)?;
    let reparsed = crate::parser::parse_file_with(&rel, &content, &vocab);
    if !reparsed.elements.iter().any(|e| e.id == id) {
        std::fs::write(&target, &original)
            .with_context(|| format!("cannot restore `{}`", target.display()))?;
        anyhow::bail!(
            "`{}` has malformed elements; fix `treqs check` errors there first",
            rel
        );
    }

    println!("{id}");
    Ok(0)
}
