//! `treqs fmt`: rewrite element files into canonical line-wise form.

use anyhow::Context as _;
use clap::Args;

use super::Ctx;
use crate::parser::format_content;
use crate::workspace::WorkingTree;

#[derive(Debug, Args)]
pub struct FmtArgs {
    /// Files to format (default: every file the configuration includes).
    pub paths: Vec<std::path::PathBuf>,

    /// Write nothing; exit 1 if any file would change.
    #[arg(long)]
    pub check: bool,
}

/// Normalizes element bodies (one sentence per line) and canonicalizes tag
/// attribute order. Narrative text outside elements and malformed regions
/// are left byte-for-byte untouched; element content digests never change.
pub fn run(ctx: &Ctx, args: &FmtArgs) -> anyhow::Result<u8> {
    let vocab = ctx.config.vocabulary();

    let rel_paths: Vec<String> = if args.paths.is_empty() {
        WorkingTree::read(&ctx.root, &ctx.config.include_globs)?
            .files
            .into_iter()
            .map(|file| file.rel_path)
            .collect()
    } else {
        let mut rel_paths = Vec::with_capacity(args.paths.len());
        for path in &args.paths {
            rel_paths.push(super::repo_relative(ctx, path)?);
        }
        rel_paths
    };

    let mut pending = 0usize;
    for rel in &rel_paths {
        let absolute = ctx.root.join(rel);
        let content =
            std::fs::read_to_string(&absolute).with_context(|| format!("cannot read `{rel}`"))?;
        let formatted = format_content(rel, &content, &vocab);
        if formatted == content {
            continue;
        }
        pending += 1;
        if args.check {
            println!("would reformat: {rel}");
        } else {
            std::fs::write(&absolute, &formatted)
                .with_context(|| format!("cannot write `{rel}`"))?;
            println!("reformatted: {rel}");
        }
    }

    if args.check && pending > 0 {
        Ok(1)
    } else {
        Ok(0)
    }
}
