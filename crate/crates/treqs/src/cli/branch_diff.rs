//! `treqs branch-diff`: what a branch would merge, element-wise.

use clap::Args;

use super::Ctx;
use crate::model::ElementKind;
use crate::report::change_report;
use crate::vcs::{
    branch_requirements_diff, commit_refs, merge_base, resolve_commit, snapshot_model, RevisionRef,
};

#[derive(Debug, Args)]
pub struct BranchDiffArgs {
    /// Revision the branch forked from (e.g. `main`).
    #[arg(long, value_name = "REV")]
    pub base: String,

    /// Branch to inspect (defaults to HEAD).
    #[arg(long, value_name = "REV", default_value = "HEAD")]
    pub branch: String,

    /// Output format: markdown, csv, or html.
    #[arg(long, default_value = "markdown")]
    pub format: String,

    /// Only report elements of this kind.
    #[arg(long, value_name = "KIND")]
    pub kind: Option<String>,

    /// Omit the generation timestamp (byte-stable output).
    #[arg(long)]
    pub no_timestamp: bool,
}

/// Diffs the branch against its merge base with `--base`, so changes that
/// landed on the base branch in the meantime do not pollute the review.
pub fn run(ctx: &Ctx, args: &BranchDiffArgs) -> anyhow::Result<u8> {
    let format = super::parse_format(&args.format)?;
    let audience = args
        .kind
        .as_deref()
        .map(ElementKind::new)
        .transpose()
        .map_err(|e| anyhow::anyhow!("invalid --kind: {e}"))?;

    let base = RevisionRef::new(args.base.as_str())?;
    let branch = RevisionRef::new(args.branch.as_str())?;
    let vocab = ctx.config.vocabulary();
    let globs = &ctx.config.include_globs;

    let changes = branch_requirements_diff(&ctx.root, &branch, &base, globs, &vocab)?;
    let fork_point = merge_base(&ctx.root, &base, &branch)?;
    let fork = RevisionRef::new(fork_point.clone())?;
    let scan = commit_refs(&ctx.root, &fork, &branch)?;
    for warning in &scan.warnings {
        eprintln!("warning: {warning}");
    }
    let head_model = snapshot_model(&ctx.root, &branch, globs, &vocab)?;

    let mut report = change_report(&changes, &scan.refs, &head_model, audience.as_ref());
    report.title = "Branch Requirements Diff".to_string();
    report.source_revisions = vec![fork_point, resolve_commit(&ctx.root, &branch)?];
    super::print_report(report, format, args.no_timestamp);
    Ok(0)
}
