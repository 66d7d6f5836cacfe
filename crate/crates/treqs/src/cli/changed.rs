//! `treqs changed`: element-level change report between two revisions.

use clap::Args;

use super::Ctx;
use crate::model::ElementKind;
use crate::report::change_report;
use crate::vcs::{changed_elements, commit_refs, resolve_commit, snapshot_model, RevisionRef};

#[derive(Debug, Args)]
pub struct ChangedArgs {
    /// Base revision to compare against.
    #[arg(long, value_name = "REV")]
    pub since: String,

    /// Head revision (defaults to HEAD).
    #[arg(long, value_name = "REV", default_value = "HEAD")]
    pub until: String,

    /// Output format: markdown, csv, or html.
    #[arg(long, default_value = "markdown")]
    pub format: String,

    /// Only report elements of this kind (e.g. `requirement` for test planners).
    #[arg(long, value_name = "KIND")]
    pub kind: Option<String>,

    /// Omit the generation timestamp (byte-stable output).
    #[arg(long)]
    pub no_timestamp: bool,
}

pub fn run(ctx: &Ctx, args: &ChangedArgs) -> anyhow::Result<u8> {
    let format = super::parse_format(&args.format)?;
    let audience = args
        .kind
        .as_deref()
        .map(ElementKind::new)
        .transpose()
        .map_err(|e| anyhow::anyhow!("invalid --kind: {e}"))?;

    let since = RevisionRef::new(args.since.as_str())?;
    let until = RevisionRef::new(args.until.as_str())?;
    let vocab = ctx.config.vocabulary();
    let globs = &ctx.config.include_globs;

    let changes = changed_elements(&ctx.root, &since, &until, globs, &vocab)?;
    let scan = commit_refs(&ctx.root, &since, &until)?;
    for warning in &scan.warnings {
        eprintln!("warning: {warning}");
    }
    let head_model = snapshot_model(&ctx.root, &until, globs, &vocab)?;

    let mut report = change_report(&changes, &scan.refs, &head_model, audience.as_ref());
    report.source_revisions = vec![
        resolve_commit(&ctx.root, &since)?,
        resolve_commit(&ctx.root, &until)?,
    ];
    super::print_report(report, format, args.no_timestamp);
    Ok(0)
}
