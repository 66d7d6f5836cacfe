//! `treqs check`: the full validation pipeline.

use clap::Args;

use super::Ctx;
use crate::graph::{
    build_graph, coverage, dangling_links, duplicate_links, refinement_cycles, untested_findings,
};
use crate::model::{sort_findings, ElementKind, Finding, FindingCode, Severity, TraceLinkType};
use crate::workspace;

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Report only findings located in these files or directories
    /// (the whole tree is still analyzed, so dangling links are found).
    pub paths: Vec<std::path::PathBuf>,

    /// Exit 1 on warnings too, not only on errors.
    #[arg(long)]
    pub strict: bool,

    /// Skip the test-coverage check (W002).
    #[arg(long)]
    pub no_coverage: bool,
}

pub fn run(ctx: &Ctx, args: &CheckArgs) -> anyhow::Result<u8> {
    let vocab = ctx.config.vocabulary();
    let model = workspace::load_model(&ctx.root, &ctx.config.include_globs, &vocab)?;
    let graph = build_graph(&model);

    let mut findings = model.findings.clone();
    findings.extend(dangling_links(&graph));
    findings.extend(duplicate_links(&graph));

    for cycle in refinement_cycles(&graph, &TraceLinkType::refines()) {
        let ids: Vec<&str> = cycle.iter().map(|id| id.as_str()).collect();
        let span = model.elements[&cycle[0]].span.clone();
        findings.push(Finding::new(
            FindingCode::RefinementCycle,
            format!("refinement cycle: {} -> {}", ids.join(" -> "), ids[0]),
            span,
        ));
    }

    if !args.no_coverage {
        let via = &ctx.config.default_test_link;
        let cov = coverage(
            &graph,
            &model,
            &ElementKind::requirement(),
            via,
            &ElementKind::test(),
        );
        // `coverage` itself only warns for the built-in `tests` type; check
        // warns for whatever link type the project considers test coverage.
        if via.as_str() == "tests" {
            findings.extend(cov.findings);
        } else {
            findings.extend(untested_findings(
                &model,
                &cov.uncovered,
                via,
                &ElementKind::test(),
            ));
        }
    }

    if !args.paths.is_empty() {
        let mut prefixes = Vec::with_capacity(args.paths.len());
        for path in &args.paths {
            prefixes.push(super::repo_relative(ctx, path)?);
        }
        findings.retain(|finding| {
            prefixes.iter().any(|prefix| {
                prefix.is_empty() // the root itself: keep everything
                    || finding.span.path == *prefix
                    || finding
                        .span
                        .path
                        .strip_prefix(prefix)
                        .is_some_and(|rest| rest.starts_with('/'))
            })
        });
    }

    sort_findings(&mut findings);
    for finding in &findings {
        println!("{finding}");
    }

    let errors = findings
        .iter()
        .filter(|f| f.severity() == Severity::Error)
        .count();
    let warnings = findings.len() - errors;
    if errors > 0 || (args.strict && warnings > 0) {
        Ok(1)
    } else {
        Ok(0)
    }
}
