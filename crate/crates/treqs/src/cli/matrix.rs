//! `treqs matrix`: traceability matrix between two element kinds.

use clap::Args;

use super::Ctx;
use crate::graph::build_graph;
use crate::model::{ElementKind, TraceLinkType};
use crate::report::{traceability_matrix, MatrixDirection};
use crate::workspace;

#[derive(Debug, Args)]
pub struct MatrixArgs {
    /// Element kind shown as rows.
    #[arg(long, value_name = "KIND", default_value = "requirement")]
    pub rows: String,

    /// Element kind shown as columns.
    #[arg(long, value_name = "KIND", default_value = "test")]
    pub cols: String,

    /// Link type that produces a mark (defaults to the configured test link).
    #[arg(long, value_name = "LINK-TYPE")]
    pub via: Option<String>,

    /// Output format: markdown, csv, or html.
    #[arg(long, default_value = "markdown")]
    pub format: String,

    /// Omit the generation timestamp (byte-stable output).
    #[arg(long)]
    pub no_timestamp: bool,
}

pub fn run(ctx: &Ctx, args: &MatrixArgs) -> anyhow::Result<u8> {
    let format = super::parse_format(&args.format)?;
    let vocab = ctx.config.vocabulary();

    let kind_arg = |name: &str, value: &str| -> anyhow::Result<ElementKind> {
        let kind = ElementKind::new(value).map_err(|e| anyhow::anyhow!("invalid --{name}: {e}"))?;
        if !vocab.knows_kind(&kind) {
            let known: Vec<&str> = vocab.kinds().collect();
            anyhow::bail!("unknown kind `{kind}`; known kinds: {}", known.join(", "));
        }
        Ok(kind)
    };
    let rows = kind_arg("rows", &args.rows)?;
    let cols = kind_arg("cols", &args.cols)?;

    let via = match args.via.as_deref() {
        Some(value) => {
            let link_type =
                TraceLinkType::new(value).map_err(|e| anyhow::anyhow!("invalid --via: {e}"))?;
            if !vocab.knows_link_type(&link_type) {
                let known: Vec<&str> = vocab.link_types().collect();
                anyhow::bail!(
                    "unknown link type `{link_type}`; known link types: {}",
                    known.join(", ")
                );
            }
            link_type
        }
        None => ctx.config.default_test_link.clone(),
    };

    let model = workspace::load_model(&ctx.root, &ctx.config.include_globs, &vocab)?;
    let graph = build_graph(&model);
    let report = traceability_matrix(
        &graph,
        &model,
        &rows,
        &cols,
        &via,
        MatrixDirection::InboundToRow,
    );
    super::print_report(report, format, args.no_timestamp);
    Ok(0)
}
