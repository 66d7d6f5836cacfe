//! `treqs list`: enumerate elements.

use clap::Args;

use super::Ctx;
use crate::workspace;

#[derive(Debug, Args)]
pub struct ListArgs {
    /// Only elements of this kind.
    #[arg(long, value_name = "KIND")]
    pub kind: Option<String>,

    /// Only elements whose ID starts with this prefix.
    #[arg(long, value_name = "PREFIX")]
    pub id_prefix: Option<String>,
}

/// Prints one row per element — ID, kind, title, location — sorted by ID.
/// No header row, so the output pipes cleanly into `wc -l` and friends.
/// Filters combine conjunctively. Exits 0 even when findings exist; `check`
/// is the gate, `list` is a query.
pub fn run(ctx: &Ctx, args: &ListArgs) -> anyhow::Result<u8> {
    let vocab = ctx.config.vocabulary();
    let model = workspace::load_model(&ctx.root, &ctx.config.include_globs, &vocab)?;

    let mut rows: Vec<[String; 4]> = model
        .elements
        .values()
        .filter(|element| {
            args.kind
                .as_deref()
                .is_none_or(|kind| element.kind.as_str() == kind)
        })
        .filter(|element| {
            args.id_prefix
                .as_deref()
                .is_none_or(|prefix| element.id.as_str().starts_with(prefix))
        })
        .map(|element| {
            [
                element.id.to_string(),
                element.kind.to_string(),
                element.title.clone(),
                element.span.to_string(),
            ]
        })
        .collect();
    rows.sort();

    let width = |column: usize| {
        rows.iter()
            .map(|row| row[column].chars().count())
            .max()
            .unwrap_or(0)
    };
    let (id_width, kind_width, title_width) = (width(0), width(1), width(2));
    for [id, kind, title, location] in &rows {
        println!("{id:<id_width$}  {kind:<kind_width$}  {title:<title_width$}  {location}");
    }
    Ok(0)
}
