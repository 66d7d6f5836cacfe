//! Report construction and rendering.
//!
//! Reports are built once as plain data ([`Report`]) and then rendered to
//! markdown, CSV, or HTML. Rendering is pure — no clock, no I/O, no
//! randomness — so the same report always renders to identical bytes; the
//! timestamp, if any, is injected when the report is *built*.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::graph::{Coverage, TraceGraph};
use crate::model::{ElementId, ElementKind, Model, SourceSpan, TraceLinkType};
use crate::vcs::{ChangeKind, CommitRef, ElementChange};

/// One table cell. `Mark` renders as `x` (set) or empty (unset); `Count`
/// renders as a decimal number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cell {
    Text(String),
    Count(usize),
    Mark(bool),
}

impl Cell {
    /// The cell's content as plain text — identical across output formats.
    pub fn content(&self) -> String {
        match self {
            Cell::Text(text) => text.clone(),
            Cell::Count(n) => n.to_string(),
            Cell::Mark(true) => "x".to_string(),
            Cell::Mark(false) => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub heading: String,
    /// Prose lines rendered in markdown and HTML; CSV carries tables only.
    pub notes: Vec<String>,
    pub table: Option<Table>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub title: String,
    /// RFC 3339 build timestamp; `None` renders no timestamp line at all
    /// (used to make output byte-stable, e.g. under `--no-timestamp`).
    pub generated_at: Option<String>,
    /// Revisions the report was computed from, if any.
    pub source_revisions: Vec<String>,
    pub sections: Vec<Section>,
}

impl Report {
    /// New report stamped with the current UTC time.
    pub fn stamped(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            generated_at: Some(
                chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            ),
            source_revisions: Vec::new(),
            sections: Vec::new(),
        }
    }
}

/// Output formats for [`render`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Html,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [
        ReportFormat::Markdown,
        ReportFormat::Csv,
        ReportFormat::Html,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReportFormat::Markdown => "markdown",
            ReportFormat::Csv => "csv",
            ReportFormat::Html => "html",
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "html" => Ok(ReportFormat::Html),
            other => Err(format!(
                "unknown format `{other}` (expected markdown, csv, or html)"
            )),
        }
    }
}

/// Renders `report` in the requested format. Pure: equal reports render to
/// byte-identical output.
pub fn render(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => render_markdown(report),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Html => render_html(report),
    }
}

fn escape_md_cell(text: &str) -> String {
    text.replace('|', "\\|")
}

fn render_markdown(report: &Report) -> String {
    let mut out = format!("# {}\n", report.title);
    if let Some(generated_at) = &report.generated_at {
        let _ = write!(out, "\nGenerated: {generated_at}\n");
    }
    if !report.source_revisions.is_empty() {
        let _ = write!(out, "\nRevisions: {}\n", report.source_revisions.join(", "));
    }
    for section in &report.sections {
        let _ = write!(out, "\n## {}\n", section.heading);
        for note in &section.notes {
            let _ = write!(out, "\n{note}\n");
        }
        if let Some(table) = &section.table {
            out.push('\n');
            let header: Vec<String> = table.header.iter().map(|h| escape_md_cell(h)).collect();
            let _ = writeln!(out, "| {} |", header.join(" | "));
            let _ = writeln!(out, "|{}", " --- |".repeat(table.header.len()));
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(|c| escape_md_cell(&c.content())).collect();
                let _ = writeln!(out, "| {} |", cells.join(" | "));
            }
        }
    }
    out
}

/// CSV rendering: one block per section, introduced by a `# heading` comment
/// line, blocks separated by a blank line. Records follow RFC 4180 (CRLF
/// line endings, quoting only where needed). Notes and the report title are
/// markdown/HTML concerns and are not emitted — CSV carries the data tables.
fn render_csv(report: &Report) -> String {
    let mut out = String::new();
    for (index, section) in report.sections.iter().enumerate() {
        if index > 0 {
            out.push_str("\r\n");
        }
        let _ = write!(out, "# {}\r\n", section.heading);
        if let Some(table) = &section.table {
            let mut writer = csv::WriterBuilder::new()
                .terminator(csv::Terminator::CRLF)
                .from_writer(Vec::new());
            writer
                .write_record(&table.header)
                .expect("writing to a Vec cannot fail");
            for row in &table.rows {
                let record: Vec<String> = row.iter().map(Cell::content).collect();
                writer
                    .write_record(&record)
                    .expect("writing to a Vec cannot fail");
            }
            let bytes = writer.into_inner().expect("writing to a Vec cannot fail");
            out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
        }
    }
    out
}

fn escape_html(text: &str) -> String {
    let mut escaped = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => escaped.push_str("&amp;"),
            '<' => escaped.push_str("&lt;"),
            '>' => escaped.push_str("&gt;"),
            '"' => escaped.push_str("&quot;"),
            '\'' => escaped.push_str("&#39;"),
            other => escaped.push(other),
        }
    }
    escaped
}

fn render_html(report: &Report) -> String {
    let mut out =
        String::from("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(out, "<title>{}</title>", escape_html(&report.title));
    out.push_str(
        "<style>\nbody { font-family: sans-serif; margin: 2rem; }\ntable { border-collapse: collapse; margin: 1rem 0; }\nth, td { border: 1px solid #999; padding: 0.25rem 0.6rem; text-align: left; }\nth { background: #eee; }\n.meta { color: #555; }\n</style>\n</head>\n<body>\n",
    );
    let _ = writeln!(out, "<h1>{}</h1>", escape_html(&report.title));
    if let Some(generated_at) = &report.generated_at {
        let _ = writeln!(
            out,
            "<p class=\"meta\">Generated: {}</p>",
            escape_html(generated_at)
        );
    }
    if !report.source_revisions.is_empty() {
        let _ = writeln!(
            out,
            "<p class=\"meta\">Revisions: {}</p>",
            escape_html(&report.source_revisions.join(", "))
        );
    }
    for section in &report.sections {
        let _ = writeln!(out, "<h2>{}</h2>", escape_html(&section.heading));
        for note in &section.notes {
            let _ = writeln!(out, "<p>{}</p>", escape_html(note));
        }
        if let Some(table) = &section.table {
            out.push_str("<table>\n<thead>\n<tr>");
            for header in &table.header {
                let _ = write!(out, "<th>{}</th>", escape_html(header));
            }
            out.push_str("</tr>\n</thead>\n<tbody>\n");
            for row in &table.rows {
                out.push_str("<tr>");
                for cell in row {
                    let _ = write!(out, "<td>{}</td>", escape_html(&cell.content()));
                }
                out.push_str("</tr>\n");
            }
            out.push_str("</tbody>\n</table>\n");
        }
    }
    out.push_str("</body>\n</html>\n");
    out
}

/// Whether matrix cells mark edges pointing *at* the row element or *from*
/// it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixDirection {
    /// Cell (r, c) is marked iff an edge `c --via--> r` exists. This is the
    /// coverage view: rows = requirements, columns = tests.
    InboundToRow,
    /// Cell (r, c) is marked iff an edge `r --via--> c` exists.
    OutboundFromRow,
}

/// Builds a traceability matrix: one row per element of `row_kind`, one
/// column per element of `col_kind` (both sorted by ID), cells marked where
/// an edge of type `via` connects them. Row totals appear as the last
/// column; column totals form a second section, so the matrix table itself
/// has exactly one row per row element.
pub fn traceability_matrix(
    graph: &TraceGraph,
    model: &Model,
    row_kind: &ElementKind,
    col_kind: &ElementKind,
    via: &TraceLinkType,
    direction: MatrixDirection,
) -> Report {
    let ids_of = |kind: &ElementKind| -> Vec<&ElementId> {
        let mut ids: Vec<&ElementId> = model
            .elements
            .values()
            .filter(|e| &e.kind == kind)
            .map(|e| &e.id)
            .collect();
        ids.sort();
        ids
    };
    let row_ids = ids_of(row_kind);
    let col_ids = ids_of(col_kind);

    let marked: std::collections::HashSet<(&ElementId, &ElementId)> = graph
        .edges
        .iter()
        .filter(|link| &link.link_type == via)
        .map(|link| match direction {
            MatrixDirection::InboundToRow => (&link.target, &link.source),
            MatrixDirection::OutboundFromRow => (&link.source, &link.target),
        })
        .collect();

    let mut header = vec!["id".to_string()];
    header.extend(col_ids.iter().map(|id| id.to_string()));
    header.push("total".to_string());

    let mut rows = Vec::with_capacity(row_ids.len());
    let mut col_totals = vec![0usize; col_ids.len()];
    for row_id in &row_ids {
        let mut row = Vec::with_capacity(col_ids.len() + 2);
        row.push(Cell::Text(row_id.to_string()));
        let mut row_total = 0;
        for (col_index, col_id) in col_ids.iter().enumerate() {
            let mark = marked.contains(&(*row_id, *col_id));
            if mark {
                row_total += 1;
                col_totals[col_index] += 1;
            }
            row.push(Cell::Mark(mark));
        }
        row.push(Cell::Count(row_total));
        rows.push(row);
    }

    let totals_rows: Vec<Vec<Cell>> = col_ids
        .iter()
        .zip(&col_totals)
        .map(|(id, total)| vec![Cell::Text(id.to_string()), Cell::Count(*total)])
        .collect();

    let mut report = Report::stamped("Traceability Matrix");
    report.sections.push(Section {
        heading: format!("{row_kind} x {col_kind} via {via}"),
        notes: Vec::new(),
        table: Some(Table { header, rows }),
    });
    report.sections.push(Section {
        heading: "column totals".to_string(),
        notes: Vec::new(),
        table: Some(Table {
            header: vec!["id".to_string(), "total".to_string()],
            rows: totals_rows,
        }),
    });
    report
}

fn span_text(span: &SourceSpan) -> String {
    format!("{}:{}-{}", span.path, span.start_line, span.end_line)
}

/// Builds a change report: one section per change kind (in Added, Removed,
/// Modified, Moved order; empty kinds are skipped), each row showing the
/// element's ID, title, location, and the commits that referenced it via
/// `Treqs-ref` trailers. `audience_filter` keeps only elements of one kind —
/// e.g. test planners reviewing only `requirement` changes.
pub fn change_report(
    changes: &[ElementChange],
    commits: &[CommitRef],
    model_head: &Model,
    audience_filter: Option<&ElementKind>,
) -> Report {
    let mut commits_per_element: HashMap<&ElementId, Vec<String>> = HashMap::new();
    for commit_ref in commits {
        let short = commit_ref.commit[..commit_ref.commit.len().min(7)].to_string();
        for id in &commit_ref.referenced {
            commits_per_element
                .entry(id)
                .or_default()
                .push(short.clone());
        }
    }

    let mut report = Report::stamped("Change Report");

    let filtered: Vec<&ElementChange> = changes
        .iter()
        .filter(|change| {
            let Some(filter) = audience_filter else {
                return true;
            };
            let effective_kind = model_head
                .elements
                .get(&change.id)
                .map(|e| &e.kind)
                .unwrap_or(&change.element_kind);
            effective_kind == filter
        })
        .collect();

    if filtered.is_empty() {
        report.sections.push(Section {
            heading: "Changes".to_string(),
            notes: vec!["No changes.".to_string()],
            table: None,
        });
        return report;
    }

    for kind in [
        ChangeKind::Added,
        ChangeKind::Removed,
        ChangeKind::Modified,
        ChangeKind::Moved,
    ] {
        let mut entries: Vec<&&ElementChange> =
            filtered.iter().filter(|c| c.kind == kind).collect();
        if entries.is_empty() {
            continue;
        }
        entries.sort_by(|a, b| a.id.cmp(&b.id));

        let rows: Vec<Vec<Cell>> = entries
            .iter()
            .map(|change| {
                let title = model_head
                    .elements
                    .get(&change.id)
                    .map(|e| e.title.clone())
                    .unwrap_or_else(|| change.title.clone());
                let location = match (kind, &change.old_span, &change.new_span) {
                    (ChangeKind::Moved, Some(old), Some(new)) => {
                        format!("{} -> {}", span_text(old), span_text(new))
                    }
                    (_, _, Some(new)) => span_text(new),
                    (_, Some(old), None) => span_text(old),
                    _ => String::new(),
                };
                let commit_list = commits_per_element
                    .get(&change.id)
                    .map(|hashes| hashes.join(", "))
                    .unwrap_or_default();
                vec![
                    Cell::Text(change.id.to_string()),
                    Cell::Text(title),
                    Cell::Text(location),
                    Cell::Text(commit_list),
                ]
            })
            .collect();

        report.sections.push(Section {
            heading: kind.to_string(),
            notes: vec![format!("{} element(s)", rows.len())],
            table: Some(Table {
                header: ["id", "title", "location", "commits"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                rows,
            }),
        });
    }
    report
}

/// Percentage in tenths, rounded half-up: `percent_tenths(7, 8)` is 875,
/// meaning 87.5%. `None` when `total` is zero.
pub fn percent_tenths(part: usize, total: usize) -> Option<u64> {
    if total == 0 {
        return None;
    }
    Some((2000 * part as u64 + total as u64) / (2 * total as u64))
}

fn percent_text(part: usize, total: usize) -> String {
    match percent_tenths(part, total) {
        Some(tenths) => format!("{}.{}", tenths / 10, tenths % 10),
        None => "n/a".to_string(),
    }
}

/// Builds a coverage report from a [`Coverage`] partition: summary counts
/// with the coverage percentage (one decimal, half-up, `n/a` for an empty
/// universe) and the list of uncovered elements.
pub fn coverage_report(
    coverage: &Coverage,
    model: &Model,
    required_kind: &ElementKind,
    via: &TraceLinkType,
    from_kind: &ElementKind,
) -> Report {
    let covered = coverage.covered.len();
    let total = covered + coverage.uncovered.len();
    let percent = percent_text(covered, total);

    let mut report = Report::stamped("Coverage Report");
    report.sections.push(Section {
        heading: "Summary".to_string(),
        notes: vec![format!(
            "{covered} of {total} `{required_kind}` elements have an inbound `{via}` link from a `{from_kind}` element ({percent}%)."
        )],
        table: Some(Table {
            header: ["covered", "uncovered", "total", "percent"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            rows: vec![vec![
                Cell::Count(covered),
                Cell::Count(coverage.uncovered.len()),
                Cell::Count(total),
                Cell::Text(percent),
            ]],
        }),
    });

    let rows: Vec<Vec<Cell>> = coverage
        .uncovered
        .iter()
        .map(|id| {
            let element = &model.elements[id];
            vec![
                Cell::Text(id.to_string()),
                Cell::Text(element.title.clone()),
                Cell::Text(span_text(&element.span)),
            ]
        })
        .collect();
    report.sections.push(Section {
        heading: "Uncovered".to_string(),
        notes: Vec::new(),
        table: Some(Table {
            header: ["id", "title", "location"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            rows,
        }),
    });
    report
}
