//! Command-line interface of the `treqs` binary.
//!
//! Exit code contract, shared by every command: 0 success, 1 findings (or a
//! pending diff for `fmt --check`), 2 invocation or I/O error. Commands that
//! only query never exit 1.

mod branch_diff;
mod changed;
mod check;
mod fmt;
mod hook;
mod list;
mod matrix;
mod new;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Parser, Subcommand};

use crate::config::{self, Config};
use crate::report::{render, Report, ReportFormat};

/// Environment variable that overrides the configuration file location.
pub const CONFIG_ENV_VAR: &str = "TREQS_CONFIG";

#[derive(Debug, Parser)]
#[command(
    name = "treqs",
    version,
    about = "Manage requirements as tagged elements in git-versioned markdown",
    max_term_width = 100
)]
pub struct Cli {
    /// Run as if started in this directory.
    #[arg(short = 'C', long = "chdir", global = true, value_name = "DIR")]
    pub chdir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate all elements and links; print findings one per line.
    Check(check::CheckArgs),
    /// List elements (ID, kind, title, location), sorted by ID.
    List(list::ListArgs),
    /// Add an element skeleton with a fresh generated ID.
    New(new::NewArgs),
    /// Report element changes between two revisions.
    Changed(changed::ChangedArgs),
    /// Render a traceability matrix between two element kinds.
    Matrix(matrix::MatrixArgs),
    /// Report element changes a branch would merge, relative to its fork point.
    BranchDiff(branch_diff::BranchDiffArgs),
    /// Rewrite element files into canonical line-wise form.
    Fmt(fmt::FmtArgs),
    /// Install the pre-commit hook that runs `treqs check` on staged files.
    HookInstall(hook::HookInstallArgs),
}

/// Everything a command needs: the repository root, where the user invoked
/// us, and the loaded configuration.
pub struct Ctx {
    /// Canonicalized repository root (directory containing `.git` or
    /// `.treqs.toml`, or the invocation directory as a fallback).
    pub root: PathBuf,
    /// Canonicalized directory the command was invoked from (after `-C`).
    pub invocation_dir: PathBuf,
    pub config: Config,
}

/// Entry point used by the binary. Parses arguments (clap itself exits 2 on
/// usage errors, 0 for `--help`/`--version`), runs the command, and maps
/// command errors to stderr plus exit code 2.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(2)
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<u8> {
    let invocation_dir = match &cli.chdir {
        Some(dir) => dir
            .canonicalize()
            .with_context(|| format!("cannot change to `{}`", dir.display()))?,
        None => std::env::current_dir().context("cannot determine the current directory")?,
    };
    let root = find_root(&invocation_dir);
    let (config, warnings) = load_config(&root)?;
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    let ctx = Ctx {
        root,
        invocation_dir,
        config,
    };

    match &cli.command {
        Command::Check(args) => check::run(&ctx, args),
        Command::List(args) => list::run(&ctx, args),
        Command::New(args) => new::run(&ctx, args),
        Command::Changed(args) => changed::run(&ctx, args),
        Command::Matrix(args) => matrix::run(&ctx, args),
        Command::BranchDiff(args) => branch_diff::run(&ctx, args),
        Command::Fmt(args) => fmt::run(&ctx, args),
        Command::HookInstall(args) => hook::run(&ctx, args),
    }
}

/// Walks upwards from `start` to the first directory containing `.git` or a
/// configuration file; falls back to `start` itself.
fn find_root(start: &Path) -> PathBuf {
    for dir in start.ancestors() {
        if dir.join(".git").exists() || dir.join(config::CONFIG_FILE_NAME).is_file() {
            return dir.to_path_buf();
        }
    }
    start.to_path_buf()
}

/// Loads configuration: the file named by `TREQS_CONFIG` if set (missing
/// file = invocation error), else `.treqs.toml` at the root if present, else
/// defaults.
fn load_config(root: &Path) -> anyhow::Result<(Config, Vec<String>)> {
    if let Some(override_path) = std::env::var_os(CONFIG_ENV_VAR) {
        let path = PathBuf::from(override_path);
        return config::load_from(&path)
            .with_context(|| format!("configuration from ${CONFIG_ENV_VAR}"));
    }
    match config::discover(root) {
        Some(path) => Ok(config::load_from(&path)?),
        None => Ok((Config::default(), Vec::new())),
    }
}

/// Shared by the report-producing commands.
fn print_report(mut report: Report, format: ReportFormat, no_timestamp: bool) {
    if no_timestamp {
        report.generated_at = None;
    }
    print!("{}", render(&report, format));
}

/// Parses a `--format` value; shared by the report-producing commands.
fn parse_format(value: &str) -> anyhow::Result<ReportFormat> {
    value.parse::<ReportFormat>().map_err(anyhow::Error::msg)
}

/// Resolves a user-supplied path against the invocation directory and
/// relativizes it to the repository root. Errors (exit 2) if the path does
/// not exist or lies outside the repository.
fn repo_relative(ctx: &Ctx, path: &Path) -> anyhow::Result<String> {
    let absolute = if path.is_absolute() {
        path.to_path_buf()
    } else {
        ctx.invocation_dir.join(path)
    };
    let canonical = absolute
        .canonicalize()
        .with_context(|| format!("cannot read `{}`", path.display()))?;
    let rel = canonical.strip_prefix(&ctx.root).map_err(|_| {
        anyhow::anyhow!(
            "`{}` is outside the repository `{}`",
            path.display(),
            ctx.root.display()
        )
    })?;
    let rel = rel
        .to_str()
        .ok_or_else(|| anyhow::anyhow!("path `{}` is not valid UTF-8", path.display()))?;
    Ok(rel.replace(std::path::MAIN_SEPARATOR, "/"))
}
