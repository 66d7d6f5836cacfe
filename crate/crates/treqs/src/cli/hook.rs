//! `treqs hook-install`: wire `treqs check` into git's pre-commit hook.

use std::path::PathBuf;
use std::process::Command;

use anyhow::Context as _;
use clap::Args;

use super::Ctx;

/// First comment line of hooks we own; its presence makes reinstallation
/// idempotent and protects hooks written by other tools.
const MARKER: &str = "# treqs pre-commit hook";

#[derive(Debug, Args)]
pub struct HookInstallArgs {
    /// Replace an existing pre-commit hook that treqs did not install.
    #[arg(long)]
    pub force: bool,
}

pub fn run(ctx: &Ctx, args: &HookInstallArgs) -> anyhow::Result<u8> {
    // `--git-path` respects worktrees and a configured core.hooksPath.
    let output = Command::new("git")
        .arg("-C")
        .arg(&ctx.root)
        .args(["rev-parse", "--git-path", "hooks/pre-commit"])
        .output()
        .context("cannot run git")?;
    if !output.status.success() {
        anyhow::bail!("`{}` is not a git repository", ctx.root.display());
    }
    let hook_path = PathBuf::from(String::from_utf8_lossy(&output.stdout).trim());
    let hook_path = if hook_path.is_absolute() {
        hook_path
    } else {
        ctx.root.join(hook_path)
    };

    match std::fs::read_to_string(&hook_path) {
        Ok(existing) if !existing.contains(MARKER) && !args.force => {
            anyhow::bail!(
                "`{}` already exists and was not installed by treqs; rerun with --force to replace it",
                hook_path.display()
            );
        }
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => {
            return Err(e).with_context(|| format!("cannot read `{}`", hook_path.display()));
        }
        _ => {}
    }

    // Each include glob becomes a `:(glob)` pathspec so the hook checks the
    // same files the configuration selects.
    let pathspecs: String = ctx
        .config
        .include_globs
        .iter()
        .map(|glob| format!(" ':(glob){glob}'"))
        .collect();

    let script = format!(
        r#"#!/bin/sh
{MARKER}
# Installed by `treqs hook-install`; reinstalling rewrites this file.
# Validates the staged element files before every commit.

staged=$(git diff --cached --name-only --diff-filter=ACMR --{pathspecs})
[ -z "$staged" ] && exit 0

IFS='
'
set -f
set -- $staged
exec treqs check "$@"
"#
    );

    if let Some(parent) = hook_path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("cannot create `{}`", parent.display()))?;
    }
    std::fs::write(&hook_path, script)
        .with_context(|| format!("cannot write `{}`", hook_path.display()))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt as _;
        std::fs::set_permissions(&hook_path, std::fs::Permissions::from_mode(0o755))
            .with_context(|| format!("cannot make `{}` executable", hook_path.display()))?;
    }

    println!("installed {}", hook_path.display());
    Ok(0)
}
