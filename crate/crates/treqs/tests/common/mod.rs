//! Shared fixtures for the integration suites: a realistic element corpus
//! and small git helpers. Every helper panics on failure — fixture problems
//! should abort the test loudly, not surface as assertion noise.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// The fixture corpus: 21 elements over 5 files (all four built-in kinds,
/// all five built-in link types, extra attributes, one CRLF file, and some
/// deliberately un-normalized prose). Every link target exists and every
/// requirement is covered by a test, so `check` reports nothing.
pub fn corpus_files() -> Vec<(&'static str, String)> {
    let core = r#"# Core requirements

Narrative text between elements is ignored by the parser.

<treqs-element id="REQ-1" type="requirement" priority="high" owner="alice">
## Ingest sensor frames
The gateway shall accept sensor frames over MQTT.
Frames larger than 64 KiB shall be rejected.
</treqs-element>

<treqs-element id="REQ-2" type="requirement">
## Buffer on disconnect
The gateway shall buffer frames while the uplink is down. Buffered frames shall be flushed in arrival order.
<treqs-link type="refines" target="REQ-1" />
</treqs-element>

<treqs-element id="REQ-3" type="requirement">
## Deduplicate frames
The gateway shall drop frames whose sequence number was already accepted.
<treqs-link type="refines" target="REQ-1" />
<treqs-link type="relates-to" target="INFO-1" />
</treqs-element>

<treqs-element id="REQ-4" type="requirement">
## Health endpoint
The gateway shall expose a health endpoint reporting:
- uplink state
- buffer fill level
- last accepted sequence number
The endpoint shall answer within 100 ms.
</treqs-element>

<treqs-element id="REQ-5" type="requirement" owner="bob">
## Buffer size limit
The disconnect buffer shall hold at most 10000 frames.
<treqs-link type="refines" target="REQ-3" />
</treqs-element>

<treqs-element id="REQ-6" type="requirement">
## Unbounded buffer mode
The gateway shall offer an unbounded buffer mode for bench setups.
<treqs-link type="deprecates" target="REQ-5" />
</treqs-element>
"#
    .to_string();

    let ui = r#"# Operator UI requirements

<treqs-element id="REQ-7" type="requirement">
## Live frame counter
The dashboard shall show the number of frames accepted in the last minute.
<treqs-link type="relates-to" target="REQ-1" />
</treqs-element>

<treqs-element id="REQ-8" type="requirement">
## Export query
The dashboard shall accept export queries of the form:
```
export --from <ts> --to <ts>
```
Malformed queries shall produce a usage message.
</treqs-element>

<treqs-element id="REQ-9" type="requirement">
## Refresh cadence
The dashboard
refreshes every second while a session is active.
</treqs-element>

<treqs-element id="REQ-10" type="requirement">
## Session timeout
Idle dashboard sessions shall end after 15 minutes.
<treqs-link type="refines" target="REQ-7" />
</treqs-element>
"#
    .to_string();

    let stories = r#"# User stories

<treqs-element id="US-1" type="user-story">
## Resilient field deployment
As a field technician, I want the gateway to survive uplink outages so that no sensor data is lost.
<treqs-link type="implements" target="REQ-2" />
</treqs-element>

<treqs-element id="US-2" type="user-story">
## Operations overview
As an operator, I want a live dashboard so that I can spot ingest problems quickly.
<treqs-link type="implements" target="REQ-7" />
</treqs-element>

<treqs-element id="US-3" type="user-story">
## Audit exports
As an auditor, I want raw frame exports so that I can verify billing.
<treqs-link type="relates-to" target="INFO-2" />
</treqs-element>
"#
    .to_string();

    // CRLF file; TC-2 has two sentences on one line on purpose.
    let cases = r#"# Test cases

<treqs-element id="TC-1" type="test">
## Ingest happy path and size limit
Publish a 1 KiB frame and a 65 KiB frame.
Expect the first accepted and the second rejected.
<treqs-link type="tests" target="REQ-1" />
<treqs-link type="tests" target="REQ-2" />
</treqs-element>

<treqs-element id="TC-2" type="test">
## Duplicate and health
Replay a frame and poll health. The duplicate shall be dropped and health shall answer in time.
<treqs-link type="tests" target="REQ-3" />
<treqs-link type="tests" target="REQ-4" />
</treqs-element>

<treqs-element id="TC-3" type="test">
## Buffer limits
Fill the buffer beyond its limit in both modes.
<treqs-link type="tests" target="REQ-5" />
<treqs-link type="tests" target="REQ-6" />
</treqs-element>

<treqs-element id="TC-4" type="test" env="staging">
## Dashboard counters
Drive ingest and watch the counter and the export form.
<treqs-link type="tests" target="REQ-7" />
<treqs-link type="tests" target="REQ-8" />
</treqs-element>

<treqs-element id="TC-5" type="test">
## Session behaviour
Leave a session idle and watch the refresh cadence until timeout.
<treqs-link type="tests" target="REQ-9" />
<treqs-link type="tests" target="REQ-10" />
</treqs-element>
"#
    .replace('\n', "\r\n");

    let notes = r#"# Background notes

<treqs-element id="INFO-1" type="information">
## Sequence numbers
Sensors stamp every frame with a 64-bit monotonically increasing sequence number.
</treqs-element>

<treqs-element id="INFO-2" type="information">
## Export retention
Exports are kept for 90 days on the staging bucket.
<treqs-link type="relates-to" target="REQ-6" />
</treqs-element>

<treqs-element id="INFO-3" type="information">
## Naming
Gateways are named after rivers.
</treqs-element>
"#
    .to_string();

    vec![
        ("requirements/core.md", core),
        ("requirements/ui.md", ui),
        ("stories.md", stories),
        ("tests/cases.md", cases),
        ("notes.md", notes),
    ]
}

/// A file full of defects, layered on top of the clean corpus to produce
/// E001 (REQ-1 again), E002 (dangling target), E003 (malformed tag),
/// W001 (undeclared kind), and W003 (self link).
pub fn broken_file() -> (&'static str, String) {
    (
        "broken.md",
        r#"<treqs-element id="REQ-1" type="requirement">
## Shadow of REQ-1
This duplicates an existing ID.
</treqs-element>

<treqs-element id="BAD-1" type="requirement">
## Dangling and selfish
Links below are wrong.
<treqs-link type="refines" target="GHOST-1" />
<treqs-link type="relates-to" target="BAD-1" />
</treqs-element>

<treqs-element id="BAD-2" type="mystery">
## Unknown kind
Kind is not declared anywhere.
</treqs-element>

<treqs-element id="BAD-3">
missing the type attribute
</treqs-element>
"#
        .to_string(),
    )
}

/// Writes `files` under `root`, creating parent directories.
pub fn write_files(root: &Path, files: &[(&str, String)]) {
    for (rel, content) in files {
        let path = root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).unwrap();
        }
        std::fs::write(path, content).unwrap();
    }
}

/// Writes the clean corpus under `root`.
pub fn write_corpus(root: &Path) {
    write_files(root, &corpus_files());
}

/// Runs git in `dir`, asserting success, and returns stdout as a string.
pub fn git(dir: &Path, args: &[&str]) -> String {
    let out = git_raw(dir, args);
    assert!(
        out.status.success(),
        "git {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Runs git in `dir` without asserting anything.
pub fn git_raw(dir: &Path, args: &[&str]) -> Output {
    Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(args)
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .env("GIT_CONFIG_SYSTEM", "/dev/null")
        .output()
        .expect("git must be runnable")
}

/// Initializes a repository on branch `main` with a local identity and no
/// signing or hooks picked up from the machine.
pub fn init_repo(dir: &Path) {
    git(dir, &["init", "-q", "-b", "main"]);
    git(dir, &["config", "user.name", "Fixture"]);
    git(dir, &["config", "user.email", "fixture@example.com"]);
    git(dir, &["config", "commit.gpgsign", "false"]);
}

/// Stages everything and commits; returns the commit hash.
pub fn commit_all(dir: &Path, message: &str) -> String {
    git(dir, &["add", "-A"]);
    git(dir, &["commit", "-q", "-m", message]);
    git(dir, &["rev-parse", "HEAD"]).trim().to_string()
}

/// Path of the compiled `treqs` binary.
pub fn treqs_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_treqs"))
}

/// Runs the treqs binary in `dir` and returns the raw output.
pub fn run_treqs(dir: &Path, args: &[&str]) -> Output {
    Command::new(treqs_bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("treqs binary must be runnable")
}

/// stdout of an `Output` as UTF-8.
pub fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// stderr of an `Output` as UTF-8.
pub fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}
