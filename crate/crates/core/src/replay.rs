//! Syscall trace handling: parsing the `mkm` line format, per-service
//! syscall profiles, and replaying records against a simulated kernel.
//!
//! One record per line:
//!
//! ```text
//! mkm tname=<token> pid=<uint> call=<token> args=<JSON array>
//! ```
//!
//! Tokens are bare runs of non-whitespace or double-quoted strings (for
//! names with spaces). Blank lines and lines whose first non-space
//! character is `#` are skipped.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::kernel::{KernelState, SysError};
use crate::model::{Credential, Payload};

/// One parsed trace line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tname: String,
    pub pid: u32,
    pub call: String,
    pub args: Vec<Payload>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: expected {expected}")]
pub struct ParseError {
    pub line: usize,
    /// 1-based character position of the failing field value.
    pub column: usize,
    pub expected: String,
}

struct LineParser<'a> {
    line: &'a str,
    line_no: usize,
    pos: usize,
}

impl<'a> LineParser<'a> {
    fn new(line: &'a str, line_no: usize) -> Self {
        Self { line, line_no, pos: 0 }
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError {
            line: self.line_no,
            column: self.pos + 1,
            expected: expected.to_string(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.line[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.line.len() - trimmed.len();
    }

    fn expect_literal(&mut self, lit: &str, expected: &str) -> Result<(), ParseError> {
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    /// A bare (possibly empty) run of non-whitespace, or a double-quoted
    /// string. Quoted tokens have no escape syntax.
    fn token(&mut self) -> Result<String, ParseError> {
        if self.peek() == Some('"') {
            let body = &self.rest()[1..];
            match body.find('"') {
                Some(end) => {
                    let value = body[..end].to_string();
                    self.pos += end + 2;
                    Ok(value)
                }
                None => Err(self.error("closing double quote")),
            }
        } else {
            let rest = self.rest();
            let end = rest
                .find(char::is_whitespace)
                .unwrap_or(rest.len());
            let value = rest[..end].to_string();
            self.pos += end;
            Ok(value)
        }
    }

    fn positive_uint(&mut self) -> Result<u32, ParseError> {
        let rest = self.rest();
        let end = rest
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(rest.len());
        let digits = &rest[..end];
        let value: u32 = digits
            .parse()
            .map_err(|_| self.error("positive integer pid"))?;
        if value == 0 {
            return Err(self.error("positive integer pid"));
        }
        self.pos += end;
        Ok(value)
    }

    fn json_args(&mut self) -> Result<Vec<Payload>, ParseError> {
        serde_json::from_str(self.rest().trim_end())
            .map_err(|_| self.error("JSON array of arguments"))
    }
}

fn parse_line(line: &str, line_no: usize) -> Result<TraceRecord, ParseError> {
    let mut p = LineParser::new(line, line_no);
    p.skip_ws();
    p.expect_literal("mkm", "mkm record marker")?;
    if !matches!(p.peek(), Some(c) if c.is_whitespace()) {
        return Err(p.error("mkm record marker"));
    }
    p.skip_ws();
    p.expect_literal("tname=", "`tname=` field")?;
    let tname = p.token()?;
    p.skip_ws();
    p.expect_literal("pid=", "`pid=` field")?;
    let pid = p.positive_uint()?;
    p.skip_ws();
    p.expect_literal("call=", "`call=` field")?;
    let call = p.token()?;
    p.skip_ws();
    p.expect_literal("args=", "`args=` field")?;
    let args = p.json_args()?;
    Ok(TraceRecord {
        tname,
        pid,
        call,
        args,
    })
}

/// Parses a whole trace. Line numbers in errors are 1-based and count
/// skipped lines too.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, ParseError> {
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let trimmed = line.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        records.push(parse_line(line, idx + 1)?);
    }
    Ok(records)
}

fn quote_token(t: &str) -> String {
    debug_assert!(!t.contains('"'), "tokens cannot contain double quotes");
    if t.is_empty() || t.chars().any(char::is_whitespace) {
        format!("\"{t}\"")
    } else {
        t.to_string()
    }
}

/// Renders a record back into the line format `parse_trace` accepts.
pub fn render(record: &TraceRecord) -> String {
    format!(
        "mkm tname={} pid={} call={} args={}",
        quote_token(&record.tname),
        record.pid,
        quote_token(&record.call),
        serde_json::to_string(&record.args).expect("JSON arguments serialize")
    )
}

/// Groups the syscall names each service (thread name) used. Services
/// absent from the trace are absent from the map.
pub fn service_syscall_profile(records: &[TraceRecord]) -> BTreeMap<String, BTreeSet<String>> {
    let mut profile: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for record in records {
        profile
            .entry(record.tname.clone())
            .or_default()
            .insert(record.call.clone());
    }
    profile
}

/// One record the kernel refused during replay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedCall {
    pub call: String,
    pub code: String,
    pub reason: String,
}

/// Summary of one replay run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub total: usize,
    pub succeeded: usize,
    pub failed: Vec<FailedCall>,
    pub success_ratio: f64,
}

/// Human explanation for a replay failure code.
pub fn failure_reason(err: &SysError) -> &'static str {
    match err {
        SysError::Eaddrinuse => "targeted socket is already bound",
        SysError::Eperm => "cannot kill another user's process",
        SysError::Eisconn => "another endpoint is already connected",
        SysError::Enosys { .. } => "unsupported",
        SysError::Enoent => "no such process or socket",
        SysError::Eacces => "write permission refused",
        SysError::EnomemReboot => "process memory exhausted",
    }
}

/// Replays every record against `state` under the caller credential,
/// in trace order. The recorded pid is kept for profiling only; the
/// replaying identity decides permissions.
pub fn replay_as(
    state: &mut KernelState,
    records: &[TraceRecord],
    caller: &Credential,
) -> ReplayReport {
    let mut failed = Vec::new();
    for record in records {
        if let Err(err) = state.dispatch_syscall(caller, &record.call, &record.args) {
            failed.push(FailedCall {
                call: record.call.clone(),
                code: err.code().to_string(),
                reason: failure_reason(&err).to_string(),
            });
        }
    }
    let total = records.len();
    let succeeded = total - failed.len();
    let success_ratio = if total == 0 {
        1.0
    } else {
        succeeded as f64 / total as f64
    };
    ReplayReport {
        total,
        succeeded,
        failed,
        success_ratio,
    }
}
