//! Membership oracle delegated to a child process.
//!
//! Protocol: for every query the child reads one line `x1 x2 ... xd\n` (decimal,
//! `.` separator, single spaces) on stdin and answers with exactly `1\n` or `0\n` on
//! stdout, in order. Answers are cached by the bit pattern of the query point.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use crate::error::{config_err, Error, Result};

pub struct ExternalIndicator {
    command: Vec<String>,
    dim: usize,
    state: Mutex<State>,
}

struct State {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    cache: HashMap<Vec<u64>, bool>,
    line: String,
    queries: u64,
}

impl ExternalIndicator {
    pub fn spawn(dim: usize, command: &[String]) -> Result<Self> {
        let (program, args) = command.split_first().ok_or_else(|| config_err("external command is empty"))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Membership(format!("failed to spawn {program:?}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            command: command.to_vec(),
            dim,
            state: Mutex::new(State { child, stdin, stdout, cache: HashMap::new(), line: String::new(), queries: 0 }),
        })
    }

    pub fn command(&self) -> &[String] {
        &self.command
    }

    /// Number of queries actually sent to the child (cache misses).
    pub fn queries_sent(&self) -> u64 {
        self.state.lock().map(|s| s.queries).unwrap_or(0)
    }

    pub fn query(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim {
            return Err(config_err(format!("point has dimension {}, oracle expects {}", x.len(), self.dim)));
        }
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        let mut guard = self.state.lock().map_err(|_| Error::Membership("oracle state poisoned".into()))?;
        let state = &mut *guard;
        if let Some(&hit) = state.cache.get(&key) {
            return Ok(hit);
        }
        let request = format_query(x);
        state
            .stdin
            .write_all(request.as_bytes())
            .and_then(|_| state.stdin.flush())
            .map_err(|e| Error::Membership(format!("write to oracle failed: {e}")))?;
        state.line.clear();
        let read = state
            .stdout
            .read_line(&mut state.line)
            .map_err(|e| Error::Membership(format!("read from oracle failed: {e}")))?;
        if read == 0 {
            return Err(Error::Membership("oracle closed its output (crashed?)".into()));
        }
        state.queries += 1;
        let answer = match state.line.as_str() {
            "1\n" => true,
            "0\n" => false,
            other => return Err(Error::Membership(format!("malformed oracle response {other:?}"))),
        };
        state.cache.insert(key, answer);
        Ok(answer)
    }
}

/// Renders a point as one protocol line. `f64` display output is plain decimal and
/// round-trips exactly.
pub fn format_query(x: &[f64]) -> String {
    let mut s = x.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ");
    s.push('\n');
    s
}

impl Drop for ExternalIndicator {
    fn drop(&mut self) {
        if let Ok(state) = self.state.get_mut() {
            let _ = state.child.kill();
            let _ = state.child.wait();
        }
    }
}
