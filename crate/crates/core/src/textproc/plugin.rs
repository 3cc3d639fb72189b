use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use crate::error::{Error, Result};

/// Separates sentences on a segmenter plugin's output line.
pub const SENTENCE_SEPARATOR: char = '\u{1F}';

/// Line-in/line-out child process. One request in flight at a time.
#[derive(Debug)]
pub struct PluginProcess {
    command: String,
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl PluginProcess {
    pub fn spawn(argv: &[String]) -> Result<Self> {
        let (program, args) = argv.split_first().ok_or_else(|| Error::Plugin {
            command: String::new(),
            detail: "empty command".into(),
        })?;
        let command = argv.join(" ");
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Plugin {
                command: command.clone(),
                detail: format!("spawn failed: {e}"),
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            command,
            child,
            stdin,
            stdout,
        })
    }

    /// Sends one line and reads one line back (without its terminator).
    pub fn request(&mut self, text: &str) -> Result<String> {
        let line: String = text
            .chars()
            .map(|c| if c == '\n' || c == '\r' { ' ' } else { c })
            .collect();
        let sent = self
            .stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.write_all(b"\n"))
            .and_then(|_| self.stdin.flush());
        if let Err(e) = sent {
            return Err(self.failure(format!("write failed: {e}")));
        }
        let mut out = String::new();
        match self.stdout.read_line(&mut out) {
            Ok(0) => Err(self.failure("closed its output".into())),
            Ok(_) => {
                while out.ends_with('\n') || out.ends_with('\r') {
                    out.pop();
                }
                Ok(out)
            }
            Err(e) => Err(self.failure(format!("read failed: {e}"))),
        }
    }

    fn failure(&mut self, what: String) -> Error {
        let status = match self.child.wait() {
            Ok(s) => format!("{s}"),
            Err(e) => format!("status unavailable: {e}"),
        };
        Error::Plugin {
            command: self.command.clone(),
            detail: format!("{what} ({status})"),
        }
    }
}

impl Drop for PluginProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
