//! Input loading with `file:line` diagnostics.

use std::fmt;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use monoeval_core::{parse_stream_log, StreamLog, TokenSeq};

use crate::CliError;

/// A log source: a file, or stdin when absent or `-`.
#[derive(Debug, Clone)]
pub enum Input {
    File(PathBuf),
    Stdin,
}

impl Input {
    pub fn from_arg(path: Option<PathBuf>) -> Self {
        match path {
            Some(p) if p.as_os_str() != "-" => Input::File(p),
            _ => Input::Stdin,
        }
    }

    pub fn read_to_string(&self) -> Result<String, CliError> {
        match self {
            Input::File(p) => fs::read_to_string(p).map_err(|e| CliError::io(p, e)),
            Input::Stdin => {
                let mut s = String::new();
                io::stdin()
                    .read_to_string(&mut s)
                    .map_err(|e| CliError::Data(format!("<stdin>: {e}")))?;
                Ok(s)
            }
        }
    }
}

impl fmt::Display for Input {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Input::File(p) => write!(f, "{}", p.display()),
            Input::Stdin => f.write_str("<stdin>"),
        }
    }
}

/// Fails with a data error unless every path names an existing file.
pub fn require_files<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<(), CliError> {
    for p in paths {
        if !p.is_file() {
            return Err(CliError::Data(format!("{}: no such file", p.display())));
        }
    }
    Ok(())
}

/// A parsed log and the line it came from.
pub struct LoggedLine {
    pub line: usize,
    pub log: StreamLog,
}

/// Parses every non-blank line; the first bad record is a data error.
pub fn read_logs(input: &Input) -> Result<Vec<LoggedLine>, CliError> {
    let text = input.read_to_string()?;
    let mut logs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let log = parse_stream_log(line)
            .map_err(|e| CliError::Data(format!("{input}:{}: {e}", n + 1)))?;
        logs.push(LoggedLine { line: n + 1, log });
    }
    Ok(logs)
}

/// One whitespace-tokenized sentence per line.
pub fn read_sentences(path: &Path) -> Result<Vec<TokenSeq>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(text.lines().map(TokenSeq::from_line).collect())
}
