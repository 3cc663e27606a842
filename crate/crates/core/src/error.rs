use std::fmt;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "second-moment matrix has rank {rank} < {dim}; reduce the walk with genuine_dimension before whitening"
    )]
    SingularCovariance { rank: usize, dim: usize },

    #[error("{0}")]
    Parse(#[from] ParseError),

    #[error("instance too large for exact enumeration: {0}")]
    TooLarge(String),

    #[error("replica {replica} failed: {message}")]
    Replica { replica: u64, message: String },

    #[error("NaN in diagnostics field `{0}`")]
    NotANumber(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Parse failure with a 0-based byte offset into the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub input: String,
    pub position: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(input: &str, position: usize, message: impl Into<String>) -> Self {
        Self {
            input: input.to_string(),
            position,
            message: message.into(),
        }
    }
}

impl ParseError {
    /// 1-based line and column of the error position.
    pub fn line_col(&self) -> (usize, usize) {
        let pos = self.position.min(self.input.len());
        let before = &self.input[..floor_boundary(&self.input, pos)];
        let line = before.matches('\n').count() + 1;
        let col = before.chars().rev().take_while(|&c| c != '\n').count() + 1;
        (line, col)
    }
}

fn floor_boundary(s: &str, mut i: usize) -> usize {
    while !s.is_char_boundary(i) {
        i -= 1;
    }
    i
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (line, col) = self.line_col();
        if self.input.contains('\n') {
            writeln!(f, "at line {line}, column {col}: {}", self.message)?;
        } else {
            writeln!(f, "at column {col}: {}", self.message)?;
        }
        let text = self.input.lines().nth(line - 1).unwrap_or("");
        writeln!(f, "  {text}")?;
        write!(f, "  {}^", " ".repeat(col - 1))
    }
}

impl std::error::Error for ParseError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line_caret() {
        let e = ParseError::new("gaussian(d=x)", 11, "expected a positive integer");
        assert_eq!(e.line_col(), (1, 12));
        let text = e.to_string();
        assert!(text.starts_with("at column 12:"));
        assert!(text.ends_with(&format!("  {}^", " ".repeat(11))));
    }

    #[test]
    fn multi_line_reports_line_and_column() {
        let input = "seed = 1\n[[cell]]\ndist = \"bad\"\n";
        let e = ParseError::new(input, input.find("bad").unwrap(), "unknown");
        assert_eq!(e.line_col(), (3, 9));
        let text = e.to_string();
        assert!(text.starts_with("at line 3, column 9: unknown"), "{text}");
        assert!(text.contains("  dist = \"bad\"\n"));
    }
}
