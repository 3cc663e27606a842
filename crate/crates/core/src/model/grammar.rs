//! Text form of step distributions, as used in config files and on the command line.
//!
//! ```text
//! dist       := gaussian | rademacher | pareto | directions | discrete | lattice | triangular
//! gaussian   := "gaussian" "(" "d" "=" uint ")"
//! rademacher := "rademacher"
//! pareto     := "pareto" "(" "a" "=" number [ "," "scale" "=" number ] ")"
//! directions := "directions" "[" vector { "," vector } "]"
//! discrete   := "discrete" "[" vector ":" number { "," vector ":" number } "]"
//! lattice    := "lattice" "(" "d" "=" uint ")"          (uniform on ±e_1..±e_d)
//! triangular := "triangular"                            (six steps of length 2)
//! vector     := "(" number { "," number } ")"
//! ```
//!
//! Whitespace is allowed between tokens. Keyword arguments of `pareto` may come
//! in either order; `scale` defaults to 1.

use crate::error::{Error, ParseError, Result};

use super::dist::StepDistribution;

struct Parser<'a> {
    input: &'a str,
    pos: usize,
}

type PResult<T> = std::result::Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn err<T>(&self, pos: usize, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError::new(self.input, pos, msg))
    }

    fn rest(&self) -> &'a str {
        &self.input[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.input.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn expect(&mut self, c: char) -> PResult<()> {
        match self.peek() {
            Some(got) if got == c => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(got) => self.err(self.pos, format!("expected '{c}', found '{got}'")),
            None => self.err(self.pos, format!("expected '{c}', found end of input")),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<(usize, &'a str)> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return self.err(start, "expected a name");
        }
        self.pos += len;
        Ok((start, &self.input[start..start + len]))
    }

    fn number(&mut self) -> PResult<f64> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '.' | '+' | '-')))
            .unwrap_or(self.rest().len());
        let token = &self.input[start..start + len];
        if token.is_empty() {
            return self.err(start, "expected a number");
        }
        match token.parse::<f64>() {
            Ok(x) if x.is_finite() => {
                self.pos += len;
                Ok(x)
            }
            _ => self.err(start, format!("'{token}' is not a finite number")),
        }
    }

    fn uint(&mut self) -> PResult<usize> {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(self.rest().len());
        match self.input[start..start + len].parse::<usize>() {
            Ok(k) if k > 0 => {
                self.pos += len;
                Ok(k)
            }
            _ => self.err(start, "expected a positive integer"),
        }
    }

    fn keyword(&mut self, name: &str) -> PResult<()> {
        let (at, got) = self.ident()?;
        if got != name {
            return self.err(at, format!("expected '{name}', found '{got}'"));
        }
        self.expect('=')
    }

    fn vector(&mut self) -> PResult<Vec<f64>> {
        self.expect('(')?;
        let mut v = vec![self.number()?];
        while self.eat(',') {
            v.push(self.number()?);
        }
        self.expect(')')?;
        Ok(v)
    }

    fn bracketed<T>(&mut self, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        self.expect('[')?;
        let mut items = vec![item(self)?];
        while self.eat(',') {
            items.push(item(self)?);
        }
        self.expect(']')?;
        Ok(items)
    }
}

/// Parses a distribution descriptor. Both syntax errors and invalid parameters
/// carry the column where the offending token starts.
pub fn parse(input: &str) -> Result<StepDistribution> {
    let mut p = Parser { input, pos: 0 };
    let (start, name) = p.ident()?;
    let built = match name {
        "gaussian" => {
            p.expect('(')?;
            p.keyword("d")?;
            let d = p.uint()?;
            p.expect(')')?;
            StepDistribution::gaussian(d)
        }
        "lattice" => {
            p.expect('(')?;
            p.keyword("d")?;
            let d = p.uint()?;
            p.expect(')')?;
            StepDistribution::lattice_basis(d)
        }
        "rademacher" => Ok(StepDistribution::rademacher()),
        "triangular" => Ok(StepDistribution::triangular_lattice()),
        "pareto" => {
            p.expect('(')?;
            let mut a = None;
            let mut scale = None;
            loop {
                let (at, key) = p.ident()?;
                p.expect('=')?;
                let value = p.number()?;
                let slot = match key {
                    "a" => &mut a,
                    "scale" => &mut scale,
                    other => return Err(ParseError::new(input, at, format!("unknown pareto parameter '{other}'")).into()),
                };
                if slot.replace(value).is_some() {
                    return Err(ParseError::new(input, at, format!("'{key}' given twice")).into());
                }
                if !p.eat(',') {
                    break;
                }
            }
            p.expect(')')?;
            let Some(a) = a else {
                return Err(ParseError::new(input, start, "pareto needs a tail index 'a'").into());
            };
            StepDistribution::symmetric_pareto(a, scale.unwrap_or(1.0))
        }
        "directions" => {
            let dirs = p.bracketed(|p| p.vector())?;
            StepDistribution::uniform_directions(dirs)
        }
        "discrete" => {
            let atoms = p.bracketed(|p| {
                let v = p.vector()?;
                p.expect(':')?;
                let prob = p.number()?;
                Ok((v, prob))
            })?;
            StepDistribution::discrete(atoms)
        }
        other => {
            return Err(ParseError::new(
                input,
                start,
                format!(
                    "unknown distribution '{other}' (expected gaussian, rademacher, pareto, directions, discrete, lattice or triangular)"
                ),
            )
            .into())
        }
    };
    p.skip_ws();
    if p.pos < input.len() {
        return Err(ParseError::new(input, p.pos, "unexpected trailing input").into());
    }
    built.map_err(|e| match e {
        Error::InvalidDistribution(msg) => ParseError::new(input, start, msg).into(),
        other => other,
    })
}
