//! Parser for comma-separated lists of `xi^2` and `(xi-xj)^2`.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::QuadraticForm;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at position {pos}: {msg}")]
pub struct ParseError {
    /// Character offset into the input.
    pub pos: usize,
    pub msg: String,
}

enum Gen {
    Square(usize),
    Diff(usize, usize),
}

struct Cursor<'a> {
    chars: Vec<(usize, char)>,
    i: usize,
    src: &'a str,
}

impl Cursor<'_> {
    fn pos(&self) -> usize {
        self.chars.get(self.i).map_or(self.src.chars().count(), |c| c.0)
    }

    fn err<T>(&self, msg: &str) -> Result<T, ParseError> {
        Err(ParseError { pos: self.pos(), msg: msg.to_string() })
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.i).is_some_and(|c| c.1.is_whitespace()) {
            self.i += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).map(|c| c.1)
    }

    fn expect(&mut self, want: char) -> Result<(), ParseError> {
        self.skip_ws();
        if self.peek() == Some(want) {
            self.i += 1;
            Ok(())
        } else {
            self.err(&alloc::format!("expected '{want}'"))
        }
    }

    fn minus(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        match self.peek() {
            Some('-') | Some('\u{2212}') => {
                self.i += 1;
                Ok(())
            }
            _ => self.err("expected '-'"),
        }
    }

    fn var(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        if self.peek() != Some('x') {
            return self.err("expected a variable x<index>");
        }
        self.i += 1;
        let start = self.pos();
        let mut n: usize = 0;
        let mut digits = 0;
        while let Some(d) = self.peek().and_then(|c| c.to_digit(10)) {
            n = n.checked_mul(10).and_then(|n| n.checked_add(d as usize)).ok_or(ParseError {
                pos: start,
                msg: "index too large".to_string(),
            })?;
            digits += 1;
            self.i += 1;
        }
        if digits == 0 || n == 0 {
            return Err(ParseError { pos: start, msg: "variable indices start at 1".to_string() });
        }
        Ok(n - 1)
    }

    fn generator(&mut self) -> Result<Gen, ParseError> {
        self.skip_ws();
        let g = if self.peek() == Some('(') {
            self.i += 1;
            let a = self.var()?;
            self.minus()?;
            let b = self.var()?;
            if a == b {
                return self.err("difference of a variable with itself");
            }
            self.expect(')')?;
            Gen::Diff(a, b)
        } else {
            Gen::Square(self.var()?)
        };
        self.expect('^')?;
        self.expect('2')?;
        Ok(g)
    }
}

/// Parses the generators of a cone. The dimension is the largest index used.
pub fn parse_forms(cone: &str) -> Result<Vec<QuadraticForm>, ParseError> {
    let mut cur = Cursor { chars: cone.char_indices().collect(), i: 0, src: cone };
    let mut gens = Vec::new();
    loop {
        gens.push(cur.generator()?);
        cur.skip_ws();
        match cur.peek() {
            None => break,
            Some(',') => cur.i += 1,
            Some(_) => return cur.err("expected ',' or end of input"),
        }
    }
    let k = gens
        .iter()
        .map(|g| match *g {
            Gen::Square(a) => a + 1,
            Gen::Diff(a, b) => a.max(b) + 1,
        })
        .max()
        .unwrap_or(0);
    Ok(gens
        .into_iter()
        .map(|g| {
            let mut m = vec![vec![0i64; k]; k];
            match g {
                Gen::Square(a) => m[a][a] = 1,
                Gen::Diff(a, b) => {
                    m[a][a] = 1;
                    m[b][b] = 1;
                    m[a][b] = -1;
                    m[b][a] = -1;
                }
            }
            QuadraticForm { k, matrix: m }
        })
        .collect())
}
