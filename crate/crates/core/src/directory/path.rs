//! Path expressions over JSON documents, a small JSONPath subset.
//!
//! ```text
//! path     := "$" segment*
//! segment  := "." name | ".*" | "[" selector "]"
//! selector := "*" | integer | quoted | "?(" filter ")"
//! filter   := "@" rel* (("==" | "!=") literal)?
//! rel      := "." name | "[" quoted "]" | "[" integer "]"
//! literal  := quoted | number | "true" | "false" | "null"
//! quoted   := "'" chars "'" | '"' chars '"'
//! name     := [A-Za-z0-9_@-]+
//! ```
//!
//! A filter applied to an array keeps the matching elements; applied to an
//! object it keeps the object itself when it matches. A filter without a
//! comparison tests for existence.

use std::fmt;

use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed expression at offset {offset}: {reason}")]
pub struct MalformedExpression {
    pub offset: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Field(String),
    Index(i64),
    Wildcard,
    Filter(Filter),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    pub path: Vec<Step>,
    pub test: Option<(CmpOp, Value)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathExpr {
    source: String,
    steps: Vec<Step>,
}

impl fmt::Display for PathExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl PathExpr {
    pub fn parse(src: &str) -> Result<Self, MalformedExpression> {
        let mut p = Parser { src: src.as_bytes(), pos: 0 };
        p.skip_ws();
        p.expect(b'$')?;
        let mut steps = Vec::new();
        loop {
            p.skip_ws();
            match p.peek() {
                None => break,
                Some(b'.') => {
                    p.pos += 1;
                    if p.peek() == Some(b'*') {
                        p.pos += 1;
                        steps.push(Step::Wildcard);
                    } else {
                        steps.push(Step::Field(p.name()?));
                    }
                }
                Some(b'[') => {
                    p.pos += 1;
                    p.skip_ws();
                    let step = match p.peek() {
                        Some(b'*') => {
                            p.pos += 1;
                            Step::Wildcard
                        }
                        Some(b'?') => {
                            p.pos += 1;
                            p.expect(b'(')?;
                            let f = p.filter()?;
                            p.skip_ws();
                            p.expect(b')')?;
                            Step::Filter(f)
                        }
                        Some(b'\'' | b'"') => Step::Field(p.quoted()?),
                        _ => Step::Index(p.integer()?),
                    };
                    p.skip_ws();
                    p.expect(b']')?;
                    steps.push(step);
                }
                Some(_) => return Err(p.err("expected '.' or '['")),
            }
        }
        Ok(Self {
            source: src.to_string(),
            steps,
        })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// Nodes selected in `doc`, in document order.
    pub fn select<'a>(&self, doc: &'a Value) -> Vec<&'a Value> {
        let mut nodes = vec![doc];
        for step in &self.steps {
            nodes = apply(step, nodes);
        }
        nodes
    }

    pub fn matches(&self, doc: &Value) -> bool {
        !self.select(doc).is_empty()
    }
}

fn apply<'a>(step: &Step, nodes: Vec<&'a Value>) -> Vec<&'a Value> {
    let mut out = Vec::new();
    for node in nodes {
        match step {
            Step::Field(name) => out.extend(node.get(name.as_str())),
            Step::Index(i) => {
                if let Value::Array(items) = node {
                    let idx = if *i < 0 { items.len() as i64 + i } else { *i };
                    if idx >= 0 {
                        out.extend(items.get(idx as usize));
                    }
                }
            }
            Step::Wildcard => match node {
                Value::Array(items) => out.extend(items.iter()),
                Value::Object(map) => out.extend(map.values()),
                _ => {}
            },
            Step::Filter(f) => match node {
                Value::Array(items) => out.extend(items.iter().filter(|v| f.test(v))),
                other if f.test(other) => out.push(other),
                _ => {}
            },
        }
    }
    out
}

impl Filter {
    fn test(&self, node: &Value) -> bool {
        let mut cur = vec![node];
        for step in &self.path {
            cur = apply(step, cur);
        }
        match &self.test {
            None => !cur.is_empty(),
            Some((CmpOp::Eq, lit)) => cur.iter().any(|v| json_eq(v, lit)),
            Some((CmpOp::Ne, lit)) => cur.first().is_some_and(|v| !json_eq(v, lit)),
        }
    }
}

fn json_eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        _ => a == b,
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, reason: &str) -> MalformedExpression {
        MalformedExpression {
            offset: self.pos,
            reason: reason.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t')) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), MalformedExpression> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn name(&mut self) -> Result<String, MalformedExpression> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || matches!(c, b'_' | b'-' | b'@')) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a field name"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn quoted(&mut self) -> Result<String, MalformedExpression> {
        let q = self.peek().ok_or_else(|| self.err("expected a quote"))?;
        self.pos += 1;
        let mut out = Vec::new();
        loop {
            match self.peek() {
                None => return Err(self.err("unterminated string")),
                Some(b'\\') => {
                    self.pos += 1;
                    let c = self.peek().ok_or_else(|| self.err("dangling escape"))?;
                    out.push(c);
                    self.pos += 1;
                }
                Some(c) if c == q => {
                    self.pos += 1;
                    break;
                }
                Some(c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
        String::from_utf8(out).map_err(|_| self.err("invalid UTF-8 in string"))
    }

    fn integer(&mut self) -> Result<i64, MalformedExpression> {
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| MalformedExpression {
                offset: start,
                reason: "expected an index, '*', a quoted name or a filter".into(),
            })
    }

    fn filter(&mut self) -> Result<Filter, MalformedExpression> {
        self.skip_ws();
        self.expect(b'@')?;
        let mut path = Vec::new();
        loop {
            match self.peek() {
                Some(b'.') => {
                    self.pos += 1;
                    path.push(Step::Field(self.name()?));
                }
                Some(b'[') => {
                    self.pos += 1;
                    self.skip_ws();
                    let step = match self.peek() {
                        Some(b'\'' | b'"') => Step::Field(self.quoted()?),
                        _ => Step::Index(self.integer()?),
                    };
                    self.skip_ws();
                    self.expect(b']')?;
                    path.push(step);
                }
                _ => break,
            }
        }
        self.skip_ws();
        let op = match (self.peek(), self.src.get(self.pos + 1)) {
            (Some(b'='), Some(b'=')) => Some(CmpOp::Eq),
            (Some(b'!'), Some(b'=')) => Some(CmpOp::Ne),
            (Some(b')'), _) => None,
            _ => return Err(self.err("expected '==', '!=' or ')'")),
        };
        let test = match op {
            None => None,
            Some(op) => {
                self.pos += 2;
                self.skip_ws();
                Some((op, self.literal()?))
            }
        };
        Ok(Filter { path, test })
    }

    fn literal(&mut self) -> Result<Value, MalformedExpression> {
        match self.peek() {
            Some(b'\'' | b'"') => Ok(Value::String(self.quoted()?)),
            Some(c) if c == b'-' || c.is_ascii_digit() => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_digit() || matches!(c, b'-' | b'+' | b'.' | b'e' | b'E')) {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                serde_json::from_str::<serde_json::Number>(text)
                    .map(Value::Number)
                    .map_err(|_| MalformedExpression {
                        offset: start,
                        reason: format!("bad number {text:?}"),
                    })
            }
            _ => {
                for (word, v) in [("true", Value::Bool(true)), ("false", Value::Bool(false)), ("null", Value::Null)] {
                    if self.src[self.pos..].starts_with(word.as_bytes()) {
                        self.pos += word.len();
                        return Ok(v);
                    }
                }
                Err(self.err("expected a literal"))
            }
        }
    }
}
