//! A small reader for the JSON / Python-literal hybrid that models emit in
//! answers: lists, dicts, single- or double-quoted strings, numbers,
//! `True`/`False`/`None` and `#` line comments.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Bool(bool),
    Number(f64),
    Str(String),
    List(Vec<Value>),
    /// Entries in source order; duplicate keys are kept so callers can
    /// reject them.
    Dict(Vec<(String, Value)>),
}

impl Value {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Bool(_) => "bool",
            Value::Number(_) => "number",
            Value::Str(_) => "string",
            Value::List(_) => "list",
            Value::Dict(_) => "dict",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("None"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Number(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "'{s}'"),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
            Value::Dict(entries) => {
                f.write_str("{")?;
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "'{k}': {v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at byte {offset}")]
pub struct SyntaxError {
    pub offset: usize,
    pub message: String,
}

pub fn parse(text: &str) -> Result<Value, SyntaxError> {
    let mut reader = Reader { src: text.as_bytes(), text, pos: 0, depth: 0 };
    let value = reader.value()?;
    reader.skip_trivia();
    if reader.pos != reader.src.len() {
        return Err(reader.error("trailing characters after value"));
    }
    Ok(value)
}

const MAX_DEPTH: usize = 64;

struct Reader<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    depth: usize,
}

impl Reader<'_> {
    fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError { offset: self.pos, message: message.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            match c {
                b' ' | b'\t' | b'\n' | b'\r' => self.pos += 1,
                b'#' => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn value(&mut self) -> Result<Value, SyntaxError> {
        self.skip_trivia();
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'[') => self.nested(|r| r.list()),
            Some(b'{') => self.nested(|r| r.dict()),
            Some(b'"') | Some(b'\'') => self.string().map(Value::Str),
            Some(c) if c == b'-' || c == b'+' || c == b'.' || c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.word(),
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn nested(&mut self, f: impl FnOnce(&mut Self) -> Result<Value, SyntaxError>) -> Result<Value, SyntaxError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("nesting too deep"));
        }
        let v = f(self);
        self.depth -= 1;
        v
    }

    /// Parses a comma-separated sequence up to `close`, allowing one
    /// trailing comma.
    fn sequence(
        &mut self,
        close: u8,
        mut item: impl FnMut(&mut Self) -> Result<(), SyntaxError>,
    ) -> Result<(), SyntaxError> {
        self.pos += 1;
        self.skip_trivia();
        if self.peek() == Some(close) {
            self.pos += 1;
            return Ok(());
        }
        loop {
            item(self)?;
            self.skip_trivia();
            match self.peek() {
                Some(b',') => {
                    self.pos += 1;
                    self.skip_trivia();
                    if self.peek() == Some(close) {
                        self.pos += 1;
                        return Ok(());
                    }
                }
                Some(c) if c == close => {
                    self.pos += 1;
                    return Ok(());
                }
                None => return Err(self.error("unterminated container")),
                Some(_) => return Err(self.error("expected `,` or closing bracket")),
            }
        }
    }

    fn list(&mut self) -> Result<Value, SyntaxError> {
        let mut items = Vec::new();
        self.sequence(b']', |r| {
            items.push(r.value()?);
            Ok(())
        })?;
        Ok(Value::List(items))
    }

    fn dict(&mut self) -> Result<Value, SyntaxError> {
        let mut entries = Vec::new();
        self.sequence(b'}', |r| {
            r.skip_trivia();
            let key = match r.peek() {
                Some(b'"') | Some(b'\'') => r.string()?,
                _ => return Err(r.error("dict key must be a string")),
            };
            r.skip_trivia();
            if r.peek() != Some(b':') {
                return Err(r.error("expected `:` after dict key"));
            }
            r.pos += 1;
            let value = r.value()?;
            entries.push((key, value));
            Ok(())
        })?;
        Ok(Value::Dict(entries))
    }

    fn string(&mut self) -> Result<String, SyntaxError> {
        let quote = self.src[self.pos];
        self.pos += 1;
        let mut out = String::new();
        loop {
            let rest = &self.text[self.pos..];
            let Some(c) = rest.chars().next() else {
                return Err(self.error("unterminated string"));
            };
            self.pos += c.len_utf8();
            match c {
                '\\' => {
                    let Some(esc) = self.text[self.pos..].chars().next() else {
                        return Err(self.error("unterminated escape"));
                    };
                    self.pos += esc.len_utf8();
                    match esc {
                        'n' => out.push('\n'),
                        't' => out.push('\t'),
                        'r' => out.push('\r'),
                        '\\' | '\'' | '"' | '/' => out.push(esc),
                        'u' => {
                            let hex = self.text.get(self.pos..self.pos + 4).ok_or_else(|| self.error("short \\u escape"))?;
                            let code = u32::from_str_radix(hex, 16).map_err(|_| self.error("bad \\u escape"))?;
                            out.push(char::from_u32(code).unwrap_or('\u{fffd}'));
                            self.pos += 4;
                        }
                        _ => return Err(self.error("unknown escape")),
                    }
                }
                '\n' => return Err(self.error("newline in string")),
                c if c as u32 == quote as u32 => return Ok(out),
                c => out.push(c),
            }
        }
    }

    fn number(&mut self) -> Result<Value, SyntaxError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || matches!(c, b'-' | b'+' | b'.' | b'e' | b'E') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let lexeme = &self.text[start..self.pos];
        lexeme
            .parse::<f64>()
            .map(Value::Number)
            .map_err(|_| SyntaxError { offset: start, message: format!("malformed number `{lexeme}`") })
    }

    fn word(&mut self) -> Result<Value, SyntaxError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        match &self.text[start..self.pos] {
            "true" | "True" => Ok(Value::Bool(true)),
            "false" | "False" => Ok(Value::Bool(false)),
            "null" | "None" => Ok(Value::Null),
            w => Err(SyntaxError { offset: start, message: format!("unexpected word `{w}`") }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_quote_styles() {
        let v = parse(r#"{"step": 1, 'actions': {'R1': ['Move', "banana"]}}"#).unwrap();
        let Value::Dict(entries) = v else { panic!() };
        assert_eq!(entries[0], ("step".into(), Value::Number(1.0)));
        assert_eq!(entries[1].0, "actions");
    }

    #[test]
    fn comments_and_trailing_commas() {
        let v = parse("[1, 2, # more\n 3,]").unwrap();
        assert_eq!(v, Value::List(vec![Value::Number(1.0), Value::Number(2.0), Value::Number(3.0)]));
    }

    #[test]
    fn apostrophe_inside_double_quotes() {
        assert_eq!(parse(r#""it's""#).unwrap(), Value::Str("it's".into()));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "[1,", "[1 2]", "{'a' 1}", "{1: 2}", "'open", "[1] x", "foo", "[,]"] {
            assert!(parse(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let text = "[".repeat(10_000);
        assert!(parse(&text).is_err());
    }

    #[test]
    fn python_constants() {
        assert_eq!(parse("[True, None, false]").unwrap(), Value::List(vec![Value::Bool(true), Value::Null, Value::Bool(false)]));
    }
}
