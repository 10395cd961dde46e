//! Structured-text documents: the on-disk dialect shared by model files,
//! scenario files, and tension-problem files.
//!
//! The grammar is deliberately small (see `docs/model-format.md` for the
//! formal version):
//!
//! ```text
//! [section.path]          # dotted section header
//! key = value             # number | "string" | true/false | [v, v, v]
//! # comment to end of line
//! ```
//!
//! Numbers may carry a `deg` or `rad` suffix; `deg` values are converted to
//! radians at scan time so everything downstream is SI. Section order and
//! key order within a section are preserved, which lets a serializer
//! round-trip documents deterministically.

use std::fmt;

use thiserror::Error;

/// Syntax error with the 1-based source position where scanning stopped.
#[derive(Debug, Clone, Error)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    fn new(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ParseError { line, col, msg: msg.into() }
    }
}

/// A scalar or array value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Bool(bool),
    Text(String),
    Array(Vec<Value>),
}

impl Value {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Flattens an array of numbers; `None` if any element is non-numeric.
    pub fn as_numbers(&self) -> Option<Vec<f64>> {
        match self {
            Value::Array(items) => items.iter().map(Value::as_number).collect(),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Number(_) => "number",
            Value::Bool(_) => "boolean",
            Value::Text(_) => "string",
            Value::Array(_) => "array",
        }
    }
}

/// One `key = value` entry with its source line (for diagnostics).
#[derive(Debug, Clone)]
pub struct Entry {
    pub key: String,
    pub value: Value,
    pub line: usize,
}

/// One `[section]` with its entries in file order.
#[derive(Debug, Clone)]
pub struct Section {
    /// Dotted path split at the dots, e.g. `["route", "w1", "segment", "0"]`.
    pub path: Vec<String>,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn path_string(&self) -> String {
        self.path.join(".")
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|e| e.key == key).map(|e| &e.value)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.key.as_str())
    }
}

/// A parsed document: sections in file order.
#[derive(Debug, Clone, Default)]
pub struct Document {
    pub sections: Vec<Section>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Document, ParseError> {
        let mut doc = Document::default();
        for (idx, raw_line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = strip_comment(raw_line);
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('[') {
                let col = raw_line.find('[').unwrap_or(0) + 1;
                let inner = rest.strip_suffix(']').ok_or_else(|| {
                    ParseError::new(lineno, col, "section header missing closing ']'")
                })?;
                let path = parse_path(inner, lineno, col)?;
                if doc.sections.iter().any(|s| s.path == path) {
                    return Err(ParseError::new(
                        lineno,
                        col,
                        format!("duplicate section [{}]", path.join(".")),
                    ));
                }
                doc.sections.push(Section { path, line: lineno, entries: Vec::new() });
            } else {
                let eq = trimmed.find('=').ok_or_else(|| {
                    ParseError::new(lineno, 1, "expected `key = value` or `[section]`")
                })?;
                let key = trimmed[..eq].trim();
                if key.is_empty() || !is_ident(key) {
                    return Err(ParseError::new(
                        lineno,
                        1,
                        format!("invalid key `{key}` (letters, digits, `_`, `-` only)"),
                    ));
                }
                let value_src = trimmed[eq + 1..].trim();
                let col = raw_line.find('=').map(|c| c + 2).unwrap_or(1);
                let value = parse_value(value_src, lineno, col)?;
                let section = doc.sections.last_mut().ok_or_else(|| {
                    ParseError::new(lineno, 1, "key/value outside of any [section]")
                })?;
                if section.entries.iter().any(|e| e.key == key) {
                    return Err(ParseError::new(
                        lineno,
                        1,
                        format!("duplicate key `{}` in [{}]", key, section.path_string()),
                    ));
                }
                section.entries.push(Entry { key: key.to_string(), value, line: lineno });
            }
        }
        Ok(doc)
    }

    pub fn section(&self, path: &str) -> Option<&Section> {
        let parts: Vec<&str> = path.split('.').collect();
        self.sections.iter().find(|s| s.path == parts)
    }

    /// Sections whose path starts with `prefix` followed by exactly one more
    /// component; yields `(component, section)`.
    pub fn children<'a>(
        &'a self,
        prefix: &'a [&'a str],
    ) -> impl Iterator<Item = (&'a str, &'a Section)> + 'a {
        self.sections.iter().filter_map(move |s| {
            if s.path.len() == prefix.len() + 1
                && s.path.iter().zip(prefix).all(|(a, b)| a == b)
            {
                Some((s.path.last().unwrap().as_str(), s))
            } else {
                None
            }
        })
    }

    /// Applies a dotted override `section.path.key = value-literal`.
    /// The section must already exist; the key is replaced or appended.
    pub fn set(&mut self, dotted: &str, value_src: &str) -> Result<(), ParseError> {
        let parts: Vec<&str> = dotted.split('.').collect();
        if parts.len() < 2 {
            return Err(ParseError::new(0, 0, format!("override `{dotted}` needs `section.key`")));
        }
        let (key, sec_path) = parts.split_last().unwrap();
        let value = parse_value(value_src.trim(), 0, 0)?;
        let section = self
            .sections
            .iter_mut()
            .find(|s| s.path == sec_path)
            .ok_or_else(|| {
                ParseError::new(0, 0, format!("override targets unknown section [{}]", sec_path.join(".")))
            })?;
        if let Some(entry) = section.entries.iter_mut().find(|e| e.key == *key) {
            entry.value = value;
        } else {
            section.entries.push(Entry { key: key.to_string(), value, line: 0 });
        }
        Ok(())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{}` on f64 prints the shortest string that round-trips, which
            // keeps serialize → parse lossless.
            Value::Number(x) => write!(f, "{x}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Text(s) => write!(f, "\"{s}\""),
            Value::Array(items) => {
                write!(f, "[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, section) in self.sections.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            writeln!(f, "[{}]", section.path_string())?;
            for entry in &section.entries {
                writeln!(f, "{} = {}", entry.key, entry.value)?;
            }
        }
        Ok(())
    }
}

fn strip_comment(line: &str) -> &str {
    // `#` starts a comment unless inside a quoted string.
    let mut in_string = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_string = !in_string,
            '#' if !in_string => return &line[..i],
            _ => {}
        }
    }
    line
}

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn parse_path(inner: &str, line: usize, col: usize) -> Result<Vec<String>, ParseError> {
    let parts: Vec<String> = inner.split('.').map(|p| p.trim().to_string()).collect();
    if parts.iter().any(|p| !is_ident(p)) {
        return Err(ParseError::new(line, col, format!("invalid section path `{inner}`")));
    }
    Ok(parts)
}

fn parse_value(src: &str, line: usize, col: usize) -> Result<Value, ParseError> {
    if src.is_empty() {
        return Err(ParseError::new(line, col, "missing value"));
    }
    if let Some(rest) = src.strip_prefix('[') {
        let inner = rest.strip_suffix(']').ok_or_else(|| {
            ParseError::new(line, col, "array missing closing `]`")
        })?;
        let mut items = Vec::new();
        let inner = inner.trim();
        if !inner.is_empty() {
            for piece in inner.split(',') {
                items.push(parse_scalar(piece.trim(), line, col)?);
            }
        }
        return Ok(Value::Array(items));
    }
    parse_scalar(src, line, col)
}

fn parse_scalar(src: &str, line: usize, col: usize) -> Result<Value, ParseError> {
    if src == "true" {
        return Ok(Value::Bool(true));
    }
    if src == "false" {
        return Ok(Value::Bool(false));
    }
    if let Some(inner) = src.strip_prefix('"') {
        let inner = inner.strip_suffix('"').ok_or_else(|| {
            ParseError::new(line, col, "string missing closing quote")
        })?;
        if inner.contains('"') {
            return Err(ParseError::new(line, col, "nested quote in string"));
        }
        return Ok(Value::Text(inner.to_string()));
    }
    // Number, optionally with an angle-unit suffix.
    let (num_src, scale) = if let Some(stripped) = src.strip_suffix("deg") {
        (stripped.trim_end(), std::f64::consts::PI / 180.0)
    } else if let Some(stripped) = src.strip_suffix("rad") {
        (stripped.trim_end(), 1.0)
    } else {
        (src, 1.0)
    };
    match num_src.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(Value::Number(x * scale)),
        Ok(_) => Err(ParseError::new(line, col, format!("non-finite number `{src}`"))),
        Err(_) => Err(ParseError::new(line, col, format!("cannot parse value `{src}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_values() {
        let doc = Document::parse(
            "# header comment\n\
             [model]\n\
             name = \"demo\"  # trailing comment\n\
             gravity = [0, 0, -9.81]\n\
             flag = true\n\
             angle = 90 deg\n",
        )
        .unwrap();
        let model = doc.section("model").unwrap();
        assert_eq!(model.get("name").unwrap().as_text(), Some("demo"));
        assert_eq!(
            model.get("gravity").unwrap().as_numbers().unwrap(),
            vec![0.0, 0.0, -9.81]
        );
        assert_eq!(model.get("flag").unwrap().as_bool(), Some(true));
        let angle = model.get("angle").unwrap().as_number().unwrap();
        assert!((angle - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn reports_line_and_column() {
        let err = Document::parse("[model]\nbad line without equals\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = Document::parse("[model]\nx = [1, 2\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.col > 1);
    }

    #[test]
    fn rejects_duplicates() {
        assert!(Document::parse("[a]\n[a]\n").is_err());
        assert!(Document::parse("[a]\nk = 1\nk = 2\n").is_err());
    }

    #[test]
    fn deg_suffix_inside_arrays() {
        let doc = Document::parse("[j]\nlimits = [-55 deg, 55 deg]\n").unwrap();
        let lims = doc.section("j").unwrap().get("limits").unwrap().as_numbers().unwrap();
        assert!((lims[0] + 55.0_f64.to_radians()).abs() < 1e-15);
        assert!((lims[1] - 55.0_f64.to_radians()).abs() < 1e-15);
    }

    #[test]
    fn display_round_trips() {
        let src = "[model]\nname = \"demo\"\ngravity = [0, 0, -9.81]\n\n[link.arm]\nmass = 0.5\n";
        let doc = Document::parse(src).unwrap();
        let printed = doc.to_string();
        let reparsed = Document::parse(&printed).unwrap();
        assert_eq!(doc.sections.len(), reparsed.sections.len());
        for (a, b) in doc.sections.iter().zip(&reparsed.sections) {
            assert_eq!(a.path, b.path);
            for (ea, eb) in a.entries.iter().zip(&b.entries) {
                assert_eq!(ea.key, eb.key);
                assert_eq!(ea.value, eb.value);
            }
        }
    }

    #[test]
    fn overrides_replace_values() {
        let mut doc = Document::parse("[controller]\nkp = 400\n").unwrap();
        doc.set("controller.kp", "100").unwrap();
        assert_eq!(doc.section("controller").unwrap().get("kp").unwrap().as_number(), Some(100.0));
        assert!(doc.set("nosuch.kp", "1").is_err());
    }
}
