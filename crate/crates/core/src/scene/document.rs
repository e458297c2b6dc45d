//! Line-oriented section grammar underlying scene files.
//!
//! ```text
//! # comment
//! [kind optional-name]
//! key = value   # trailing comment
//! ```

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Section {
    pub kind: String,
    pub name: Option<String>,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn header(&self) -> String {
        match &self.name {
            Some(n) => format!("{} {n}", self.kind),
            None => self.kind.clone(),
        }
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    /// Replace or append `key`.
    pub fn set(&mut self, key: &str, value: &str) {
        match self.entries.iter_mut().find(|e| e.key == key) {
            Some(e) => e.value = value.to_string(),
            None => self.entries.push(Entry { key: key.into(), value: value.into(), line: 0 }),
        }
    }
}

/// A problem found in scene text: 1-based line, offending field, reason.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub field: String,
    pub reason: String,
}

impl Diagnostic {
    pub fn new(line: usize, field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { line, field: field.into(), reason: reason.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "line {}: {}", self.line, self.reason)
        } else {
            write!(f, "line {}: {}: {}", self.line, self.field, self.reason)
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Document {
    pub sections: Vec<Section>,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, Vec<Diagnostic>> {
        let mut doc = Document::default();
        let mut errors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(inner) = content.strip_prefix('[') {
                let Some(inner) = inner.strip_suffix(']') else {
                    errors.push(Diagnostic::new(line, "", "section header is missing `]`"));
                    continue;
                };
                let words: Vec<&str> = inner.split_whitespace().collect();
                match words.as_slice() {
                    [kind] if is_identifier(kind) => {
                        doc.sections.push(Section { kind: kind.to_string(), name: None, line, entries: vec![] })
                    }
                    [kind, name] if is_identifier(kind) && is_identifier(name) => doc.sections.push(Section {
                        kind: kind.to_string(),
                        name: Some(name.to_string()),
                        line,
                        entries: vec![],
                    }),
                    _ => errors.push(Diagnostic::new(line, "", format!("malformed section header `[{inner}]`"))),
                }
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                errors.push(Diagnostic::new(line, "", format!("expected `key = value`, found `{content}`")));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if !is_identifier(key) {
                errors.push(Diagnostic::new(line, key, "malformed key"));
                continue;
            }
            let Some(section) = doc.sections.last_mut() else {
                errors.push(Diagnostic::new(line, key, "entry before the first section"));
                continue;
            };
            if let Some(prev) = section.get(key) {
                errors.push(Diagnostic::new(line, key, format!("duplicate key (first set on line {})", prev.line)));
                continue;
            }
            section.entries.push(Entry { key: key.into(), value: value.into(), line });
        }
        if errors.is_empty() {
            Ok(doc)
        } else {
            Err(errors)
        }
    }

    pub fn section_mut(&mut self, header: &str) -> Option<&mut Section> {
        self.sections.iter_mut().find(|s| s.header() == header)
    }
}

impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            writeln!(f, "[{}]", s.header())?;
            for e in &s.entries {
                writeln!(f, "{} = {}", e.key, e.value)?;
            }
        }
        Ok(())
    }
}
