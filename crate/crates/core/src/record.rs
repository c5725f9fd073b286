//! Comma-separated record reading and writing.
//!
//! Quoted fields follow RFC 4180 (`""` escapes a quote, quoted fields may
//! span lines). Unquoted fields may also contain a bracketed list such as
//! `[0.2,0.8]`: commas between `[` and `]` do not split the field. Brackets
//! never span lines.

use alloc::string::String;
use alloc::vec::Vec;

/// One record together with the 1-based line it starts on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub line: usize,
    pub fields: Vec<String>,
}

/// Split `text` into records. Blank lines are skipped.
pub fn read_records(text: &str) -> Vec<Record> {
    let mut records = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1usize;

    while chars.peek().is_some() {
        let start_line = line;
        let mut fields = Vec::new();
        let mut field = String::new();
        let mut in_quotes = false;
        let mut depth = 0usize;
        let mut saw_content = false;

        while let Some(c) = chars.next() {
            if in_quotes {
                if c == '"' {
                    if chars.peek() == Some(&'"') {
                        chars.next();
                        field.push('"');
                    } else {
                        in_quotes = false;
                    }
                } else {
                    if c == '\n' {
                        line += 1;
                    }
                    field.push(c);
                }
                continue;
            }
            match c {
                '\r' if chars.peek() == Some(&'\n') => {}
                '\n' => {
                    line += 1;
                    break;
                }
                '"' if field.is_empty() && depth == 0 => {
                    in_quotes = true;
                    saw_content = true;
                }
                '[' => {
                    depth += 1;
                    field.push(c);
                    saw_content = true;
                }
                ']' => {
                    depth = depth.saturating_sub(1);
                    field.push(c);
                }
                ',' if depth == 0 => {
                    fields.push(core::mem::take(&mut field));
                    saw_content = true;
                }
                _ => {
                    if !c.is_whitespace() {
                        saw_content = true;
                    }
                    field.push(c);
                }
            }
        }

        if saw_content {
            fields.push(field);
            records.push(Record {
                line: start_line,
                fields,
            });
        }
    }
    records
}

/// Quote a field if it would not survive [`read_records`] unquoted.
pub fn escape_field(field: &str) -> String {
    // brackets group commas when unquoted, so an unbalanced one would swallow the rest of the line
    let needs_quotes = field.contains([',', '"', '\n', '\r', '[', ']'])
        || field.starts_with(char::is_whitespace)
        || field.ends_with(char::is_whitespace);
    if !needs_quotes {
        return String::from(field);
    }
    let mut out = String::with_capacity(field.len() + 2);
    out.push('"');
    for c in field.chars() {
        if c == '"' {
            out.push('"');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Format fields as one line, without the trailing newline.
pub fn format_record<S: AsRef<str>>(fields: &[S]) -> String {
    let mut out = String::new();
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&escape_field(f.as_ref()));
    }
    out
}
