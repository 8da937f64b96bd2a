//! Report records and their two renderings.
//!
//! The structured form is one record per line, tab-separated, first field
//! the record tag. Backslash, tab and newline inside a field are written
//! as `\\`, `\t` and `\n`. Lists are a count followed by that many fields.
//!
//! ```text
//! matrix     <text>
//! summand    <index> <text>
//! class      <kind> <index|-> <name> <params> <n2> <part2>... <n3> <part3>...
//! congruent  <true|false>
//! word       <word>
//! item       <item>
//! criterion  <id> <PASS|FAIL> <name> <detail>
//! ```

use std::fmt::Write as _;

use stripemat_core::congruence::{ClassKind, CongruenceClass};
use thiserror::Error;

pub const HEADER: &str = "# stripemat structured 1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    Matrix { text: String },
    Summand { index: usize, text: String },
    Class {
        kind: String,
        index: Option<u8>,
        name: String,
        params: String,
        parts2: Vec<String>,
        parts3: Vec<String>,
    },
    Congruent(bool),
    Word(String),
    Item(String),
    Criterion { id: u8, pass: bool, name: String, detail: String },
}

impl From<&CongruenceClass> for Record {
    fn from(c: &CongruenceClass) -> Self {
        Record::Class {
            kind: c.kind.to_string(),
            index: match c.kind {
                ClassKind::ListStar(k) => Some(k),
                _ => None,
            },
            name: c.name.clone(),
            params: c.params.clone(),
            parts2: c.parts2.iter().map(|p| p.to_string()).collect(),
            parts3: c.parts3.iter().map(|p| p.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("structured report line {line}: {msg}")]
pub struct ReportError {
    pub line: usize,
    pub msg: String,
}

/// Human-readable rendering.
pub fn render_text(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        match r {
            Record::Matrix { text } => out.push_str(text),
            Record::Summand { index, text } => {
                let _ = writeln!(out, "# summand {index}");
                out.push_str(text);
            }
            Record::Class { kind, name, params, .. } => {
                let _ = write!(out, "{kind} {name}");
                if !params.is_empty() {
                    let _ = write!(out, " {params}");
                }
                out.push('\n');
            }
            Record::Congruent(b) => {
                let _ = writeln!(out, "congruent: {b}");
            }
            Record::Word(w) | Record::Item(w) => {
                let _ = writeln!(out, "{w}");
            }
            Record::Criterion { id, pass, name, detail } => {
                let _ = writeln!(out, "criterion {id:>2} {} {name}: {detail}", if *pass { "PASS" } else { "FAIL" });
            }
        }
    }
    out
}

fn escape(s: &str) -> String {
    let mut o = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => o.push_str("\\\\"),
            '\t' => o.push_str("\\t"),
            '\n' => o.push_str("\\n"),
            c => o.push(c),
        }
    }
    o
}

fn unescape(s: &str) -> Result<String, String> {
    let mut o = String::with_capacity(s.len());
    let mut it = s.chars();
    while let Some(c) = it.next() {
        if c != '\\' {
            o.push(c);
            continue;
        }
        match it.next() {
            Some('\\') => o.push('\\'),
            Some('t') => o.push('\t'),
            Some('n') => o.push('\n'),
            other => return Err(format!("bad escape \\{}", other.map_or(String::new(), String::from))),
        }
    }
    Ok(o)
}

fn push_list(f: &mut Vec<String>, xs: &[String]) {
    f.push(xs.len().to_string());
    f.extend(xs.iter().cloned());
}

/// Machine-readable rendering, starting with [`HEADER`].
pub fn render_structured(records: &[Record]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in records {
        let f: Vec<String> = match r {
            Record::Matrix { text } => vec!["matrix".into(), text.clone()],
            Record::Summand { index, text } => vec!["summand".into(), index.to_string(), text.clone()],
            Record::Class { kind, index, name, params, parts2, parts3 } => {
                let mut f = vec![
                    "class".into(),
                    kind.clone(),
                    index.map_or("-".into(), |k| k.to_string()),
                    name.clone(),
                    params.clone(),
                ];
                push_list(&mut f, parts2);
                push_list(&mut f, parts3);
                f
            }
            Record::Congruent(b) => vec!["congruent".into(), b.to_string()],
            Record::Word(w) => vec!["word".into(), w.clone()],
            Record::Item(w) => vec!["item".into(), w.clone()],
            Record::Criterion { id, pass, name, detail } => vec![
                "criterion".into(),
                id.to_string(),
                if *pass { "PASS" } else { "FAIL" }.into(),
                name.clone(),
                detail.clone(),
            ],
        };
        let f: Vec<String> = f.iter().map(|x| escape(x)).collect();
        out.push_str(&f.join("\t"));
        out.push('\n');
    }
    out
}

struct Fields {
    it: std::vec::IntoIter<String>,
    line: usize,
}

impl Fields {
    fn err(&self, msg: impl Into<String>) -> ReportError {
        ReportError { line: self.line, msg: msg.into() }
    }

    fn next(&mut self) -> Result<String, ReportError> {
        self.it.next().ok_or_else(|| self.err("missing field"))
    }

    fn num<T: std::str::FromStr>(&mut self) -> Result<T, ReportError> {
        let s = self.next()?;
        s.parse().map_err(|_| self.err(format!("bad number {s:?}")))
    }

    fn list(&mut self) -> Result<Vec<String>, ReportError> {
        let n: usize = self.num()?;
        (0..n).map(|_| self.next()).collect()
    }

    fn end(mut self) -> Result<(), ReportError> {
        match self.it.next() {
            None => Ok(()),
            Some(x) => Err(self.err(format!("trailing field {x:?}"))),
        }
    }
}

/// Reads back [`render_structured`] output. Lines starting with `#` and
/// blank lines are skipped.
pub fn parse_structured(s: &str) -> Result<Vec<Record>, ReportError> {
    let mut out = Vec::new();
    for (k, line) in s.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let raw: Result<Vec<String>, String> = line.split('\t').map(unescape).collect();
        let raw = raw.map_err(|msg| ReportError { line: k + 1, msg })?;
        let mut f = Fields { it: raw.into_iter(), line: k + 1 };
        let tag = f.next()?;
        let r = match tag.as_str() {
            "matrix" => Record::Matrix { text: f.next()? },
            "summand" => Record::Summand { index: f.num()?, text: f.next()? },
            "class" => {
                let kind = f.next()?;
                let index = match f.next()?.as_str() {
                    "-" => None,
                    x => Some(x.parse().map_err(|_| f.err(format!("bad index {x:?}")))?),
                };
                Record::Class { kind, index, name: f.next()?, params: f.next()?, parts2: f.list()?, parts3: f.list()? }
            }
            "congruent" => Record::Congruent(f.num()?),
            "word" => Record::Word(f.next()?),
            "item" => Record::Item(f.next()?),
            "criterion" => {
                let id = f.num()?;
                let pass = match f.next()?.as_str() {
                    "PASS" => true,
                    "FAIL" => false,
                    x => return Err(f.err(format!("bad verdict {x:?}"))),
                };
                Record::Criterion { id, pass, name: f.next()?, detail: f.next()? }
            }
            x => return Err(f.err(format!("unknown record {x:?}"))),
        };
        f.end()?;
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Record> {
        vec![
            Record::Matrix { text: "variant integral\nrow S+0 1\n".into() },
            Record::Summand { index: 3, text: "a\tb\\c\n".into() },
            Record::Class {
                kind: "liststar".into(),
                index: Some(17),
                name: "List*(17) x".into(),
                params: String::new(),
                parts2: vec!["(v.eta2.w)_0^0{v=1,w=1}".into()],
                parts3: vec![],
            },
            Record::Class {
                kind: "moore".into(),
                index: None,
                name: "M".into(),
                params: "p=3".into(),
                parts2: vec![],
                parts3: vec!["e0 - f0".into(), "f0".into()],
            },
            Record::Congruent(true),
            Record::Word("e0 - f1 ~ ft1".into()),
            Record::Item("C_eta^{n+2}".into()),
            Record::Criterion { id: 4, pass: false, name: "catalog".into(), detail: "36 split".into() },
        ]
    }

    #[test]
    fn structured_round_trip() {
        let r = sample();
        let s = render_structured(&r);
        assert!(s.starts_with(HEADER));
        assert_eq!(s.lines().count(), r.len() + 1);
        assert_eq!(parse_structured(&s).unwrap(), r);
    }

    #[test]
    fn structured_errors() {
        assert_eq!(parse_structured("bogus\tx").unwrap_err().line, 1);
        assert!(parse_structured("# h\ncongruent\tmaybe").is_err());
        assert!(parse_structured("word\ta\tb").is_err());
        assert!(parse_structured("word\ta\\q").is_err());
        assert!(parse_structured("class\tk\t-\tn\tp\t2\tx").is_err());
    }

    #[test]
    fn text_lines() {
        let t = render_text(&[Record::Congruent(true), Record::Word("e0".into())]);
        assert_eq!(t, "congruent: true\ne0\n");
    }
}
