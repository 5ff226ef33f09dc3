//! Report printing: `key=value` lines for scripts, aligned columns for people.

use std::fmt::Display;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Kv,
}

/// An ordered list of named result fields.
#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Report {
    fields: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(&mut self, key: &str, value: impl Display) -> &mut Self {
        let v = value.to_string().replace('\\', "\\\\").replace('\n', "\\n");
        self.fields.push((key.to_string(), v));
        self
    }

    /// Appends every `key=value` line of `kv`.
    pub fn extend_kv(&mut self, kv: &str) -> &mut Self {
        for line in kv.lines() {
            if let Some((k, v)) = line.split_once('=') {
                self.field(k, v);
            }
        }
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Kv => self.fields.iter().map(|(k, v)| format!("{k}={v}\n")).collect(),
            Format::Text => {
                let w = self.fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                self.fields.iter().map(|(k, v)| format!("{k:<w$}  {v}\n")).collect()
            }
        }
    }

    pub fn print(&self, format: Format) {
        let mut out = std::io::stdout().lock();
        // A closed pipe is the reader's choice; nothing useful to report.
        let _ = out.write_all(self.render(format).as_bytes());
    }
}

/// Parses `key=value` lines, skipping blanks and `#` comments.
pub fn parse_kv(text: &str) -> Vec<(String, String)> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_and_text_layouts() {
        let mut r = Report::new();
        r.field("dm", 19).field("vector", "1,0");
        assert_eq!(r.render(Format::Kv), "dm=19\nvector=1,0\n");
        assert_eq!(r.render(Format::Text), "dm      19\nvector  1,0\n");
    }

    #[test]
    fn values_stay_on_one_line() {
        let mut r = Report::new();
        r.field("q", "a\nb");
        assert_eq!(r.render(Format::Kv), "q=a\\nb\n");
    }

    #[test]
    fn parse_round_trip() {
        let mut r = Report::new();
        r.field("root", "ab12").field("signature", "ff");
        let parsed = parse_kv(&r.render(Format::Kv));
        assert_eq!(parsed, vec![("root".into(), "ab12".into()), ("signature".into(), "ff".into())]);
    }
}
