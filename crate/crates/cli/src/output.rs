use std::io::Write;

use serde_json::Value;

use crate::args::{Format, RunConfig};
use crate::commands::CliResult;

/// A CSV table with `#` comment lines ahead of the header.
pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    comments: Vec<String>,
}

impl Csv {
    pub fn new<const N: usize>(header: [&str; N]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
            comments: Vec::new(),
        }
    }

    pub fn row<const N: usize>(&mut self, cells: [String; N]) {
        debug_assert_eq!(N, self.header.len());
        self.rows.push(cells.into_iter().map(escape).collect());
    }

    pub fn comment(&mut self, line: String) {
        self.comments.push(line);
    }

    fn render(&self, config: &str) -> String {
        let mut out = format!("# config: {config}\n");
        for c in &self.comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

fn escape(cell: String) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell
    }
}

/// Writes `payload` (JSON) or `csv` to `--out` or stdout. Both carry the
/// full run configuration.
pub fn write_output(run: &RunConfig, default: Format, payload: Value, csv: &Csv) -> CliResult<()> {
    let config = serde_json::to_value(run)?;
    let text = match run.format.unwrap_or(default) {
        Format::Json => {
            let mut doc = match payload {
                Value::Object(map) => map,
                other => {
                    let mut map = serde_json::Map::new();
                    map.insert("result".into(), other);
                    map
                }
            };
            doc.insert("config".into(), config);
            serde_json::to_string_pretty(&Value::Object(doc))? + "\n"
        }
        Format::Csv => csv.render(&serde_json::to_string(&config)?),
    };
    match &run.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
