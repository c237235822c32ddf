//! Two-column data files with `# key=value` metadata, and atomic writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::CliError;

/// 17 significant digits; parsing and re-formatting gives the same bytes.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: [String; 2],
    pub rows: Vec<[f64; 2]>,
}

impl Table {
    pub fn new(meta: Vec<(String, String)>, x: &str, y: &str, rows: Vec<[f64; 2]>) -> Self {
        Self { meta, columns: [x.into(), y.into()], rows }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.meta {
            // values never span lines
            s.push_str(&format!("# {k}={}\n", v.replace('\n', " ")));
        }
        s.push_str(&format!("{},{}\n", self.columns[0], self.columns[1]));
        for r in &self.rows {
            s.push_str(&format!("{},{}\n", fmt_f64(r[0]), fmt_f64(r[1])));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, CliError> {
        let bad = |n: usize, what: &str| CliError::Usage(format!("line {}: {what}", n + 1));
        let mut meta = Vec::new();
        let mut columns = None;
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if let Some(kv) = line.strip_prefix("# ") {
                let (k, v) = kv.split_once('=').ok_or_else(|| bad(n, "metadata line without `=`"))?;
                meta.push((k.to_string(), v.to_string()));
            } else if columns.is_none() {
                let (x, y) = line.split_once(',').ok_or_else(|| bad(n, "expected a column header"))?;
                columns = Some([x.to_string(), y.to_string()]);
            } else {
                let (x, y) = line.split_once(',').ok_or_else(|| bad(n, "expected two values"))?;
                let p = |s: &str| s.parse::<f64>().map_err(|_| bad(n, &format!("not a number: `{s}`")));
                rows.push([p(x)?, p(y)?]);
            }
        }
        let columns = columns.ok_or_else(|| CliError::Usage("missing column header".into()))?;
        Ok(Self { meta, columns, rows })
    }

    pub fn to_json(&self) -> Value {
        let mut meta = Map::new();
        for (k, v) in &self.meta {
            meta.insert(k.clone(), Value::String(v.clone()));
        }
        let col = |i: usize| self.rows.iter().map(|r| json!(r[i])).collect::<Vec<_>>();
        json!({ "meta": meta, self.columns[0].clone(): col(0), self.columns[1].clone(): col(1) })
    }

    pub fn render(&self, format: crate::config::Format) -> String {
        match format {
            crate::config::Format::Csv => self.to_csv(),
            crate::config::Format::Json => pretty(&self.to_json()),
        }
    }
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Write to a sibling temporary file, then rename over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let name = path.file_name().ok_or_else(|| CliError::Usage(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}

/// `<out>.report.json` next to a profile file.
pub fn report_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".report.json");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let t = Table::new(
            vec![("alpha".into(), fmt_f64(0.5)), ("status".into(), "ok".into())],
            "z",
            "U",
            vec![[0.0, 1.0 / 3.0], [0.1, 2.0f64.sqrt()], [1.0, 1e-300]],
        );
        let s = t.to_csv();
        let back = Table::from_csv(&s).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_csv(), s);
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_atomic(&p, "a").unwrap();
        write_atomic(&p, "b").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "b");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
