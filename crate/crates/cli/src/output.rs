//! Artifact writers. Floats in CSV files use `{:.17e}`; every file ends
//! lines with `\n` and carries no timestamps, so reruns are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use quadgrad::branch::Branch;
use serde_json::Value;

use crate::error::Result;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.17e}")
}

/// Collects named artifacts and writes them to one directory.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn text(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, content)?;
        self.written.push(path);
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).expect("serialisable value");
        s.push('\n');
        self.text(name, &s)
    }

    pub fn csv(&mut self, name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
        let mut s = String::from(header);
        s.push('\n');
        for r in rows {
            s.push_str(&r);
            s.push('\n');
        }
        self.text(name, &s)
    }

    /// `param,sup_norm,min,max,step,fold_flag`, one row per branch point.
    pub fn branch_csv(&mut self, name: &str, branch: Option<&Branch>) -> Result<()> {
        let rows = branch.map(|b| b.points.as_slice()).unwrap_or_default().iter().map(|p| {
            format!(
                "{},{},{},{},{},{}",
                fmt_f64(p.param),
                fmt_f64(p.sup_norm),
                fmt_f64(p.min_val),
                fmt_f64(p.max_val),
                fmt_f64(p.step_used),
                u8::from(p.fold)
            )
        });
        self.csv(name, "param,sup_norm,min,max,step,fold_flag", rows)
    }
}

/// A float as JSON, `null` when not finite.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}
