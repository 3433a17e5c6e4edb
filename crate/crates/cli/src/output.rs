//! CSV and JSON artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ipsdual::rational::{format_rational, Bracket, Rational};
use serde_json::Value;

use crate::CliError;

/// Digits kept when printing certified brackets (rounded outward).
const BRACKET_DIGITS: u32 = 18;

pub const EXACT: &str = "exact";
pub const BRACKET: &str = "certified-bracket";
pub const MONTE_CARLO: &str = "monte-carlo";

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| io(root, e))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.root.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, e))?;
        w.write_record(header).map_err(|e| io(&path, e))?;
        for r in rows {
            w.write_record(r).map_err(|e| io(&path, e))?;
        }
        w.flush().map_err(|e| io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let path = self.root.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| io(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes `summary.json` (listing every artifact) and echoes it.
    pub fn finish(mut self, mut summary: Value) -> Result<(), CliError> {
        self.written.push("summary.json".into());
        self.written.sort();
        summary["artifacts"] = Value::from(self.written.clone());
        self.json("summary.json", &summary)?;
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        // a closed pipe (e.g. `| head`) is not an error; the files are already written
        match writeln!(std::io::stdout(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(format!("stdout: {e}"))),
            _ => Ok(()),
        }
    }
}

pub fn rat(x: &Rational) -> String {
    format_rational(x)
}

/// `(value, lo, hi, provenance)` cells for a bracket; `value` is filled
/// only when the bracket is a point.
pub fn bracket_cells(b: &Bracket) -> [String; 4] {
    if let Some(x) = b.exact_value() {
        let s = rat(x);
        return [s.clone(), s.clone(), s, EXACT.into()];
    }
    let r = b.rounded_outward(BRACKET_DIGITS);
    [String::new(), rat(&r.lo), rat(&r.hi), BRACKET.into()]
}

pub fn bracket_json(b: &Bracket) -> Value {
    let [value, lo, hi, provenance] = bracket_cells(b);
    serde_json::json!({ "value": value, "lo": lo, "hi": hi, "provenance": provenance })
}

pub fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn residual_line(nonzero: usize, checked: usize) -> String {
    format!("residuals: {nonzero} nonzero / {checked} checked")
}

pub fn status(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}
