use super::{Check, CliError};
use serde::Serialize;
use std::path::Path;

/// Formats a float with 17 significant digits in scientific notation;
/// non-finite values print as `NaN`, `inf` and `-inf`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Checks, key numbers, warnings and written files collected by a command.
#[derive(Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
    pub results: serde_json::Map<String, serde_json::Value>,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
}

impl Report {
    pub fn check(&mut self, name: impl Into<String>, value: f64, threshold: f64, passed: bool, enforced: bool) {
        self.checks.push(Check { name: name.into(), passed, value, threshold, enforced });
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("result serialises");
        self.results.insert(key.to_string(), v);
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }
}

/// Writes a CSV file with the given header and numeric rows.
pub(crate) fn write_csv<R, I>(dir: &Path, name: &str, header: &[&str], rows: I, report: &mut Report) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let path = dir.join(name);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    report.files.push(name.to_string());
    Ok(())
}

pub(crate) fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T, report: &mut Report) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(dir.join(name), text + "\n")?;
    report.files.push(name.to_string());
    Ok(())
}

pub(crate) fn num_row<const N: usize>(values: [f64; N]) -> Vec<String> {
    values.iter().map(|&v| fmt_f64(v)).collect()
}
