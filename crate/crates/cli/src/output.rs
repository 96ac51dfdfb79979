use std::io::Write;
use std::path::Path;

use oscillab::io::format_f64;
use oscillab::report::RunRecord;
use oscillab::{Report, Result};

/// Writes the run record to a path, or to stdout for `-`.
pub fn write_record(dest: &str, record: &RunRecord) -> Result<()> {
    let mut text = serde_json::to_string_pretty(record).expect("run record serializes");
    text.push('\n');
    if dest == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())?;
        out.flush()?;
    } else {
        std::fs::write(dest, text)?;
    }
    Ok(())
}

/// Plot-ready CSV with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.iter().map(|&x| format_f64(x)).collect::<Vec<_>>().join(","));
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn summary_line(r: &Report) -> String {
    let verdict = if r.pass { "PASS" } else { "FAIL" };
    let mut line = if r.details.contains_key("value") {
        format!("{verdict} {} value={}", r.op, format_f64(r.lhs))
    } else {
        format!("{verdict} {} lhs={} rhs={}", r.op, format_f64(r.lhs), format_f64(r.rhs))
    };
    if !r.params.is_empty() {
        line.push(' ');
        line.push_str(&serde_json::Value::Object(r.params.clone()).to_string());
    }
    if !r.flags.is_empty() {
        line.push_str(&format!(" flags={}", r.flags.join(",")));
    }
    line
}
