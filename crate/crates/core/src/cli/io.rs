//! Instance CSV files: a header `r1,...,rm` followed by one row of positive
//! demands per agent. Rows are normalized on load.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Instance;

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    parse_instance(&text, path)
}

pub fn parse_instance(text: &str, path: &Path) -> Result<Instance> {
    let fail = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (_, header) = lines.next().ok_or_else(|| fail(1, "empty file".into()))?;
    let width = header.split(',').count();
    if width < 2 {
        return Err(fail(1, format!("header names {width} resource(s), need at least 2")));
    }
    let mut rows = Vec::new();
    for (line, content) in lines {
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(fail(line, format!("expected {width} fields, found {}", fields.len())));
        }
        let row = fields
            .iter()
            .map(|f| match f.parse::<f64>() {
                Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
                Ok(v) => Err(fail(line, format!("demand {v} is not a positive number"))),
                Err(_) => Err(fail(line, format!("`{f}` is not a number"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(fail(1, "no agent rows".into()));
    }
    Instance::new(rows)
}

pub fn write_instance(out: &mut dyn Write, instance: &Instance) -> Result<()> {
    let header: Vec<String> = (1..=instance.resources()).map(|r| format!("r{r}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for d in instance.demands() {
        let row: Vec<String> = d.as_slice().iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Twelve decimals with trailing zeros removed.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}
