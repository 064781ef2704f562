//! GridFn and report serialization.
//!
//! Floats go through serde_json's shortest round-trip formatting, so a value
//! written and read back is bit-identical.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::grid::{Grid, GridFn};

pub fn gridfn_to_json(f: &GridFn) -> String {
    serde_json::to_string_pretty(f).expect("GridFn serializes")
}

pub fn gridfn_from_json(s: &str) -> Result<GridFn> {
    serde_json::from_str(s).map_err(|e| {
        LabError::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
    })
}

/// One value per line (1D only).
pub fn gridfn_to_csv(f: &GridFn) -> Result<String> {
    if f.grid.dim != 1 {
        return Err(LabError::Unsupported("CSV form is 1D only".into()));
    }
    let mut s = String::with_capacity(f.values.len() * 24);
    for v in &f.values {
        s.push_str(&format_float(*v));
        s.push('\n');
    }
    Ok(s)
}

pub fn gridfn_from_csv(s: &str) -> Result<GridFn> {
    let mut values = Vec::new();
    for (ln, line) in s.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t
            .parse()
            .map_err(|e| LabError::Parse(format!("line {}: '{t}': {e}", ln + 1)))?;
        values.push(v);
    }
    let grid = Grid::d1(values.len())?;
    GridFn::new(grid, values)
}

/// Shortest representation that parses back to the same double.
pub fn format_float(v: f64) -> String {
    serde_json::to_string(&v).unwrap_or_else(|_| format!("{v:?}"))
}

/// Reads JSON or, for `.csv` paths, the one-value-per-line form.
pub fn read_gridfn(path: &Path) -> Result<GridFn> {
    let s = fs::read_to_string(path)
        .map_err(|e| LabError::Parse(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "csv") {
        gridfn_from_csv(&s)
    } else {
        gridfn_from_json(&s)
    }
}

pub fn write_gridfn(path: &Path, f: &GridFn) -> Result<()> {
    let s = if path.extension().is_some_and(|e| e == "csv") {
        gridfn_to_csv(f)?
    } else {
        gridfn_to_json(f)
    };
    fs::write(path, s).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_parse_error_has_line() {
        let e = gridfn_from_csv("1.0\n2.0\nabc\n4\n").unwrap_err();
        assert!(format!("{e}").contains("line 3"));
    }

    #[test]
    fn csv_length_must_be_power_of_two() {
        assert!(gridfn_from_csv("1\n2\n3\n").is_err());
    }

    #[test]
    fn json_rejects_wrong_count() {
        assert!(gridfn_from_json(r#"{"dim":1,"n_points":4,"values":[1,2]}"#).is_err());
    }
}
