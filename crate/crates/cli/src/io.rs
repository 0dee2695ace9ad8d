//! Model loading, symbol parsing and report output.

use std::fs;
use std::path::{Path, PathBuf};

use sideinfo_core::{presets, ExperimentReport, ModelSpec, PairModel};

use crate::error::{CliError, CliResult};

/// Environment variable naming the default directory for report files.
pub const OUT_DIR_ENV: &str = "SIDEINFO_OUT_DIR";
pub const PRESET_PREFIX: &str = "preset:";

/// `preset:NAME` or a path to a model JSON file.
pub fn load_model(source: &str) -> CliResult<PairModel> {
    if let Some(name) = source.strip_prefix(PRESET_PREFIX) {
        return presets::by_name(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown preset {name:?}; available: {}",
                presets::NAMES.join(", ")
            ))
        });
    }
    let text = fs::read_to_string(source).map_err(CliError::io(source))?;
    let spec = ModelSpec::from_json(&text).map_err(CliError::core(format!("model {source}")))?;
    PairModel::build(spec).map_err(CliError::core(format!("model {source}")))
}

/// Symbols as `0 1 2`, `0,1,2` or, for alphabets of at most ten letters,
/// `012`.
pub fn parse_symbols(text: &str, size: usize, what: &str) -> CliResult<Vec<u32>> {
    let text = text.trim();
    let parts: Vec<&str> = if text.contains([' ', ',']) {
        text.split([' ', ',']).filter(|s| !s.is_empty()).collect()
    } else if size <= 10 {
        text.split("").filter(|s| !s.is_empty()).collect()
    } else {
        vec![text]
    };
    if parts.is_empty() {
        return Err(CliError::Usage(format!("{what} is empty")));
    }
    parts
        .iter()
        .map(|p| match p.parse::<u32>() {
            Ok(v) if (v as usize) < size => Ok(v),
            _ => Err(CliError::Usage(format!(
                "{what}: {p:?} is not a symbol of an alphabet of size {size}"
            ))),
        })
        .collect()
}

/// Inverse of [`parse_symbols`]: compact digits for small alphabets,
/// otherwise space separated.
pub fn format_symbols(s: &[u32], size: usize) -> String {
    if size <= 10 {
        s.iter().map(|v| char::from(b'0' + *v as u8)).collect()
    } else {
        s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
    }
}

pub fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    fs::write(path, contents).map_err(CliError::io(path))
}

/// Where a report goes: `--out`, else `$SIDEINFO_OUT_DIR/<kind>-<seed>.json`,
/// else standard output.
pub fn report_path(out: Option<&Path>, report: &ExperimentReport) -> Option<PathBuf> {
    if let Some(p) = out {
        return Some(p.to_path_buf());
    }
    let dir = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty())?;
    Some(PathBuf::from(dir).join(format!("{}-{}.json", report.kind, report.seed)))
}

/// Write the report JSON (with a trailing newline) and, if `csv_dir` is
/// set, one CSV per table named `<kind>-<table>.csv`.
pub fn emit_report(report: &ExperimentReport, out: Option<&Path>, csv_dir: Option<&Path>) -> CliResult<()> {
    let mut json = report.to_json();
    json.push('\n');
    match report_path(out, report) {
        Some(path) => {
            write_file(&path, json.as_bytes())?;
            eprintln!("report written to {}", path.display());
        }
        None => print!("{json}"),
    }
    if let Some(dir) = csv_dir {
        for table in report.tables.keys() {
            let csv = report.table_csv(table).expect("table exists");
            let path = dir.join(format!("{}-{table}.csv", report.kind));
            write_file(&path, csv.as_bytes())?;
            eprintln!("table written to {}", path.display());
        }
    }
    Ok(())
}

/// One line per verdict on standard error.
pub fn summarize(report: &ExperimentReport) {
    for v in &report.verdicts {
        let tag = if v.passed { "PASS" } else { "FAIL" };
        eprintln!(
            "{tag} {}: observed {} threshold {}",
            v.criterion, v.observed, v.threshold
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_forms() {
        assert_eq!(parse_symbols("0110", 2, "x").unwrap(), vec![0, 1, 1, 0]);
        assert_eq!(parse_symbols("0 1 2", 3, "x").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_symbols("10,11", 12, "x").unwrap(), vec![10, 11]);
        assert!(parse_symbols("012", 2, "x").is_err());
        assert!(parse_symbols("", 2, "x").is_err());
        assert_eq!(format_symbols(&[0, 1, 1], 2), "011");
        assert_eq!(format_symbols(&[10, 1], 12), "10 1");
    }

    #[test]
    fn presets_load_by_name() {
        assert!(load_model("preset:dsc").is_ok());
        assert!(matches!(load_model("preset:nope"), Err(CliError::Usage(_))));
    }
}
