//! Evaluation reports as JSON and as a plain-text summary table.

use std::path::Path;

use ncs_core::EvalReport;

use super::FormatError;

pub fn report_json(report: &EvalReport) -> String {
    serde_json::to_string_pretty(report).expect("reports contain only finite numbers") + "\n"
}

pub fn write_report(json_path: &Path, text_path: &Path, label: &str, report: &EvalReport) -> Result<(), FormatError> {
    super::create_parent(json_path)?;
    super::create_parent(text_path)?;
    std::fs::write(json_path, report_json(report)).map_err(FormatError::io(json_path))?;
    std::fs::write(text_path, EvalReport::table(&[(label, report)])).map_err(FormatError::io(text_path))
}

pub fn read_report(path: &Path) -> Result<EvalReport, FormatError> {
    let text = std::fs::read_to_string(path).map_err(FormatError::io(path))?;
    serde_json::from_str(&text).map_err(|e| FormatError::invalid(path, e.to_string()))
}
