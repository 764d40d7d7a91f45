use std::fs;
use std::path::{Path, PathBuf};

use defectkit_core::metrics::{render_table, EvaluationReport};
use defectkit_core::{Error, Result};
use serde_json::json;

use super::{write_text, Context, Outcome};
use crate::args::ReportArgs;

/// `name=path`, or a bare path named after its parent directory.
fn parse_input(spec: &str) -> (String, PathBuf) {
    if let Some((name, path)) = spec.split_once('=') {
        return (name.to_string(), PathBuf::from(path));
    }
    let path = PathBuf::from(spec);
    let name = path
        .parent()
        .and_then(Path::file_name)
        .or_else(|| path.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| spec.to_string());
    (name, path)
}

pub fn run(args: &ReportArgs, ctx: &Context) -> Result<Outcome> {
    let mut rows = Vec::with_capacity(args.input.len());
    for spec in &args.input {
        let (name, path) = parse_input(spec);
        let text = fs::read_to_string(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
        let report: EvaluationReport = serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("{}: not an evaluation report: {e}", path.display())))?;
        rows.push((name, report));
    }
    let refs: Vec<(&str, &EvaluationReport)> = rows.iter().map(|(n, r)| (n.as_str(), r)).collect();
    let table = render_table(&refs);
    print!("{table}");
    write_text(&ctx.out.join("table.txt"), &table)?;
    Ok(Outcome {
        outputs: vec![PathBuf::from("table.txt")],
        details: json!({ "rows": rows.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>() }),
    })
}
