use std::path::PathBuf;

use defectkit_core::io::{read_folder_split, read_predictions};
use defectkit_core::metrics::{evaluate, render_table, EvaluateOptions};
use defectkit_core::{Error, Result};
use serde_json::json;

use super::{write_json, write_text, Context, Outcome};
use crate::args::EvaluateArgs;

fn preview(ids: &[String]) -> String {
    let shown: Vec<&str> = ids.iter().take(5).map(String::as_str).collect();
    let more = if ids.len() > 5 { format!(" and {} more", ids.len() - 5) } else { String::new() };
    format!("{}{more}", shown.join(", "))
}

pub fn run(args: &EvaluateArgs, ctx: &Context) -> Result<Outcome> {
    let split = read_folder_split(&args.truth)?;
    let joined = read_predictions(&args.predictions, split.test_entries())?;
    if !joined.unmatched_predictions.is_empty() {
        log::warn!(
            "{} predictions have no ground truth: {}",
            joined.unmatched_predictions.len(),
            preview(&joined.unmatched_predictions)
        );
    }
    if !joined.missing_predictions.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} test images have no prediction: {}",
            joined.missing_predictions.len(),
            preview(&joined.missing_predictions)
        )));
    }

    let border_crop = match (args.border_crop, args.modality) {
        (Some(b), _) => b,
        (None, Some(m)) => ctx.config.modality_settings(m)?.border_crop,
        (None, None) => 0,
    };
    let report = evaluate(&joined.samples, &EvaluateOptions { border_crop })?;
    let name = args.modality.map_or_else(|| "model".to_string(), |m| m.to_string());
    let table = render_table(&[(name.as_str(), &report)]);
    print!("{table}");

    write_json(&ctx.out.join("report.json"), &report)?;
    write_text(&ctx.out.join("report.txt"), &table)?;
    Ok(Outcome {
        outputs: vec![PathBuf::from("report.json"), PathBuf::from("report.txt")],
        details: json!({
            "predictions": args.predictions.display().to_string(),
            "truth": args.truth.display().to_string(),
            "samples": joined.samples.len(),
            "unmatched_predictions": joined.unmatched_predictions.len(),
            "border_crop": border_crop,
        }),
    })
}
