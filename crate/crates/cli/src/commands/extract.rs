use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use defectkit_core::io::{read_gray, write_gray};
use defectkit_core::pipeline::{extract_grid_patches, extract_random_patches};
use defectkit_core::rng::stage;
use defectkit_core::{Error, Rect, Result, SeedScope};
use serde_json::json;

use super::{list_pngs, seed_path_string, stem, Context, Outcome};
use crate::args::{ExtractArgs, ExtractMode};

fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut frames = Vec::new();
    for input in inputs {
        if input.is_dir() {
            frames.extend(list_pngs(input)?);
        } else {
            frames.push(input.clone());
        }
    }
    if frames.is_empty() {
        return Err(Error::InvalidInput("no input frames".into()));
    }
    Ok(frames)
}

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv { path: path.to_path_buf(), source }
}

pub fn run(args: &ExtractArgs, ctx: &Context) -> Result<Outcome> {
    let geometry = &ctx.config.geometry;
    let n = match (args.mode, args.n) {
        (ExtractMode::Random, None) => return Err(Error::InvalidInput("--mode random needs --n".into())),
        (ExtractMode::Grid, Some(_)) => return Err(Error::InvalidInput("--n only applies to --mode random".into())),
        (_, n) => n.unwrap_or(0),
    };
    let frames = expand_inputs(&args.input)?;
    let mut names = BTreeSet::new();
    for f in &frames {
        if !names.insert(stem(f)) {
            return Err(Error::InvalidInput(format!("two input frames share the name `{}`", stem(f))));
        }
    }

    let manifest_rel = PathBuf::from("extract_manifest.csv");
    let manifest_path = ctx.out.join(&manifest_rel);
    super::create_dir(&ctx.out)?;
    let mut writer = csv::Writer::from_path(&manifest_path).map_err(|e| csv_err(&manifest_path, e))?;
    writer.write_record(["file", "source", "x", "y", "seed_path"]).map_err(|e| csv_err(&manifest_path, e))?;

    let mut outputs = Vec::new();
    for (j, frame) in frames.iter().enumerate() {
        let image = read_gray(frame)?;
        let source = stem(frame);
        let roi = args.roi.unwrap_or_else(|| Rect::new(0, 0, image.width(), image.height()));
        let patches = match args.mode {
            ExtractMode::Grid => {
                extract_grid_patches(&image, &source, &roi, geometry.patch_size, geometry.stride, args.modality)?
            }
            ExtractMode::Random => {
                let scope = SeedScope::new(ctx.config.seed, vec![stage::EXTRACT_RANDOM, j as u64]);
                extract_random_patches(&image, &source, &roi, geometry.patch_size, n, args.modality, &scope)?
            }
        };
        log::info!("{source}: {} patches", patches.len());
        for (i, patch) in patches.iter().enumerate() {
            let rel = PathBuf::from("patches").join(&source).join(format!("{i:05}.png"));
            write_gray(&ctx.out.join(&rel), patch.pixels())?;
            let o = patch.origin();
            writer
                .write_record([
                    format!("patches/{source}/{i:05}.png"),
                    source.clone(),
                    o.x.to_string(),
                    o.y.to_string(),
                    seed_path_string(patch.seed_path()),
                ])
                .map_err(|e| csv_err(&manifest_path, e))?;
            outputs.push(rel);
        }
    }
    writer.flush().map_err(|e| Error::Io { path: manifest_path.clone(), source: e })?;
    drop(writer);
    outputs.push(manifest_rel);

    let patch_count = outputs.len() - 1;
    Ok(Outcome {
        outputs,
        details: json!({
            "modality": args.modality.key(),
            "mode": format!("{:?}", args.mode).to_lowercase(),
            "frames": frames.len(),
            "patches": patch_count,
            "patch_size": geometry.patch_size,
            "stride": geometry.stride,
            "roi": args.roi.map(|r| r.to_string()),
        }),
    })
}
