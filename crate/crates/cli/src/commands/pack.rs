use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use defectkit_core::io::{read_mask, ContainerOptions, ContainerWriter};
use defectkit_core::stream::{ItemSource, StreamItem};
use defectkit_core::{DefectGroup, Error, GroundTruthMask, ImageLabel, Result};
use serde_json::json;

use super::{list_pngs, load_patch, stem, write_json, Context, Outcome};
use crate::args::PackArgs;

pub const CONTAINER: &str = "dataset.hdf5";

/// Image paths of one input folder with their optional masks.
fn folder_entries(dir: &Path) -> Result<Vec<(PathBuf, Option<PathBuf>)>> {
    let images = dir.join("images");
    if !images.is_dir() {
        return Ok(list_pngs(dir)?.into_iter().map(|p| (p, None)).collect());
    }
    let masks = dir.join("masks");
    list_pngs(&images)?
        .into_iter()
        .map(|p| {
            let mask = masks.join(format!("{}_mask.png", stem(&p)));
            if mask.is_file() {
                Ok((p, Some(mask)))
            } else {
                Err(Error::Layout(format!("{} has no mask {}", p.display(), mask.display())))
            }
        })
        .collect()
}

pub fn run(args: &PackArgs, ctx: &Context) -> Result<Outcome> {
    let mut entries = Vec::new();
    let mut seen = BTreeSet::new();
    for dir in &args.input {
        if !seen.insert(dir) {
            return Err(Error::InvalidInput(format!("{} given twice", dir.display())));
        }
        entries.extend(folder_entries(dir)?);
    }
    if entries.is_empty() {
        return Err(Error::InvalidInput("no images to pack".into()));
    }

    let rel = PathBuf::from(CONTAINER);
    let options = ContainerOptions { deflate: args.deflate };
    let mut writer = ContainerWriter::create(&ctx.out.join(&rel), args.modality, ctx.config.seed, options)?;
    for (i, (image, mask)) in entries.iter().enumerate() {
        let patch = load_patch(image, args.modality)?;
        let mask = match mask {
            Some(m) => read_mask(m)?,
            None => GroundTruthMask::empty(patch.width(), patch.height()),
        };
        let (label, source) = if mask.is_empty() {
            (ImageLabel::Good, ItemSource::FaultFree)
        } else {
            (ImageLabel::Defective(DefectGroup::Synthetic), ItemSource::Synthetic)
        };
        writer.push(&StreamItem { index: i as u64, patch, mask: Some(mask), label, source })?;
    }
    let summary = writer.finish(&[])?;
    write_json(&ctx.out.join("composition.json"), &summary)?;

    Ok(Outcome {
        outputs: vec![rel, PathBuf::from("composition.json")],
        details: json!({
            "modality": args.modality.key(),
            "inputs": args.input.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "items": summary.total,
            "deflate": args.deflate,
        }),
    })
}
