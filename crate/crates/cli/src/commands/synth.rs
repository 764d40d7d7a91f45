use std::path::PathBuf;

use defectkit_core::io::{write_gray, write_mask};
use defectkit_core::rng::stage;
use defectkit_core::synth::{synthesize_batch, SynthesisParams, MODEL_VERSION};
use defectkit_core::{Error, Result, SeedScope};
use serde::Serialize;
use serde_json::json;

use super::{load_patch_dir, write_json, Context, Outcome};
use crate::args::SynthArgs;

#[derive(Serialize)]
struct Record<'a> {
    id: &'a str,
    image: String,
    mask: String,
    seed_path: Vec<u64>,
    attempt: u32,
    params: &'a SynthesisParams,
}

#[derive(Serialize)]
struct SynthManifest<'a> {
    synthesis_model: &'static str,
    modality: &'static str,
    seed: u64,
    samples: Vec<Record<'a>>,
}

pub fn run(args: &SynthArgs, ctx: &Context) -> Result<Outcome> {
    let size = ctx.config.geometry.patch_size;
    let ranges = &ctx.config.modality_settings(args.modality)?.synthesis;
    let patches = load_patch_dir(&args.input, args.modality)?;
    for p in &patches {
        if (p.width(), p.height()) != (size, size) {
            return Err(Error::Dimension(format!(
                "{}: {}x{} patch, expected {size}x{size}",
                p.origin().source,
                p.width(),
                p.height()
            )));
        }
    }
    log::info!("synthesizing {} defects ({})", patches.len(), args.modality);

    let scope = SeedScope::new(ctx.config.seed, vec![stage::SYNTH]);
    let results = synthesize_batch(&patches, ranges, &scope);

    let mut outputs = Vec::new();
    let mut samples = Vec::with_capacity(patches.len());
    let mut defects = Vec::with_capacity(patches.len());
    for (patch, result) in patches.iter().zip(results) {
        let id = &patch.origin().source;
        let defect = result.map_err(|e| Error::InvalidInput(format!("{id}: {e}")))?;
        defects.push((id, defect));
    }
    for (i, (id, defect)) in defects.iter().enumerate() {
        let image = PathBuf::from("images").join(format!("{id}.png"));
        let mask = PathBuf::from("masks").join(format!("{id}_mask.png"));
        write_gray(&ctx.out.join(&image), defect.patch.pixels())?;
        write_mask(&ctx.out.join(&mask), &defect.mask)?;
        samples.push(Record {
            id,
            image: format!("images/{id}.png"),
            mask: format!("masks/{id}_mask.png"),
            seed_path: scope.child(i as u64).child(defect.attempt as u64).path().to_vec(),
            attempt: defect.attempt,
            params: &defect.params,
        });
        outputs.push(image);
        outputs.push(mask);
    }

    let manifest =
        SynthManifest { synthesis_model: MODEL_VERSION, modality: args.modality.key(), seed: ctx.config.seed, samples };
    write_json(&ctx.out.join("synthesis.json"), &manifest)?;
    outputs.push(PathBuf::from("synthesis.json"));

    Ok(Outcome {
        outputs,
        details: json!({ "modality": args.modality.key(), "input": args.input.display().to_string(), "samples": defects.len() }),
    })
}
