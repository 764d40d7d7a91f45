use std::path::{Path, PathBuf};

use defectkit_core::io::{ContainerOptions, ContainerWriter};
use defectkit_core::stream::{
    build_fractions, FractionSchedule, MixedStream, PatchListSource, RealDefect, RealDefectPool, StreamSettings,
    WalkSynthesizer,
};
use defectkit_core::{DefectGroup, Error, ImageLabel, Result};
use serde_json::json;

use super::{list_pngs, load_patch, load_patch_dir, write_json, Context, Outcome};
use crate::args::SampleArgs;

pub const CONTAINER: &str = "stream.hdf5";

/// Loads `points/` and `area/` under `dir`, points first.
fn load_pool(dir: &Path, args: &SampleArgs) -> Result<Vec<RealDefect>> {
    let mut items = Vec::new();
    let mut found = false;
    for group in [DefectGroup::Points, DefectGroup::Area] {
        let sub = dir.join(group.as_str());
        if !sub.is_dir() {
            continue;
        }
        found = true;
        for path in list_pngs(&sub)? {
            items.push(RealDefect { patch: load_patch(&path, args.modality)?, label: ImageLabel::Defective(group) });
        }
    }
    if !found {
        return Err(Error::Layout(format!("{} has neither points/ nor area/", dir.display())));
    }
    Ok(items)
}

pub fn run(args: &SampleArgs, ctx: &Context) -> Result<Outcome> {
    let config = &ctx.config;
    let good = load_patch_dir(&args.good, args.modality)?;

    let mut warnings = Vec::new();
    let (pool_size, real) = match &args.real {
        Some(dir) => {
            let pool = RealDefectPool::new(load_pool(dir, args)?, config.seed)?;
            let split = build_fractions(&pool, &FractionSchedule::from_config(config, args.group))?;
            let real = split.items(&pool, args.fraction).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "fraction {} is not in the configured schedule ({})",
                    args.fraction,
                    config.stream.fractions.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(", ")
                ))
            })?;
            warnings.extend(split.warnings().iter().cloned());
            (pool.len(), real)
        }
        None => (0, Vec::new()),
    };
    let active = real.len();

    let settings = StreamSettings::from_config(config, args.modality)?;
    let synthesizer = WalkSynthesizer { ranges: config.modality_settings(args.modality)?.synthesis.clone() };
    let stream = MixedStream::new(PatchListSource::new(good)?, synthesizer, real, settings, config.seed)?;
    warnings.extend(stream.warnings().iter().cloned());
    for w in &warnings {
        log::warn!("{w}");
    }

    let rel = PathBuf::from(CONTAINER);
    let options = ContainerOptions { deflate: args.deflate };
    let mut writer = ContainerWriter::create(&ctx.out.join(&rel), args.modality, config.seed, options)?;
    stream.for_each_item(args.n, |item| writer.push(&item))?;
    let summary = writer.finish(&warnings)?;
    write_json(&ctx.out.join("composition.json"), &summary)?;
    log::info!("wrote {} items ({:?})", summary.total, summary.by_source);

    Ok(Outcome {
        outputs: vec![rel, PathBuf::from("composition.json")],
        details: json!({
            "modality": args.modality.key(),
            "n": args.n,
            "fraction": args.fraction.to_string(),
            "group": args.group,
            "p_inject": config.stream.p_inject.to_string(),
            "r_syn": config.stream.r_syn.to_string(),
            "real_pool": pool_size,
            "active_real": active,
        }),
    })
}
