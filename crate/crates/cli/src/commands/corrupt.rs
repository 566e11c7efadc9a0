use std::path::Path;

use anyhow::{Context, Result};
use prism_core::corruptions::{composite_and_resize, corrupt as apply, CorruptionSpec, NoiseSource};
use prism_core::metrics::{d_prism, psnr, ssim, ScoreTable};
use prism_core::{ImageRGB, ImageRGBA};
use rayon::prelude::*;

use super::{emit_table, load_head, load_set, stem, Failure};
use crate::cli::{CorruptArgs, GlobalArgs, NoiseArg};

/// Clean row plus the twelve grid entries.
const ROWS_PER_IMAGE: usize = 13;

fn load_image(path: &Path, size: Option<usize>) -> Result<ImageRGB> {
    let rgba = ImageRGBA::load_png(path).with_context(|| format!("reading {}", path.display()))?;
    let img = match size {
        Some(s) => composite_and_resize(&rgba, s)?,
        None => ImageRGB::from_fn(rgba.width(), rgba.height(), |x, y| {
            let p = rgba.pixel(x, y);
            [0, 1, 2].map(|c| p[c] * p[3] + (1.0 - p[3]))
        })?,
    };
    Ok(img)
}

pub fn corrupt(g: &GlobalArgs, a: &CorruptArgs) -> Result<()> {
    let source = match a.noise {
        NoiseArg::Uniform => NoiseSource::Uniform,
        NoiseArg::Gaussian => NoiseSource::ClippedGaussian,
    };
    let specs: Vec<CorruptionSpec> = CorruptionSpec::grid(g.seed())
        .into_iter()
        .map(|s| s.with_noise_source(source))
        .collect();

    let embeddings = match &a.embeddings {
        Some(p) => {
            let head = a.head.as_deref().map(load_head).transpose()?;
            let set = load_set(p, head.as_ref())?;
            let want = ROWS_PER_IMAGE * a.images.len();
            if set.len() != want {
                return Err(Failure::new(
                    "shape",
                    format!(
                        "{} has {} rows, expected {want} ({ROWS_PER_IMAGE} per image)",
                        p.display(),
                        set.len()
                    ),
                )
                .into());
            }
            Some(set)
        }
        None => None,
    };

    let mut columns = vec!["parameter", "PSNR", "SSIM"];
    if embeddings.is_some() {
        columns.push("D_PRISM");
    }
    let mut table = ScoreTable::new(columns);
    if let Some(dir) = &a.save_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }

    for (i, path) in a.images.iter().enumerate() {
        let name = stem(path);
        let clean = load_image(path, a.size)?;
        let dprism = |k: usize| -> Result<Option<f64>> {
            embeddings
                .as_ref()
                .map(|e| {
                    let base = i * ROWS_PER_IMAGE;
                    Ok(d_prism(&e.vector(base)?, &e.vector(base + k)?)?)
                })
                .transpose()
        };
        let mut row = vec![None, Some(psnr(&clean, &clean)?), Some(ssim(&clean, &clean)?)];
        if embeddings.is_some() {
            row.push(dprism(0)?);
        }
        table.push(format!("{name}/clean"), row)?;

        let results: Vec<(ImageRGB, f64, f64)> = specs
            .par_iter()
            .map(|s| {
                let out = apply(&clean, s)?;
                let (p, q) = (psnr(&clean, &out)?, ssim(&clean, &out)?);
                Ok((out, p, q))
            })
            .collect::<prism_core::Result<_>>()
            .with_context(|| format!("corrupting {}", path.display()))?;

        for (k, (spec, (img, p, q))) in specs.iter().zip(results).enumerate() {
            let label = format!("{}/{}", spec.kind().name(), spec.severity() + 1);
            if let Some(dir) = &a.save_dir {
                img.save_png(dir.join(format!("{name}_{}_{}.png", spec.kind().name(), spec.severity() + 1)))?;
            }
            let mut row = vec![Some(spec.parameter()), Some(p), Some(q)];
            if embeddings.is_some() {
                row.push(dprism(k + 1)?);
            }
            table.push(format!("{name}/{label}"), row)?;
        }
    }
    emit_table(g, &table)
}
