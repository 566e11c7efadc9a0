use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{Context, Result};
use prism_core::metrics::{
    cosine_score, d_prism_rows, frechet_distance, gaussian_stats, joint_concat, mmd_median, mmd_prism, psnr, ssim,
    MmdOptions, ScoreTable,
};
use prism_core::{EmbeddingSet, ImageRGB, MlpHead};

use super::{emit_table, load_head, load_set, stem, Failure};
use crate::cli::{GlobalArgs, Metric, MmdArgs, RankArgs, ScoreArgs};

/// Ties closer than this are ordered by name.
const RANK_TIE_TOL: f64 = 1e-12;

fn mmd_options(m: &MmdArgs, seed: u64) -> MmdOptions {
    MmdOptions {
        bandwidth: m.sigma,
        pair_subsample_cap: m.pair_cap,
        seed,
        clamp: m.clamp,
    }
}

fn default_column(metric: Metric, projected: bool) -> &'static str {
    match metric {
        Metric::Dprism => "D_PRISM",
        Metric::Cosine => "CLIP_S",
        Metric::Mmd if projected => "MMD_PRISM",
        Metric::Mmd => "MMD",
        Metric::Fd => "FD",
        Metric::Jmmd => "JMMD",
        Metric::Jfd => "JFD",
        Metric::Psnr => "PSNR",
        Metric::Ssim => "SSIM",
    }
}

fn expect_inputs(metric: Metric, inputs: &[PathBuf]) -> Result<()> {
    let want = if matches!(metric, Metric::Jmmd | Metric::Jfd) {
        4
    } else {
        2
    };
    if inputs.len() != want {
        return Err(Failure::new(
            "usage",
            format!("metric {metric:?} takes {want} inputs, got {}", inputs.len()).to_lowercase(),
        )
        .into());
    }
    Ok(())
}

fn set_mmd(x: &EmbeddingSet, y: &EmbeddingSet, projected: bool, opts: &MmdOptions) -> Result<f64> {
    let r = if projected {
        mmd_prism(x, y, opts)?
    } else {
        mmd_median(x, y, opts)?
    };
    Ok(r.value)
}

fn set_fd(x: &EmbeddingSet, y: &EmbeddingSet) -> Result<f64> {
    Ok(frechet_distance(&gaussian_stats(x)?, &gaussian_stats(y)?)?)
}

pub fn score(g: &GlobalArgs, a: &ScoreArgs) -> Result<()> {
    expect_inputs(a.metric, &a.inputs)?;
    let head = a.head.as_deref().map(load_head).transpose()?;
    let column = a
        .column
        .clone()
        .unwrap_or_else(|| default_column(a.metric, head.is_some()).to_owned());
    let name = a.name.clone().unwrap_or_else(|| stem(&a.inputs[0]));
    let mut table = ScoreTable::new([column]);
    let sets = || -> Result<Vec<EmbeddingSet>> { a.inputs.iter().map(|p| load_set(p, head.as_ref())).collect() };
    let opts = mmd_options(&a.mmd, g.seed());

    match a.metric {
        Metric::Dprism | Metric::Cosine => {
            let s = sets()?;
            let values = if a.metric == Metric::Dprism {
                d_prism_rows(&s[0], &s[1])?
            } else {
                if s[0].len() != s[1].len() {
                    return Err(
                        Failure::new("shape", format!("row counts differ: {} vs {}", s[0].len(), s[1].len())).into(),
                    );
                }
                (0..s[0].len())
                    .map(|i| cosine_score(&s[0].vector(i)?, &s[1].vector(i)?))
                    .collect::<prism_core::Result<_>>()?
            };
            for (i, v) in values.into_iter().enumerate() {
                table.push(i.to_string(), vec![Some(v)])?;
            }
        }
        Metric::Mmd => {
            let s = sets()?;
            table.push(name, vec![Some(set_mmd(&s[0], &s[1], head.is_some(), &opts)?)])?;
        }
        Metric::Fd => {
            let s = sets()?;
            table.push(name, vec![Some(set_fd(&s[0], &s[1])?)])?;
        }
        Metric::Jmmd | Metric::Jfd => {
            let s = sets()?;
            let x = joint_concat(&s[0], &s[1], None)?;
            let y = joint_concat(&s[2], &s[3], None)?;
            let v = if a.metric == Metric::Jmmd {
                mmd_median(&x, &y, &opts)?.value
            } else {
                set_fd(&x, &y)?
            };
            table.push(name, vec![Some(v)])?;
        }
        Metric::Psnr | Metric::Ssim => {
            let load = |p: &PathBuf| ImageRGB::load_png(p).with_context(|| format!("reading {}", p.display()));
            let (x, y) = (load(&a.inputs[0])?, load(&a.inputs[1])?);
            let v = if a.metric == Metric::Psnr {
                psnr(&x, &y)?
            } else {
                ssim(&x, &y)?
            };
            table.push(name, vec![Some(v)])?;
        }
    }
    emit_table(g, &table)
}

fn parse_model(spec: &str) -> Result<(String, PathBuf)> {
    match spec.split_once('=') {
        Some((n, p)) if !n.is_empty() && !p.is_empty() => Ok((n.to_owned(), PathBuf::from(p))),
        _ => Err(Failure::new("usage", format!("--model expects NAME=PATH, got {spec:?}")).into()),
    }
}

pub fn rank(g: &GlobalArgs, a: &RankArgs) -> Result<()> {
    let head: Option<MlpHead> = a.head.as_deref().map(load_head).transpose()?;
    let anchor = load_set(&a.anchor, head.as_ref())?;
    let opts = mmd_options(&a.mmd, g.seed());
    let mut seen = BTreeSet::new();
    let mut table = ScoreTable::new(["MMD_PRISM"]);
    for spec in &a.models {
        let (name, path) = parse_model(spec)?;
        if !seen.insert(name.clone()) {
            return Err(Failure::new("usage", format!("model name {name:?} given twice")).into());
        }
        let set = load_set(&path, head.as_ref())?;
        let v = set_mmd(&set, &anchor, head.is_some(), &opts).with_context(|| format!("model {name}"))?;
        table.push(name, vec![Some(v)])?;
    }
    table.sort_by_column("MMD_PRISM", RANK_TIE_TOL)?;
    emit_table(g, &table)
}
