use std::path::Path;

use anyhow::{Context, Result};
use prism_core::format::{detect_kind, read_activation_file, read_embedding_file, write_embedding_file, FileKind};
use prism_core::manifest::validate_manifest;
use prism_core::{build_raw_feature, load_manifest, EmbeddingSet, Manifest, PoolingConfig, Role, TrainConfig};
use rayon::prelude::*;

use super::{emit, load_head, required_output, sidecar, Failure};
use crate::cli::{EmbedArgs, GlobalArgs, PoolArgs, TrainArgs, ValidateArgs};

fn manifest_root(manifest: &Path, root: Option<&Path>) -> std::path::PathBuf {
    root.map(Path::to_path_buf)
        .unwrap_or_else(|| manifest.parent().map(Path::to_path_buf).unwrap_or_default())
}

pub fn pool(g: &GlobalArgs, a: &PoolArgs) -> Result<()> {
    let out = required_output(g, "pool")?;
    let manifest = load_manifest(&a.manifest)?;
    let root = manifest_root(&a.manifest, a.root.as_deref());
    let cfg = PoolingConfig::default();
    let pooled: Vec<_> = manifest
        .records
        .par_iter()
        .map(|r| {
            let path = root.join(&r.activation_path);
            read_activation_file(&path).and_then(|s| build_raw_feature(&s, &cfg))
        })
        .collect();

    let mut set: Option<EmbeddingSet> = None;
    let mut kept = Vec::new();
    for (i, (rec, res)) in manifest.records.iter().zip(pooled).enumerate() {
        let pushed = res.and_then(|f| match &mut set {
            None => {
                set = Some(EmbeddingSet::from_vectors(&[f], Role::Generated)?);
                Ok(())
            }
            Some(s) => s.push_row(f.values()),
        });
        match pushed {
            Ok(()) => kept.push(rec.clone()),
            Err(e) if a.keep_going => {
                eprintln!("warning: skipping record {i} ({}): {e}", rec.activation_path);
            }
            Err(e) => {
                return Err(anyhow::Error::new(e).context(format!("record {i} ({})", rec.activation_path)));
            }
        }
    }
    let set = set.ok_or_else(|| Failure::new("data", "no record could be pooled"))?;
    write_embedding_file(&set, out)?;
    if let Some(p) = &a.kept_manifest {
        Manifest::new(kept, manifest.split, manifest.dataset.clone())?.save(p)?;
    }
    println!("pooled {} of {} records, dim {}", set.len(), manifest.len(), set.dim());
    Ok(())
}

pub fn train(g: &GlobalArgs, a: &TrainArgs) -> Result<()> {
    let out = required_output(g, "train")?;
    let mut cfg = match &a.config {
        Some(p) => TrainConfig::load(p).with_context(|| format!("config {}", p.display()))?,
        None => TrainConfig::default(),
    };
    for kv in &a.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::new("usage", format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim()).map_err(|m| Failure::new("usage", m))?;
    }
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.validate()?;

    let manifest = load_manifest(&a.manifest)?;
    let features = read_embedding_file(&a.features)?;
    let val = match (&a.val_manifest, &a.val_features) {
        (Some(m), Some(f)) => Some((load_manifest(m)?, read_embedding_file(f)?)),
        _ => None,
    };
    let outcome = prism_core::train_head(&manifest, &features, val.as_ref().map(|(m, f)| (m, f)), &cfg)?;
    outcome.head.save(out)?;
    let log_path = a.log.clone().unwrap_or_else(|| sidecar(out, ".log"));
    let log = format!(
        "{}best_epoch={} stopped_early={}\n",
        outcome.log, outcome.log.best_epoch, outcome.log.stopped_early
    );
    std::fs::write(&log_path, log).with_context(|| format!("writing {}", log_path.display()))?;
    println!(
        "trained {} epochs, best epoch {}, head {}x{}x{}",
        outcome.log.epochs.len(),
        outcome.log.best_epoch,
        outcome.head.in_dim(),
        outcome.head.hidden_dim(),
        outcome.head.out_dim()
    );
    Ok(())
}

pub fn embed(g: &GlobalArgs, a: &EmbedArgs) -> Result<()> {
    let out = required_output(g, "embed")?;
    let head = load_head(&a.head)?;
    let raw = read_embedding_file(&a.features)?;
    let emb = head.embed_set(&raw)?;
    write_embedding_file(&emb, out)?;
    println!("embedded {} rows to dim {}", emb.len(), emb.dim());
    Ok(())
}

fn describe(path: &Path) -> prism_core::Result<String> {
    Ok(match detect_kind(path) {
        Ok(FileKind::Activations) => {
            let s = read_activation_file(path)?;
            format!("activations blocks={} channels={}", s.block_count(), s.total_channels())
        }
        Ok(FileKind::Embeddings) => {
            let s = read_embedding_file(path)?;
            format!(
                "embeddings n={} dim={} unit_rows={}",
                s.len(),
                s.dim(),
                s.rows_are_unit()
            )
        }
        Err(e) => match prism_core::MlpHead::load(path) {
            Ok(h) => format!("head {}x{}x{}", h.in_dim(), h.hidden_dim(), h.out_dim()),
            Err(_) => return Err(e),
        },
    })
}

pub fn validate(g: &GlobalArgs, a: &ValidateArgs) -> Result<()> {
    if a.manifest.is_none() && a.files.is_empty() {
        return Err(Failure::new("usage", "nothing to validate: give --manifest or files").into());
    }
    let mut text = String::new();
    let mut problems = 0;
    if let Some(m) = &a.manifest {
        let manifest = load_manifest(m)?;
        let report = validate_manifest(&manifest, manifest_root(m, a.root.as_deref()));
        problems += report.issues.len();
        text.push_str(&format!(
            "manifest {}: {} records\n{report}\n",
            m.display(),
            manifest.len()
        ));
    }
    for f in &a.files {
        match describe(f) {
            Ok(d) => text.push_str(&format!("ok {}: {d}\n", f.display())),
            Err(e) => {
                problems += 1;
                text.push_str(&format!("bad {}: {e}\n", f.display()));
            }
        }
    }
    emit(g, &text)?;
    if problems > 0 {
        return Err(Failure::new("validation", format!("{problems} problem(s) found")).into());
    }
    Ok(())
}
