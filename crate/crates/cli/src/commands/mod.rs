use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use prism_core::format::read_embedding_file;
use prism_core::metrics::ScoreTable;
use prism_core::{EmbeddingSet, MlpHead};

use crate::cli::{Format, GlobalArgs};

mod corrupt;
mod data;
mod masks;
mod scoring;

pub use corrupt::corrupt;
pub use data::{embed, pool, train, validate};
pub use masks::masks;
pub use scoring::{rank, score};

/// A CLI-level failure with its own error kind.
#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub msg: String,
}

impl Failure {
    pub fn new(kind: &'static str, msg: impl Into<String>) -> Self {
        Failure { kind, msg: msg.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl std::error::Error for Failure {}

fn required_output<'a>(g: &'a GlobalArgs, what: &str) -> Result<&'a Path> {
    g.output
        .as_deref()
        .ok_or_else(|| Failure::new("usage", format!("--output is required for {what}")).into())
}

/// Writes `text` to `--output`, or stdout when absent.
fn emit(g: &GlobalArgs, text: &str) -> Result<()> {
    match &g.output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_table(g: &GlobalArgs, table: &ScoreTable) -> Result<()> {
    let text = match g.format {
        Format::Text => table.to_text(),
        Format::Table => table.to_csv(),
    };
    emit(g, &text)
}

fn load_head(path: &Path) -> Result<MlpHead> {
    MlpHead::load(path).with_context(|| format!("loading head {}", path.display()))
}

/// Reads an embedding file, projecting it through `head` when given.
fn load_set(path: &Path, head: Option<&MlpHead>) -> Result<EmbeddingSet> {
    let raw = read_embedding_file(path).with_context(|| format!("reading {}", path.display()))?;
    match head {
        Some(h) => h
            .embed_set(&raw)
            .with_context(|| format!("projecting {}", path.display())),
        None => Ok(raw),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}
