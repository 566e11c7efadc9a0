//! Little-endian binary containers.
//!
//! `PRSA` holds raw per-block activations:
//!
//! ```text
//! "PRSA" | version u32 | B u32 | B x {H u32, W u32, C u32} | B payloads of H*W*C f32
//! ```
//!
//! `PRSF` holds a flat embedding matrix:
//!
//! ```text
//! "PRSF" | version u32 | N u32 | D u32 | N*D f32
//! ```
//!
//! Every integer and float is little-endian regardless of host.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{ActivationBlock, ActivationStack, EmbeddingSet, Role};

pub const ACTIVATION_MAGIC: [u8; 4] = *b"PRSA";
pub const EMBEDDING_MAGIC: [u8; 4] = *b"PRSF";
pub const FORMAT_VERSION: u32 = 1;

/// Kind of container, detected from the first four bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Activations,
    Embeddings,
}

/// Cursor over an in-memory file that reports truncation as corruption.
pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(buf: &'a [u8], what: &'static str) -> Self {
        ByteReader { buf, pos: 0, what }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Corruption(format!(
                "{} truncated: wanted {n} bytes at offset {}, file has {}",
                self.what,
                self.pos,
                self.buf.len()
            ))),
        }
    }

    pub(crate) fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let m = self
            .take(4)
            .map_err(|_| Error::Format(format!("{} too short for magic", self.what)))?;
        if m != expected {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(m),
                String::from_utf8_lossy(expected)
            )));
        }
        Ok(())
    }

    pub(crate) fn version(&mut self) -> Result<()> {
        let v = self.u32()?;
        if v != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "{} version {v} unsupported (expected {FORMAT_VERSION})",
                self.what
            )));
        }
        Ok(())
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn f32s(&mut self, count: usize) -> Result<Vec<f32>> {
        let bytes = count
            .checked_mul(4)
            .ok_or_else(|| Error::Format(format!("{} payload size overflows", self.what)))?;
        let raw = self.take(bytes)?;
        let out: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "{} holds a non-finite value at element {i}",
                self.what
            )));
        }
        Ok(out)
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Corruption(format!(
                "{} has {} trailing bytes",
                self.what,
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: usize, what: &str) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Data(format!("{what} = {v} exceeds u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub(crate) fn put_f32s(out: &mut Vec<u8>, values: &[f32]) {
    out.reserve(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub(crate) fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

pub(crate) fn write_all(path: &Path, bytes: &[u8]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn encode_activations(stack: &ActivationStack) -> Result<Vec<u8>> {
    let payload: usize = stack.blocks().iter().map(|b| b.data().len()).sum();
    let mut out = Vec::with_capacity(12 + 12 * stack.block_count() + 4 * payload);
    out.extend_from_slice(&ACTIVATION_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_u32(&mut out, stack.block_count(), "block count")?;
    for b in stack.blocks() {
        put_u32(&mut out, b.height(), "H")?;
        put_u32(&mut out, b.width(), "W")?;
        put_u32(&mut out, b.channels(), "C")?;
    }
    for b in stack.blocks() {
        put_f32s(&mut out, b.data());
    }
    Ok(out)
}

fn activation_header(r: &mut ByteReader<'_>) -> Result<Vec<(usize, usize, usize)>> {
    r.magic(&ACTIVATION_MAGIC)?;
    r.version()?;
    let count = r.u32()? as usize;
    if count == 0 {
        return Err(Error::Format("activation file declares zero blocks".into()));
    }
    let mut shapes = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let h = r.u32()? as usize;
        let w = r.u32()? as usize;
        let c = r.u32()? as usize;
        if h == 0 || w == 0 || c == 0 {
            return Err(Error::Format(format!("block shape {h}x{w}x{c} has a zero dim")));
        }
        shapes.push((h, w, c));
    }
    Ok(shapes)
}

pub fn decode_activations(bytes: &[u8]) -> Result<ActivationStack> {
    let mut r = ByteReader::new(bytes, "activation file");
    let shapes = activation_header(&mut r)?;
    let mut blocks = Vec::with_capacity(shapes.len());
    for (h, w, c) in shapes {
        let n = h
            .checked_mul(w)
            .and_then(|x| x.checked_mul(c))
            .ok_or_else(|| Error::Format("block size overflows".into()))?;
        let data = r.f32s(n)?;
        blocks.push(ActivationBlock::new(h, w, c, data)?);
    }
    r.finish()?;
    ActivationStack::new(blocks)
}

pub fn read_activation_file(path: impl AsRef<Path>) -> Result<ActivationStack> {
    decode_activations(&read_all(path.as_ref())?)
}

pub fn write_activation_file(stack: &ActivationStack, path: impl AsRef<Path>) -> Result<()> {
    write_all(path.as_ref(), &encode_activations(stack)?)
}

/// Reads only the block shapes of an activation file.
pub fn read_activation_shapes(path: impl AsRef<Path>) -> Result<Vec<(usize, usize, usize)>> {
    let path = path.as_ref();
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut head = [0u8; 12];
    f.read_exact(&mut head)
        .map_err(|_| Error::Format(format!("{} too short for a header", path.display())))?;
    let count = u32::from_le_bytes([head[8], head[9], head[10], head[11]]) as usize;
    let mut buf = head.to_vec();
    let mut rest = vec![0u8; count.min(1 << 20) * 12];
    f.read_exact(&mut rest)
        .map_err(|_| Error::Corruption(format!("{} header truncated", path.display())))?;
    buf.extend_from_slice(&rest);
    activation_header(&mut ByteReader::new(&buf, "activation file"))
}

pub fn encode_embeddings(set: &EmbeddingSet) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + set.data().len() * 4);
    out.extend_from_slice(&EMBEDDING_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_u32(&mut out, set.len(), "N")?;
    put_u32(&mut out, set.dim(), "D")?;
    put_f32s(&mut out, set.data());
    Ok(out)
}

fn embedding_header(r: &mut ByteReader<'_>) -> Result<(usize, usize)> {
    r.magic(&EMBEDDING_MAGIC)?;
    r.version()?;
    let n = r.u32()? as usize;
    let d = r.u32()? as usize;
    if d == 0 {
        return Err(Error::Format("embedding file declares D = 0".into()));
    }
    Ok((n, d))
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingSet> {
    let mut r = ByteReader::new(bytes, "embedding file");
    let (n, d) = embedding_header(&mut r)?;
    let count = n.checked_mul(d).ok_or_else(|| Error::Format("N*D overflows".into()))?;
    let data = r.f32s(count)?;
    r.finish()?;
    EmbeddingSet::new(d, data, Role::default())
}

pub fn read_embedding_file(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    decode_embeddings(&read_all(path.as_ref())?)
}

pub fn write_embedding_file(set: &EmbeddingSet, path: impl AsRef<Path>) -> Result<()> {
    write_all(path.as_ref(), &encode_embeddings(set)?)
}

/// Reads `(N, D)` from an embedding file header.
pub fn read_embedding_shape(path: impl AsRef<Path>) -> Result<(usize, usize)> {
    let path = path.as_ref();
    let mut head = [0u8; 16];
    File::open(path)
        .and_then(|mut f| f.read_exact(&mut head))
        .map_err(|e| Error::io(path, e))?;
    embedding_header(&mut ByteReader::new(&head, "embedding file"))
}

/// Sniffs the container kind from the magic bytes.
pub fn detect_kind(path: impl AsRef<Path>) -> Result<FileKind> {
    let path = path.as_ref();
    let mut magic = [0u8; 4];
    File::open(path)
        .and_then(|mut f| f.read_exact(&mut magic))
        .map_err(|e| Error::io(path, e))?;
    match &magic {
        m if *m == ACTIVATION_MAGIC => Ok(FileKind::Activations),
        m if *m == EMBEDDING_MAGIC => Ok(FileKind::Embeddings),
        m => Err(Error::Format(format!("unknown magic {:?}", String::from_utf8_lossy(m)))),
    }
}
