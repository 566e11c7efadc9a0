use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major boolean image.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::Shape(format!(
                "{width}x{height} mask needs {} bits, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(BinaryMask { width, height, bits })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let bits = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        BinaryMask { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[bool] {
        &self.bits[y * self.width..(y + 1) * self.width]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn check_same_size(&self, other: &BinaryMask) -> Result<()> {
        if self.width == other.width && self.height == other.height {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "mask sizes differ: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    fn zip(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> Result<BinaryMask> {
        self.check_same_size(other)?;
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip(other, |a, b| a || b)
    }

    pub fn and_not(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip(other, |a, b| a && !b)
    }

    pub fn not(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> Result<bool> {
        self.check_same_size(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b))
    }

    pub fn is_disjoint(&self, other: &BinaryMask) -> Result<bool> {
        self.check_same_size(other)?;
        Ok(!self.bits.iter().zip(&other.bits).any(|(&a, &b)| a && b))
    }

    /// Binary PBM (P4): rows padded to whole bytes, MSB first, 1 = set.
    pub fn to_pbm(&self) -> Vec<u8> {
        let mut out = format!("P4\n{} {}\n", self.width, self.height).into_bytes();
        let stride = self.width.div_ceil(8);
        for y in 0..self.height {
            let mut row = vec![0u8; stride];
            for (x, &b) in self.row(y).iter().enumerate() {
                if b {
                    row[x / 8] |= 0x80 >> (x % 8);
                }
            }
            out.extend_from_slice(&row);
        }
        out
    }

    pub fn from_pbm(bytes: &[u8]) -> Result<BinaryMask> {
        let mut reader = BufReader::new(bytes);
        let mut tokens = Vec::new();
        let mut line = String::new();
        while tokens.len() < 3 {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                return Err(Error::Corruption("PBM header ended early".into()));
            }
            let content = line.split('#').next().unwrap_or("");
            tokens.extend(content.split_whitespace().map(str::to_owned));
        }
        if tokens[0] != "P4" || tokens.len() > 3 {
            return Err(Error::Format("expected a P4 header of magic, width and height".into()));
        }
        let dim = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad PBM dimension {t:?}")))
        };
        let (w, h) = (dim(&tokens[1])?, dim(&tokens[2])?);
        let stride = w.div_ceil(8);
        let mut payload = Vec::new();
        reader.read_to_end(&mut payload)?;
        if payload.len() != stride * h {
            return Err(Error::Corruption(format!(
                "PBM payload is {} bytes, expected {}",
                payload.len(),
                stride * h
            )));
        }
        Ok(BinaryMask::from_fn(w, h, |x, y| {
            payload[y * stride + x / 8] & (0x80 >> (x % 8)) != 0
        }))
    }

    pub fn save_pbm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_pbm()).map_err(|e| Error::io(path, e))
    }

    pub fn load_pbm(path: impl AsRef<Path>) -> Result<BinaryMask> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_pbm(&bytes)
    }
}
