//! Two-layer ReLU projection head producing unit-length embeddings.
//!
//! `h(v) = W2 · relu(W1 · v + b1) + b2`, output `h(v) / ‖h(v)‖`.
//! Parameters are held in f64; the `PRSH` file stores them as f32:
//!
//! ```text
//! "PRSH" | version u32 | C u32 | H u32 | D u32 | W1 (H*C) | b1 (H) | W2 (D*H) | b2 (D)
//! ```

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::{self, ByteReader, FORMAT_VERSION};
use crate::types::{EmbeddingSet, FeatureVector, Role};

pub const HEAD_MAGIC: [u8; 4] = *b"PRSH";

/// Below this output norm the head is considered collapsed.
pub const MIN_OUTPUT_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpHead {
    in_dim: usize,
    hidden_dim: usize,
    out_dim: usize,
    pub(crate) w1: Vec<f64>,
    pub(crate) b1: Vec<f64>,
    pub(crate) w2: Vec<f64>,
    pub(crate) b2: Vec<f64>,
}

/// Intermediate values of one forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub pre_activation: Vec<f64>,
    pub hidden: Vec<f64>,
    pub raw: Vec<f64>,
    pub norm: f64,
    pub output: Vec<f64>,
}

/// Identifies one of the four parameter tensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Param {
    W1,
    B1,
    W2,
    B2,
}

impl Param {
    pub const ALL: [Param; 4] = [Param::W1, Param::B1, Param::W2, Param::B2];

    /// Whether decoupled weight decay applies (matrices only).
    pub fn decays(self) -> bool {
        matches!(self, Param::W1 | Param::W2)
    }
}

impl MlpHead {
    /// He-style uniform fan-in initialisation with zero biases.
    pub fn init(in_dim: usize, hidden_dim: usize, out_dim: usize, seed: u64) -> Result<Self> {
        check_dims(in_dim, hidden_dim, out_dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |n: usize, fan_in: usize| -> Vec<f64> {
            let bound = (6.0 / fan_in as f64).sqrt();
            (0..n).map(|_| rng.random_range(-bound..bound)).collect()
        };
        let w1 = uniform(hidden_dim * in_dim, in_dim);
        let w2 = uniform(out_dim * hidden_dim, hidden_dim);
        Ok(MlpHead {
            in_dim,
            hidden_dim,
            out_dim,
            w1,
            b1: vec![0.0; hidden_dim],
            w2,
            b2: vec![0.0; out_dim],
        })
    }

    pub fn from_parts(
        in_dim: usize,
        hidden_dim: usize,
        out_dim: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
    ) -> Result<Self> {
        check_dims(in_dim, hidden_dim, out_dim)?;
        let sizes = [
            (w1.len(), hidden_dim * in_dim, "W1"),
            (b1.len(), hidden_dim, "b1"),
            (w2.len(), out_dim * hidden_dim, "W2"),
            (b2.len(), out_dim, "b2"),
        ];
        for (got, want, name) in sizes {
            if got != want {
                return Err(Error::Shape(format!("{name} has {got} values, expected {want}")));
            }
        }
        let head = MlpHead {
            in_dim,
            hidden_dim,
            out_dim,
            w1,
            b1,
            w2,
            b2,
        };
        if Param::ALL.iter().any(|&p| head.param(p).iter().any(|v| !v.is_finite())) {
            return Err(Error::Data("non-finite head parameter".into()));
        }
        Ok(head)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn param(&self, p: Param) -> &[f64] {
        match p {
            Param::W1 => &self.w1,
            Param::B1 => &self.b1,
            Param::W2 => &self.w2,
            Param::B2 => &self.b2,
        }
    }

    pub fn param_mut(&mut self, p: Param) -> &mut [f64] {
        match p {
            Param::W1 => &mut self.w1,
            Param::B1 => &mut self.b1,
            Param::W2 => &mut self.w2,
            Param::B2 => &mut self.b2,
        }
    }

    pub fn param_count(&self) -> usize {
        Param::ALL.iter().map(|&p| self.param(p).len()).sum()
    }

    pub fn forward_cached(&self, input: &[f64]) -> Result<ForwardCache> {
        if input.len() != self.in_dim {
            return Err(Error::Shape(format!(
                "head expects input dim {}, got {}",
                self.in_dim,
                input.len()
            )));
        }
        let pre: Vec<f64> = self
            .w1
            .chunks_exact(self.in_dim)
            .zip(&self.b1)
            .map(|(row, b)| dot(row, input) + b)
            .collect();
        let hidden: Vec<f64> = pre.iter().map(|&z| z.max(0.0)).collect();
        let raw: Vec<f64> = self
            .w2
            .chunks_exact(self.hidden_dim)
            .zip(&self.b2)
            .map(|(row, b)| dot(row, &hidden) + b)
            .collect();
        let norm = dot(&raw, &raw).sqrt();
        if !(norm >= MIN_OUTPUT_NORM) {
            return Err(Error::Degenerate(format!("head output norm {norm:e} (collapsed head)")));
        }
        let output = raw.iter().map(|v| v / norm).collect();
        Ok(ForwardCache {
            input: input.to_vec(),
            pre_activation: pre,
            hidden,
            raw,
            norm,
            output,
        })
    }

    pub fn forward_f64(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(input)?.output)
    }

    pub fn forward(&self, v: &FeatureVector) -> Result<FeatureVector> {
        let out = self.forward_f64(&v.to_f64())?;
        FeatureVector::normalized(&out)
    }

    /// Embeds every row of `raw`, preserving order.
    pub fn embed_set(&self, raw: &EmbeddingSet) -> Result<EmbeddingSet> {
        let rows: Vec<Vec<f32>> = (0..raw.len())
            .into_par_iter()
            .map(|i| {
                let input: Vec<f64> = raw.row(i).iter().map(|&x| f64::from(x)).collect();
                let f = self.forward_f64(&input)?;
                Ok(FeatureVector::normalized(&f)?.into_values())
            })
            .collect::<Result<_>>()?;
        if rows.is_empty() {
            return EmbeddingSet::empty(self.out_dim, Role::Generated);
        }
        EmbeddingSet::from_rows(&rows, raw.role())
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(20 + 4 * self.param_count());
        out.extend_from_slice(&HEAD_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        format::put_u32(&mut out, self.in_dim, "C")?;
        format::put_u32(&mut out, self.hidden_dim, "H")?;
        format::put_u32(&mut out, self.out_dim, "D")?;
        for p in Param::ALL {
            let v: Vec<f32> = self.param(p).iter().map(|&x| x as f32).collect();
            format::put_f32s(&mut out, &v);
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes, "head file");
        r.magic(&HEAD_MAGIC)?;
        r.version()?;
        let c = r.u32()? as usize;
        let h = r.u32()? as usize;
        let d = r.u32()? as usize;
        check_dims(c, h, d).map_err(|e| Error::Format(e.to_string()))?;
        let mut read = |n: usize| -> Result<Vec<f64>> { Ok(r.f32s(n)?.into_iter().map(f64::from).collect()) };
        let w1 = read(h * c)?;
        let b1 = read(h)?;
        let w2 = read(d * h)?;
        let b2 = read(d)?;
        r.finish()?;
        MlpHead::from_parts(c, h, d, w1, b1, w2, b2)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        format::write_all(path.as_ref(), &self.encode()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        MlpHead::decode(&format::read_all(path.as_ref())?)
    }
}

fn check_dims(c: usize, h: usize, d: usize) -> Result<()> {
    if c == 0 || h == 0 || d == 0 {
        return Err(Error::Shape(format!("head dims must be >= 1, got {c}/{h}/{d}")));
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_head() -> MlpHead {
        // relu(I v) passes the positive orthant straight through
        MlpHead::from_parts(
            2,
            2,
            2,
            vec![1.0, 0.0, 0.0, 1.0],
            vec![0.0; 2],
            vec![1.0, 0.0, 0.0, 1.0],
            vec![0.0; 2],
        )
        .unwrap()
    }

    #[test]
    fn constant_head_ignores_input() {
        let head = MlpHead::from_parts(3, 2, 3, vec![0.5; 6], vec![0.1; 2], vec![0.0; 6], vec![1.0, 0.0, 0.0]).unwrap();
        for v in [[1.0f32, 2.0, 3.0], [-4.0, 0.0, 9.0]] {
            let f = head.forward(&FeatureVector::new(v.to_vec()).unwrap()).unwrap();
            assert_eq!(f.values(), &[1.0, 0.0, 0.0]);
            assert!(f.is_unit());
        }
    }

    #[test]
    fn identity_head_normalises() {
        let f = identity_head()
            .forward(&FeatureVector::new(vec![3.0, 4.0]).unwrap())
            .unwrap();
        assert!((f.values()[0] - 0.6).abs() < 1e-7);
        assert!((f.values()[1] - 0.8).abs() < 1e-7);
    }

    #[test]
    fn collapsed_head_errors() {
        let head = MlpHead::from_parts(1, 1, 1, vec![1.0], vec![0.0], vec![1.0], vec![0.0]).unwrap();
        let e = head.forward(&FeatureVector::new(vec![-1.0]).unwrap());
        assert!(matches!(e, Err(Error::Degenerate(_))));
    }

    #[test]
    fn wrong_input_dim() {
        assert!(matches!(identity_head().forward_f64(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn random_head_matches_scalar_reference() {
        let head = MlpHead::init(7, 5, 4, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let v: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
            let got = head.forward_f64(&v).unwrap();
            // explicit index loops
            let mut hid = [0.0f64; 5];
            for i in 0..5 {
                let mut s = head.b1[i];
                for j in 0..7 {
                    s += head.w1[i * 7 + j] * v[j];
                }
                hid[i] = if s > 0.0 { s } else { 0.0 };
            }
            let mut out = [0.0f64; 4];
            for i in 0..4 {
                let mut s = head.b2[i];
                for j in 0..5 {
                    s += head.w2[i * 5 + j] * hid[j];
                }
                out[i] = s;
            }
            let n = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            for i in 0..4 {
                assert!((got[i] - out[i] / n).abs() < 1e-12);
            }
            let f = head
                .forward(&FeatureVector::new(v.iter().map(|&x| x as f32).collect()).unwrap())
                .unwrap();
            assert!((f.norm() - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn head_file_round_trip() {
        let head = MlpHead::init(6, 4, 3, 1).unwrap();
        let bytes = head.encode().unwrap();
        assert_eq!(bytes.len(), 20 + 4 * (24 + 4 + 12 + 3));
        let back = MlpHead::decode(&bytes).unwrap();
        assert_eq!(back.encode().unwrap(), bytes);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(MlpHead::decode(&bad), Err(Error::Format(_))));
        assert!(matches!(
            MlpHead::decode(&bytes[..bytes.len() - 2]),
            Err(Error::Corruption(_))
        ));
    }

    #[test]
    fn init_is_seeded() {
        assert_eq!(MlpHead::init(5, 4, 3, 11).unwrap(), MlpHead::init(5, 4, 3, 11).unwrap());
        assert_ne!(MlpHead::init(5, 4, 3, 11).unwrap(), MlpHead::init(5, 4, 3, 12).unwrap());
    }
}
