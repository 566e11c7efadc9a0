use crate::error::{Error, Result};
use crate::types::{norm_f32, EmbeddingSet, FeatureVector, UNIT_NORM_TOL};

fn check_unit(v: &[f32], which: &str) -> Result<f64> {
    let n = norm_f32(v);
    if (n - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::Contract(format!("{which} is not unit norm (‖·‖ = {n})")));
    }
    Ok(n)
}

/// Half the Euclidean distance between two unit embeddings, in [0, 1].
///
/// Inputs are renormalised internally so that `d(f, f) = 0` and
/// `d(f, −f) = 1` hold exactly in floating point.
pub fn d_prism(f1: &FeatureVector, f2: &FeatureVector) -> Result<f64> {
    d_prism_slices(f1.values(), f2.values())
}

pub(crate) fn d_prism_slices(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("dims differ: {} vs {}", a.len(), b.len())));
    }
    check_unit(a, "first embedding")?;
    check_unit(b, "second embedding")?;
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    let cos = (dot / (na * nb).sqrt()).clamp(-1.0, 1.0);
    let d = if cos <= 0.0 {
        // 1 − cos ≥ 1 here, no cancellation
        ((1.0 - cos) * 0.5).sqrt()
    } else {
        let (sa, sb) = (na.sqrt(), nb.sqrt());
        let sq: f64 = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| {
                let t = f64::from(x) / sa - f64::from(y) / sb;
                t * t
            })
            .sum();
        0.5 * sq.sqrt()
    };
    Ok(d.clamp(0.0, 1.0))
}

/// Row-wise distances between two aligned embedding sets.
pub fn d_prism_rows(a: &EmbeddingSet, b: &EmbeddingSet) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("row counts differ: {} vs {}", a.len(), b.len())));
    }
    a.rows().zip(b.rows()).map(|(x, y)| d_prism_slices(x, y)).collect()
}

/// Cosine similarity of two non-zero vectors.
pub fn cosine_score(e1: &FeatureVector, e2: &FeatureVector) -> Result<f64> {
    if e1.dim() != e2.dim() {
        return Err(Error::Shape(format!("dims differ: {} vs {}", e1.dim(), e2.dim())));
    }
    let (n1, n2) = (e1.norm(), e2.norm());
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::Degenerate("cosine of a zero vector".into()));
    }
    let dot: f64 = e1
        .values()
        .iter()
        .zip(e2.values())
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum();
    Ok((dot / (n1 * n2)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: &[f32]) -> FeatureVector {
        FeatureVector::unit(v.to_vec()).unwrap()
    }

    #[test]
    fn identity_and_antipode() {
        let f = unit(&[0.6, 0.0, 0.8]);
        let g = unit(&[-0.6, -0.0, -0.8]);
        assert_eq!(d_prism(&f, &f).unwrap(), 0.0);
        assert_eq!(d_prism(&f, &g).unwrap(), 1.0);
    }

    #[test]
    fn orthogonal() {
        let d = d_prism(&unit(&[1.0, 0.0]), &unit(&[0.0, 1.0])).unwrap();
        assert!((d - 0.5 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_unit() {
        let f = FeatureVector::new(vec![1.0, 1.0]).unwrap();
        assert!(matches!(d_prism(&f, &f), Err(Error::Contract(_))));
    }

    #[test]
    fn cosine_cases() {
        let e = FeatureVector::new(vec![2.0, -1.0, 0.5]).unwrap();
        let neg = FeatureVector::new(vec![-2.0, 1.0, -0.5]).unwrap();
        assert!((cosine_score(&e, &e).unwrap() - 1.0).abs() < 1e-15);
        assert!((cosine_score(&e, &neg).unwrap() + 1.0).abs() < 1e-15);
        let x = FeatureVector::new(vec![1.0, 0.0]).unwrap();
        let y = FeatureVector::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(cosine_score(&x, &y).unwrap(), 0.0);
        let z = FeatureVector::new(vec![0.0, 0.0]).unwrap();
        assert!(cosine_score(&x, &z).is_err());
    }
}
