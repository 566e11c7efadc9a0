use crate::error::{Error, Result};
use crate::types::{EmbeddingSet, Role};

/// Row-wise `[src | tgt]` concatenation, optionally followed by one column
/// holding the relative azimuth in degrees.
pub fn joint_concat(src: &EmbeddingSet, tgt: &EmbeddingSet, angles_deg: Option<&[f64]>) -> Result<EmbeddingSet> {
    if src.len() != tgt.len() {
        return Err(Error::Shape(format!(
            "row counts differ: {} source vs {} target",
            src.len(),
            tgt.len()
        )));
    }
    if let Some(a) = angles_deg {
        if a.len() != src.len() {
            return Err(Error::Shape(format!("{} angles for {} rows", a.len(), src.len())));
        }
    }
    let dim = src.dim() + tgt.dim() + usize::from(angles_deg.is_some());
    let mut data = Vec::with_capacity(dim * src.len());
    for i in 0..src.len() {
        data.extend_from_slice(src.row(i));
        data.extend_from_slice(tgt.row(i));
        if let Some(a) = angles_deg {
            data.push(a[i] as f32);
        }
    }
    let role = if src.role() == tgt.role() {
        src.role()
    } else {
        Role::Generated
    };
    EmbeddingSet::new(dim, data, role)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_prefix() {
        let s = EmbeddingSet::from_rows(&[[1.0f32, 2.0]], Role::Anchor).unwrap();
        let t = EmbeddingSet::from_rows(&[[3.0f32, 4.0, 5.0]], Role::Anchor).unwrap();
        let j = joint_concat(&s, &t, None).unwrap();
        assert_eq!(j.dim(), 5);
        assert_eq!(j.row(0), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(j.role(), Role::Anchor);
    }

    #[test]
    fn angle_column_last() {
        let s = EmbeddingSet::from_rows(&[[1.0f32]], Role::Anchor).unwrap();
        let j = joint_concat(&s, &s, Some(&[90.0])).unwrap();
        assert_eq!(j.row(0), &[1.0, 1.0, 90.0]);
    }

    #[test]
    fn count_mismatch() {
        let s = EmbeddingSet::from_rows(&[[1.0f32], [2.0]], Role::Anchor).unwrap();
        let t = EmbeddingSet::from_rows(&[[1.0f32]], Role::Anchor).unwrap();
        assert!(matches!(joint_concat(&s, &t, None), Err(Error::Shape(_))));
    }
}
