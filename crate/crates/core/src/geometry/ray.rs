use super::mesh::TriMesh;
use super::Vec3;

const PARALLEL_EPS: f64 = 1e-12;

/// Möller–Trumbore, two-sided. Returns the ray parameter of a hit with t > `t_min`.
pub fn intersect_triangle(orig: &Vec3, dir: &Vec3, v0: &Vec3, v1: &Vec3, v2: &Vec3, t_min: f64) -> Option<f64> {
    let e1 = v1 - v0;
    let e2 = v2 - v0;
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < PARALLEL_EPS {
        return None;
    }
    let inv = 1.0 / det;
    let s = orig - v0;
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > t_min).then_some(t)
}

/// One ray/surface crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub face: usize,
    pub t: f64,
    /// The face normal points back towards the ray origin.
    pub entering: bool,
}

/// Every crossing of the ray with the mesh, sorted by t (then face index).
pub fn ray_crossings(mesh: &TriMesh, orig: &Vec3, dir: &Vec3) -> Vec<Crossing> {
    let mut hits: Vec<Crossing> = (0..mesh.face_count())
        .filter_map(|f| {
            let [a, b, c] = mesh.face_vertices(f);
            intersect_triangle(orig, dir, &a, &b, &c, 1e-9).map(|t| Crossing {
                face: f,
                t,
                entering: mesh.face_normal(f).dot(dir) < 0.0,
            })
        })
        .collect();
    hits.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.face.cmp(&b.face)));
    hits
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hits_unit_triangle() {
        let (a, b, c) = (
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        );
        let o = Vec3::new(0.25, 0.25, 2.0);
        let t = intersect_triangle(&o, &-Vec3::z(), &a, &b, &c, 0.0).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        assert!(intersect_triangle(&o, &Vec3::z(), &a, &b, &c, 0.0).is_none());
        let miss = Vec3::new(0.9, 0.9, 2.0);
        assert!(intersect_triangle(&miss, &-Vec3::z(), &a, &b, &c, 0.0).is_none());
    }

    #[test]
    fn parallel_ray_misses() {
        let (a, b, c) = (Vec3::zeros(), Vec3::x(), Vec3::y());
        assert!(intersect_triangle(&Vec3::new(-1.0, 0.2, 0.0), &Vec3::x(), &a, &b, &c, 0.0).is_none());
    }

    #[test]
    fn cube_crossings_enter_then_exit() {
        let cube = TriMesh::cube(0.5);
        let hits = ray_crossings(&cube, &Vec3::new(3.0, 0.1, 0.2), &-Vec3::x());
        assert_eq!(hits.len(), 2);
        assert!(hits[0].entering && !hits[1].entering);
        assert!((hits[0].t - 2.5).abs() < 1e-12 && (hits[1].t - 3.5).abs() < 1e-12);
    }
}
