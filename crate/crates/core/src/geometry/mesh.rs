use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Vec3;
use crate::error::{Error, Result};

/// Faces with twice-area below this are dropped at construction.
const MIN_DOUBLE_AREA: f64 = 1e-12;

/// Indexed triangle mesh. Faces wind counter-clockwise seen from outside,
/// so `face_normal` points outwards.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Validates indices and drops zero-area faces (which shifts later face ids).
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(v) = vertices.iter().find(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::Data(format!("non-finite vertex {v:?}")));
        }
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&k| k >= vertices.len()) {
                return Err(Error::Data(format!(
                    "face {i} references a vertex beyond {}",
                    vertices.len()
                )));
            }
        }
        let faces = faces
            .into_iter()
            .filter(|f| {
                let n = (vertices[f[1]] - vertices[f[0]]).cross(&(vertices[f[2]] - vertices[f[0]]));
                n.norm() >= MIN_DOUBLE_AREA
            })
            .collect();
        Ok(TriMesh { vertices, faces })
    }

    pub fn empty() -> Self {
        TriMesh {
            vertices: Vec::new(),
            faces: Vec::new(),
        }
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn face_vertices(&self, f: usize) -> [Vec3; 3] {
        self.faces[f].map(|i| self.vertices[i])
    }

    /// Unnormalised (v1−v0)×(v2−v0).
    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.face_vertices(f);
        (b - a).cross(&(c - a))
    }

    /// Largest vertex distance from the origin.
    pub fn bounding_radius(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Centres the bounding box on the origin and scales to bounding radius 1.
    pub fn normalized(&self) -> Result<TriMesh> {
        if self.vertices.is_empty() {
            return Ok(self.clone());
        }
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        let centre = (lo + hi) / 2.0;
        let r = self.vertices.iter().map(|v| (v - centre).norm()).fold(0.0, f64::max);
        if r <= 0.0 {
            return Err(Error::Degenerate("mesh has zero extent".into()));
        }
        Ok(TriMesh {
            vertices: self.vertices.iter().map(|v| (v - centre) / r).collect(),
            faces: self.faces.clone(),
        })
    }

    /// Flips any face whose normal points towards the origin. Only meaningful
    /// for star-shaped meshes around the origin.
    fn orient_outward(mut self) -> Self {
        for f in 0..self.faces.len() {
            let [a, b, c] = self.face_vertices(f);
            if self.face_normal(f).dot(&((a + b + c) / 3.0)) < 0.0 {
                self.faces[f].swap(1, 2);
            }
        }
        self
    }

    /// Axis-aligned cube of half-width `h`; faces ordered +X, −X, +Y, −Y, +Z, −Z,
    /// two triangles each.
    pub fn cube(h: f64) -> TriMesh {
        let vertices: Vec<Vec3> = (0..8)
            .map(|i| {
                let s = |bit: usize| if i >> bit & 1 == 1 { h } else { -h };
                Vec3::new(s(0), s(1), s(2))
            })
            .collect();
        let mut faces = Vec::with_capacity(12);
        for axis in 0..3 {
            for sign in [1usize, 0] {
                let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
                let corner = |ub: usize, uc: usize| (sign << axis) | (ub << b) | (uc << c);
                let q = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
                faces.push([q[0], q[1], q[2]]);
                faces.push([q[0], q[2], q[3]]);
            }
        }
        TriMesh { vertices, faces }.orient_outward()
    }

    /// Unit icosphere after `subdivisions` rounds of 4-way splitting.
    pub fn icosphere(subdivisions: usize) -> TriMesh {
        let p = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vec3> = [
            (-1.0, p, 0.0),
            (1.0, p, 0.0),
            (-1.0, -p, 0.0),
            (1.0, -p, 0.0),
            (0.0, -1.0, p),
            (0.0, 1.0, p),
            (0.0, -1.0, -p),
            (0.0, 1.0, -p),
            (p, 0.0, -1.0),
            (p, 0.0, 1.0),
            (-p, 0.0, -1.0),
            (-p, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
        .collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
            let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
                *cache.entry((a.min(b), a.max(b))).or_insert_with(|| {
                    verts.push(((verts[a] + verts[b]) / 2.0).normalize());
                    verts.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for [a, b, c] in faces {
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        TriMesh { vertices, faces }.orient_outward()
    }

    /// `n` independent random triangles inside the unit ball, random winding.
    pub fn random_soup(n: usize, seed: u64) -> TriMesh {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let point = |rng: &mut ChaCha8Rng, r: f64| loop {
            let p = Vec3::new(
                rng.random_range(-r..r),
                rng.random_range(-r..r),
                rng.random_range(-r..r),
            );
            if p.norm() <= r {
                return p;
            }
        };
        let mut vertices = Vec::with_capacity(3 * n);
        let mut faces = Vec::with_capacity(n);
        while faces.len() < n {
            let c = point(&mut rng, 0.7);
            let tri = [
                c + point(&mut rng, 0.3),
                c + point(&mut rng, 0.3),
                c + point(&mut rng, 0.3),
            ];
            if (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).norm() < 1e-3 {
                continue;
            }
            let k = vertices.len();
            vertices.extend(tri);
            faces.push([k, k + 1, k + 2]);
        }
        TriMesh { vertices, faces }
    }

    /// Parses `v x y z` and `f a b c ...` lines. Indices are 1-based (negative
    /// counts back from the latest vertex), `a/b/c` tokens keep the first
    /// field, polygons are fan-triangulated and other records are ignored.
    pub fn parse_obj(text: &str) -> Result<TriMesh> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |msg: String| Error::Parse { line, msg };
            let mut tok = raw.split_whitespace();
            match tok.next() {
                Some("v") => {
                    let c: Vec<f64> = tok
                        .take(3)
                        .map(|t| t.parse::<f64>().map_err(|e| err(format!("bad coordinate {t:?}: {e}"))))
                        .collect::<Result<_>>()?;
                    if c.len() != 3 {
                        return Err(err("vertex needs three coordinates".into()));
                    }
                    vertices.push(Vec3::new(c[0], c[1], c[2]));
                }
                Some("f") => {
                    let idx: Vec<usize> = tok
                        .map(|t| {
                            let first = t.split('/').next().unwrap_or("");
                            let k: i64 = first.parse().map_err(|_| err(format!("bad face index {t:?}")))?;
                            let n = vertices.len() as i64;
                            let resolved = if k > 0 { k - 1 } else { n + k };
                            if k == 0 || resolved < 0 || resolved >= n {
                                return Err(err(format!("face index {k} out of range")));
                            }
                            Ok(resolved as usize)
                        })
                        .collect::<Result<_>>()?;
                    if idx.len() < 3 {
                        return Err(err("face needs at least three vertices".into()));
                    }
                    for k in 1..idx.len() - 1 {
                        faces.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        TriMesh::new(vertices, faces)
    }

    pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_obj(&text)
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
        }
        for f in &self.faces {
            let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outward(m: &TriMesh) -> bool {
        (0..m.face_count()).all(|f| {
            let [a, b, c] = m.face_vertices(f);
            m.face_normal(f).dot(&(a + b + c)) > 0.0
        })
    }

    #[test]
    fn cube_layout() {
        let c = TriMesh::cube(0.5);
        assert_eq!(c.vertices().len(), 8);
        assert_eq!(c.face_count(), 12);
        assert!(outward(&c));
        // faces 0,1 are the +X side
        for f in 0..2 {
            let n = c.face_normal(f).normalize();
            assert!((n - Vec3::x()).norm() < 1e-12);
        }
        assert!((c.bounding_radius() - 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn icosphere_counts() {
        let s = TriMesh::icosphere(2);
        assert_eq!(s.face_count(), 20 * 16);
        assert_eq!(s.vertices().len(), 162);
        assert!(outward(&s));
        assert!(s.vertices().iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn obj_round_trip() {
        let c = TriMesh::cube(1.0);
        assert_eq!(TriMesh::parse_obj(&c.to_obj()).unwrap(), c);
    }

    #[test]
    fn obj_quads_slashes_and_negative_indices() {
        let text = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3//1 -1\n";
        let m = TriMesh::parse_obj(text).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn obj_errors_carry_line() {
        match TriMesh::parse_obj("v 0 0 0\nf 1 2 3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(TriMesh::parse_obj("v 0 0 x\n").is_err());
    }

    #[test]
    fn degenerate_faces_dropped() {
        let v = vec![Vec3::zeros(), Vec3::x(), 2.0 * Vec3::x(), Vec3::y()];
        let m = TriMesh::new(v, vec![[0, 1, 2], [0, 1, 3]]).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 3]]);
        assert!(TriMesh::new(vec![Vec3::zeros()], vec![[0, 0, 1]]).is_err());
    }

    #[test]
    fn normalization() {
        let m = TriMesh::new(
            vec![
                Vec3::new(2.0, 2.0, 2.0),
                Vec3::new(4.0, 2.0, 2.0),
                Vec3::new(2.0, 4.0, 2.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
        .normalized()
        .unwrap();
        assert!((m.bounding_radius() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn soup_is_seeded() {
        assert_eq!(TriMesh::random_soup(50, 3), TriMesh::random_soup(50, 3));
        assert_eq!(TriMesh::random_soup(50, 3).face_count(), 50);
        assert!(TriMesh::random_soup(50, 3).bounding_radius() <= 1.0);
    }
}
