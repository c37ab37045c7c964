//! Triangle meshes: loading, validation, normalization, and the discrete
//! operators (cotangent stiffness, lumped mass) everything downstream uses.

mod ops;
mod parse;
mod sparse;

pub use ops::{cotangent_stiffness, lumped_mass};
pub use parse::{load_mesh, MeshFormat};
pub use sparse::SparseOperator;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// Coordinates below this are treated as numerically zero (post-normalization
/// double-precision noise floor); face areas under it are degenerate.
pub const AREA_EPS: f64 = 1e-14;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("topology error: {0}")]
    Topology(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
}

/// Validated triangle mesh with precomputed connectivity.
///
/// Faces index into `vertices`; the undirected edge list stores each edge
/// once as an ordered pair. Construction removes unreferenced vertices and
/// rejects out-of-range or repeated indices, so instances are immutable and
/// always well-formed.
#[derive(Clone, Debug)]
pub struct TriangleMesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    vtx2vtx_ptr: Vec<usize>,
    vtx2vtx: Vec<usize>,
    vtx2face_ptr: Vec<usize>,
    vtx2face: Vec<usize>,
}

/// Result of cleanup: the mesh plus the original-vertex -> cleaned-vertex map
/// (`None` where an unreferenced vertex was dropped). External per-vertex
/// files are aligned through this remap.
#[derive(Clone, Debug)]
pub struct CleanedMesh {
    pub mesh: TriangleMesh,
    pub remap: Vec<Option<usize>>,
}

impl TriangleMesh {
    /// Validate raw vertex/face lists, drop unreferenced vertices, and build
    /// connectivity. Returns the mesh together with the index remap.
    pub fn from_parts(
        vertices: Vec<[f64; 3]>,
        faces: Vec<[usize; 3]>,
    ) -> Result<CleanedMesh, MeshError> {
        if faces.is_empty() {
            return Err(MeshError::Topology("mesh has no faces".into()));
        }
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(MeshError::Topology(format!(
                        "face {fi} references vertex {v} of a {n}-vertex mesh"
                    )));
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::Topology(format!(
                    "face {fi} is degenerate: indices ({}, {}, {})",
                    f[0], f[1], f[2]
                )));
            }
        }

        let mut referenced = vec![false; n];
        for f in &faces {
            for &v in f {
                referenced[v] = true;
            }
        }
        let mut remap: Vec<Option<usize>> = vec![None; n];
        let mut kept = Vec::new();
        for (i, r) in referenced.iter().enumerate() {
            if *r {
                remap[i] = Some(kept.len());
                kept.push(vertices[i]);
            }
        }
        let faces: Vec<[usize; 3]> = faces
            .iter()
            .map(|f| [remap[f[0]].unwrap(), remap[f[1]].unwrap(), remap[f[2]].unwrap()])
            .collect();

        Ok(CleanedMesh {
            mesh: Self::build(kept, faces),
            remap,
        })
    }

    /// As [`from_parts`](Self::from_parts) but discards the remap; intended
    /// for generated meshes that reference every vertex.
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        Ok(Self::from_parts(vertices, faces)?.mesh)
    }

    fn build(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Self {
        let n = vertices.len();

        let mut edges: Vec<[usize; 2]> = Vec::with_capacity(faces.len() * 3);
        for f in &faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                edges.push(if a < b { [a, b] } else { [b, a] });
            }
        }
        edges.sort_unstable();
        edges.dedup();

        let mut deg = vec![0usize; n];
        for e in &edges {
            deg[e[0]] += 1;
            deg[e[1]] += 1;
        }
        let mut vtx2vtx_ptr = vec![0usize; n + 1];
        for i in 0..n {
            vtx2vtx_ptr[i + 1] = vtx2vtx_ptr[i] + deg[i];
        }
        let mut vtx2vtx = vec![0usize; vtx2vtx_ptr[n]];
        let mut cursor = vtx2vtx_ptr.clone();
        for e in &edges {
            vtx2vtx[cursor[e[0]]] = e[1];
            cursor[e[0]] += 1;
            vtx2vtx[cursor[e[1]]] = e[0];
            cursor[e[1]] += 1;
        }
        for i in 0..n {
            vtx2vtx[vtx2vtx_ptr[i]..vtx2vtx_ptr[i + 1]].sort_unstable();
        }

        let mut fdeg = vec![0usize; n];
        for f in &faces {
            for &v in f {
                fdeg[v] += 1;
            }
        }
        let mut vtx2face_ptr = vec![0usize; n + 1];
        for i in 0..n {
            vtx2face_ptr[i + 1] = vtx2face_ptr[i] + fdeg[i];
        }
        let mut vtx2face = vec![0usize; vtx2face_ptr[n]];
        let mut cursor = vtx2face_ptr.clone();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                vtx2face[cursor[v]] = fi;
                cursor[v] += 1;
            }
        }

        TriangleMesh {
            vertices,
            faces,
            edges,
            vtx2vtx_ptr,
            vtx2vtx,
            vtx2face_ptr,
            vtx2face,
        }
    }

    #[inline]
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    #[inline]
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn vertex(&self, i: usize) -> [f64; 3] {
        self.vertices[i]
    }

    #[inline]
    pub fn face(&self, i: usize) -> [usize; 3] {
        self.faces[i]
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// One-ring vertex neighbors of `i`, ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.vtx2vtx[self.vtx2vtx_ptr[i]..self.vtx2vtx_ptr[i + 1]]
    }

    /// Faces incident to vertex `i`.
    pub fn incident_faces(&self, i: usize) -> &[usize] {
        &self.vtx2face[self.vtx2face_ptr[i]..self.vtx2face_ptr[i + 1]]
    }

    pub fn edge_length(&self, e: [usize; 2]) -> f64 {
        dist(self.vertices[e[0]], self.vertices[e[1]])
    }

    pub fn face_area(&self, fi: usize) -> f64 {
        let [a, b, c] = self.faces[fi];
        let u = sub3(self.vertices[b], self.vertices[a]);
        let v = sub3(self.vertices[c], self.vertices[a]);
        0.5 * norm3(cross3(u, v))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_faces()).map(|f| self.face_area(f)).sum()
    }

    /// Unnormalized face normal from the vertex winding.
    pub fn face_normal(&self, fi: usize) -> [f64; 3] {
        let [a, b, c] = self.faces[fi];
        cross3(
            sub3(self.vertices[b], self.vertices[a]),
            sub3(self.vertices[c], self.vertices[a]),
        )
    }

    pub fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.n_vertices()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n_vertices()
    }

    /// Center the vertex centroid at the origin and scale so the farthest
    /// vertex sits on the unit sphere. Connectivity is untouched.
    pub fn normalize_unit_sphere(&self) -> Result<TriangleMesh, MeshError> {
        let n = self.n_vertices() as f64;
        let mut centroid = [0.0f64; 3];
        for v in &self.vertices {
            for a in 0..3 {
                centroid[a] += v[a];
            }
        }
        for a in 0..3 {
            centroid[a] /= n;
        }
        let mut max_norm = 0.0f64;
        for v in &self.vertices {
            max_norm = max_norm.max(norm3(sub3(*v, centroid)));
        }
        if max_norm < AREA_EPS {
            return Err(MeshError::DegenerateGeometry(
                "all vertices coincide; cannot normalize".into(),
            ));
        }
        let mut out = self.clone();
        for v in &mut out.vertices {
            for a in 0..3 {
                v[a] = (v[a] - centroid[a]) / max_norm;
            }
        }
        Ok(out)
    }

    /// Apply a rigid/uniform transform `v -> scale * rot * v + t`.
    pub fn transformed(&self, rot: [[f64; 3]; 3], t: [f64; 3], scale: f64) -> TriangleMesh {
        let mut out = self.clone();
        for v in &mut out.vertices {
            let p = *v;
            for a in 0..3 {
                v[a] = scale * (rot[a][0] * p[0] + rot[a][1] * p[1] + rot[a][2] * p[2]) + t[a];
            }
        }
        out
    }
}

#[inline]
pub(crate) fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    libm::sqrt(dot3(a, a))
}

#[inline]
pub(crate) fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm3(sub3(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_out_of_range_index() {
        let vertices = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let err = TriangleMesh::new(vertices, vec![[0, 1, 99]]).unwrap_err();
        assert!(matches!(err, MeshError::Topology(_)));
    }

    #[test]
    fn rejects_repeated_index() {
        let vertices = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let err = TriangleMesh::new(vertices, vec![[0, 1, 1]]).unwrap_err();
        assert!(matches!(err, MeshError::Topology(_)));
    }

    #[test]
    fn drops_unreferenced_vertices_with_remap() {
        let vertices = vec![
            [0.0, 0.0, 0.0],
            [9.0, 9.0, 9.0], // never referenced
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
        ];
        let cleaned = TriangleMesh::from_parts(vertices, vec![[0, 2, 3]]).unwrap();
        assert_eq!(cleaned.mesh.n_vertices(), 3);
        assert_eq!(cleaned.remap, vec![Some(0), None, Some(1), Some(2)]);
        assert_eq!(cleaned.mesh.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn tetrahedron_counts() {
        let m = synth::tetrahedron();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_faces(), 4);
        assert_eq!(m.n_edges(), 6);
        // closed genus-0: V - E + F = 2
        assert_eq!(m.n_vertices() + m.n_faces(), m.n_edges() + 2);
    }

    #[test]
    fn normalize_centers_and_scales() {
        let m = synth::tetrahedron().transformed(
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            [5.0, 5.0, 5.0],
            3.0,
        );
        let n = m.normalize_unit_sphere().unwrap();
        let mut centroid = [0.0; 3];
        let mut max_norm: f64 = 0.0;
        for v in n.vertices() {
            for a in 0..3 {
                centroid[a] += v[a] / n.n_vertices() as f64;
            }
            max_norm = max_norm.max(norm3(*v));
        }
        assert!(norm3(centroid) < 1e-12);
        assert_abs_diff_eq!(max_norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn normalize_is_idempotent_and_placement_invariant() {
        let base = synth::icosphere(1);
        let once = base.normalize_unit_sphere().unwrap();
        let twice = once.normalize_unit_sphere().unwrap();
        for (a, b) in once.vertices().iter().zip(twice.vertices()) {
            assert!(dist(*a, *b) < 1e-12);
        }
        let moved = base.transformed(
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            [-2.0, 7.0, 0.25],
            0.125,
        );
        let from_moved = moved.normalize_unit_sphere().unwrap();
        for (a, b) in once.vertices().iter().zip(from_moved.vertices()) {
            assert!(dist(*a, *b) < 1e-10);
        }
    }

    #[test]
    fn normalize_rejects_coincident_cloud() {
        let vertices = vec![[1.0, 1.0, 1.0]; 3];
        let m = TriangleMesh::new(vertices, vec![[0, 1, 2]]);
        // repeated positions are fine topologically; normalization must fail
        let err = m.unwrap().normalize_unit_sphere().unwrap_err();
        assert!(matches!(err, MeshError::DegenerateGeometry(_)));
    }
}
