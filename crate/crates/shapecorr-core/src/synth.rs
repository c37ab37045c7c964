//! Synthetic test meshes with known structure: icospheres (analytic
//! Laplace-Beltrami spectrum), flat grids (analytic flat spectrum),
//! cylinders with a shared parameterization (dense ground-truth maps,
//! optionally bent into a non-isometric pose), and tiny fixtures.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::TriangleMesh;

/// Regular tetrahedron centered at the origin.
pub fn tetrahedron() -> TriangleMesh {
    let vertices = vec![
        [1.0, 1.0, 1.0],
        [-1.0, -1.0, 1.0],
        [-1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0],
    ];
    let faces = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    TriangleMesh::new(vertices, faces).unwrap()
}

/// Unit icosphere: icosahedron refined `subdivisions` times, vertices
/// projected to the unit sphere. `subdivisions = 3` gives 642 vertices,
/// 1280 faces, 1920 edges.
pub fn icosphere(subdivisions: usize) -> TriangleMesh {
    let phi = (1.0 + libm::sqrt(5.0)) / 2.0;
    let mut vertices: Vec<[f64; 3]> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
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
    for v in &mut vertices {
        project_unit(v);
    }
    for _ in 0..subdivisions {
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut next_faces = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0usize; 3];
            for (slot, (a, b)) in mid
                .iter_mut()
                .zip([(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
            {
                let key = if a < b { (a, b) } else { (b, a) };
                *slot = *midpoint.entry(key).or_insert_with(|| {
                    let pa = vertices[a];
                    let pb = vertices[b];
                    let mut m = [
                        0.5 * (pa[0] + pb[0]),
                        0.5 * (pa[1] + pb[1]),
                        0.5 * (pa[2] + pb[2]),
                    ];
                    project_unit(&mut m);
                    vertices.push(m);
                    vertices.len() - 1
                });
            }
            next_faces.push([f[0], mid[0], mid[2]]);
            next_faces.push([f[1], mid[1], mid[0]]);
            next_faces.push([f[2], mid[2], mid[1]]);
            next_faces.push([mid[0], mid[1], mid[2]]);
        }
        faces = next_faces;
    }
    TriangleMesh::new(vertices, faces).unwrap()
}

fn project_unit(v: &mut [f64; 3]) {
    let n = libm::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for a in v.iter_mut() {
        *a /= n;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridStyle {
    /// Every cell split along the same diagonal.
    Uniform,
    /// Diagonal direction alternates with cell parity.
    Alternating,
}

/// Triangulated unit square `[0,1]^2` in the z=0 plane with `n x n` cells.
pub fn unit_square_grid(n: usize, style: GridStyle) -> TriangleMesh {
    assert!(n >= 1);
    let step = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for r in 0..=n {
        for c in 0..=n {
            vertices.push([c as f64 * step, r as f64 * step, 0.0]);
        }
    }
    let at = |r: usize, c: usize| r * (n + 1) + c;
    let mut faces = Vec::with_capacity(2 * n * n);
    for r in 0..n {
        for c in 0..n {
            let (a, b, d, e) = (at(r, c), at(r, c + 1), at(r + 1, c), at(r + 1, c + 1));
            let flip = matches!(style, GridStyle::Alternating) && (r + c) % 2 == 1;
            if flip {
                faces.push([a, b, d]);
                faces.push([b, e, d]);
            } else {
                faces.push([a, b, e]);
                faces.push([a, e, d]);
            }
        }
    }
    TriangleMesh::new(vertices, faces).unwrap()
}

/// Open cylinder with `rings` vertex rows along the axis and `segments`
/// vertices per row, radius 0.35 and length 2. `bend_angle` (radians) bends
/// the axis into a circular arc while keeping the vertex layout, so two
/// cylinders with different bend angles correspond index-to-index.
pub fn cylinder(rings: usize, segments: usize, bend_angle: f64) -> TriangleMesh {
    assert!(rings >= 2 && segments >= 3);
    let radius = 0.35;
    let length = 2.0;
    let mut vertices = Vec::with_capacity(rings * segments);
    for r in 0..rings {
        let t = r as f64 / (rings - 1) as f64;
        let y = length * (t - 0.5);
        for s in 0..segments {
            let theta = core::f64::consts::TAU * s as f64 / segments as f64;
            let p = [radius * libm::cos(theta), y, radius * libm::sin(theta)];
            vertices.push(bend_xy(p, bend_angle / length));
        }
    }
    let at = |r: usize, s: usize| r * segments + s;
    let mut faces = Vec::with_capacity(2 * (rings - 1) * segments);
    for r in 0..rings - 1 {
        for s in 0..segments {
            let s1 = (s + 1) % segments;
            faces.push([at(r, s), at(r + 1, s), at(r + 1, s1)]);
            faces.push([at(r, s), at(r + 1, s1), at(r, s1)]);
        }
    }
    TriangleMesh::new(vertices, faces).unwrap()
}

/// Bend deformer about the z axis: curvature is per unit of y.
fn bend_xy(p: [f64; 3], curvature: f64) -> [f64; 3] {
    if curvature.abs() < 1e-12 {
        return p;
    }
    let rho = 1.0 / curvature;
    let phi = p[1] * curvature;
    [
        (p[0] + rho) * libm::cos(phi) - rho,
        (p[0] + rho) * libm::sin(phi),
        p[2],
    ]
}

/// Normalized axial/angular parameterization `(t, cos theta, sin theta)` per
/// vertex of a [`cylinder`] with the same `(rings, segments)` layout; shared
/// across bend angles, which makes it a synthetic stand-in for a semantic
/// descriptor field.
pub fn cylinder_parameterization(rings: usize, segments: usize) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(rings * segments);
    for r in 0..rings {
        let t = r as f64 / (rings - 1) as f64;
        for s in 0..segments {
            let theta = core::f64::consts::TAU * s as f64 / segments as f64;
            out.push([t, libm::cos(theta), libm::sin(theta)]);
        }
    }
    out
}

/// Degenerate-but-valid strip of collinear triangles whose edge graph is the
/// path `v0 - v1 - ... - v(n-1)` with unit edges (plus the length-2 skip
/// edges the triangles introduce). Geodesic fixtures only; area-based
/// operators reject it.
pub fn strip_chain(n: usize) -> TriangleMesh {
    assert!(n >= 3);
    let vertices = (0..n).map(|i| [i as f64, 0.0, 0.0]).collect();
    let faces = (0..n - 2).map(|i| [i, i + 1, i + 2]).collect();
    TriangleMesh::new(vertices, faces).unwrap()
}

/// Fan over a seeded random point cloud; topologically valid, geometrically
/// arbitrary.
pub fn random_fan(n: usize, seed: u64) -> TriangleMesh {
    assert!(n >= 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices = (0..n)
        .map(|_| {
            [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ]
        })
        .collect();
    let faces = (1..n - 1).map(|i| [0, i, i + 1]).collect();
    TriangleMesh::new(vertices, faces).unwrap()
}

pub fn rot_x(a: f64) -> [[f64; 3]; 3] {
    let (s, c) = (libm::sin(a), libm::cos(a));
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

pub fn rot_y(a: f64) -> [[f64; 3]; 3] {
    let (s, c) = (libm::sin(a), libm::cos(a));
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

pub fn rot_z(a: f64) -> [[f64; 3]; 3] {
    let (s, c) = (libm::sin(a), libm::cos(a));
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

pub const IDENTITY3: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts_follow_euler() {
        for (s, v) in [(0, 12), (1, 42), (2, 162), (3, 642)] {
            let m = icosphere(s);
            assert_eq!(m.n_vertices(), v);
            assert_eq!(m.n_faces(), 20 * 4usize.pow(s as u32));
            assert_eq!(m.n_vertices() + m.n_faces() - m.n_edges(), 2);
        }
    }

    #[test]
    fn icosphere_vertices_on_unit_sphere() {
        let m = icosphere(2);
        for v in m.vertices() {
            let n = libm::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_counts() {
        for style in [GridStyle::Uniform, GridStyle::Alternating] {
            let m = unit_square_grid(4, style);
            assert_eq!(m.n_vertices(), 25);
            assert_eq!(m.n_faces(), 32);
        }
    }

    #[test]
    fn cylinder_shared_layout() {
        let straight = cylinder(10, 8, 0.0);
        let bent = cylinder(10, 8, 1.2);
        assert_eq!(straight.n_vertices(), bent.n_vertices());
        assert_eq!(straight.faces(), bent.faces());
        // the bend is an isometry of the axis only; surface areas drift apart
        assert!((straight.total_area() - bent.total_area()).abs() > 1e-6);
    }

    #[test]
    fn bend_preserves_axis_length() {
        // points on the axis (x = 0) keep their arc length
        let p = bend_xy([0.0, 0.7, 0.0], 1.3);
        let r = 1.0 / 1.3;
        let expect = [(r) * libm::cos(0.7 * 1.3) - r, r * libm::sin(0.7 * 1.3), 0.0];
        for a in 0..3 {
            assert!((p[a] - expect[a]).abs() < 1e-12);
        }
    }

    #[test]
    fn strip_chain_edges() {
        let m = strip_chain(4);
        assert_eq!(m.n_vertices(), 4);
        // path edges 01, 12, 23 plus skip edges 02, 13
        assert_eq!(m.n_edges(), 5);
    }
}
