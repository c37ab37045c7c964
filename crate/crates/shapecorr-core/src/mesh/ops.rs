//! Discrete differential operators on triangle meshes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{dot3, sub3, MeshError, SparseOperator, TriangleMesh, AREA_EPS};

/// Cotangent stiffness matrix: off-diagonal `w_ij = (cot a_ij + cot b_ij)/2`
/// over the triangles sharing edge `(i, j)`, diagonal the negated row sum.
/// Negative cotangent weights are kept as-is.
pub fn cotangent_stiffness(mesh: &TriangleMesh) -> Result<SparseOperator, MeshError> {
    let n = mesh.n_vertices();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(mesh.n_faces() * 12);
    let mut diag = vec![0.0f64; n];
    for fi in 0..mesh.n_faces() {
        let f = mesh.face(fi);
        let area = mesh.face_area(fi);
        if area < AREA_EPS {
            return Err(MeshError::DegenerateGeometry(format!(
                "face {fi} has area {area:.3e} below {AREA_EPS:.0e}"
            )));
        }
        // corner k faces edge (i, j); cot at k = dot / (2 area)
        for corner in 0..3 {
            let k = f[corner];
            let i = f[(corner + 1) % 3];
            let j = f[(corner + 2) % 3];
            let u = sub3(mesh.vertex(i), mesh.vertex(k));
            let v = sub3(mesh.vertex(j), mesh.vertex(k));
            let cot = dot3(u, v) / (2.0 * area);
            let w = 0.5 * cot;
            triplets.push((i, j, w));
            triplets.push((j, i, w));
            diag[i] -= w;
            diag[j] -= w;
        }
    }
    for (i, d) in diag.into_iter().enumerate() {
        triplets.push((i, i, d));
    }
    Ok(SparseOperator::from_triplets(n, triplets))
}

/// Diagonal (lumped) mass matrix: entry `i` is one third of the area of the
/// triangles incident to vertex `i`, so the trace equals the surface area.
pub fn lumped_mass(mesh: &TriangleMesh) -> Result<SparseOperator, MeshError> {
    Ok(SparseOperator::from_diagonal(&vertex_areas(mesh)?))
}

pub(crate) fn vertex_areas(mesh: &TriangleMesh) -> Result<Vec<f64>, MeshError> {
    let mut areas = vec![0.0f64; mesh.n_vertices()];
    for fi in 0..mesh.n_faces() {
        let f = mesh.face(fi);
        let area = mesh.face_area(fi);
        if area < AREA_EPS {
            return Err(MeshError::DegenerateGeometry(format!(
                "face {fi} has area {area:.3e} below {AREA_EPS:.0e}"
            )));
        }
        for &v in &f {
            areas[v] += area / 3.0;
        }
    }
    Ok(areas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn equilateral() -> TriangleMesh {
        // unit side length
        let h = libm::sqrt(3.0) / 2.0;
        TriangleMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, h, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn equilateral_triangle_weights() {
        let l = cotangent_stiffness(&equilateral()).unwrap();
        let expected = 0.5 / libm::tan(core::f64::consts::FRAC_PI_3); // cot 60deg / 2
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            assert_abs_diff_eq!(l.get(i, j), expected, epsilon = 1e-12);
            assert_abs_diff_eq!(l.get(j, i), expected, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(expected, 0.288675, epsilon = 1e-6);
    }

    #[test]
    fn right_isoceles_zero_weight_opposite_right_angle() {
        // right angle at vertex 0; edge (1, 2) is opposite it
        let m = TriangleMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let l = cotangent_stiffness(&m).unwrap();
        assert_abs_diff_eq!(l.get(1, 2), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn stiffness_rows_sum_to_zero_and_symmetric() {
        for mesh in [synth::tetrahedron(), synth::icosphere(2), synth::cylinder(8, 10, 0.0)] {
            let l = cotangent_stiffness(&mesh).unwrap();
            for r in 0..mesh.n_vertices() {
                assert!(l.row_sum(r).abs() < 1e-9, "row {r} sum {}", l.row_sum(r));
            }
            assert!(l.symmetry_error() < 1e-10);
        }
    }

    #[test]
    fn stiffness_rejects_zero_area_face() {
        let m = TriangleMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(matches!(
            cotangent_stiffness(&m),
            Err(MeshError::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn mass_equilateral_split() {
        let mass = lumped_mass(&equilateral()).unwrap();
        let expected = libm::sqrt(3.0) / 4.0 / 3.0; // area sqrt(3)/4 split three ways
        for i in 0..3 {
            assert_abs_diff_eq!(mass.get(i, i), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn mass_trace_is_total_area() {
        let sphere = synth::icosphere(3);
        let mass = lumped_mass(&sphere).unwrap();
        let trace: f64 = mass.diagonal().iter().sum();
        assert_abs_diff_eq!(trace, sphere.total_area(), epsilon = 1e-10);
        // icosphere area approaches 4 pi from below
        let sphere_area = 4.0 * core::f64::consts::PI;
        assert!((trace - sphere_area).abs() / sphere_area < 0.02);
    }

    #[test]
    fn mass_additive_over_disjoint_components() {
        let one = equilateral();
        let mut vertices = one.vertices().to_vec();
        let mut faces = one.faces().to_vec();
        for v in one.vertices() {
            vertices.push([v[0] + 10.0, v[1], v[2]]);
        }
        faces.push([3, 4, 5]);
        let two = TriangleMesh::new(vertices, faces).unwrap();
        let t1: f64 = lumped_mass(&one).unwrap().diagonal().iter().sum();
        let t2: f64 = lumped_mass(&two).unwrap().diagonal().iter().sum();
        assert_abs_diff_eq!(t2, 2.0 * t1, epsilon = 1e-12);
    }

    #[test]
    fn mass_diagonal_positive() {
        for mesh in [synth::tetrahedron(), synth::icosphere(1)] {
            for d in lumped_mass(&mesh).unwrap().diagonal() {
                assert!(d > 0.0);
            }
        }
    }
}
