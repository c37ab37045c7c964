//! Truncated Laplace-Beltrami eigenbasis and the conversions between
//! point-to-point maps and their spectral (functional map) counterparts.

mod eigen;

pub use eigen::DENSE_EIGEN_THRESHOLD;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::mat::Mat;
use crate::mesh::{cotangent_stiffness, lumped_mass, MeshError, TriangleMesh};

#[derive(Debug, thiserror::Error)]
pub enum SpectralError {
    #[error("mesh is not connected")]
    NotConnected,
    #[error("eigensolver failed to converge: {0}")]
    ConvergenceFailure(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Truncated spectral basis: `k` ascending eigenvalues, mass-orthonormal
/// eigenfunctions (columns of `phi`, sign-fixed so the entry of largest
/// magnitude is positive), and the lumped mass diagonal.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    pub eigenvalues: Vec<f64>,
    /// `n x k` eigenfunction matrix.
    pub phi: Mat,
    /// Lumped mass diagonal, length `n`.
    pub mass: Vec<f64>,
}

/// Spectral map between two bases: `k_tgt x k_src`, sending source
/// coefficients to target coefficients.
#[derive(Clone, Debug)]
pub struct FunctionalMap {
    pub c: Mat,
}

/// Vertex-to-vertex assignment, one source vertex per target vertex, with an
/// optional row-stochastic soft form.
#[derive(Clone, Debug)]
pub struct PointMap {
    pub assignment: Vec<usize>,
    pub n_src: usize,
    pub soft: Option<Mat>,
}

impl PointMap {
    pub fn hard(assignment: Vec<usize>, n_src: usize) -> Self {
        PointMap {
            assignment,
            n_src,
            soft: None,
        }
    }

    pub fn identity(n: usize) -> Self {
        PointMap::hard((0..n).collect(), n)
    }

    pub fn n_tgt(&self) -> usize {
        self.assignment.len()
    }

    /// Fraction of entries where the two maps agree.
    pub fn agreement(&self, other: &PointMap) -> f64 {
        assert_eq!(self.assignment.len(), other.assignment.len());
        let same = self
            .assignment
            .iter()
            .zip(&other.assignment)
            .filter(|(a, b)| a == b)
            .count();
        same as f64 / self.assignment.len() as f64
    }
}

impl SpectralBasis {
    pub fn n(&self) -> usize {
        self.phi.rows()
    }

    pub fn k(&self) -> usize {
        self.phi.cols()
    }

    /// Copy of the first `k` columns of `phi`.
    pub fn phi_truncated(&self, k: usize) -> Mat {
        assert!(k <= self.k());
        let mut out = Mat::zeros(self.n(), k);
        for r in 0..self.n() {
            out.row_mut(r).copy_from_slice(&self.phi.row(r)[..k]);
        }
        out
    }

    /// Check the basis invariants; used after deserialization and in tests.
    pub fn validate(&self) -> Result<(), SpectralError> {
        let (n, k) = (self.n(), self.k());
        if self.eigenvalues.len() != k || self.mass.len() != n {
            return Err(SpectralError::DimensionMismatch(format!(
                "basis fields disagree: phi {n}x{k}, {} eigenvalues, {} mass entries",
                self.eigenvalues.len(),
                self.mass.len()
            )));
        }
        if self.eigenvalues[0].abs() >= 1e-8 {
            return Err(SpectralError::ConvergenceFailure(format!(
                "first eigenvalue {:.3e} is not numerically zero",
                self.eigenvalues[0]
            )));
        }
        for w in self.eigenvalues.windows(2) {
            if w[1] < w[0] - 1e-10 || w[0] < -1e-10 {
                return Err(SpectralError::ConvergenceFailure(
                    "eigenvalues not ascending and nonnegative".into(),
                ));
            }
        }
        let gram = mass_weighted_tr_matmul(&self.phi, &self.mass, &self.phi);
        let dev = {
            let mut worst = 0.0f64;
            for r in 0..k {
                for c in 0..k {
                    let target = if r == c { 1.0 } else { 0.0 };
                    worst = worst.max((gram.at(r, c) - target).abs());
                }
            }
            worst
        };
        if dev >= 1e-6 {
            return Err(SpectralError::ConvergenceFailure(format!(
                "basis not mass-orthonormal (max deviation {dev:.3e})"
            )));
        }
        Ok(())
    }
}

/// `phi^T diag(mass) other` without materializing the scaled matrix.
fn mass_weighted_tr_matmul(phi: &Mat, mass: &[f64], other: &Mat) -> Mat {
    assert_eq!(phi.rows(), other.rows());
    assert_eq!(phi.rows(), mass.len());
    let mut out = Mat::zeros(phi.cols(), other.cols());
    for r in 0..phi.rows() {
        let w = mass[r];
        let prow = phi.row(r);
        let orow = other.row(r);
        for (i, &p) in prow.iter().enumerate() {
            let pw = p * w;
            if pw == 0.0 {
                continue;
            }
            let out_row = out.row_mut(i);
            for (o, &q) in out_row.iter_mut().zip(orow) {
                *o += pw * q;
            }
        }
    }
    out
}

/// Compute the `k` smallest eigenpairs of `L phi = lambda M phi` on the
/// mesh's cotangent Laplacian with lumped mass. Dense solve up to
/// [`DENSE_EIGEN_THRESHOLD`] vertices, shift-invert Lanczos beyond.
pub fn compute_basis(mesh: &TriangleMesh, k: usize) -> Result<SpectralBasis, SpectralError> {
    let n = mesh.n_vertices();
    if k == 0 || k > n {
        return Err(SpectralError::DimensionMismatch(format!(
            "basis size k={k} invalid for a {n}-vertex mesh"
        )));
    }
    if !mesh.is_connected() {
        return Err(SpectralError::NotConnected);
    }
    let stiffness = cotangent_stiffness(mesh)?.negated(); // positive semidefinite
    let mass = lumped_mass(mesh)?.diagonal();
    let sym = stiffness.scale_sym(&mass);

    let (mut eigenvalues, y) = if n <= DENSE_EIGEN_THRESHOLD || k * 4 + 80 >= n {
        let (vals, vecs) = eigen::dense_sym_eigen(sym.to_dense())?;
        let mut trunc = Mat::zeros(n, k);
        for r in 0..n {
            trunc.row_mut(r).copy_from_slice(&vecs.row(r)[..k]);
        }
        (vals[..k].to_vec(), trunc)
    } else {
        eigen::lanczos_smallest(&sym, k, 0x5c0e_11ab ^ n as u64)?
    };

    for lam in eigenvalues.iter_mut() {
        if *lam < 0.0 {
            if *lam < -1e-8 {
                return Err(SpectralError::ConvergenceFailure(format!(
                    "negative eigenvalue {lam:.3e} on a PSD operator"
                )));
            }
            *lam = 0.0;
        }
    }

    // undo the symmetrizing change of variables: phi = M^{-1/2} y
    let mut phi = y;
    for r in 0..n {
        let scale = 1.0 / libm::sqrt(mass[r]);
        for v in phi.row_mut(r) {
            *v *= scale;
        }
    }

    // deterministic sign: the entry of largest magnitude is positive
    for c in 0..k {
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for r in 0..n {
            let a = phi.at(r, c).abs();
            if a > best_abs {
                best_abs = a;
                best = r;
            }
        }
        if phi.at(best, c) < 0.0 {
            for r in 0..n {
                *phi.at_mut(r, c) = -phi.at(r, c);
            }
        }
    }

    Ok(SpectralBasis {
        eigenvalues,
        phi,
        mass,
    })
}

/// Spectral coefficients of a per-vertex function: `phi^T M f`.
pub fn project(basis: &SpectralBasis, f: &[f64]) -> Result<Vec<f64>, SpectralError> {
    if f.len() != basis.n() {
        return Err(SpectralError::DimensionMismatch(format!(
            "function has {} entries, mesh has {} vertices",
            f.len(),
            basis.n()
        )));
    }
    let mut out = vec![0.0f64; basis.k()];
    for r in 0..basis.n() {
        let w = basis.mass[r] * f[r];
        for (o, &p) in out.iter_mut().zip(basis.phi.row(r)) {
            *o += w * p;
        }
    }
    Ok(out)
}

/// Reconstruct a per-vertex function from spectral coefficients: `phi c`.
pub fn expand(basis: &SpectralBasis, coeffs: &[f64]) -> Result<Vec<f64>, SpectralError> {
    if coeffs.len() != basis.k() {
        return Err(SpectralError::DimensionMismatch(format!(
            "{} coefficients for a k={} basis",
            coeffs.len(),
            basis.k()
        )));
    }
    let mut out = vec![0.0f64; basis.n()];
    for r in 0..basis.n() {
        out[r] = basis
            .phi
            .row(r)
            .iter()
            .zip(coeffs)
            .map(|(p, c)| p * c)
            .sum();
    }
    Ok(out)
}

/// Convert a target-to-source point map into the spectral map
/// `C = phi_tgt^T M_tgt (Pi phi_src)`, truncated to `(k_tgt, k_src)` columns.
pub fn pointmap_to_fmap_truncated(
    pi: &PointMap,
    src: &SpectralBasis,
    tgt: &SpectralBasis,
    k_src: usize,
    k_tgt: usize,
) -> Result<FunctionalMap, SpectralError> {
    if pi.n_src != src.n() || pi.n_tgt() != tgt.n() {
        return Err(SpectralError::DimensionMismatch(format!(
            "map is {} -> {} vertices but bases are {} and {}",
            pi.n_tgt(),
            pi.n_src,
            tgt.n(),
            src.n()
        )));
    }
    if k_src > src.k() || k_tgt > tgt.k() {
        return Err(SpectralError::DimensionMismatch(format!(
            "requested truncation ({k_tgt}, {k_src}) exceeds basis sizes ({}, {})",
            tgt.k(),
            src.k()
        )));
    }
    let phi_src = src.phi_truncated(k_src);
    let pulled = match &pi.soft {
        Some(soft) => {
            if soft.rows() != tgt.n() || soft.cols() != src.n() {
                return Err(SpectralError::DimensionMismatch(
                    "soft map shape disagrees with bases".into(),
                ));
            }
            soft.matmul(&phi_src)
        }
        None => {
            for &s in &pi.assignment {
                if s >= src.n() {
                    return Err(SpectralError::DimensionMismatch(format!(
                        "assignment references source vertex {s} of {}",
                        src.n()
                    )));
                }
            }
            phi_src.gather_rows(&pi.assignment)
        }
    };
    let phi_tgt = tgt.phi_truncated(k_tgt);
    let c = mass_weighted_tr_matmul(&phi_tgt, &tgt.mass, &pulled);
    Ok(FunctionalMap { c })
}

/// [`pointmap_to_fmap_truncated`] at the full basis sizes.
pub fn pointmap_to_fmap(
    pi: &PointMap,
    src: &SpectralBasis,
    tgt: &SpectralBasis,
) -> Result<FunctionalMap, SpectralError> {
    pointmap_to_fmap_truncated(pi, src, tgt, src.k(), tgt.k())
}

/// Recover a point map from a spectral map by nearest-neighbor search
/// between the rows of `phi_tgt C` and the rows of `phi_src`; ties break to
/// the smallest source index. Truncation is implied by the shape of `C`.
pub fn fmap_to_pointmap(
    c: &FunctionalMap,
    src: &SpectralBasis,
    tgt: &SpectralBasis,
) -> Result<PointMap, SpectralError> {
    let (k_tgt, k_src) = (c.c.rows(), c.c.cols());
    if k_tgt > tgt.k() || k_src > src.k() {
        return Err(SpectralError::DimensionMismatch(format!(
            "map is {k_tgt}x{k_src} but bases hold only ({}, {}) functions",
            tgt.k(),
            src.k()
        )));
    }
    let embedded = tgt.phi_truncated(k_tgt).matmul(&c.c); // n_tgt x k_src
    let phi_src = src.phi_truncated(k_src);
    let assignment = nearest_rows(&embedded, &phi_src);
    Ok(PointMap::hard(assignment, src.n()))
}

/// For each row of `queries`, the index of the nearest row of `corpus`
/// (squared Euclidean, ties to the smallest index).
pub(crate) fn nearest_rows(queries: &Mat, corpus: &Mat) -> Vec<usize> {
    assert_eq!(queries.cols(), corpus.cols());
    let mut out = Vec::with_capacity(queries.rows());
    for q in 0..queries.rows() {
        let qrow = queries.row(q);
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for r in 0..corpus.rows() {
            let mut d = 0.0;
            for (a, b) in qrow.iter().zip(corpus.row(r)) {
                let t = a - b;
                d += t * t;
            }
            if d < best_d {
                best_d = d;
                best = r;
            }
        }
        out.push(best);
    }
    out
}
