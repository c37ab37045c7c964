//! Symmetric eigensolvers backing the spectral basis: a dense
//! Householder-tridiagonalize + implicit-QL path for small problems, and
//! shift-invert Lanczos (full reorthogonalization, PCG inner solves) for
//! larger sparse ones.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mat::Mat;
use crate::mesh::SparseOperator;

use super::SpectralError;

/// Problems up to this size are densified and solved directly.
pub const DENSE_EIGEN_THRESHOLD: usize = 600;

fn convergence(msg: impl Into<alloc::string::String>) -> SpectralError {
    SpectralError::ConvergenceFailure(msg.into())
}

/// Householder reduction of a symmetric matrix to tridiagonal form (tred2).
/// On return `a` holds the accumulated orthogonal transform `Q` with
/// `A = Q T Q^T`; `(d, e)` hold the diagonal and `e[i] = T[i-1][i]`.
fn tred2(a: &mut Mat) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows();
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += a.at(i, k).abs();
            }
            if scale == 0.0 {
                e[i] = a.at(i, l);
            } else {
                for k in 0..=l {
                    *a.at_mut(i, k) /= scale;
                    h += a.at(i, k) * a.at(i, k);
                }
                let f = a.at(i, l);
                let g = if f >= 0.0 {
                    -libm::sqrt(h)
                } else {
                    libm::sqrt(h)
                };
                e[i] = scale * g;
                h -= f * g;
                *a.at_mut(i, l) = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    *a.at_mut(j, i) = a.at(i, j) / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a.at(j, k) * a.at(i, k);
                    }
                    for k in j + 1..=l {
                        g += a.at(k, j) * a.at(i, k);
                    }
                    e[j] = g / h;
                    f_acc += e[j] * a.at(i, j);
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a.at(i, j);
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        *a.at_mut(j, k) -= f * e[k] + g * a.at(i, k);
                    }
                }
            }
        } else {
            e[i] = a.at(i, l);
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += a.at(i, k) * a.at(k, j);
                }
                for k in 0..i {
                    *a.at_mut(k, j) -= g * a.at(k, i);
                }
            }
        }
        d[i] = a.at(i, i);
        *a.at_mut(i, i) = 1.0;
        for j in 0..i {
            *a.at_mut(j, i) = 0.0;
            *a.at_mut(i, j) = 0.0;
        }
    }
    (d, e)
}

/// Implicit-QL with Wilkinson shifts on a symmetric tridiagonal matrix.
/// `d` is the diagonal, `e[i] = T[i][i+1]` (`e[n-1]` ignored), and the
/// rotations accumulate into the columns of `z`.
fn tqli(d: &mut [f64], e: &mut [f64], z: &mut Mat) -> Result<(), SpectralError> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(convergence("tridiagonal QL exceeded 60 iterations"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..z.rows() {
                    f = z.at(k, i + 1);
                    *z.at_mut(k, i + 1) = s * z.at(k, i) + c * f;
                    *z.at_mut(k, i) = c * z.at(k, i) - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn sort_eigenpairs(d: &mut [f64], z: &mut Mat) {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let d_old = d.to_vec();
    let z_old = z.clone();
    for (new, &old) in order.iter().enumerate() {
        d[new] = d_old[old];
        for k in 0..z.rows() {
            *z.at_mut(k, new) = z_old.at(k, old);
        }
    }
}

/// Full eigendecomposition of a dense symmetric matrix, ascending
/// eigenvalues, eigenvectors in the columns of the returned matrix.
pub fn dense_sym_eigen(mut a: Mat) -> Result<(Vec<f64>, Mat), SpectralError> {
    assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    if n == 0 {
        return Ok((Vec::new(), a));
    }
    let (mut d, e_nr) = tred2(&mut a);
    // shift to e[i] = T[i][i+1]
    let mut e = vec![0.0f64; n];
    for i in 0..n - 1 {
        e[i] = e_nr[i + 1];
    }
    tqli(&mut d, &mut e, &mut a)?;
    sort_eigenpairs(&mut d, &mut a);
    Ok((d, a))
}

/// Eigendecomposition of a symmetric tridiagonal matrix given by its
/// diagonal and subdiagonal.
fn tridiag_eigen(diag: &[f64], sub: &[f64]) -> Result<(Vec<f64>, Mat), SpectralError> {
    let m = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0f64; m];
    e[..m - 1].copy_from_slice(&sub[..m - 1]);
    let mut z = Mat::identity(m);
    tqli(&mut d, &mut e, &mut z)?;
    sort_eigenpairs(&mut d, &mut z);
    Ok((d, z))
}

/// Upper bound on the spectral radius via Gershgorin discs.
fn gershgorin_bound(s: &SparseOperator) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..s.n() {
        let mut acc = 0.0;
        for (_, v) in s.row_entries(r) {
            acc += v.abs();
        }
        worst = worst.max(acc);
    }
    worst
}

/// Jacobi-preconditioned conjugate gradients for `(S + shift I) x = b`.
fn pcg(
    s: &SparseOperator,
    shift: f64,
    b: &[f64],
    jacobi_inv: &[f64],
) -> Result<Vec<f64>, SpectralError> {
    let n = b.len();
    let bnorm = libm::sqrt(b.iter().map(|v| v * v).sum::<f64>());
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let rtol = 1e-12;
    let mut x = vec![0.0f64; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(jacobi_inv).map(|(ri, ji)| ri * ji).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0f64; n];
    let max_iter = 40 * n + 200;
    for _ in 0..max_iter {
        s.matvec(&p, &mut ap);
        for (api, pi) in ap.iter_mut().zip(&p) {
            *api += shift * pi;
        }
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(convergence("CG hit a non-positive curvature direction"));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = libm::sqrt(r.iter().map(|v| v * v).sum::<f64>());
        if rnorm <= rtol * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * jacobi_inv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(convergence("CG iteration cap exceeded"))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Smallest `k` eigenpairs of a symmetric positive-semidefinite sparse
/// matrix by Lanczos on `(S + shift I)^{-1}` with full reorthogonalization.
/// Deterministic for a fixed seed.
pub fn lanczos_smallest(
    s: &SparseOperator,
    k: usize,
    seed: u64,
) -> Result<(Vec<f64>, Mat), SpectralError> {
    let n = s.n();
    assert!(k >= 1 && k <= n);
    let gersh = gershgorin_bound(s).max(1e-300);
    let shift = gersh * 1e-3;
    let jacobi_inv: Vec<f64> = s
        .diagonal()
        .iter()
        .map(|d| 1.0 / (d + shift).max(shift))
        .collect();

    let m_cap = n.min(4 * k + 80);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_unit = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nv = norm(&v);
        v.into_iter().map(|x| x / nv).collect()
    };

    let mut basis: Vec<Vec<f64>> = vec![random_unit(&mut rng)];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let mut stage_end = m_cap.min(2 * k + 30);
    loop {
        while alphas.len() < stage_end {
            let j = alphas.len();
            let mut w = pcg(s, shift, &basis[j], &jacobi_inv)?;
            let alpha = dot(&w, &basis[j]);
            for (wi, vi) in w.iter_mut().zip(&basis[j]) {
                *wi -= alpha * vi;
            }
            if j > 0 {
                let beta_prev = betas[j - 1];
                for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                    *wi -= beta_prev * vi;
                }
            }
            // full reorthogonalization, two passes
            for _ in 0..2 {
                for v in &basis {
                    let proj = dot(&w, v);
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= proj * vi;
                    }
                }
            }
            alphas.push(alpha);
            let beta = norm(&w);
            if beta < 1e-13 {
                // invariant subspace; continue with a fresh direction
                let mut fresh = random_unit(&mut rng);
                for _ in 0..2 {
                    for v in &basis {
                        let proj = dot(&fresh, v);
                        for (wi, vi) in fresh.iter_mut().zip(v) {
                            *wi -= proj * vi;
                        }
                    }
                }
                let fn_ = norm(&fresh);
                if fn_ < 1e-13 {
                    break; // space exhausted
                }
                for f in fresh.iter_mut() {
                    *f /= fn_;
                }
                betas.push(0.0);
                basis.push(fresh);
            } else {
                betas.push(beta);
                basis.push(w.iter().map(|x| x / beta).collect());
            }
            if alphas.len() == n {
                break;
            }
        }

        let m = alphas.len();
        if m < k {
            return Err(convergence("Lanczos space exhausted before k pairs"));
        }
        let (theta, z) = tridiag_eigen(&alphas, &betas)?;
        // theta ascending; eigenvalues of the inverse operator -> want the
        // k largest theta (smallest lambda)
        let beta_last = betas[m - 1];
        let picked: Vec<usize> = (0..m).rev().take(k).collect();
        let converged = picked
            .iter()
            .all(|&c| (beta_last * z.at(m - 1, c)).abs() <= 1e-12 * theta[m - 1].abs());

        if converged || m >= m_cap || m >= n {
            if !converged && m >= m_cap && m < n {
                return Err(convergence(format!(
                    "Lanczos iteration cap {m_cap} exceeded without convergence"
                )));
            }
            let mut eigvals = Vec::with_capacity(k);
            let mut vectors = Mat::zeros(n, k);
            for (out_col, &c) in picked.iter().enumerate() {
                let lambda = 1.0 / theta[c] - shift;
                eigvals.push(lambda);
                for row in 0..n {
                    let mut acc = 0.0;
                    for (j, v) in basis.iter().take(m).enumerate() {
                        acc += z.at(j, c) * v[row];
                    }
                    *vectors.at_mut(row, out_col) = acc;
                }
            }
            // picked was descending in theta -> ascending in lambda already
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| eigvals[a].total_cmp(&eigvals[b]));
            let vals: Vec<f64> = order.iter().map(|&i| eigvals[i]).collect();
            let mut vecs = Mat::zeros(n, k);
            for (new, &old) in order.iter().enumerate() {
                for row in 0..n {
                    *vecs.at_mut(row, new) = vectors.at(row, old);
                }
            }
            // verify in the original operator's terms
            let mut sy = vec![0.0f64; n];
            for i in 0..k {
                let col: Vec<f64> = (0..n).map(|r| vecs.at(r, i)).collect();
                s.matvec(&col, &mut sy);
                let mut res = 0.0f64;
                for r in 0..n {
                    let d = sy[r] - vals[i] * col[r];
                    res += d * d;
                }
                if libm::sqrt(res) > 1e-7 * gersh.max(1.0) {
                    return Err(convergence(format!(
                        "eigenpair {i} residual {:.3e} too large",
                        libm::sqrt(res)
                    )));
                }
            }
            return Ok((vals, vecs));
        }
        stage_end = m_cap.min(m + k + 20);
    }
}

// the vector slice loop above reads the vector column repeatedly; fine at
// the sizes this crate targets

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tridiagonal_chain_analytic_spectrum() {
        // tridiag(-1, 2, -1): eigenvalues 2 - 2 cos(pi j / (n+1))
        let n = 12;
        let mut a = Mat::zeros(n, n);
        for i in 0..n {
            *a.at_mut(i, i) = 2.0;
            if i + 1 < n {
                *a.at_mut(i, i + 1) = -1.0;
                *a.at_mut(i + 1, i) = -1.0;
            }
        }
        let (d, z) = dense_sym_eigen(a.clone()).unwrap();
        for (j, lam) in d.iter().enumerate() {
            let expect = 2.0 - 2.0 * libm::cos(core::f64::consts::PI * (j + 1) as f64 / (n + 1) as f64);
            assert_abs_diff_eq!(*lam, expect, epsilon = 1e-10);
        }
        // residual check A z = z diag
        let az = a.matmul(&z);
        for j in 0..n {
            for i in 0..n {
                assert_abs_diff_eq!(az.at(i, j), d[j] * z.at(i, j), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn random_symmetric_reconstruction() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let n = 25;
        let mut a = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                *a.at_mut(i, j) = v;
                *a.at_mut(j, i) = v;
            }
        }
        let (d, z) = dense_sym_eigen(a.clone()).unwrap();
        // ascending
        for w in d.windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
        // orthonormal columns
        let ztz = z.tr_matmul(&z);
        assert!(ztz.sub_identity_frob_sq() < 1e-18 * (n * n) as f64 + 1e-16);
        // A = Z diag Z^T
        let mut zd = z.clone();
        for c in 0..n {
            for r in 0..n {
                *zd.at_mut(r, c) *= d[c];
            }
        }
        let rebuilt = zd.matmul_tr(&z);
        assert!(rebuilt.sub(&a).max_abs() < 1e-9);
    }

    #[test]
    fn lanczos_matches_dense_on_laplacian() {
        use crate::mesh::{cotangent_stiffness, lumped_mass};
        use crate::synth;
        let mesh = synth::icosphere(2); // 162 vertices
        let stiff = cotangent_stiffness(&mesh).unwrap().negated();
        let mass = lumped_mass(&mesh).unwrap().diagonal();
        let s = stiff.scale_sym(&mass);
        let k = 12;
        let (dense_vals, _) = dense_sym_eigen(s.to_dense()).unwrap();
        let (lan_vals, vecs) = lanczos_smallest(&s, k, 7).unwrap();
        for i in 0..k {
            assert_abs_diff_eq!(lan_vals[i], dense_vals[i], epsilon = 1e-7);
        }
        let vtv = vecs.tr_matmul(&vecs);
        assert!(vtv.sub_identity_frob_sq() < 1e-16);
    }
}
