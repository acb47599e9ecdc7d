//! Dense complex matrix helpers.
//!
//! Everything here operates on small dense matrices (dimension at most a few
//! hundred), stored as [`ndarray::Array2`] of [`Complex64`]. Decompositions
//! are hand-rolled: a cyclic Jacobi eigensolver for Hermitian matrices and an
//! LU solver with partial pivoting, which is all the sizes in this crate
//! need.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Dense complex matrix, row-major semantics.
pub type CMatrix = Array2<Complex64>;

/// Shorthand complex constructor.
#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// d×d identity.
pub fn identity(d: usize) -> CMatrix {
    Array2::eye(d)
}

/// Conjugate transpose.
pub fn dagger(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

/// Sum of diagonal entries.
pub fn trace(m: &CMatrix) -> Complex64 {
    m.diag().sum()
}

/// Checked matrix product. Errors on inner-dimension mismatch.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: b.nrows(),
        });
    }
    Ok(a.dot(b))
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    ndarray::linalg::kron(a, b)
}

/// Hilbert–Schmidt inner product Tr[a b†].
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    // Tr[a b†] = Σ_ij a_ij conj(b_ij)
    a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum()
}

/// Largest entrywise absolute difference between two equal-shape matrices.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entrywise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// True when `m` equals its conjugate transpose entrywise within `tol`.
pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            if (m[[i, j]] - m[[j, i]].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// True when m†m = I within `tol` (entrywise).
pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let prod = dagger(m).dot(m);
    max_abs_diff(&prod, &identity(m.nrows())) <= tol
}

/// True when `m` is Hermitian within `tol` and its smallest eigenvalue is
/// at least −tol.
pub fn is_psd(m: &CMatrix, tol: f64) -> bool {
    if !is_hermitian(m, tol) {
        return false;
    }
    let herm = m.mapv(|z| z) * c(0.5, 0.0) + dagger(m) * c(0.5, 0.0);
    match hermitian_eigen(&herm) {
        Ok((vals, _)) => vals.iter().all(|&v| v >= -tol),
        Err(_) => false,
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching unitary of
/// eigenvectors (columns), so that m = V diag(λ) V†.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Array1<f64>, CMatrix)> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = identity(n);
    let scale = max_abs(m).max(1.0);
    let tol = 1e-30 * scale * scale; // compared against squared off-diagonal mass

    const MAX_SWEEPS: usize = 100;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[[p, q]].norm_sqr();
            }
        }
        if off <= tol {
            return Ok(sorted_eigen(&a, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r; // e^{iφ}
                let app = a[[p, p]].re;
                let aqq = a[[q, q]].re;

                // Real symmetric 2×2 Schur: rotation angle for [[app, r], [r, aqq]].
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let cos = 1.0 / (1.0 + t * t).sqrt();
                let sin = t * cos;

                // Full rotation G = diag(1, conj(phase)) · [[c, s], [−s, c]]:
                //   G_pp = c, G_pq = s, G_qp = −s·conj(phase), G_qq = c·conj(phase).
                let gpp = c(cos, 0.0);
                let gpq = c(sin, 0.0);
                let gqp = -phase.conj() * sin;
                let gqq = phase.conj() * cos;

                // A ← G† A G, applied as column then row updates.
                for i in 0..n {
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = aip * gpp + aiq * gqp;
                    a[[i, q]] = aip * gpq + aiq * gqq;
                }
                for j in 0..n {
                    let apj = a[[p, j]];
                    let aqj = a[[q, j]];
                    a[[p, j]] = gpp.conj() * apj + gqp.conj() * aqj;
                    a[[q, j]] = gpq.conj() * apj + gqq.conj() * aqj;
                }
                // Keep the zeroed pair and diagonal exactly clean.
                a[[p, q]] = c(0.0, 0.0);
                a[[q, p]] = c(0.0, 0.0);
                a[[p, p]] = c(a[[p, p]].re, 0.0);
                a[[q, q]] = c(a[[q, q]].re, 0.0);

                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = vip * gpp + viq * gqp;
                    v[[i, q]] = vip * gpq + viq * gqq;
                }
            }
        }
    }
    Err(Error::Numerical(
        "Jacobi eigensolver did not converge".into(),
    ))
}

fn sorted_eigen(a: &CMatrix, v: CMatrix) -> (Array1<f64>, CMatrix) {
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].re.partial_cmp(&a[[j, j]].re).unwrap());
    let vals = Array1::from_iter(order.iter().map(|&i| a[[i, i]].re));
    let mut vecs = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vecs[[r, dst]] = v[[r, src]];
        }
    }
    (vals, vecs)
}

/// LU factorization with partial pivoting, reusable across right-hand
/// sides.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: CMatrix,
    perm: Vec<usize>,
}

impl LuFactor {
    /// Factors a square matrix; errors when a pivot falls below
    /// 1e-14 × the largest entry.
    pub fn new(a: &CMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.ncols(),
            });
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = max_abs(a).max(1e-300);

        for k in 0..n {
            let mut pivot = k;
            let mut best = lu[[k, k]].norm();
            for i in (k + 1)..n {
                let v = lu[[i, k]].norm();
                if v > best {
                    best = v;
                    pivot = i;
                }
            }
            if best < 1e-14 * scale {
                return Err(Error::SingularSystem(format!(
                    "pivot {best:.3e} at column {k}"
                )));
            }
            if pivot != k {
                for j in 0..n {
                    let tmp = lu[[k, j]];
                    lu[[k, j]] = lu[[pivot, j]];
                    lu[[pivot, j]] = tmp;
                }
                perm.swap(k, pivot);
            }
            for i in (k + 1)..n {
                let factor = lu[[i, k]] / lu[[k, k]];
                lu[[i, k]] = factor;
                for j in (k + 1)..n {
                    let sub = factor * lu[[k, j]];
                    lu[[i, j]] -= sub;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    /// Solves a·x = b for the factored matrix.
    pub fn solve(&self, b: &Array1<Complex64>) -> Result<Array1<Complex64>> {
        let n = self.lu.nrows();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let mut x = Array1::from_iter(self.perm.iter().map(|&p| b[p]));
        for i in 0..n {
            for j in 0..i {
                let sub = self.lu[[i, j]] * x[j];
                x[i] -= sub;
            }
        }
        for i in (0..n).rev() {
            let mut sum = x[i];
            for j in (i + 1)..n {
                sum -= self.lu[[i, j]] * x[j];
            }
            x[i] = sum / self.lu[[i, i]];
        }
        Ok(x)
    }
}

/// Solves a·x = b by LU with partial pivoting.
pub fn solve_lu(a: &CMatrix, b: &Array1<Complex64>) -> Result<Array1<Complex64>> {
    LuFactor::new(a)?.solve(b)
}

/// Haar-distributed random unitary via QR of a complex Ginibre matrix.
pub fn haar_random_unitary<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    let g = random_ginibre(dim, rng);
    // Modified Gram-Schmidt; keeping the R diagonal real-positive makes the
    // resulting Q Haar-distributed.
    let mut q = g;
    for j in 0..dim {
        for k in 0..j {
            let proj: Complex64 = (0..dim).map(|i| q[[i, k]].conj() * q[[i, j]]).sum();
            for i in 0..dim {
                let sub = proj * q[[i, k]];
                q[[i, j]] -= sub;
            }
        }
        let norm: f64 = (0..dim).map(|i| q[[i, j]].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..dim {
            q[[i, j]] /= norm;
        }
    }
    q
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    let g = random_ginibre(dim, rng);
    (&g + &dagger(&g)) * c(0.5, 0.0)
}

/// Random density matrix (PSD, unit trace).
pub fn random_density<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    let g = random_ginibre(dim, rng);
    let rho = g.dot(&dagger(&g));
    let tr = trace(&rho);
    rho / tr
}

/// Random pure state as a unit-norm column vector.
pub fn random_state_vector<R: Rng>(dim: usize, rng: &mut R) -> Array1<Complex64> {
    let mut v = Array1::from_iter((0..dim).map(|_| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    }));
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.mapv_inplace(|z| z / norm);
    v
}

/// Outer product |v⟩⟨v|.
pub fn outer(v: &Array1<Complex64>) -> CMatrix {
    let d = v.len();
    Array2::from_shape_fn((d, d), |(i, j)| v[i] * v[j].conj())
}

fn random_ginibre<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    Array2::from_shape_fn((dim, dim), |_| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}
