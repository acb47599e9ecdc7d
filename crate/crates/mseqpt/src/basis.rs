//! Product-operator basis construction and expansions.
//!
//! The basis {E_i} for n qubits holds the 4^n tensor products of single-qubit
//! operators (I, σx, σy, σz), ordered base-4 with qubit 1 as the most
//! significant digit. Every element is Hermitian, squares to the identity,
//! and the set satisfies Tr(E_m E_n†) = D δ_mn and Tr(E_m) = D δ_m0 with
//! D = 2^n.

use ndarray::array;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};

/// Construction-time tolerance for the exact-arithmetic basis identities.
pub const BASIS_TOL: f64 = 1e-12;

/// Single-qubit Pauli matrices in digit order (I, σx, σy, σz).
pub fn single_qubit_paulis() -> [CMatrix; 4] {
    [
        array![[c(1., 0.), c(0., 0.)], [c(0., 0.), c(1., 0.)]],
        array![[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]],
        array![[c(0., 0.), c(0., -1.)], [c(0., 1.), c(0., 0.)]],
        array![[c(1., 0.), c(0., 0.)], [c(0., 0.), c(-1., 0.)]],
    ]
}

/// Ordered set of D² product operators for an n-qubit system.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    num_qubits: usize,
    dim: usize,
    elements: Vec<CMatrix>,
    labels: Vec<String>,
}

impl OperatorBasis {
    /// Hilbert-space dimension D = 2^n.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of basis operators, D².
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Basis operator E_i. Panics on an out-of-range index.
    pub fn element(&self, i: usize) -> &CMatrix {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// Human-readable name of E_i ("I", "X2", "X1Z2", ...).
    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Coefficients c_i = (1/D) Tr(M E_i), so that M = Σ_i c_i E_i.
    ///
    /// The basis elements are Hermitian, so this is also the expansion
    /// against E_i†.
    pub fn expand(&self, m: &CMatrix) -> Result<Vec<Complex64>> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: m.nrows(),
            });
        }
        let inv_d = 1.0 / self.dim as f64;
        Ok(self
            .elements
            .iter()
            .map(|e| trace_of_product(m, e) * inv_d)
            .collect())
    }

    /// Rebuilds Σ_i coeffs[i] E_i.
    pub fn recombine(&self, coeffs: &[Complex64]) -> Result<CMatrix> {
        if coeffs.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: coeffs.len(),
            });
        }
        let mut out = CMatrix::zeros((self.dim, self.dim));
        for (coef, e) in coeffs.iter().zip(&self.elements) {
            if coef.norm() == 0.0 {
                continue;
            }
            out.zip_mut_with(e, |o, &v| *o += coef * v);
        }
        Ok(out)
    }
}

/// Builds the Pauli product-operator basis for `num_qubits` qubits.
///
/// Ordering is base-4 with qubit 1 as the most significant digit and digit
/// order (I, σx, σy, σz); for two qubits index 1 is σ2x, index 4 is σ1x,
/// index 5 is σ1x·σ2x, and index 15 is σ1z·σ2z.
pub fn build_pauli_basis(num_qubits: usize) -> Result<OperatorBasis> {
    if num_qubits == 0 {
        return Err(Error::UnsupportedDimension(0));
    }
    let singles = single_qubit_paulis();
    let letters = ["I", "X", "Y", "Z"];
    let dim = 1usize << num_qubits;
    let count = dim * dim;

    let mut elements = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for index in 0..count {
        let mut digits = vec![0usize; num_qubits];
        let mut rem = index;
        for q in (0..num_qubits).rev() {
            digits[q] = rem % 4;
            rem /= 4;
        }
        let mut op = singles[digits[0]].clone();
        for &d in &digits[1..] {
            op = linalg::kron(&op, &singles[d]);
        }
        let mut label = String::new();
        for (q, &d) in digits.iter().enumerate() {
            if d != 0 {
                label.push_str(letters[d]);
                label.push_str(&(q + 1).to_string());
            }
        }
        if label.is_empty() {
            label.push('I');
        }
        elements.push(op);
        labels.push(label);
    }

    let basis = OperatorBasis {
        num_qubits,
        dim,
        elements,
        labels,
    };
    validate_basis(&basis)?;
    Ok(basis)
}

/// Asserts the orthogonality, trace, Hermiticity, and involution identities
/// on a constructed basis.
fn validate_basis(basis: &OperatorBasis) -> Result<()> {
    let d = basis.dim as f64;
    let eye = linalg::identity(basis.dim);
    for (m, em) in basis.elements.iter().enumerate() {
        if !linalg::is_hermitian(em, BASIS_TOL) {
            return Err(Error::InvalidState(format!("E_{m} is not Hermitian")));
        }
        let tr = linalg::trace(em);
        let want = if m == 0 { d } else { 0.0 };
        if (tr - c(want, 0.0)).norm() > BASIS_TOL {
            return Err(Error::InvalidState(format!("Tr(E_{m}) = {tr} != {want}")));
        }
        if linalg::max_abs_diff(&em.dot(em), &eye) > BASIS_TOL {
            return Err(Error::InvalidState(format!("E_{m}² != I")));
        }
        for (n, en) in basis.elements.iter().enumerate() {
            let overlap = linalg::hs_inner(em, en);
            let want = if m == n { d } else { 0.0 };
            if (overlap - c(want, 0.0)).norm() > BASIS_TOL {
                return Err(Error::InvalidState(format!(
                    "Tr(E_{m} E_{n}†) = {overlap} != {want}"
                )));
            }
        }
    }
    Ok(())
}

/// Tr(a·b) without forming the product.
fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut sum = c(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            sum += a[[i, k]] * b[[k, i]];
        }
    }
    sum
}
