//! Process-matrix estimators.
//!
//! Three routes to χ_ab over an abstract [`MeasurementBackend`]:
//!
//! - the selective product-operator estimator: survival probabilities
//!   F_ab rebuilt as β-weighted sums of the expectation values
//!   Tr[E_k Λ(E_i)], with all weights precomputed from the 2-design;
//! - standard process tomography: output-state tomographs of every basis
//!   input, inverted by least squares;
//! - the survival-probability baseline: explicit preparation of the
//!   (E_a ± E_b) and (E_a ± iE_b) combination states.
//!
//! All three agree with the Kraus-expansion reference on ideal backends;
//! that equivalence is the core acceptance property of the crate.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::backend::{MeasurementBackend, ProtocolKind, ResourceLedger};
use crate::basis::OperatorBasis;
use crate::design::DesignSet;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, LuFactor};

/// Coefficients below this magnitude are treated as exact zeros, keeping
/// the selective-support bookkeeping exact.
pub const BETA_TOL: f64 = 1e-12;

/// Channel-independent expansion data for one (a, b) pair.
///
/// `c[j][i]` holds ^jc_i^{ab} = (1/D) Tr[(E_a† ρ_j E_b) E_i] and `e[j][k]`
/// holds the real state coefficients ^je_k; the combination weights are
/// β_{jki} = e[j][k] · c[j][i].
#[derive(Debug, Clone)]
pub struct CoefficientTensor {
    pub a: usize,
    pub b: usize,
    pub c: Vec<Vec<Complex64>>,
    pub e: Vec<Vec<f64>>,
}

impl CoefficientTensor {
    /// β^{ab}_{jki}.
    pub fn beta(&self, j: usize, k: usize, i: usize) -> Complex64 {
        self.c[j][i] * self.e[j][k]
    }

    /// W[[i, k]] = Σ_j β_{jki}, the weight multiplying Tr[E_k Λ(E_i)].
    pub fn collapsed(&self) -> Array2<Complex64> {
        let dsq = self.c[0].len();
        let mut w = Array2::zeros((dsq, dsq));
        for j in 0..self.c.len() {
            for i in 0..dsq {
                let ci = self.c[j][i];
                if ci.norm() < BETA_TOL {
                    continue;
                }
                for k in 0..dsq {
                    let ek = self.e[j][k];
                    if ek.abs() < BETA_TOL {
                        continue;
                    }
                    w[[i, k]] += ci * ek;
                }
            }
        }
        w
    }

    /// True when some design state gives a nonvanishing β for (i, k).
    pub fn in_support(&self, i: usize, k: usize) -> bool {
        self.c
            .iter()
            .zip(self.e.iter())
            .any(|(cj, ej)| cj[i].norm() * ej[k].abs() > BETA_TOL)
    }

    /// Preparation indices (i > 0) touched by this element.
    pub fn preparation_support(&self) -> Vec<usize> {
        let dsq = self.c[0].len();
        (1..dsq)
            .filter(|&i| self.c.iter().any(|cj| cj[i].norm() > BETA_TOL))
            .collect()
    }
}

/// Average survival probability F_ab.
#[derive(Debug, Clone, Copy)]
pub struct SurvivalProbability {
    pub a: usize,
    pub b: usize,
    pub value: Complex64,
}

/// One estimated χ element with its propagated standard error.
#[derive(Debug, Clone, Copy)]
pub struct ChiElement {
    pub value: Complex64,
    pub std_err: f64,
}

/// A (possibly partial) estimate of the full χ matrix.
#[derive(Debug, Clone)]
pub struct ChiEstimate {
    /// Estimated values; unestimated entries are zero.
    pub matrix: CMatrix,
    /// Which (a, b) were estimated.
    pub mask: Array2<bool>,
    /// Per-element standard error (zero for ideal backends).
    pub std_err: Array2<f64>,
    /// Ledger snapshot at the end of the run.
    pub ledger: ResourceLedger,
}

impl ChiEstimate {
    /// Largest |χ_ab − conj(χ_ba)| over estimated pairs; an ideal full run
    /// should be Hermitian without any explicit symmetrization.
    pub fn hermiticity_gap(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut gap: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                if self.mask[[a, b]] && self.mask[[b, a]] {
                    gap = gap.max((self.matrix[[a, b]] - self.matrix[[b, a]].conj()).norm());
                }
            }
        }
        gap
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }
}

/// Computes the channel-independent coefficients for one (a, b) pair and
/// checks the reconstruction Σ_i c_i E_i = E_a† ρ_j E_b for every state.
pub fn compute_coefficients(
    a: usize,
    b: usize,
    design: &DesignSet,
    basis: &OperatorBasis,
) -> Result<CoefficientTensor> {
    let dsq = basis.len();
    if a >= dsq || b >= dsq {
        return Err(Error::IndexOutOfRange {
            index: a.max(b),
            limit: dsq,
        });
    }
    if design.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: design.dim(),
        });
    }
    let e = design.state_coefficients(basis)?;
    let e_a = basis.element(a);
    let e_b = basis.element(b);
    let mut coeffs = Vec::with_capacity(design.len());
    for j in 0..design.len() {
        let rho = design.density(j);
        let sandwich = linalg::dagger(e_a).dot(&rho).dot(e_b);
        let cj = basis.expand(&sandwich)?;
        let rebuilt = basis.recombine(&cj)?;
        let err = linalg::max_abs_diff(&rebuilt, &sandwich);
        if err > 1e-12 {
            return Err(Error::Numerical(format!(
                "coefficient reconstruction off by {err:.3e} for state {j}"
            )));
        }
        coeffs.push(cj);
    }
    Ok(CoefficientTensor { a, b, c: coeffs, e })
}

/// Selectively estimates χ_ab through the β-weighted expectation sum,
/// querying the backend only inside the nonzero-β support.
pub fn mseqpt_element(
    a: usize,
    b: usize,
    design: &DesignSet,
    backend: &mut MeasurementBackend,
) -> Result<(SurvivalProbability, ChiElement)> {
    let tensor = compute_coefficients(a, b, design, &backend.basis().clone())?;
    let weights = tensor.collapsed();
    let dim = backend.basis().dim() as f64;
    let dsq = backend.basis().len();
    let cardinality = design.len() as f64;

    let mut f_sum = weights[[0, 0]] * dim; // Tr[Λ(I)] = D term
    let mut variance = 0.0;
    for k in 1..dsq {
        // Raw acquisitions estimate Tr[E_k Λ(I)] + Tr[E_k Λ(E_i)]; collect
        // the net weight on the reference value as queries go.
        let mut ref_weight = weights[[0, k]];
        for i in 1..dsq {
            if !tensor.in_support(i, k) {
                continue;
            }
            let w = weights[[i, k]];
            let raw = backend.raw_sample(i, k)?;
            f_sum += w * raw.value;
            variance += w.norm_sqr() * raw.variance;
            ref_weight -= w;
        }
        if ref_weight.norm() > BETA_TOL {
            let reference = backend.reference_sample(k)?;
            f_sum += ref_weight * reference.value;
            variance += ref_weight.norm_sqr() * reference.variance;
        }
    }

    let f = f_sum / cardinality;
    let delta = if a == b { 1.0 } else { 0.0 };
    let chi = (f * (dim + 1.0) - delta) / dim;
    let chi_var = variance * ((dim + 1.0) / (dim * cardinality)).powi(2);
    Ok((
        SurvivalProbability { a, b, value: f },
        ChiElement {
            value: chi,
            std_err: chi_var.sqrt(),
        },
    ))
}

/// Estimates a selected list of χ elements, sharing one backend cache.
pub fn mseqpt_elements(
    selection: &[(usize, usize)],
    design: &DesignSet,
    backend: &mut MeasurementBackend,
) -> Result<ChiEstimate> {
    backend.set_accounting(ProtocolKind::Mseqpt);
    let dsq = backend.basis().len();
    let mut matrix = CMatrix::zeros((dsq, dsq));
    let mut mask = Array2::from_elem((dsq, dsq), false);
    let mut std_err = Array2::zeros((dsq, dsq));
    for &(a, b) in selection {
        let (_, element) = mseqpt_element(a, b, design, backend)?;
        matrix[[a, b]] = element.value;
        std_err[[a, b]] = element.std_err;
        mask[[a, b]] = true;
    }
    Ok(ChiEstimate {
        matrix,
        mask,
        std_err,
        ledger: *backend.ledger(),
    })
}

/// Estimates every element of χ with one shared preparation cache.
pub fn mseqpt_full(design: &DesignSet, backend: &mut MeasurementBackend) -> Result<ChiEstimate> {
    let dsq = backend.basis().len();
    let all: Vec<(usize, usize)> = (0..dsq)
        .flat_map(|a| (0..dsq).map(move |b| (a, b)))
        .collect();
    mseqpt_elements(&all, design, backend)
}

/// Standard process tomography: tomographs Λ(ρ_in) for every deviation
/// input and solves the linear system for χ by least squares.
///
/// The identity input row comes from the reference acquisition (analytic
/// for unital channels), which closes the part of the map the deviation
/// inputs alone cannot see.
pub fn standard_qpt(backend: &mut MeasurementBackend) -> Result<ChiEstimate> {
    backend.set_accounting(ProtocolKind::Qpt);
    let basis = backend.basis().clone();
    let dim = basis.dim();
    let dsq = basis.len();
    let rows = dsq * dsq;

    // Inputs: ρ_0 = I/D and ρ_i = (I + E_i)/D.
    let eye = linalg::identity(dim);
    let inputs: Vec<CMatrix> = (0..dsq)
        .map(|i| {
            if i == 0 {
                &eye / c(dim as f64, 0.0)
            } else {
                (&eye + basis.element(i)) / c(dim as f64, 0.0)
            }
        })
        .collect();

    // Design matrix: T[(i,k),(a,b)] = Tr[E_k E_a ρ_i E_b].
    let mut design = Array2::zeros((rows, rows));
    for (i, rho) in inputs.iter().enumerate() {
        for a in 0..dsq {
            let left = basis.element(a).dot(rho);
            for b in 0..dsq {
                let sandwich = left.dot(basis.element(b));
                for k in 0..dsq {
                    design[[i * dsq + k, a * dsq + b]] =
                        linalg::hs_inner(basis.element(k), &linalg::dagger(&sandwich));
                }
            }
        }
    }

    // Measured output coefficients y[(i,k)] = Tr[E_k Λ(ρ_i)].
    let mut y = Array1::zeros(rows);
    let mut y_var = vec![0.0; rows];
    for i in 0..dsq {
        for k in 0..dsq {
            let (value, variance) = if k == 0 {
                (1.0, 0.0) // trace preservation
            } else if i == 0 {
                let s = backend.reference_sample(k)?;
                (s.value / dim as f64, s.variance / (dim * dim) as f64)
            } else {
                let s = backend.raw_sample(i, k)?;
                (s.value / dim as f64, s.variance / (dim * dim) as f64)
            };
            y[i * dsq + k] = c(value, 0.0);
            y_var[i * dsq + k] = variance;
        }
    }

    // Normal equations; the complete input/readout sets make the system
    // square and well conditioned, least squares just tolerates noise.
    let design_h = linalg::dagger(&design);
    let gram = design_h.dot(&design);
    let rhs = design_h.dot(&y);
    let factor = LuFactor::new(&gram)
        .map_err(|_| Error::SingularSystem("tomography system is singular".into()))?;
    let x = factor.solve(&rhs)?;

    let residual = {
        let back = gram.dot(&x) - &rhs;
        back.iter().map(|z| z.norm()).fold(0.0, f64::max)
    };
    let scale = rhs.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if residual > 1e-10 * scale {
        return Err(Error::Numerical(format!(
            "normal-equation residual {residual:.3e} exceeds tolerance"
        )));
    }

    let mut matrix = CMatrix::zeros((dsq, dsq));
    for a in 0..dsq {
        for b in 0..dsq {
            matrix[[a, b]] = x[a * dsq + b];
        }
    }

    // Linear error propagation through the pseudoinverse, skipped when the
    // backend is exact.
    let mut std_err = Array2::zeros((dsq, dsq));
    if y_var.iter().any(|&v| v > 0.0) {
        let mut pseudo = Array2::zeros((rows, rows));
        for col in 0..rows {
            let rhs_col = Array1::from_iter((0..rows).map(|r| design_h[[r, col]]));
            let solution = factor.solve(&rhs_col)?;
            for m in 0..rows {
                pseudo[[m, col]] = solution[m];
            }
        }
        for a in 0..dsq {
            for b in 0..dsq {
                let m = a * dsq + b;
                let var: f64 = (0..rows)
                    .map(|r| pseudo[[m, r]].norm_sqr() * y_var[r])
                    .sum();
                std_err[[a, b]] = var.sqrt();
            }
        }
    }

    Ok(ChiEstimate {
        matrix,
        mask: Array2::from_elem((dsq, dsq), true),
        std_err,
        ledger: *backend.ledger(),
    })
}

/// Survival-probability estimate of a single χ element: the real part from
/// the (E_a ± E_b) combination states, the imaginary part from (E_a ± iE_b),
/// each design-averaged with its trace carried as a classical weight.
pub fn seqpt_element(
    a: usize,
    b: usize,
    design: &DesignSet,
    backend: &mut MeasurementBackend,
) -> Result<ChiElement> {
    let basis = backend.basis().clone();
    let dsq = basis.len();
    if a >= dsq || b >= dsq {
        return Err(Error::IndexOutOfRange {
            index: a.max(b),
            limit: dsq,
        });
    }
    if design.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: design.dim(),
        });
    }
    let dim = basis.dim() as f64;
    let cardinality = design.len() as f64;

    if a == b {
        // E_a ρ E_a is already a valid preparation of unit trace.
        let mut f = 0.0;
        let mut var = 0.0;
        for j in 0..design.len() {
            let rho = design.density(j);
            let prep = basis.element(a).dot(&rho).dot(basis.element(a));
            let sample = backend.survival_sample(&prep, &rho)?;
            f += sample.value;
            var += sample.variance;
        }
        f /= cardinality;
        var /= cardinality * cardinality;
        let chi = (f * (dim + 1.0) - 1.0) / dim;
        let chi_var = var * ((dim + 1.0) / dim).powi(2);
        return Ok(ChiElement {
            value: c(chi, 0.0),
            std_err: chi_var.sqrt(),
        });
    }

    // Weighted design averages of Tr[ρ_j Λ(G† ρ_j G)] for the four
    // combinations; zero-weight states are charged but resolved
    // analytically.
    let mut averages = [0.0; 4];
    let mut variances = [0.0; 4];
    let combos: [(Complex64, usize); 4] = [
        (c(1.0, 0.0), 0),
        (c(-1.0, 0.0), 1),
        (c(0.0, 1.0), 2),
        (c(0.0, -1.0), 3),
    ];
    for j in 0..design.len() {
        let rho = design.density(j);
        for (phase, slot) in combos {
            let g = basis.element(a) + &(basis.element(b) * phase);
            let prep = linalg::dagger(&g).dot(&rho).dot(&g);
            let weight = linalg::trace(&prep).re;
            if weight <= BETA_TOL {
                backend.charge(
                    ProtocolKind::Seqpt,
                    1,
                    ProtocolKind::Seqpt.readouts_per_preparation(),
                );
                continue;
            }
            let sample = backend.survival_sample(&prep, &rho)?;
            averages[slot] += weight * sample.value;
            variances[slot] += weight * weight * sample.variance;
        }
    }
    for v in &mut averages {
        *v /= cardinality;
    }
    for v in &mut variances {
        *v /= cardinality * cardinality;
    }

    let scale = (dim + 1.0) / (4.0 * dim);
    let re = scale * (averages[0] - averages[1]);
    let im = -scale * (averages[2] - averages[3]);
    let var = scale * scale * (variances[0] + variances[1] + variances[2] + variances[3]);
    Ok(ChiElement {
        value: c(re, im),
        std_err: var.sqrt(),
    })
}

/// Runs the survival-probability baseline over a selection of elements.
pub fn seqpt_elements(
    selection: &[(usize, usize)],
    design: &DesignSet,
    backend: &mut MeasurementBackend,
) -> Result<ChiEstimate> {
    backend.set_accounting(ProtocolKind::Seqpt);
    let dsq = backend.basis().len();
    let mut matrix = CMatrix::zeros((dsq, dsq));
    let mut mask = Array2::from_elem((dsq, dsq), false);
    let mut std_err = Array2::zeros((dsq, dsq));
    for &(a, b) in selection {
        let element = seqpt_element(a, b, design, backend)?;
        matrix[[a, b]] = element.value;
        std_err[[a, b]] = element.std_err;
        mask[[a, b]] = true;
    }
    Ok(ChiEstimate {
        matrix,
        mask,
        std_err,
        ledger: *backend.ledger(),
    })
}
