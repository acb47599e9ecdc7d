//! Quantum 2-design state sets from complete MUB families.
//!
//! For D = 4 the set holds the twenty states of five mutually unbiased bases
//! in the computational representation; for D = 2 it holds the six Pauli
//! eigenstates. Cross-basis overlaps satisfy |⟨φ_p|φ_q⟩|² = 1/D, which is
//! what makes the uniform average over the set reproduce Haar second
//! moments.

use ndarray::Array1;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::OperatorBasis;
use crate::channel::{kraus_to_chi, QuantumChannel};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};

/// Construction tolerance for the exact overlap identities.
pub const DESIGN_TOL: f64 = 1e-12;

/// An ordered set of pure states forming a quantum 2-design.
#[derive(Debug, Clone)]
pub struct DesignSet {
    dim: usize,
    states: Vec<Array1<Complex64>>,
    labels: Vec<String>,
}

/// Outcome of a randomized 2-design check.
#[derive(Debug, Clone, Serialize)]
pub struct Verify2DesignReport {
    pub trials: usize,
    pub max_deviation: f64,
}

impl DesignSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cardinality K of the set.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// State vector |φ_j⟩.
    pub fn state(&self, j: usize) -> &Array1<Complex64> {
        &self.states[j]
    }

    pub fn states(&self) -> &[Array1<Complex64>] {
        &self.states
    }

    /// Which MUB and element the state came from, e.g. "B3:2".
    pub fn label(&self, j: usize) -> &str {
        &self.labels[j]
    }

    /// Density matrix ρ_j = |φ_j⟩⟨φ_j|.
    pub fn density(&self, j: usize) -> CMatrix {
        linalg::outer(&self.states[j])
    }

    /// Real expansion coefficients ^je_k = (1/D) Tr(ρ_j E_k), one row per
    /// design state.
    pub fn state_coefficients(&self, basis: &OperatorBasis) -> Result<Vec<Vec<f64>>> {
        if basis.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: basis.dim(),
            });
        }
        let mut rows = Vec::with_capacity(self.len());
        for j in 0..self.len() {
            let coeffs = basis.expand(&self.density(j))?;
            let mut row = Vec::with_capacity(coeffs.len());
            for (k, coef) in coeffs.iter().enumerate() {
                if coef.im.abs() > DESIGN_TOL {
                    return Err(Error::InvalidDesign(format!(
                        "coefficient e[{j}][{k}] has imaginary part {}",
                        coef.im
                    )));
                }
                row.push(coef.re);
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Randomized check of the defining 2-design identity: for random
    /// unitary channels and random (a, b), the design average of
    /// ⟨φ_j|Λ(E_a ρ_j E_b)|φ_j⟩ must equal (D·χ_ab + δ_ab)/(D+1), with χ
    /// taken from the Kraus expansion. Returns the worst deviation seen.
    pub fn verify_2design(
        &self,
        basis: &OperatorBasis,
        trials: usize,
        seed: u64,
    ) -> Result<Verify2DesignReport> {
        if basis.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: basis.dim(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut max_dev: f64 = 0.0;
        for _ in 0..trials {
            let u = linalg::haar_random_unitary(self.dim, &mut rng);
            let a = rng.gen_range(0..basis.len());
            let b = rng.gen_range(0..basis.len());
            let channel = QuantumChannel::unitary(u.clone())?;
            let chi = kraus_to_chi(std::slice::from_ref(&u), basis)?;

            let lhs = self.design_average(&channel, basis.element(a), basis.element(b))?;
            let delta = if a == b { 1.0 } else { 0.0 };
            let rhs = (chi[[a, b]] * self.dim as f64 + delta) / (self.dim as f64 + 1.0);
            max_dev = max_dev.max((lhs - rhs).norm());
        }
        Ok(Verify2DesignReport {
            trials,
            max_deviation: max_dev,
        })
    }

    /// (1/K) Σ_j ⟨φ_j|Λ(E_a ρ_j E_b)|φ_j⟩ computed by direct matrix algebra.
    pub fn design_average(
        &self,
        channel: &QuantumChannel,
        e_a: &CMatrix,
        e_b: &CMatrix,
    ) -> Result<Complex64> {
        let mut sum = c(0.0, 0.0);
        for j in 0..self.len() {
            let rho = self.density(j);
            let sandwich = linalg::dagger(e_a).dot(&rho).dot(e_b);
            let out = channel.apply(&sandwich)?;
            let v = &self.states[j];
            let mut val = c(0.0, 0.0);
            for r in 0..self.dim {
                for s in 0..self.dim {
                    val += v[r].conj() * out[[r, s]] * v[s];
                }
            }
            sum += val;
        }
        Ok(sum / self.len() as f64)
    }

    /// Serializable view: states as vectors of (re, im) pairs.
    pub fn export(&self) -> DesignSetExport {
        DesignSetExport {
            dimension: self.dim,
            cardinality: self.len(),
            labels: self.labels.clone(),
            states: self
                .states
                .iter()
                .map(|v| v.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }
}

/// JSON-friendly form of a design set.
#[derive(Debug, Clone, Serialize)]
pub struct DesignSetExport {
    pub dimension: usize,
    pub cardinality: usize,
    pub labels: Vec<String>,
    pub states: Vec<Vec<[f64; 2]>>,
}

/// Builds the MUB-derived 2-design set for D = 2 or D = 4.
///
/// The D = 4 set is the fixed five-basis family used throughout this crate
/// (K = 20); the D = 2 set holds the six eigenstates of σx, σy, σz (K = 6).
pub fn build_mub_design(dim: usize) -> Result<DesignSet> {
    let bases: Vec<Vec<Vec<Complex64>>> = match dim {
        2 => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            vec![
                // σx eigenbasis.
                vec![
                    vec![c(s, 0.), c(s, 0.)],
                    vec![c(s, 0.), c(-s, 0.)],
                ],
                // σy eigenbasis.
                vec![
                    vec![c(s, 0.), c(0., s)],
                    vec![c(s, 0.), c(0., -s)],
                ],
                // σz eigenbasis.
                vec![
                    vec![c(1., 0.), c(0., 0.)],
                    vec![c(0., 0.), c(1., 0.)],
                ],
            ]
        }
        4 => {
            let h = 0.5;
            vec![
                // B1: computational basis.
                vec![
                    vec![c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)],
                    vec![c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)],
                    vec![c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.)],
                    vec![c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)],
                ],
                // B2: ±1 sign patterns.
                vec![
                    vec![c(h, 0.), c(h, 0.), c(h, 0.), c(h, 0.)],
                    vec![c(h, 0.), c(h, 0.), c(-h, 0.), c(-h, 0.)],
                    vec![c(h, 0.), c(-h, 0.), c(-h, 0.), c(h, 0.)],
                    vec![c(h, 0.), c(-h, 0.), c(h, 0.), c(-h, 0.)],
                ],
                // B3.
                vec![
                    vec![c(h, 0.), c(0., h), c(0., h), c(-h, 0.)],
                    vec![c(h, 0.), c(0., -h), c(0., h), c(h, 0.)],
                    vec![c(h, 0.), c(0., h), c(0., -h), c(h, 0.)],
                    vec![c(h, 0.), c(0., -h), c(0., -h), c(-h, 0.)],
                ],
                // B4. The sign of the third component of the third vector is
                // fixed by the orthonormality requirement checked below.
                vec![
                    vec![c(h, 0.), c(-h, 0.), c(0., -h), c(0., -h)],
                    vec![c(h, 0.), c(-h, 0.), c(0., h), c(0., h)],
                    vec![c(h, 0.), c(h, 0.), c(0., h), c(0., -h)],
                    vec![c(h, 0.), c(h, 0.), c(0., -h), c(0., h)],
                ],
                // B5.
                vec![
                    vec![c(h, 0.), c(0., -h), c(-h, 0.), c(0., -h)],
                    vec![c(h, 0.), c(0., -h), c(h, 0.), c(0., h)],
                    vec![c(h, 0.), c(0., h), c(-h, 0.), c(0., h)],
                    vec![c(h, 0.), c(0., h), c(h, 0.), c(0., -h)],
                ],
            ]
        }
        other => return Err(Error::UnsupportedDimension(other)),
    };

    let mut states = Vec::new();
    let mut labels = Vec::new();
    for (bi, basis_states) in bases.iter().enumerate() {
        for (si, entries) in basis_states.iter().enumerate() {
            states.push(Array1::from_vec(entries.clone()));
            labels.push(format!("B{}:{}", bi + 1, si + 1));
        }
    }
    let set = DesignSet {
        dim,
        states,
        labels,
    };
    validate_design(&set)?;
    Ok(set)
}

/// Exhaustive overlap check: unit norms, intra-basis orthonormality, and
/// cross-basis unbiasedness, all at the exact-arithmetic tolerance.
fn validate_design(set: &DesignSet) -> Result<()> {
    let d = set.dim;
    let per_basis = d;
    let unbiased = 1.0 / d as f64;
    for p in 0..set.len() {
        let norm: f64 = set.states[p].iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > DESIGN_TOL {
            return Err(Error::InvalidDesign(format!(
                "state {} has norm² {norm}",
                set.labels[p]
            )));
        }
        for q in (p + 1)..set.len() {
            let overlap: Complex64 = set.states[p]
                .iter()
                .zip(set.states[q].iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
            let same_basis = p / per_basis == q / per_basis;
            if same_basis {
                if overlap.norm() > DESIGN_TOL {
                    return Err(Error::InvalidDesign(format!(
                        "states {} and {} are not orthogonal (⟨·|·⟩ = {overlap})",
                        set.labels[p], set.labels[q]
                    )));
                }
            } else if (overlap.norm_sqr() - unbiased).abs() > DESIGN_TOL {
                return Err(Error::InvalidDesign(format!(
                    "states {} and {} have |overlap|² = {} instead of {unbiased}",
                    set.labels[p],
                    set.labels[q],
                    overlap.norm_sqr()
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_pauli_basis;
    use crate::channel::{make_gate, GateSpec};

    #[test]
    fn rejects_unsupported_dimension() {
        assert!(build_mub_design(3).is_err());
        assert!(build_mub_design(8).is_err());
    }

    #[test]
    fn four_dim_set_has_twenty_states() {
        let set = build_mub_design(4).unwrap();
        assert_eq!(set.len(), 20);
        assert_eq!(set.dim(), 4);
        // K = D(D+1).
        assert_eq!(set.len(), set.dim() * (set.dim() + 1));
    }

    #[test]
    fn third_state_of_first_basis_is_ten() {
        let set = build_mub_design(4).unwrap();
        let v = set.state(2);
        assert_eq!(set.label(2), "B1:3");
        assert!((v[2] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(v[0].norm() + v[1].norm() + v[3].norm() < 1e-15);
    }

    #[test]
    fn first_state_of_third_basis() {
        let set = build_mub_design(4).unwrap();
        let v = set.state(8);
        assert_eq!(set.label(8), "B3:1");
        let want = [c(0.5, 0.0), c(0.0, 0.5), c(0.0, 0.5), c(-0.5, 0.0)];
        for (got, want) in v.iter().zip(want.iter()) {
            assert!((got - want).norm() < 1e-15);
        }
    }

    #[test]
    fn two_dim_cross_overlaps() {
        let set = build_mub_design(2).unwrap();
        assert_eq!(set.len(), 6);
        let mut cross_pairs = 0;
        for p in 0..6 {
            for q in 0..6 {
                if p / 2 == q / 2 || p == q {
                    continue;
                }
                let overlap: Complex64 = set
                    .state(p)
                    .iter()
                    .zip(set.state(q).iter())
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                assert!((overlap.norm_sqr() - 0.5).abs() < 1e-12);
                cross_pairs += 1;
            }
        }
        assert_eq!(cross_pairs, 24); // 12 unordered pairs
    }

    #[test]
    fn design_averages_to_maximally_mixed() {
        // Σ_j ρ_j / K = I/D, an exact first-moment identity for the set.
        for dim in [2usize, 4] {
            let set = build_mub_design(dim).unwrap();
            let mut sum = CMatrix::zeros((dim, dim));
            for j in 0..set.len() {
                sum = sum + set.density(j);
            }
            sum /= c(set.len() as f64, 0.0);
            let expect = linalg::identity(dim) / c(dim as f64, 0.0);
            assert!(linalg::max_abs_diff(&sum, &expect) < 1e-12);
        }
    }

    #[test]
    fn coefficients_have_four_term_support() {
        let set = build_mub_design(4).unwrap();
        let basis = build_pauli_basis(2).unwrap();
        let table = set.state_coefficients(&basis).unwrap();
        for (j, row) in table.iter().enumerate() {
            assert!((row[0] - 0.25).abs() < 1e-12, "e_0 must be 1/D");
            let nonzero = row.iter().filter(|e| e.abs() > 1e-12).count();
            assert_eq!(nonzero, 4, "state {j} support");
            for &e in row {
                assert!(e.abs() < 1e-12 || (e.abs() - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn all_plus_state_coefficients() {
        // B2:1 = |++⟩ lives on {I, X1, X2, X1X2}, each with weight 1/4.
        let set = build_mub_design(4).unwrap();
        let basis = build_pauli_basis(2).unwrap();
        let table = set.state_coefficients(&basis).unwrap();
        let row = &table[4];
        assert_eq!(set.label(4), "B2:1");
        for (k, &e) in row.iter().enumerate() {
            let want = match k {
                0 | 1 | 4 | 5 => 0.25,
                _ => 0.0,
            };
            assert!((e - want).abs() < 1e-12, "k={k}: {e}");
        }
    }

    #[test]
    fn noop_survival_identity_element() {
        let set = build_mub_design(4).unwrap();
        let basis = build_pauli_basis(2).unwrap();
        let ch = make_gate(GateSpec::Noop);
        let f00 = set
            .design_average(&ch, basis.element(0), basis.element(0))
            .unwrap();
        assert!((f00 - c(1.0, 0.0)).norm() < 1e-12);
        // Traceless diagonal: survival probability 1/(D+1).
        let f55 = set
            .design_average(&ch, basis.element(5), basis.element(5))
            .unwrap();
        assert!((f55 - c(0.2, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn randomized_two_design_check() {
        let set = build_mub_design(4).unwrap();
        let basis = build_pauli_basis(2).unwrap();
        let report = set.verify_2design(&basis, 10, 42).unwrap();
        assert!(report.max_deviation < 1e-9, "{}", report.max_deviation);

        let set2 = build_mub_design(2).unwrap();
        let basis2 = build_pauli_basis(1).unwrap();
        let report2 = set2.verify_2design(&basis2, 10, 42).unwrap();
        assert!(report2.max_deviation < 1e-9);
    }

    #[test]
    fn export_round_trips_through_json() {
        let set = build_mub_design(4).unwrap();
        let json = serde_json::to_string(&set.export()).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["dimension"], 4);
        assert_eq!(parsed["cardinality"], 20);
        assert_eq!(parsed["states"].as_array().unwrap().len(), 20);
    }
}
