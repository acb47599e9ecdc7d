//! Completely positive maps in unitary, Kraus, and χ form.
//!
//! All three forms apply identically: Λ(M) = U M U†, Σ_i A_i M A_i†, or
//! Σ_ab χ_ab E_a M E_b† over an operator basis. Conversions go through the
//! basis expansion of the Kraus operators, A_i = Σ_m a_im E_m, which makes
//! `kraus_to_chi` the ground-truth reference every estimator is checked
//! against.

use std::f64::consts::FRAC_1_SQRT_2;


use crate::basis::{self, OperatorBasis};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};

/// Validation tolerance for channel invariants (unitarity, trace
/// preservation, χ physicality).
pub const CHANNEL_TOL: f64 = 1e-9;

/// Internal representation of a channel.
#[derive(Debug, Clone)]
pub enum ChannelForm {
    Unitary(CMatrix),
    Kraus(Vec<CMatrix>),
    Chi { chi: CMatrix, basis: OperatorBasis },
}

/// A validated CP trace-preserving map on D×D operators.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    dim: usize,
    form: ChannelForm,
}

impl QuantumChannel {
    /// Wraps a unitary; rejects matrices with U†U ≠ I beyond tolerance.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        if u.nrows() != u.ncols() {
            return Err(Error::DimensionMismatch {
                expected: u.nrows(),
                got: u.ncols(),
            });
        }
        if !linalg::is_unitary(&u, CHANNEL_TOL) {
            return Err(Error::InvalidChannel("matrix is not unitary".into()));
        }
        Ok(Self {
            dim: u.nrows(),
            form: ChannelForm::Unitary(u),
        })
    }

    /// Wraps a Kraus list; requires Σ_i A_i†A_i = I (trace preservation).
    pub fn kraus(ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidChannel("empty Kraus list".into()))?;
        let dim = first.nrows();
        if ops
            .iter()
            .any(|op| op.nrows() != dim || op.ncols() != dim)
        {
            return Err(Error::InvalidChannel(
                "Kraus operators have mixed dimensions".into(),
            ));
        }
        let mut sum = CMatrix::zeros((dim, dim));
        for op in &ops {
            sum = sum + linalg::dagger(op).dot(op);
        }
        if linalg::max_abs_diff(&sum, &linalg::identity(dim)) > CHANNEL_TOL {
            return Err(Error::InvalidChannel(
                "Kraus set does not preserve trace (Σ A†A != I)".into(),
            ));
        }
        Ok(Self {
            dim,
            form: ChannelForm::Kraus(ops),
        })
    }

    /// Wraps a χ matrix over `basis`; requires Hermiticity, positivity, and
    /// the trace-preservation constraint Σ_ab χ_ab E_b†E_a = I.
    pub fn chi(chi: CMatrix, basis: OperatorBasis) -> Result<Self> {
        let n = basis.len();
        if chi.nrows() != n || chi.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: chi.nrows(),
            });
        }
        if !linalg::is_hermitian(&chi, CHANNEL_TOL) {
            return Err(Error::InvalidChannel("χ is not Hermitian".into()));
        }
        if !linalg::is_psd(&chi, CHANNEL_TOL) {
            return Err(Error::InvalidChannel("χ is not positive".into()));
        }
        let dim = basis.dim();
        let mut tp = CMatrix::zeros((dim, dim));
        for a in 0..n {
            for b in 0..n {
                let w = chi[[a, b]];
                if w.norm() < 1e-18 {
                    continue;
                }
                // E_b† E_a = E_b E_a for the Hermitian product basis.
                tp = tp + basis.element(b).dot(basis.element(a)) * w;
            }
        }
        if linalg::max_abs_diff(&tp, &linalg::identity(dim)) > CHANNEL_TOL {
            return Err(Error::InvalidChannel(
                "χ does not satisfy Σ χ_ab E_b†E_a = I".into(),
            ));
        }
        Ok(Self {
            dim,
            form: ChannelForm::Chi { chi, basis },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn form(&self) -> &ChannelForm {
        &self.form
    }

    /// Applies the map to an arbitrary D×D operator (linearity makes the
    /// input a general matrix, not only a state).
    pub fn apply(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: m.nrows(),
            });
        }
        Ok(match &self.form {
            ChannelForm::Unitary(u) => u.dot(m).dot(&linalg::dagger(u)),
            ChannelForm::Kraus(ops) => {
                let mut out = CMatrix::zeros((self.dim, self.dim));
                for op in ops {
                    out = out + op.dot(m).dot(&linalg::dagger(op));
                }
                out
            }
            ChannelForm::Chi { chi, basis } => {
                let mut out = CMatrix::zeros((self.dim, self.dim));
                for a in 0..basis.len() {
                    for b in 0..basis.len() {
                        let w = chi[[a, b]];
                        if w.norm() < 1e-18 {
                            continue;
                        }
                        out = out + basis.element(a).dot(m).dot(basis.element(b)) * w;
                    }
                }
                out
            }
        })
    }

    /// True when Λ(I) = I within `tol`.
    pub fn is_unital(&self, tol: f64) -> bool {
        let eye = linalg::identity(self.dim);
        match self.apply(&eye) {
            Ok(out) => linalg::max_abs_diff(&out, &eye) <= tol,
            Err(_) => false,
        }
    }

    /// χ representation of this channel over `basis` (the conversion target
    /// for reference comparisons).
    pub fn to_chi(&self, basis: &OperatorBasis) -> Result<CMatrix> {
        match &self.form {
            ChannelForm::Unitary(u) => unitary_to_chi(u, basis),
            ChannelForm::Kraus(ops) => kraus_to_chi(ops, basis),
            ChannelForm::Chi { chi, basis: own } => {
                if own.dim() != basis.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: own.dim(),
                        got: basis.dim(),
                    });
                }
                Ok(chi.clone())
            }
        }
    }
}

/// χ matrix of a unitary channel: rank one, χ_ab = a_a conj(a_b) with
/// a = (1/D) Tr(U E_i).
pub fn unitary_to_chi(u: &CMatrix, basis: &OperatorBasis) -> Result<CMatrix> {
    if !linalg::is_unitary(u, CHANNEL_TOL) {
        return Err(Error::InvalidChannel("matrix is not unitary".into()));
    }
    let a = basis.expand(u)?;
    let n = basis.len();
    Ok(CMatrix::from_shape_fn((n, n), |(p, q)| a[p] * a[q].conj()))
}

/// χ matrix of a Kraus channel: χ = Σ_i a⁽ⁱ⁾ (a⁽ⁱ⁾)† over the expansions of
/// the individual Kraus operators.
pub fn kraus_to_chi(ops: &[CMatrix], basis: &OperatorBasis) -> Result<CMatrix> {
    let channel = QuantumChannel::kraus(ops.to_vec())?;
    let ops = match channel.form {
        ChannelForm::Kraus(ops) => ops,
        _ => unreachable!(),
    };
    let n = basis.len();
    let mut chi = CMatrix::zeros((n, n));
    for op in &ops {
        let a = basis.expand(op)?;
        for p in 0..n {
            for q in 0..n {
                chi[[p, q]] += a[p] * a[q].conj();
            }
        }
    }
    Ok(chi)
}

/// Rotation phase axis for the controlled-rotation gate construction; a
/// "bar" phase is the negative axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationAxis {
    X,
    Y,
    MinusX,
    MinusY,
}

impl RotationAxis {
    fn pauli(self) -> CMatrix {
        let [_, x, y, _] = basis::single_qubit_paulis();
        match self {
            RotationAxis::X => x,
            RotationAxis::Y => y,
            RotationAxis::MinusX => -x,
            RotationAxis::MinusY => -y,
        }
    }
}

/// Single-qubit rotation R_φ(θ) = exp(−i θ σ_φ / 2).
pub fn rotation(axis: RotationAxis, theta: f64) -> CMatrix {
    let half = theta / 2.0;
    let sigma = axis.pauli();
    linalg::identity(2) * c(half.cos(), 0.0) + sigma * c(0.0, -half.sin())
}

/// Two-qubit controlled rotation: qubit 1 controls, qubit 2 receives
/// R_φ(θ) when the control is |1⟩.
pub fn controlled_rotation(axis: RotationAxis, theta: f64) -> CMatrix {
    controlled_gate(&rotation(axis, theta))
}

/// |0⟩⟨0|⊗I + |1⟩⟨1|⊗u on two qubits (control = qubit 1).
pub fn controlled_gate(u: &CMatrix) -> CMatrix {
    let mut out = linalg::identity(4);
    for r in 0..2 {
        for s in 0..2 {
            out[[2 + r, 2 + s]] = u[[r, s]];
        }
    }
    out
}

/// Named two-qubit gates.
///
/// `Cnot` and `Ch` are the controlled-rotation constructions (controlled
/// Rx(π), which flips the target with a −i phase, and controlled Ry(−π/2));
/// the textbook variants drop the rotation phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateSpec {
    Noop,
    Cnot,
    Ch,
    TextbookCnot,
    TextbookCh,
    ControlledRotation { axis: RotationAxis, theta: f64 },
}

impl GateSpec {
    /// The (phase, angle) parameters of the controlled-rotation form, where
    /// the built-ins use θ ∈ {0, π/2, π}.
    pub fn rotation_params(&self) -> Option<(RotationAxis, f64)> {
        match self {
            GateSpec::Noop => Some((RotationAxis::X, 0.0)),
            GateSpec::Cnot => Some((RotationAxis::X, std::f64::consts::PI)),
            GateSpec::Ch => Some((RotationAxis::MinusY, std::f64::consts::FRAC_PI_2)),
            GateSpec::ControlledRotation { axis, theta } => Some((*axis, *theta)),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateSpec::Noop => "noop",
            GateSpec::Cnot => "cnot",
            GateSpec::Ch => "ch",
            GateSpec::TextbookCnot => "cnot-textbook",
            GateSpec::TextbookCh => "ch-textbook",
            GateSpec::ControlledRotation { .. } => "controlled-rotation",
        }
    }
}

/// Builds the unitary channel for a named gate.
pub fn make_gate(spec: GateSpec) -> QuantumChannel {
    let u = match spec {
        GateSpec::Noop => linalg::identity(4),
        GateSpec::TextbookCnot => {
            let [_, x, _, _] = basis::single_qubit_paulis();
            controlled_gate(&x)
        }
        GateSpec::TextbookCh => {
            let [_, x, _, z] = basis::single_qubit_paulis();
            let h = (x + z) * c(FRAC_1_SQRT_2, 0.0);
            controlled_gate(&h)
        }
        _ => {
            let (axis, theta) = spec.rotation_params().unwrap();
            controlled_rotation(axis, theta)
        }
    };
    QuantumChannel::unitary(u).expect("built-in gate must be unitary")
}

/// Depolarizing channel on n qubits: ρ ↦ (1−p)ρ + p·Tr[ρ]·I/D.
pub fn depolarizing(num_qubits: usize, p: f64) -> Result<QuantumChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidChannel(format!(
            "depolarizing probability {p} outside [0, 1]"
        )));
    }
    let b = basis::build_pauli_basis(num_qubits)?;
    let dsq = b.len() as f64;
    let mut ops = vec![linalg::identity(b.dim()) * c((1.0 - p).sqrt(), 0.0)];
    let w = c((p / dsq).sqrt(), 0.0);
    for e in b.elements() {
        ops.push(e * w);
    }
    QuantumChannel::kraus(ops)
}

/// Phase damping on one qubit: Kraus {√(1−p)·I, √p·Z_q}.
pub fn phase_damping(num_qubits: usize, qubit: usize, p: f64) -> Result<QuantumChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidChannel(format!(
            "phase damping probability {p} outside [0, 1]"
        )));
    }
    let [_, _, _, z] = basis::single_qubit_paulis();
    let zq = lift_single(&z, qubit, num_qubits)?;
    let dim = 1 << num_qubits;
    QuantumChannel::kraus(vec![
        linalg::identity(dim) * c((1.0 - p).sqrt(), 0.0),
        zq * c(p.sqrt(), 0.0),
    ])
}

/// Amplitude damping with rate γ on one qubit (non-unital for γ > 0).
pub fn amplitude_damping(num_qubits: usize, qubit: usize, gamma: f64) -> Result<QuantumChannel> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidChannel(format!(
            "damping rate {gamma} outside [0, 1]"
        )));
    }
    let mut k0 = linalg::identity(2);
    k0[[1, 1]] = c((1.0 - gamma).sqrt(), 0.0);
    let mut k1 = CMatrix::zeros((2, 2));
    k1[[0, 1]] = c(gamma.sqrt(), 0.0);
    QuantumChannel::kraus(vec![
        lift_single(&k0, qubit, num_qubits)?,
        lift_single(&k1, qubit, num_qubits)?,
    ])
}

/// Embeds a single-qubit operator at position `qubit` (1-based) in an
/// n-qubit register.
pub fn lift_single(op: &CMatrix, qubit: usize, num_qubits: usize) -> Result<CMatrix> {
    if qubit == 0 || qubit > num_qubits {
        return Err(Error::IndexOutOfRange {
            index: qubit,
            limit: num_qubits,
        });
    }
    let mut out = if qubit == 1 {
        op.clone()
    } else {
        linalg::identity(2)
    };
    for q in 2..=num_qubits {
        let factor = if q == qubit {
            op.clone()
        } else {
            linalg::identity(2)
        };
        out = linalg::kron(&out, &factor);
    }
    Ok(out)
}
