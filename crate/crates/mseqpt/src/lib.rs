//! Selective quantum process tomography for small spin systems.
//!
//! A completely positive map Λ acting on a D-dimensional system can be written
//! as Λ(ρ) = Σ_ab χ_ab E_a ρ E_b† over a product-operator basis {E_i}. This
//! crate estimates the process matrix χ — element by element or in full — from
//! expectation values Tr[E_k Λ(E_i)], the kind of quantity a spectrometer
//! measuring single-spin z magnetizations actually delivers. The selective
//! estimator averages those expectations over a quantum 2-design built from
//! mutually unbiased bases, with all combination weights computed analytically
//! up front.
//!
//! The crate provides:
//!
//! - [`basis`]: the Pauli product-operator basis and expansions in it;
//! - [`channel`]: unitary / Kraus / χ channel forms, conversions, and the
//!   gate library (NOOP, controlled-Rx(π), controlled-Ry(−π/2), textbook
//!   variants, standard noise channels);
//! - [`design`]: the MUB-derived 2-design state sets for D = 2 and D = 4;
//! - [`backend`]: a simulated measurement backend (exact, finite-shot, or
//!   Gaussian-noise) with observable-to-z-magnetization mapping and a
//!   resource ledger;
//! - [`estimator`]: the selective estimator plus standard-QPT and
//!   survival-probability-based baselines;
//! - [`report`]: fidelity, physicality projection, and report emission;
//! - [`config`]: the flat key-value experiment configuration format.

pub mod backend;
pub mod basis;
pub mod channel;
pub mod config;
pub mod design;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod report;

pub use backend::{BackendMode, MeasurementBackend, ObservableMap, ResourceLedger};
pub use basis::OperatorBasis;
pub use channel::{GateSpec, QuantumChannel};
pub use config::{ChannelSpec, ExperimentConfig, Protocol, Selection};
pub use design::DesignSet;
pub use error::{Error, Result};
pub use estimator::{ChiEstimate, CoefficientTensor, SurvivalProbability};
pub use linalg::CMatrix;
pub use report::TomographyReport;

