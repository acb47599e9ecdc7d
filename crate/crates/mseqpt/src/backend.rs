//! Simulated measurement backend.
//!
//! Serves the expectation values Tr[E_k Λ(E_i)] that drive the estimators,
//! the way a spectrometer would: prepare the deviation state (I + E_i)/D,
//! apply the channel, map the wanted observable onto a single-spin z
//! magnetization with a fixed unitary, and read that spin. Three noise
//! modes are available: exact values, finite-shot binomial sampling, and
//! additive Gaussian noise. Every distinct physical experiment is counted
//! in a [`ResourceLedger`].

use std::collections::{HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::Serialize;

use crate::basis::{build_pauli_basis, OperatorBasis};
use crate::channel::{controlled_gate, rotation, QuantumChannel, RotationAxis};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Per-spin readout: which qubit's σz is acquired.
pub type TargetSpin = usize;

/// One row of the observable-to-magnetization map: measuring E_k on ρ is
/// the same as measuring σz of `target` on U ρ U†.
#[derive(Debug, Clone)]
pub struct MapRow {
    /// Basis index k of the observable.
    pub observable: usize,
    /// Spin whose z magnetization is read (1-based).
    pub target: TargetSpin,
    /// Mapping unitary.
    pub unitary: CMatrix,
    /// Composition the unitary was built from, leftmost factor applied last.
    pub composition: String,
}

/// The fifteen two-qubit observables mapped to single-spin z readouts.
#[derive(Debug, Clone)]
pub struct ObservableMap {
    rows: Vec<MapRow>,
}

impl ObservableMap {
    /// Row for observable index k (1..=15).
    pub fn row(&self, k: usize) -> &MapRow {
        &self.rows[k - 1]
    }

    pub fn rows(&self) -> &[MapRow] {
        &self.rows
    }
}

/// Builds the mapping table for two qubits and verifies each row against
/// the defining identity U† σz^(target) U = E_k before returning it.
pub fn build_observable_map() -> Result<ObservableMap> {
    let basis = build_pauli_basis(2)?;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let rot = |axis: RotationAxis, qubit: usize| -> CMatrix {
        crate::channel::lift_single(&rotation(axis, half_pi), qubit, 2).unwrap()
    };
    let [_, x, _, _] = crate::basis::single_qubit_paulis();
    let cnot = controlled_gate(&x);
    let eye = linalg::identity(4);

    use RotationAxis::{MinusX, MinusY, X, Y};
    // (observable index, target spin, composition label, factors applied
    // first-to-last).
    let table: Vec<(usize, usize, &str, Vec<CMatrix>)> = vec![
        (1, 2, "-Y2", vec![rot(MinusY, 2)]),
        (2, 2, "X2", vec![rot(X, 2)]),
        (3, 2, "identity", vec![eye.clone()]),
        (4, 1, "-Y1", vec![rot(MinusY, 1)]),
        (5, 2, "CNOT Y2 Y1", vec![rot(Y, 1), rot(Y, 2), cnot.clone()]),
        (6, 2, "CNOT -X2 Y1", vec![rot(Y, 1), rot(MinusX, 2), cnot.clone()]),
        (7, 2, "CNOT -Y1", vec![rot(MinusY, 1), cnot.clone()]),
        (8, 1, "X1", vec![rot(X, 1)]),
        (9, 2, "CNOT -Y2 X1", vec![rot(X, 1), rot(MinusY, 2), cnot.clone()]),
        (
            10,
            2,
            "CNOT -X2 -X1",
            vec![rot(MinusX, 1), rot(MinusX, 2), cnot.clone()],
        ),
        (11, 2, "CNOT X1", vec![rot(X, 1), cnot.clone()]),
        (12, 1, "identity", vec![eye.clone()]),
        (13, 2, "CNOT -Y2", vec![rot(MinusY, 2), cnot.clone()]),
        (14, 2, "CNOT X2", vec![rot(X, 2), cnot.clone()]),
        (15, 2, "CNOT", vec![cnot.clone()]),
    ];

    let mut rows = Vec::with_capacity(15);
    for (observable, target, composition, factors) in table {
        let mut unitary = linalg::identity(4);
        for factor in factors {
            unitary = factor.dot(&unitary);
        }
        let sigma_z = basis.element(if target == 1 { 12 } else { 3 });
        let mapped = linalg::dagger(&unitary).dot(sigma_z).dot(&unitary);
        let err = linalg::max_abs_diff(&mapped, basis.element(observable));
        if err > 1e-12 {
            return Err(Error::ObservableMap {
                row: observable,
                detail: format!("U†σz({target})U differs from E_{observable} by {err:.3e}"),
            });
        }
        rows.push(MapRow {
            observable,
            target,
            unitary,
            composition: composition.to_string(),
        });
    }
    Ok(ObservableMap { rows })
}

/// Noise model of the backend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BackendMode {
    /// Exact expectation values.
    Ideal,
    /// Binomial sampling of N projective ±1 outcomes per readout.
    Shots { n: u64, seed: u64 },
    /// Exact expectation plus N(0, σ) per readout; cheap stand-in for
    /// large-N studies.
    GaussianNoise { sigma: f64, seed: u64 },
}

/// Which protocol's accounting constants the ledger applies: readout
/// settings charged per state preparation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ProtocolKind {
    Mseqpt,
    Qpt,
    Seqpt,
}

impl ProtocolKind {
    /// Readout settings acquired per prepared state: the selective scheme
    /// reads the three nonvanishing deviation observables of a design state
    /// plus the identity bookkeeping entry; a full state tomograph takes 8
    /// readouts; a survival-probability experiment takes 3.
    pub fn readouts_per_preparation(self) -> usize {
        match self {
            ProtocolKind::Mseqpt => 4,
            ProtocolKind::Qpt => 8,
            ProtocolKind::Seqpt => 3,
        }
    }
}

/// Counts for one protocol.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ProtocolCounts {
    pub preparations: usize,
    pub readouts: usize,
}

/// Counts of distinct physical experiments, split by protocol.
///
/// One "preparation" is one distinct prepared state; readouts are charged
/// per preparation in blocks of [`ProtocolKind::readouts_per_preparation`].
/// Cache hits never recount: the ledger tracks experiments, not queries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ResourceLedger {
    pub preparations: usize,
    pub readouts: usize,
    pub mseqpt: ProtocolCounts,
    pub qpt: ProtocolCounts,
    pub seqpt: ProtocolCounts,
}

impl ResourceLedger {
    fn record(&mut self, kind: ProtocolKind, preparations: usize, readouts: usize) {
        self.preparations += preparations;
        self.readouts += readouts;
        let bucket = match kind {
            ProtocolKind::Mseqpt => &mut self.mseqpt,
            ProtocolKind::Qpt => &mut self.qpt,
            ProtocolKind::Seqpt => &mut self.seqpt,
        };
        bucket.preparations += preparations;
        bucket.readouts += readouts;
    }
}

/// A measured value with its variance (zero in ideal mode).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: f64,
    pub variance: f64,
}

impl Sample {
    pub fn exact(value: f64) -> Self {
        Sample {
            value,
            variance: 0.0,
        }
    }

    pub fn std_err(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Expectation-value provider for a fixed channel.
///
/// Values are cached by (preparation index, observable index); derived
/// per-key RNG streams make shot outcomes independent of query order. The
/// reference values Tr[E_k Λ(I)] are zero analytically for unital channels
/// and come from one cached identity-preparation run otherwise.
#[derive(Debug, Clone)]
pub struct MeasurementBackend {
    channel: QuantumChannel,
    basis: OperatorBasis,
    map: Option<ObservableMap>,
    mode: BackendMode,
    accounting: ProtocolKind,
    unital: bool,
    ledger: ResourceLedger,
    raw_cache: HashMap<(usize, usize), Sample>,
    ref_cache: HashMap<usize, Sample>,
    output_cache: HashMap<usize, CMatrix>,
    prepared: HashSet<usize>,
    survival_counter: u64,
}

impl MeasurementBackend {
    /// Builds a backend for `channel`. Shots and Gaussian modes need the
    /// two-qubit observable map and therefore require D = 4; the ideal mode
    /// works for any power-of-two dimension the basis supports.
    pub fn new(channel: QuantumChannel, mode: BackendMode) -> Result<Self> {
        let dim = channel.dim();
        let num_qubits = dim.trailing_zeros() as usize;
        if dim == 0 || 1 << num_qubits != dim || num_qubits == 0 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let basis = build_pauli_basis(num_qubits)?;
        let map = if dim == 4 {
            Some(build_observable_map()?)
        } else {
            if mode != BackendMode::Ideal {
                return Err(Error::UnsupportedDimension(dim));
            }
            None
        };
        let unital = channel.is_unital(1e-10);
        Ok(Self {
            channel,
            basis,
            map,
            mode,
            accounting: ProtocolKind::Mseqpt,
            unital,
            ledger: ResourceLedger::default(),
            raw_cache: HashMap::new(),
            ref_cache: HashMap::new(),
            output_cache: HashMap::new(),
            prepared: HashSet::new(),
            survival_counter: 0,
        })
    }

    /// Selects which protocol's accounting constants the ledger uses.
    pub fn set_accounting(&mut self, kind: ProtocolKind) {
        self.accounting = kind;
    }

    pub fn mode(&self) -> BackendMode {
        self.mode
    }

    pub fn channel(&self) -> &QuantumChannel {
        &self.channel
    }

    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }

    pub fn is_unital(&self) -> bool {
        self.unital
    }

    pub fn ledger(&self) -> &ResourceLedger {
        &self.ledger
    }

    /// Distinct basis preparations performed so far, sorted.
    pub fn preparations_used(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.prepared.iter().copied().collect();
        out.sort_unstable();
        out
    }

    /// Extra ledger charge for an experiment the caller accounts for but
    /// resolves analytically (for instance a combination state with zero
    /// weight).
    pub fn charge(&mut self, kind: ProtocolKind, preparations: usize, readouts: usize) {
        self.ledger.record(kind, preparations, readouts);
    }

    /// Expectation value Tr[E_k Λ(E_i)] in raw trace units.
    ///
    /// k = 0 is served analytically (trace preservation); i = 0 is the
    /// reference value Tr[E_k Λ(I)].
    pub fn expectation(&mut self, i: usize, k: usize) -> Result<f64> {
        Ok(self.expectation_sample(i, k)?.value)
    }

    /// Expectation with its variance (reference subtraction included).
    pub fn expectation_sample(&mut self, i: usize, k: usize) -> Result<Sample> {
        self.check_index(i)?;
        self.check_index(k)?;
        if k == 0 {
            // Tr[Λ(E_i)] = Tr[E_i] by trace preservation.
            let value = if i == 0 { self.basis.dim() as f64 } else { 0.0 };
            return Ok(Sample::exact(value));
        }
        if i == 0 {
            return self.reference_sample(k);
        }
        let raw = self.raw_sample(i, k)?;
        let reference = self.reference_sample(k)?;
        Ok(Sample {
            value: raw.value - reference.value,
            variance: raw.variance + reference.variance,
        })
    }

    /// The uncorrected acquisition D·⟨σz⟩ for preparation i and observable
    /// k, which estimates Tr[E_k Λ(I)] + Tr[E_k Λ(E_i)]. Cached per (i, k);
    /// the ledger is charged on the first use of preparation i.
    pub fn raw_sample(&mut self, i: usize, k: usize) -> Result<Sample> {
        self.check_index(i)?;
        self.check_index(k)?;
        if i == 0 || k == 0 {
            return Err(Error::IndexOutOfRange {
                index: 0,
                limit: self.basis.len(),
            });
        }
        if let Some(sample) = self.raw_cache.get(&(i, k)) {
            return Ok(*sample);
        }
        self.charge_preparation(i);
        let dim = self.basis.dim() as f64;
        // ⟨σz^(target)⟩ of the mapped output of the deviation state
        // ρ_i = (I + E_i)/D.
        let lam_i = self.channel_output(i)?;
        let lam_eye = self.channel_output(0)?;
        let rho_out = (&lam_eye + &lam_i) / linalg::c(dim, 0.0);
        let mean = self.read_z_magnetization(&rho_out, k)?;
        // The deviation state (I + E_i)/D is PSD (product operators square
        // to the identity), so the channel output is a state and the
        // magnetization is a genuine expectation.
        debug_assert!(mean.abs() <= 1.0 + 1e-9, "magnetization {mean} out of range");
        let sample = self.noisy_reading(mean, stream_for_pair(i, k, self.basis.len()), dim);
        self.raw_cache.insert((i, k), sample);
        Ok(sample)
    }

    /// Reference value Tr[E_k Λ(I)]: zero for unital channels, one cached
    /// identity-preparation acquisition otherwise.
    pub fn reference_sample(&mut self, k: usize) -> Result<Sample> {
        self.check_index(k)?;
        if k == 0 {
            return Ok(Sample::exact(self.basis.dim() as f64));
        }
        if self.unital {
            return Ok(Sample::exact(0.0));
        }
        if let Some(sample) = self.ref_cache.get(&k) {
            return Ok(*sample);
        }
        self.charge_preparation(0);
        let dim = self.basis.dim() as f64;
        let rho_out = self.channel_output(0)? / linalg::c(dim, 0.0);
        let mean = self.read_z_magnetization(&rho_out, k)?;
        let sample = self.noisy_reading(mean, stream_for_reference(k, self.basis.len()), dim);
        self.ref_cache.insert(k, sample);
        Ok(sample)
    }

    /// Survival probability Tr[ρ_j Λ(σ̂)] for a normalized preparation σ̂.
    pub fn survival_probability(&mut self, sigma_prep: &CMatrix, rho_j: &CMatrix) -> Result<f64> {
        Ok(self.survival_sample(sigma_prep, rho_j)?.value)
    }

    /// Survival probability with variance. Counts one preparation and the
    /// per-state readout block.
    pub fn survival_sample(&mut self, sigma_prep: &CMatrix, rho_j: &CMatrix) -> Result<Sample> {
        let dim = self.basis.dim();
        if sigma_prep.nrows() != dim || rho_j.nrows() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: sigma_prep.nrows(),
            });
        }
        if !linalg::is_psd(sigma_prep, 1e-9) {
            return Err(Error::InvalidState(
                "survival preparation is not positive semidefinite".into(),
            ));
        }
        let tr = linalg::trace(sigma_prep).re;
        if tr <= 1e-12 {
            return Err(Error::InvalidState(
                "survival preparation has vanishing trace".into(),
            ));
        }
        let sigma = sigma_prep / linalg::c(tr, 0.0);
        let out = self.channel.apply(&sigma)?;
        let p = linalg::hs_inner(&out, rho_j).re.clamp(0.0, 1.0);

        self.ledger.record(
            ProtocolKind::Seqpt,
            1,
            ProtocolKind::Seqpt.readouts_per_preparation(),
        );
        let stream = stream_for_survival(self.survival_counter, self.basis.len());
        self.survival_counter += 1;

        Ok(match self.mode {
            BackendMode::Ideal => Sample::exact(p),
            BackendMode::Shots { n, seed } => {
                let mut rng = rng_for(seed, stream);
                let hits = Binomial::new(n, p).expect("p in [0,1]").sample(&mut rng);
                let est = hits as f64 / n as f64;
                Sample {
                    value: est,
                    variance: est * (1.0 - est) / n as f64,
                }
            }
            BackendMode::GaussianNoise { sigma, seed } => {
                let mut rng = rng_for(seed, stream);
                let noise: f64 = Normal::new(0.0, sigma).unwrap().sample(&mut rng);
                Sample {
                    value: p + noise,
                    variance: sigma * sigma,
                }
            }
        })
    }

    /// Cache contents as CSV lines `i,k,value,stderr` sorted by key.
    pub fn export_cache_csv(&self) -> String {
        let mut keys: Vec<(usize, usize)> = self.raw_cache.keys().copied().collect();
        keys.sort_unstable();
        let mut out = String::from("i,k,value,stderr\n");
        for (i, k) in keys {
            let raw = self.raw_cache[&(i, k)];
            let reference = if self.unital {
                Sample::exact(0.0)
            } else {
                self.ref_cache.get(&k).copied().unwrap_or(Sample::exact(0.0))
            };
            let value = raw.value - reference.value;
            let std_err = (raw.variance + reference.variance).sqrt();
            out.push_str(&format!("{i},{k},{value},{std_err}\n"));
        }
        out
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.basis.len() {
            return Err(Error::IndexOutOfRange {
                index,
                limit: self.basis.len(),
            });
        }
        Ok(())
    }

    fn charge_preparation(&mut self, i: usize) {
        if self.prepared.insert(i) {
            self.ledger.record(
                self.accounting,
                1,
                self.accounting.readouts_per_preparation(),
            );
        }
    }

    /// Λ(E_i) (or Λ(I) for i = 0), cached across queries.
    fn channel_output(&mut self, i: usize) -> Result<CMatrix> {
        if let Some(out) = self.output_cache.get(&i) {
            return Ok(out.clone());
        }
        let out = self.channel.apply(self.basis.element(i))?;
        self.output_cache.insert(i, out.clone());
        Ok(out)
    }

    /// ⟨σz^(target)⟩ after mapping observable k, taken from the diagonal of
    /// the rotated state restricted to the target spin. Falls back to the
    /// direct trace when no map is present (ideal mode, D ≠ 4).
    fn read_z_magnetization(&self, rho: &CMatrix, k: usize) -> Result<f64> {
        match &self.map {
            Some(map) => {
                let row = map.row(k);
                let rotated = row.unitary.dot(rho).dot(&linalg::dagger(&row.unitary));
                let mut mean = 0.0;
                for idx in 0..4 {
                    let bit = if row.target == 1 { idx >> 1 } else { idx & 1 };
                    let sign = if bit == 0 { 1.0 } else { -1.0 };
                    mean += sign * rotated[[idx, idx]].re;
                }
                Ok(mean)
            }
            None => {
                // Tr[ρ E_k] over the full register.
                Ok(linalg::hs_inner(rho, self.basis.element(k)).re)
            }
        }
    }

    /// Turns an exact magnetization into a (possibly noisy) acquisition in
    /// raw trace units (scaled by D).
    fn noisy_reading(&self, mean: f64, stream: u64, dim: f64) -> Sample {
        match self.mode {
            BackendMode::Ideal => Sample::exact(dim * mean),
            BackendMode::Shots { n, seed } => {
                let p = ((1.0 + mean) / 2.0).clamp(0.0, 1.0);
                let mut rng = rng_for(seed, stream);
                let hits = Binomial::new(n, p).expect("p in [0,1]").sample(&mut rng);
                let sample_mean = 2.0 * (hits as f64) / (n as f64) - 1.0;
                let var = (1.0 - sample_mean * sample_mean).max(0.0) / n as f64;
                Sample {
                    value: dim * sample_mean,
                    variance: dim * dim * var,
                }
            }
            BackendMode::GaussianNoise { sigma, seed } => {
                let mut rng = rng_for(seed, stream);
                let noise: f64 = Normal::new(0.0, sigma).unwrap().sample(&mut rng);
                Sample {
                    value: dim * (mean + noise),
                    variance: dim * dim * sigma * sigma,
                }
            }
        }
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn stream_for_pair(i: usize, k: usize, dsq: usize) -> u64 {
    (i * dsq + k) as u64 + 1
}

fn stream_for_reference(k: usize, dsq: usize) -> u64 {
    (dsq * dsq + k) as u64 + 1
}

fn stream_for_survival(counter: u64, dsq: usize) -> u64 {
    2 * (dsq * dsq) as u64 + counter + 1
}
