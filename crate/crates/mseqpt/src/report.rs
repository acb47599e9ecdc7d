//! Report generation: fidelity, physicality projection, and file emission.
//!
//! [`run`] drives one configured experiment end to end and writes a JSON
//! report, real/imaginary χ grids as CSV with basis-label headers, and a
//! long-format bar-chart file (index_a, index_b, re, im). Identical configs
//! and seeds produce byte-identical reports apart from the timestamp.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::backend::{MeasurementBackend, ResourceLedger};
use crate::basis::{build_pauli_basis, OperatorBasis};
use crate::config::{ExperimentConfig, Protocol, Selection};
use crate::design::build_mub_design;
use crate::error::{Error, Result};
use crate::estimator::{mseqpt_elements, seqpt_elements, standard_qpt, ChiEstimate};
use crate::linalg::{self, c, CMatrix};

/// Normalized overlap |Tr[χe χt†]| / √(Tr[χe†χe]·Tr[χt†χt]); scale
/// invariant and equal to one exactly when the two matrices are
/// proportional.
pub fn fidelity(chi_expt: &CMatrix, chi_theo: &CMatrix) -> Result<f64> {
    if chi_expt.nrows() != chi_theo.nrows() || chi_expt.ncols() != chi_theo.ncols() {
        return Err(Error::DimensionMismatch {
            expected: chi_theo.nrows(),
            got: chi_expt.nrows(),
        });
    }
    let norm_e = linalg::hs_inner(chi_expt, chi_expt).re;
    let norm_t = linalg::hs_inner(chi_theo, chi_theo).re;
    if norm_e <= 0.0 || norm_t <= 0.0 {
        return Err(Error::Numerical(
            "fidelity of a zero-norm matrix is undefined".into(),
        ));
    }
    Ok(linalg::hs_inner(chi_expt, chi_theo).norm() / (norm_e * norm_t).sqrt())
}

/// Nearest-by-construction physical χ: Hermitize, clip negative
/// eigenvalues, renormalize to unit trace. Returns the projected matrix
/// and the total clipped magnitude as a quality diagnostic.
pub fn project_physical(chi: &CMatrix) -> Result<(CMatrix, f64)> {
    if chi.nrows() != chi.ncols() {
        return Err(Error::DimensionMismatch {
            expected: chi.nrows(),
            got: chi.ncols(),
        });
    }
    let herm = (chi + &linalg::dagger(chi)) * c(0.5, 0.0);
    let (vals, vecs) = linalg::hermitian_eigen(&herm)?;
    let clipped: f64 = vals.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();
    let kept = Array1::from_iter(vals.iter().map(|&v| v.max(0.0)));
    let total: f64 = kept.sum();
    if total <= 1e-300 {
        // Everything clipped away; the zero matrix is the only sensible
        // output and cannot be trace-normalized.
        return Ok((CMatrix::zeros(chi.dim()), clipped));
    }
    let diag = Array2::from_diag(&Array1::from_iter(
        kept.iter().map(|&v| c(v / total, 0.0)),
    ));
    let projected = vecs.dot(&diag).dot(&linalg::dagger(&vecs));
    Ok((projected, clipped))
}

/// Serializable result of one experiment run.
#[derive(Debug, Clone, Serialize)]
pub struct TomographyReport {
    pub schema_version: u32,
    pub protocol: String,
    pub channel: String,
    pub backend: String,
    pub seed: u64,
    pub config_hash: String,
    pub dimension: usize,
    pub basis_labels: Vec<String>,
    /// Estimated elements; empty means the full grid was estimated.
    pub partial_elements: Vec<[usize; 2]>,
    /// Raw-estimate fidelity against the reference χ (full runs only).
    pub fidelity: Option<f64>,
    /// Fidelity after the physicality projection (full runs only).
    pub fidelity_projected: Option<f64>,
    /// Total negative-eigenvalue magnitude removed by the projection.
    pub projection_clipped: f64,
    /// Max |χ_ab − conj(χ_ba)| of the raw estimate.
    pub hermiticity_gap: f64,
    pub ledger: ResourceLedger,
    pub chi_real: Vec<Vec<f64>>,
    pub chi_imag: Vec<Vec<f64>>,
    pub chi_projected_real: Vec<Vec<f64>>,
    pub chi_projected_imag: Vec<Vec<f64>>,
    pub chi_reference_real: Vec<Vec<f64>>,
    pub chi_reference_imag: Vec<Vec<f64>>,
    pub std_err: Vec<Vec<f64>>,
    /// Seconds since the epoch; the one field allowed to differ between
    /// identical runs.
    pub timestamp: u64,
}

impl TomographyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Runs the configured experiment and writes the requested output files.
pub fn run(config: &ExperimentConfig) -> Result<TomographyReport> {
    let (report, backend) = execute_with_backend(config)?;
    write_outputs(config, &report)?;
    if config.export_cache {
        write_cache_csv(&config.out_dir, &backend)?;
    }
    Ok(report)
}

/// Runs the configured experiment without touching the filesystem.
pub fn execute(config: &ExperimentConfig) -> Result<TomographyReport> {
    Ok(execute_with_backend(config)?.0)
}

fn execute_with_backend(
    config: &ExperimentConfig,
) -> Result<(TomographyReport, MeasurementBackend)> {
    let channel = config.channel.build()?;
    let dim = channel.dim();
    let num_qubits = dim.trailing_zeros() as usize;
    let basis = build_pauli_basis(num_qubits)?;
    let reference = channel.to_chi(&basis)?;

    let selection_pairs = match &config.selection {
        Selection::Full => Vec::new(),
        Selection::Elements(pairs) => {
            for &(a, b) in pairs {
                if a >= basis.len() || b >= basis.len() {
                    return Err(Error::Config(format!(
                        "element ({a},{b}) outside the {}-element basis",
                        basis.len()
                    )));
                }
            }
            pairs.clone()
        }
    };

    let mut backend = MeasurementBackend::new(channel, config.backend_mode())?;
    let estimate = match config.protocol {
        Protocol::Qpt => standard_qpt(&mut backend)?,
        Protocol::Mseqpt | Protocol::Seqpt => {
            let design = build_mub_design(dim)?;
            let pairs = if selection_pairs.is_empty() {
                (0..basis.len())
                    .flat_map(|a| (0..basis.len()).map(move |b| (a, b)))
                    .collect()
            } else {
                selection_pairs.clone()
            };
            match config.protocol {
                Protocol::Mseqpt => mseqpt_elements(&pairs, &design, &mut backend)?,
                Protocol::Seqpt => seqpt_elements(&pairs, &design, &mut backend)?,
                Protocol::Qpt => unreachable!(),
            }
        }
    };

    let report = build_report(config, &basis, &estimate, &reference)?;
    Ok((report, backend))
}

fn build_report(
    config: &ExperimentConfig,
    basis: &OperatorBasis,
    estimate: &ChiEstimate,
    reference: &CMatrix,
) -> Result<TomographyReport> {
    let full = estimate.is_full();
    let (projected, clipped) = project_physical(&estimate.matrix)?;
    let (fid, fid_projected) = if full {
        (
            Some(fidelity(&estimate.matrix, reference)?),
            Some(fidelity(&projected, reference)?),
        )
    } else {
        (None, None)
    };

    let partial_elements = if full {
        Vec::new()
    } else {
        let mut pairs = Vec::new();
        for a in 0..basis.len() {
            for b in 0..basis.len() {
                if estimate.mask[[a, b]] {
                    pairs.push([a, b]);
                }
            }
        }
        pairs
    };

    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);

    Ok(TomographyReport {
        schema_version: 1,
        protocol: config.protocol.as_str().to_string(),
        channel: config.channel.describe(),
        backend: format!("{:?}", config.backend_mode()),
        seed: config.seed,
        config_hash: config.hash(),
        dimension: basis.dim(),
        basis_labels: basis.labels().to_vec(),
        partial_elements,
        fidelity: fid,
        fidelity_projected: fid_projected,
        projection_clipped: clipped,
        hermiticity_gap: estimate.hermiticity_gap(),
        ledger: estimate.ledger,
        chi_real: grid_part(&estimate.matrix, false),
        chi_imag: grid_part(&estimate.matrix, true),
        chi_projected_real: grid_part(&projected, false),
        chi_projected_imag: grid_part(&projected, true),
        chi_reference_real: grid_part(reference, false),
        chi_reference_imag: grid_part(reference, true),
        std_err: estimate
            .std_err
            .rows()
            .into_iter()
            .map(|row| row.to_vec())
            .collect(),
        timestamp,
    })
}

fn grid_part(m: &CMatrix, imaginary: bool) -> Vec<Vec<f64>> {
    m.rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .map(|z| if imaginary { z.im } else { z.re })
                .collect()
        })
        .collect()
}

fn write_outputs(config: &ExperimentConfig, report: &TomographyReport) -> Result<()> {
    std::fs::create_dir_all(&config.out_dir)?;
    if config.format.wants_json() {
        std::fs::write(config.out_dir.join("report.json"), report.to_json())?;
    }
    if config.format.wants_csv() {
        std::fs::write(
            config.out_dir.join("chi_real.csv"),
            grid_to_csv(&report.chi_real, &report.basis_labels),
        )?;
        std::fs::write(
            config.out_dir.join("chi_imag.csv"),
            grid_to_csv(&report.chi_imag, &report.basis_labels),
        )?;
        std::fs::write(
            config.out_dir.join("chi_bars.csv"),
            bars_to_csv(&report.chi_real, &report.chi_imag),
        )?;
    }
    Ok(())
}

/// Grid CSV: a basis-label header row, then one labeled row per basis
/// index. Values use the shortest round-trip float form.
pub fn grid_to_csv(grid: &[Vec<f64>], labels: &[String]) -> String {
    let mut out = String::from("basis");
    for label in labels {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for (row, label) in grid.iter().zip(labels) {
        out.push_str(label);
        for v in row {
            out.push(',');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

/// Parses a grid CSV produced by [`grid_to_csv`].
pub fn grid_from_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        fields.next(); // row label
        let row = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad grid value '{f}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Long-format bar data: `index_a,index_b,re,im`, one row per element.
pub fn bars_to_csv(real: &[Vec<f64>], imag: &[Vec<f64>]) -> String {
    let mut out = String::from("index_a,index_b,re,im\n");
    for (a, (row_re, row_im)) in real.iter().zip(imag).enumerate() {
        for (b, (re, im)) in row_re.iter().zip(row_im).enumerate() {
            out.push_str(&format!("{a},{b},{re},{im}\n"));
        }
    }
    out
}

/// Writes the backend cache next to the other outputs.
pub fn write_cache_csv(out_dir: &Path, backend: &MeasurementBackend) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("cache.csv"), backend.export_cache_csv())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_pauli_basis;
    use crate::channel::{make_gate, GateSpec};
    use crate::config::{BackendKind, ChannelSpec};
    use crate::linalg::max_abs_diff;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fidelity_of_identical_matrices() {
        let basis = build_pauli_basis(2).unwrap();
        let chi = make_gate(GateSpec::Cnot).to_chi(&basis).unwrap();
        assert!((fidelity(&chi, &chi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_is_scale_invariant() {
        let basis = build_pauli_basis(2).unwrap();
        let chi = make_gate(GateSpec::Ch).to_chi(&basis).unwrap();
        let scaled = &chi * c(0.9, 0.0);
        assert!((fidelity(&scaled, &chi).unwrap() - 1.0).abs() < 1e-12);
        let complex_scaled = &chi * c(0.3, -0.7);
        assert!((fidelity(&complex_scaled, &chi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_of_orthogonal_matrices() {
        // E_1 and E_2 outer blocks are Hilbert-Schmidt orthogonal.
        let mut a = CMatrix::zeros((4, 4));
        a[[1, 1]] = c(1.0, 0.0);
        let mut b = CMatrix::zeros((4, 4));
        b[[2, 2]] = c(1.0, 0.0);
        assert!(fidelity(&a, &b).unwrap() < 1e-12);
        assert!(fidelity(&a, &CMatrix::zeros((4, 4))).is_err());
    }

    #[test]
    fn projection_clips_and_renormalizes() {
        let chi = array![[c(1.1, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-0.1, 0.0)]];
        let (projected, clipped) = project_physical(&chi).unwrap();
        assert!((clipped - 0.1).abs() < 1e-12);
        assert!((projected[[0, 0]] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(projected[[1, 1]].norm() < 1e-12);
    }

    #[test]
    fn projection_fixes_physical_input() {
        let basis = build_pauli_basis(2).unwrap();
        let chi = make_gate(GateSpec::Ch).to_chi(&basis).unwrap();
        let (projected, clipped) = project_physical(&chi).unwrap();
        assert!(max_abs_diff(&projected, &chi) < 1e-12);
        assert!(clipped < 1e-12);
    }

    #[test]
    fn projection_output_is_physical() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let noise = linalg::random_hermitian(16, &mut rng) * c(0.05, 0.0);
            let basis = build_pauli_basis(2).unwrap();
            let chi = make_gate(GateSpec::Cnot).to_chi(&basis).unwrap() + &noise;
            let (projected, _) = project_physical(&chi).unwrap();
            assert!(linalg::is_hermitian(&projected, 1e-10));
            assert!(linalg::is_psd(&projected, 1e-10));
            assert!((linalg::trace(&projected) - c(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn noop_run_has_unit_fidelity() {
        let config = ExperimentConfig::default();
        let report = execute(&config).unwrap();
        assert!((report.fidelity.unwrap() - 1.0).abs() < 1e-9);
        assert!((report.chi_real[0][0] - 1.0).abs() < 1e-9);
        assert_eq!(report.ledger.preparations, 15);
        assert_eq!(report.ledger.readouts, 60);
    }

    #[test]
    fn qpt_and_selective_runs_agree() {
        let mut config = ExperimentConfig {
            channel: ChannelSpec::Named("ch".into()),
            ..Default::default()
        };
        let selective = execute(&config).unwrap();
        config.protocol = Protocol::Qpt;
        let tomographic = execute(&config).unwrap();
        for a in 0..16 {
            for b in 0..16 {
                let d_re = (selective.chi_real[a][b] - tomographic.chi_real[a][b]).abs();
                let d_im = (selective.chi_imag[a][b] - tomographic.chi_imag[a][b]).abs();
                assert!(d_re < 1e-8 && d_im < 1e-8, "({a},{b})");
            }
        }
    }

    #[test]
    fn partial_selection_masks_elements() {
        let config = ExperimentConfig {
            channel: ChannelSpec::Named("cnot".into()),
            selection: Selection::Elements(vec![(0, 1), (12, 13)]),
            ..Default::default()
        };
        let report = execute(&config).unwrap();
        assert_eq!(report.partial_elements, vec![[0, 1], [12, 13]]);
        assert!(report.fidelity.is_none());
        assert!((report.chi_imag[0][1] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn selection_bounds_are_config_errors() {
        let config = ExperimentConfig {
            selection: Selection::Elements(vec![(0, 99)]),
            ..Default::default()
        };
        assert!(matches!(execute(&config), Err(Error::Config(_))));
    }

    #[test]
    fn reports_are_reproducible_modulo_timestamp() {
        let config = ExperimentConfig {
            channel: ChannelSpec::Named("cnot".into()),
            backend: BackendKind::Shots,
            shots: 200,
            seed: 11,
            ..Default::default()
        };
        let strip = |s: String| -> String {
            s.lines()
                .filter(|l| !l.contains("timestamp"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let a = strip(execute(&config).unwrap().to_json());
        let b = strip(execute(&config).unwrap().to_json());
        assert_eq!(a, b);
    }

    #[test]
    fn cnot_under_shot_noise_keeps_high_fidelity() {
        let config = ExperimentConfig {
            channel: ChannelSpec::Named("cnot".into()),
            backend: BackendKind::Shots,
            shots: 10_000,
            seed: 1,
            ..Default::default()
        };
        let report = execute(&config).unwrap();
        assert!(report.fidelity.unwrap() >= 0.99, "{:?}", report.fidelity);
    }

    #[test]
    fn projection_barely_moves_noisy_fidelity() {
        let config = ExperimentConfig {
            channel: ChannelSpec::Named("cnot".into()),
            backend: BackendKind::Shots,
            shots: 1_000,
            seed: 3,
            ..Default::default()
        };
        let report = execute(&config).unwrap();
        let raw = report.fidelity.unwrap();
        let projected = report.fidelity_projected.unwrap();
        assert!((raw - projected).abs() < 0.02, "raw {raw} projected {projected}");
    }

    #[test]
    fn shot_noise_keeps_diagonal_real() {
        // Diagonal sandwich coefficients are real, so the diagonal estimate
        // stays exactly real even under sampling noise.
        let config = ExperimentConfig {
            channel: ChannelSpec::Named("ch".into()),
            backend: BackendKind::Shots,
            shots: 500,
            seed: 8,
            ..Default::default()
        };
        let report = execute(&config).unwrap();
        for a in 0..16 {
            assert!(report.chi_imag[a][a].abs() < 1e-12, "diag {a}");
        }
    }

    #[test]
    fn grid_csv_round_trips_exactly() {
        let config = ExperimentConfig {
            channel: ChannelSpec::Named("ch".into()),
            backend: BackendKind::Shots,
            shots: 300,
            seed: 3,
            ..Default::default()
        };
        let report = execute(&config).unwrap();
        let csv = grid_to_csv(&report.chi_real, &report.basis_labels);
        let parsed = grid_from_csv(&csv).unwrap();
        assert_eq!(parsed, report.chi_real);
    }

    #[test]
    fn bar_csv_has_all_elements() {
        let real = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let imag = vec![vec![0.0, -1.0], vec![0.5, 0.0]];
        let csv = bars_to_csv(&real, &imag);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "index_a,index_b,re,im");
        assert_eq!(lines[2], "0,1,2,-1");
    }

    #[test]
    fn bar_csv_round_trips_the_grid() {
        let config = ExperimentConfig {
            channel: ChannelSpec::Named("cnot".into()),
            backend: BackendKind::Shots,
            shots: 400,
            seed: 19,
            ..Default::default()
        };
        let report = execute(&config).unwrap();
        let csv = bars_to_csv(&report.chi_real, &report.chi_imag);
        let mut real = vec![vec![0.0; 16]; 16];
        let mut imag = vec![vec![0.0; 16]; 16];
        for line in csv.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            let a: usize = fields[0].parse().unwrap();
            let b: usize = fields[1].parse().unwrap();
            real[a][b] = fields[2].parse().unwrap();
            imag[a][b] = fields[3].parse().unwrap();
        }
        assert_eq!(real, report.chi_real);
        assert_eq!(imag, report.chi_imag);
    }
}
