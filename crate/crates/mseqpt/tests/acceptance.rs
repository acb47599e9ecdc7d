//! Acceptance suite: one test per exit criterion, each printing a PASS line
//! with the measured margin (`cargo test --test acceptance -- --nocapture`).

use std::time::Instant;

use mseqpt::backend::{BackendMode, MeasurementBackend, ProtocolKind};
use mseqpt::basis::build_pauli_basis;
use mseqpt::channel::{
    amplitude_damping, kraus_to_chi, make_gate, ChannelForm, GateSpec, QuantumChannel,
};
use mseqpt::design::build_mub_design;
use mseqpt::estimator::{
    compute_coefficients, mseqpt_element, mseqpt_elements, mseqpt_full, seqpt_element,
    standard_qpt,
};
use mseqpt::linalg::{self, c, CMatrix};
use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Kraus set from normalized Ginibre blocks: A_i = G_i S^{-1/2} with
/// S = Σ G†G, trace preserving by construction.
fn random_kraus_channel(dim: usize, ops: usize, rng: &mut ChaCha8Rng) -> QuantumChannel {
    let blocks: Vec<CMatrix> = (0..ops)
        .map(|_| linalg::random_hermitian(dim, rng) + linalg::random_hermitian(dim, rng) * c(0.0, 1.0))
        .collect();
    let mut s = CMatrix::zeros((dim, dim));
    for g in &blocks {
        s = s + linalg::dagger(g).dot(g);
    }
    let (vals, vecs) = linalg::hermitian_eigen(&s).unwrap();
    let inv_sqrt = Array2::from_diag(&ndarray::Array1::from_iter(
        vals.iter().map(|&v| c(1.0 / v.sqrt(), 0.0)),
    ));
    let s_inv_sqrt = vecs.dot(&inv_sqrt).dot(&linalg::dagger(&vecs));
    let kraus: Vec<CMatrix> = blocks.iter().map(|g| g.dot(&s_inv_sqrt)).collect();
    QuantumChannel::kraus(kraus).expect("normalized Kraus set is trace preserving")
}

fn reference_chi(channel: &QuantumChannel, basis: &mseqpt::OperatorBasis) -> CMatrix {
    match channel.form() {
        ChannelForm::Unitary(u) => kraus_to_chi(std::slice::from_ref(u), basis).unwrap(),
        ChannelForm::Kraus(ops) => kraus_to_chi(ops, basis).unwrap(),
        ChannelForm::Chi { chi, .. } => chi.clone(),
    }
}

#[test]
fn c1_basis_orthogonality_all_sizes() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let basis = build_pauli_basis(n).unwrap();
        let d = basis.dim() as f64;
        for m in 0..basis.len() {
            let tr = linalg::trace(basis.element(m));
            let want = if m == 0 { d } else { 0.0 };
            worst = worst.max((tr - c(want, 0.0)).norm());
            for k in 0..basis.len() {
                let overlap =
                    linalg::trace(&basis.element(m).dot(&linalg::dagger(basis.element(k))));
                let want = if m == k { d } else { 0.0 };
                worst = worst.max((overlap - c(want, 0.0)).norm());
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(worst < 1e-12, "worst deviation {worst:.3e}");
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "PASS c1 basis orthogonality n=1..3: max deviation {worst:.3e} in {:.2}s",
        elapsed.as_secs_f64()
    );
}

#[test]
fn c2_mub_cross_overlaps_and_two_design() {
    let start = Instant::now();
    let set = build_mub_design(4).unwrap();
    let mut cross_pairs = 0;
    let mut worst: f64 = 0.0;
    for p in 0..set.len() {
        for q in (p + 1)..set.len() {
            if p / 4 == q / 4 {
                continue;
            }
            let overlap: Complex64 = set
                .state(p)
                .iter()
                .zip(set.state(q).iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
            worst = worst.max((overlap.norm_sqr() - 0.25).abs());
            cross_pairs += 1;
        }
    }
    assert_eq!(cross_pairs, 160);
    assert!(worst < 1e-12, "worst overlap deviation {worst:.3e}");

    let basis = build_pauli_basis(2).unwrap();
    let report = set.verify_2design(&basis, 50, 2024).unwrap();
    assert!(
        report.max_deviation < 1e-9,
        "2-design deviation {:.3e}",
        report.max_deviation
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "PASS c2 MUB/2-design: 160 overlaps within {worst:.3e}, 50-channel check within {:.3e} in {:.2}s",
        report.max_deviation,
        elapsed.as_secs_f64()
    );
}

#[test]
fn c3_oracle_equivalence_across_estimators() {
    let design = build_mub_design(4).unwrap();
    let basis = build_pauli_basis(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(777);

    let mut channels: Vec<(String, QuantumChannel)> = vec![
        ("noop".into(), make_gate(GateSpec::Noop)),
        ("cnot".into(), make_gate(GateSpec::Cnot)),
        ("ch".into(), make_gate(GateSpec::Ch)),
        ("cnot-textbook".into(), make_gate(GateSpec::TextbookCnot)),
    ];
    for t in 0..50 {
        let u = linalg::haar_random_unitary(4, &mut rng);
        channels.push((format!("unitary{t}"), QuantumChannel::unitary(u).unwrap()));
    }
    for t in 0..20 {
        let ops = 1 + (t % 3) + 1;
        channels.push((
            format!("kraus{t}"),
            random_kraus_channel(4, ops, &mut rng),
        ));
    }

    let mut worst_mseqpt: f64 = 0.0;
    for (name, channel) in &channels {
        let reference = reference_chi(channel, &basis);
        let mut backend = MeasurementBackend::new(channel.clone(), BackendMode::Ideal).unwrap();
        let estimate = mseqpt_full(&design, &mut backend).unwrap();
        let dev = linalg::max_abs_diff(&estimate.matrix, &reference);
        assert!(dev < 1e-8, "{name}: selective estimate off by {dev:.3e}");
        worst_mseqpt = worst_mseqpt.max(dev);
    }

    // Standard tomography on the named gates, a sample of the random
    // unitaries, and every noise channel (the non-unital cases matter).
    let mut worst_qpt: f64 = 0.0;
    for (name, channel) in channels.iter().take(14).chain(channels.iter().skip(54)) {
        let reference = reference_chi(channel, &basis);
        let mut backend = MeasurementBackend::new(channel.clone(), BackendMode::Ideal).unwrap();
        let estimate = standard_qpt(&mut backend).unwrap();
        let dev = linalg::max_abs_diff(&estimate.matrix, &reference);
        assert!(dev < 1e-8, "{name}: tomographic estimate off by {dev:.3e}");
        worst_qpt = worst_qpt.max(dev);
    }

    // Survival-probability baseline on representative elements.
    let elements = [(0usize, 0usize), (0, 1), (5, 5), (3, 12), (9, 14), (12, 13)];
    let mut worst_seqpt: f64 = 0.0;
    for (name, channel) in channels.iter().take(14) {
        let reference = reference_chi(channel, &basis);
        let mut backend = MeasurementBackend::new(channel.clone(), BackendMode::Ideal).unwrap();
        for &(a, b) in &elements {
            let element = seqpt_element(a, b, &design, &mut backend).unwrap();
            let dev = (element.value - reference[[a, b]]).norm();
            assert!(dev < 1e-8, "{name} ({a},{b}): survival estimate off by {dev:.3e}");
            worst_seqpt = worst_seqpt.max(dev);
        }
    }

    println!(
        "PASS c3 oracle equivalence: {} channels, max deviations selective {worst_mseqpt:.3e} / tomographic {worst_qpt:.3e} / survival {worst_seqpt:.3e}",
        channels.len()
    );
}

#[test]
fn c4_two_path_survival_equality() {
    let design = build_mub_design(4).unwrap();
    let basis = build_pauli_basis(2).unwrap();
    let mut worst: f64 = 0.0;
    for spec in [GateSpec::Noop, GateSpec::Cnot, GateSpec::Ch] {
        let channel = make_gate(spec);
        let mut backend = MeasurementBackend::new(channel.clone(), BackendMode::Ideal).unwrap();
        for a in 0..16 {
            for b in 0..16 {
                let (f, _) = mseqpt_element(a, b, &design, &mut backend).unwrap();
                let direct = design
                    .design_average(&channel, basis.element(a), basis.element(b))
                    .unwrap();
                let dev = (f.value - direct).norm();
                assert!(dev < 1e-9, "{spec:?} ({a},{b}): paths differ by {dev:.3e}");
                worst = worst.max(dev);
            }
        }
    }
    println!("PASS c4 two-path survival equality: 768 pairs within {worst:.3e}");
}

#[test]
fn c5_observable_map_soundness() {
    let map = mseqpt::backend::build_observable_map().unwrap();
    let basis = build_pauli_basis(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rho = linalg::random_hermitian(4, &mut rng);
        for k in 1..=15 {
            let row = map.row(k);
            let want = linalg::hs_inner(&rho, basis.element(k)).re;
            let rotated = row.unitary.dot(&rho).dot(&linalg::dagger(&row.unitary));
            let sigma_z = basis.element(if row.target == 1 { 12 } else { 3 });
            let got = linalg::hs_inner(&rotated, sigma_z).re;
            let dev = (want - got).abs();
            assert!(dev < 1e-10, "row {k} off by {dev:.3e}");
            worst = worst.max(dev);
        }
    }
    println!("PASS c5 observable map: 15 rows × 100 random matrices within {worst:.3e}");
}

#[test]
fn c6_resource_ledger_exactness() {
    let design = build_mub_design(4).unwrap();

    let mut backend =
        MeasurementBackend::new(make_gate(GateSpec::Cnot), BackendMode::Ideal).unwrap();
    let estimate = mseqpt_full(&design, &mut backend).unwrap();
    assert_eq!(
        (estimate.ledger.preparations, estimate.ledger.readouts),
        (15, 60)
    );

    let mut backend =
        MeasurementBackend::new(make_gate(GateSpec::Cnot), BackendMode::Ideal).unwrap();
    let estimate = standard_qpt(&mut backend).unwrap();
    assert_eq!(
        (estimate.ledger.preparations, estimate.ledger.readouts),
        (15, 120)
    );

    let mut backend =
        MeasurementBackend::new(make_gate(GateSpec::Cnot), BackendMode::Ideal).unwrap();
    backend.set_accounting(ProtocolKind::Seqpt);
    seqpt_element(0, 12, &design, &mut backend).unwrap();
    assert_eq!(
        (
            backend.ledger().seqpt.preparations,
            backend.ledger().seqpt.readouts
        ),
        (80, 240)
    );

    println!("PASS c6 ledger exactness: selective (15, 60), tomographic (15, 120), survival (80, 240)");
}

#[test]
fn c7_shot_noise_scaling() {
    let start = Instant::now();
    let design = build_mub_design(4).unwrap();
    let elements = [(0usize, 1usize), (12, 13), (5, 5), (3, 9)];
    let shot_counts = [1_000u64, 10_000, 100_000];
    let reps = 40u64;

    // Empirical standard error across repetitions for each shot count.
    let mut stds: Vec<Vec<f64>> = vec![Vec::new(); elements.len()];
    for &n in &shot_counts {
        let mut values: Vec<Vec<Complex64>> = vec![Vec::new(); elements.len()];
        for seed in 0..reps {
            let mut backend = MeasurementBackend::new(
                make_gate(GateSpec::Cnot),
                BackendMode::Shots { n, seed },
            )
            .unwrap();
            let estimate = mseqpt_elements(&elements, &design, &mut backend).unwrap();
            for (slot, &(a, b)) in elements.iter().enumerate() {
                values[slot].push(estimate.matrix[[a, b]]);
            }
        }
        for (slot, vals) in values.iter().enumerate() {
            let mean: Complex64 = vals.iter().sum::<Complex64>() / reps as f64;
            let var: f64 =
                vals.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (reps - 1) as f64;
            stds[slot].push(var.sqrt());
        }
    }

    // Least-squares slope of log std against log N.
    let xs: Vec<f64> = shot_counts.iter().map(|&n| (n as f64).ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let mut slopes = Vec::new();
    for (slot, series) in stds.iter().enumerate() {
        assert!(
            series.iter().all(|&s| s > 0.0),
            "element {:?} produced zero spread",
            elements[slot]
        );
        let ys: Vec<f64> = series.iter().map(|&s| s.ln()).collect();
        let y_mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let num: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - x_mean) * (y - y_mean))
            .sum();
        let den: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
        let slope = num / den;
        assert!(
            (slope + 0.5).abs() <= 0.1,
            "element {:?}: slope {slope:.3} outside -0.5 ± 0.1",
            elements[slot]
        );
        slopes.push(slope);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!(
        "PASS c7 shot-noise scaling: slopes {:?} in {:.1}s",
        slopes
            .iter()
            .map(|s| (s * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>(),
        elapsed.as_secs_f64()
    );
}

#[test]
fn c8_nonunital_regression() {
    let design = build_mub_design(4).unwrap();
    let basis = build_pauli_basis(2).unwrap();
    let channel = amplitude_damping(2, 2, 0.35).unwrap();
    let ops = match channel.form() {
        ChannelForm::Kraus(ops) => ops.clone(),
        _ => unreachable!(),
    };
    let reference = kraus_to_chi(&ops, &basis).unwrap();

    let mut backend = MeasurementBackend::new(
        channel.clone(),
        BackendMode::Shots {
            n: 100_000,
            seed: 6,
        },
    )
    .unwrap();
    assert!(!backend.is_unital());
    let estimate = mseqpt_full(&design, &mut backend).unwrap();

    let mut worst_ratio: f64 = 0.0;
    for a in 0..16 {
        for b in 0..16 {
            let dev = (estimate.matrix[[a, b]] - reference[[a, b]]).norm();
            let allowed = 3.0 * estimate.std_err[[a, b]] + 1e-12;
            assert!(
                dev <= allowed,
                "({a},{b}): |error| {dev:.3e} exceeds 3σ {allowed:.3e}"
            );
            if estimate.std_err[[a, b]] > 0.0 {
                worst_ratio = worst_ratio.max(dev / estimate.std_err[[a, b]]);
            }
        }
    }
    println!(
        "PASS c8 non-unital regression: all 256 elements within 3σ (worst {worst_ratio:.2}σ)"
    );
}

#[test]
fn sandwich_coefficient_support_is_complete() {
    // Every element touches all 15 deviation preparations, which is what
    // makes the fixed-settings resource count possible.
    let design = build_mub_design(4).unwrap();
    let basis = build_pauli_basis(2).unwrap();
    for (a, b) in [(0usize, 0usize), (1, 2), (5, 5), (0, 15), (7, 11)] {
        let tensor = compute_coefficients(a, b, &design, &basis).unwrap();
        assert_eq!(tensor.preparation_support().len(), 15, "({a},{b})");
    }
}
