//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line; run
//! with `cargo test -p uccvqe --test acceptance -- --nocapture` to see them.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use uccvqe::resources::ScalingReport;
use uccvqe::vqe::minimize_from;
use uccvqe::{
    aufbau_reference, build_ansatz, epsilon_scaling_study, fci_lowest, hubbard_hamiltonian, minimize_multistart,
    parse_fcidump, scaling_report, schedule_layers, sector_basis, sector_matrix, singly_excited_reference,
    solve_excited, AnsatzKind, CurveErrors, Error, MolecularHamiltonian, MultistartOptions, OcVqeConfig,
    SectorBasis, SparseMatrix, StateVector, VqeProblem, VqeResult,
};

use common::*;

const KINDS: [AnsatzKind; 4] = [AnsatzKind::Uccsd, AnsatzKind::Uccgsd, AnsatzKind::Upccsd, AnsatzKind::Kupccgsd];

fn report(id: &str, name: &str, ok: bool, detail: &str, elapsed: Duration, limit: Duration) -> bool {
    let within = elapsed <= limit;
    let pass = ok && within;
    println!(
        "[{}] criterion {id} {name}: {detail}; {:.2?} (limit {:?}{})",
        if pass { "PASS" } else { "FAIL" },
        elapsed,
        limit,
        if within { "" } else { ", exceeded" }
    );
    pass
}

struct System {
    basis: Arc<SectorBasis>,
    h: Arc<SparseMatrix>,
}

fn system(ham: &MolecularHamiltonian, na: usize, nb: usize) -> System {
    let basis = Arc::new(sector_basis(ham.n_spin_orbitals(), na, nb).unwrap());
    let h = Arc::new(sector_matrix(ham, &basis).unwrap());
    System { basis, h }
}

fn problem(s: &System, kind: AnsatzKind, k: usize) -> VqeProblem {
    let (n, na, nb) = (s.basis.n_spin_orbitals(), s.basis.n_alpha(), s.basis.n_beta());
    let a = build_ansatz(kind, n, na, nb, k).unwrap();
    VqeProblem::new(s.h.clone(), &a, aufbau_reference(n, na, nb).unwrap(), s.basis.clone()).unwrap()
}

fn energy_of(r: Result<VqeResult, Error>) -> (f64, bool) {
    match r {
        Ok(v) => (v.energy, true),
        Err(Error::NotConverged(v)) => (v.energy, false),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn criterion_1_two_electron_exactness() {
    let t = Instant::now();
    let s = system(&hubbard_hamiltonian(2, 1.0, 4.0).unwrap(), 1, 1);
    let exact = 2.0 - 8f64.sqrt();
    let (e, converged) =
        energy_of(minimize_multistart(&problem(&s, AnsatzKind::Uccsd, 1), &MultistartOptions { restarts: 5, ..Default::default() }));
    let err = (e - exact).abs();
    let pass = report(
        "1",
        "two-electron exactness",
        err <= 1e-8 && converged,
        &format!("E={e:.10}, |E-E_exact|={err:.2e} (tol 1e-8)"),
        t.elapsed(),
        Duration::from_secs(1),
    );
    assert!(pass);
}

#[test]
fn criterion_2_variationality() {
    let t = Instant::now();
    let mut r = rng(2);
    let systems = [
        system(&hubbard_hamiltonian(4, 1.0, 4.0).unwrap(), 2, 2),
        system(&random_hamiltonian(&mut r, 4, 4, 0), 2, 2),
        system(&random_hamiltonian(&mut r, 3, 3, 1), 2, 1),
        system(&random_hamiltonian(&mut r, 4, 4, 2), 3, 1),
    ];
    let mut evaluated = 0;
    let mut worst = f64::INFINITY;
    for s in &systems {
        assert!(s.basis.dim() <= 100);
        let e0 = fci_lowest(&s.h, 1).unwrap()[0].energy;
        for kind in KINDS {
            let p = problem(s, kind, if kind == AnsatzKind::Kupccgsd { 2 } else { 1 });
            for i in 0..40 {
                let scale = [0.05, 0.3, 1.0, 3.0][i % 4];
                let x: Vec<f64> = (0..p.n_params()).map(|_| r.random_range(-scale..scale)).collect();
                worst = worst.min(p.objective(&x).unwrap() - e0);
                evaluated += 1;
            }
            // Probe close to the optimum, where the bound is tight.
            let opts = MultistartOptions { restarts: 1, ..Default::default() };
            let best = match minimize_multistart(&p, &opts) {
                Ok(v) => v.params,
                Err(Error::NotConverged(v)) => v.params,
                Err(e) => panic!("{e}"),
            };
            for i in 0..30 {
                let scale = [1e-6, 1e-4, 1e-2][i % 3];
                let x: Vec<f64> = best.iter().map(|b| b + r.random_range(-scale..scale)).collect();
                worst = worst.min(p.objective(&x).unwrap() - e0);
                evaluated += 1;
            }
        }
    }
    let pass = report(
        "2",
        "variationality",
        evaluated >= 1000 && worst >= -1e-10,
        &format!("{evaluated} vectors, min(E-E_FCI)={worst:.3e} (bound -1e-10)"),
        t.elapsed(),
        Duration::from_secs(30),
    );
    assert!(pass);
}

#[test]
fn criterion_3_monotone_in_k() {
    let t = Instant::now();
    let s = system(&hubbard_hamiltonian(4, 1.0, 4.0).unwrap(), 2, 2);
    let fci = fci_lowest(&s.h, 1).unwrap()[0].energy;
    let opts = MultistartOptions { restarts: 8, seed: 1, ..Default::default() };
    let mut energies = Vec::new();
    let mut params: Vec<f64> = Vec::new();
    for k in 1..=3 {
        let p = problem(&s, AnsatzKind::Kupccgsd, k);
        let result = if k == 1 {
            minimize_multistart(&p, &opts)
        } else {
            let mut x0 = params.clone();
            x0.resize(p.n_params(), 0.0);
            minimize_from(&p, &x0, &opts)
        };
        let r = match result {
            Ok(r) => r,
            Err(Error::NotConverged(r)) => *r,
            Err(e) => panic!("{e}"),
        };
        energies.push(r.energy);
        params = r.params;
    }
    let gaps = [energies[0] - energies[1], energies[1] - energies[2]];
    let err3 = energies[2] - fci;
    let pass = report(
        "3",
        "monotone k",
        gaps.iter().all(|g| *g >= -1e-12) && err3.abs() <= 1e-3,
        &format!(
            "E(1..3)=[{:.10}, {:.10}, {:.10}], gaps=[{:.2e}, {:.2e}], E(3)-FCI={:.2e} Eh (tol 1e-3)",
            energies[0], energies[1], energies[2], gaps[0], gaps[1], err3
        ),
        t.elapsed(),
        Duration::from_secs(300),
    );
    assert!(pass);
}

#[test]
fn criterion_4_epsilon_squared_scaling() {
    let t = Instant::now();
    let s = system(&hubbard_hamiltonian(4, 1.0, 4.0).unwrap(), 2, 2);
    let levels = fci_lowest(&s.h, 1).unwrap();
    let g = StateVector::new(s.basis.clone(), levels[0].vector.clone()).unwrap();
    let eps = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let mut r = rng(44);
    let mut slopes = Vec::new();
    for _ in 0..3 {
        let mut v = random_unit(&mut r, s.basis.dim());
        for _ in 0..2 {
            let c: f64 = v.iter().zip(g.amplitudes()).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(g.amplitudes()).for_each(|(x, y)| *x -= c * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        let perp = StateVector::new(s.basis.clone(), v).unwrap();
        slopes.push(epsilon_scaling_study(&s.h, &g, &perp, &eps).unwrap().slope);
    }
    let pass = report(
        "4",
        "epsilon^2 scaling",
        slopes.iter().all(|s| (1.8..=2.2).contains(s)),
        &format!("slopes={slopes:.4?} (range [1.8, 2.2])"),
        t.elapsed(),
        Duration::from_secs(60),
    );
    assert!(pass);
}

#[test]
fn criterion_5_oc_vqe_exactness() {
    let t = Instant::now();
    let s = system(&hubbard_hamiltonian(2, 1.0, 4.0).unwrap(), 1, 1);
    let levels = fci_lowest(&s.h, 2).unwrap();
    let g = StateVector::new(s.basis.clone(), levels[0].vector.clone()).unwrap();
    let a = build_ansatz(AnsatzKind::Uccgsd, 4, 1, 1, 1).unwrap();
    let reference = singly_excited_reference(4, 1, 1, &[(0, 1)]).unwrap();
    let p = VqeProblem::new(s.h.clone(), &a, reference, s.basis.clone()).unwrap();
    let cfg = OcVqeConfig::new(&p, g, levels[0].energy, Some(10.0)).unwrap();
    let r = solve_excited(&cfg, &MultistartOptions { restarts: 5, ..Default::default() }).unwrap();
    let err = r.energy.abs();
    let pass = report(
        "5",
        "OC-VQE exactness",
        err <= 1e-6,
        &format!("E1={:.3e}, |E1-0|={err:.2e} (tol 1e-6), overlap^2={:.2e}", r.energy, r.overlap_squared),
        t.elapsed(),
        Duration::from_secs(10),
    );
    assert!(pass);
}

fn schedules_valid(report: &ScalingReport, kind: AnsatzKind, k: usize) -> bool {
    report.rows.iter().all(|row| {
        let a = build_ansatz(kind, row.n_spin_orbitals, row.eta.div_ceil(2), row.eta / 2, k).unwrap();
        schedule_layers(&a).validate(&a).is_ok()
    })
}

#[test]
fn criterion_6_resource_scaling() {
    let t = Instant::now();
    let kup = scaling_report(AnsatzKind::Kupccgsd, 1, &[(8, 4), (16, 8), (32, 16)]).unwrap();
    let gsd = scaling_report(AnsatzKind::Uccgsd, 1, &[(8, 4), (12, 6), (16, 8)]).unwrap();
    let sd_fixed = scaling_report(AnsatzKind::Uccsd, 1, &[(8, 4), (12, 4), (16, 4)]).unwrap();
    let sd_half = scaling_report(AnsatzKind::Uccsd, 1, &[(8, 4), (12, 6), (16, 8)]).unwrap();
    let layer = kup.layer_exponent.unwrap();
    let term = gsd.term_exponent.unwrap();
    let virt = sd_fixed.term_exponent_virtual.unwrap();
    let half = sd_half.term_exponent.unwrap();
    let valid = schedules_valid(&kup, AnsatzKind::Kupccgsd, 1)
        && schedules_valid(&gsd, AnsatzKind::Uccgsd, 1)
        && schedules_valid(&sd_fixed, AnsatzKind::Uccsd, 1)
        && schedules_valid(&sd_half, AnsatzKind::Uccsd, 1);
    let pass = report(
        "6",
        "resource scaling",
        (layer - 1.0).abs() <= 0.3 && (term - 4.0).abs() <= 0.4 && (virt - 2.0).abs() <= 0.4 && (half - 4.0).abs() <= 0.4 && valid,
        &format!(
            "k-UpCCGSD layers~N^{layer:.3} (1.0+-0.3), UCCGSD terms~N^{term:.3} (4.0+-0.4), \
             UCCSD terms~(N-eta)^{virt:.3} at eta=4 (2.0+-0.4), ~N^{half:.3} at half filling (4.0+-0.4), schedules valid={valid}"
        ),
        t.elapsed(),
        Duration::from_secs(10),
    );
    assert!(pass);
}

#[test]
fn criterion_7_amplitude_counts() {
    let t = Instant::now();
    let cases = [(AnsatzKind::Uccsd, 1, 26), (AnsatzKind::Uccgsd, 1, 162), (AnsatzKind::Kupccgsd, 2, 36)];
    let mut ok = true;
    let mut found = Vec::new();
    for (kind, k, want) in cases {
        let got = build_ansatz(kind, 8, 2, 2, k).unwrap().n_params;
        let oracle = enumerate_excitations(kind, 8, 2, 2, k).total();
        ok &= got == want && oracle == want;
        found.push(format!("{kind}(k={k})={got}/{oracle}"));
    }
    let pass = report(
        "7",
        "amplitude counts",
        ok,
        &format!("built/enumerated: {} (want 26, 162, 36)", found.join(", ")),
        t.elapsed(),
        Duration::from_secs(1),
    );
    assert!(pass);
}

#[test]
fn criterion_8_h4_curves() {
    let t = Instant::now();
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/h4_sto3g");
    let table = std::fs::read_to_string(format!("{dir}/fci_energies.csv")).unwrap();
    let mut labels = Vec::new();
    let mut fci = Vec::new();
    let mut curves: Vec<Vec<f64>> = vec![Vec::new(); 2];
    let methods = [(AnsatzKind::Uccgsd, 1), (AnsatzKind::Kupccgsd, 2)];
    let opts = MultistartOptions { restarts: 5, seed: 7, ..Default::default() };
    let mut all_converged = true;
    for line in table.lines().skip(1) {
        let label = line.split(',').next().unwrap().to_string();
        let ham = parse_fcidump(&std::fs::read_to_string(format!("{dir}/R{label}.fcidump")).unwrap()).unwrap();
        let s = system(&ham, 2, 2);
        fci.push(fci_lowest(&s.h, 1).unwrap()[0].energy);
        for (curve, &(kind, k)) in curves.iter_mut().zip(&methods) {
            let (e, converged) = energy_of(minimize_multistart(&problem(&s, kind, k), &opts));
            all_converged &= converged;
            curve.push(e);
        }
        labels.push(label);
    }
    let npes: Vec<f64> = curves
        .iter()
        .map(|c| CurveErrors::from_energies(labels.clone(), c, &fci).unwrap().npe)
        .collect();
    let pass = report(
        "8 (H4/STO-3G)",
        "ground-state NPE",
        npes.iter().all(|n| *n <= 0.5) && all_converged,
        &format!(
            "{} geometries, NPE UCCGSD={:.4} mEh, 2-UpCCGSD={:.4} mEh (tol 0.5)",
            labels.len(),
            npes[0],
            npes[1]
        ),
        t.elapsed(),
        Duration::from_secs(300),
    );
    println!(
        "[NOT RUN] criterion 8 (N2/STO-3G): no N2 frozen-core integrals are shipped; the UCCGSD NPE and \
         multi-reference excited-state ordering checks are not evaluated"
    );
    assert!(pass);
}
