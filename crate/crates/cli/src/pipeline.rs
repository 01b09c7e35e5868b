//! Ground and excited-state runs for one Hamiltonian, plus the JSON report.

use std::sync::Arc;

use anyhow::{anyhow, Context};
use serde::Serialize;
use uccvqe::{
    aufbau_reference, build_ansatz, estimate_resources, fci_lowest, hubbard_hamiltonian, minimize_multistart,
    overlap_squared, parse_fcidump, sector_basis, sector_matrix, singly_excited_reference, solve_excited, Error,
    MolecularHamiltonian, MultistartOptions, OcVqeConfig, ResourceEstimate, VqeProblem, VqeResult,
};

use crate::config::{RunConfig, Source};

pub const SCHEMA_VERSION: u32 = 1;

/// Millihartree per Hartree.
const MEH: f64 = 1e3;

/// Failures that stop a run. Non-convergence is not one of them: it is
/// recorded in the report.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Mu(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Mu(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Input(e) => write!(f, "{e:#}"),
            Failure::Mu(m) => write!(f, "{m}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::MuValidation(_) => Failure::Mu(e.to_string()),
            other => Failure::Input(other.into()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemInfo {
    pub source: String,
    pub n_spin_orbitals: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub dim: usize,
    pub core_energy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnsatzInfo {
    pub kind: String,
    pub k: usize,
    pub n_params: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroundSection {
    pub reference: String,
    pub e_vqe: f64,
    pub e_fci: f64,
    pub error_meh: f64,
    pub converged: bool,
    pub result: VqeResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExcitedSection {
    pub reference: String,
    pub mu: f64,
    pub mu_overridden: bool,
    pub e_vqe: f64,
    /// Second-lowest sector eigenvalue.
    pub e_fci: f64,
    pub error_meh: f64,
    pub objective: f64,
    pub overlap_residual: f64,
    pub flagged: bool,
    pub converged: bool,
    pub params: Vec<f64>,
    pub gradient_norm: f64,
    pub restart_index: usize,
    pub restart_objectives: Vec<f64>,
    pub restart_converged: Vec<bool>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OverlapCost {
    pub layer_count: usize,
    pub term_count: usize,
    pub note: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResourceSection {
    pub state_preparation: ResourceEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap_evaluation: Option<OverlapCost>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: &'static str,
    pub timestamp_unix: u64,
    pub config: RunConfig,
    pub system: SystemInfo,
    pub ansatz: AnsatzInfo,
    pub ground: GroundSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excited: Option<ExcitedSection>,
    pub resources: ResourceSection,
    pub converged: bool,
}

pub fn timestamp() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn load_hamiltonian(source: &Source) -> Result<MolecularHamiltonian, Failure> {
    match source {
        Source::Fcidump { path } => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("parse stage: cannot read FCIDUMP {}", path.display()))?;
            parse_fcidump(&text)
                .with_context(|| format!("parse stage: {}", path.display()))
                .map_err(Failure::Input)
        }
        Source::Hubbard { sites, t, u } => Ok(hubbard_hamiltonian(*sites, *t, *u)?),
    }
}

/// HOMO to LUMO over the doubly occupied orbitals.
fn default_promotion(n_spatial: usize, na: usize, nb: usize) -> Result<(usize, usize), Failure> {
    let (lo, hi) = (na.min(nb), na.max(nb));
    if lo == 0 || hi >= n_spatial {
        return Err(Failure::Input(anyhow!(
            "no default excited reference for ({na}, {nb}) electrons in {n_spatial} orbitals; pass --reference"
        )));
    }
    Ok((lo - 1, hi))
}

/// Runs the configured pipeline on `source`.
pub fn run(config: &RunConfig, source: &Source, command: &'static str) -> Result<Report, Failure> {
    let ham = load_hamiltonian(source)?;
    let n = ham.n_spin_orbitals();
    let (da, db) = ham.default_occupation();
    let (na, nb) = (config.n_alpha.unwrap_or(da), config.n_beta.unwrap_or(db));
    let basis = Arc::new(sector_basis(n, na, nb)?);
    let h = Arc::new(sector_matrix(&ham, &basis)?);
    let levels = if config.excited { 2 } else { 1 };
    if basis.dim() < levels {
        return Err(Failure::Input(anyhow!(
            "sector ({na}, {nb}) has a single determinant; no excited level"
        )));
    }
    let exact = fci_lowest(&h, levels)?;
    let ansatz = build_ansatz(config.ansatz, n, na, nb, config.k)?;
    let reference = aufbau_reference(n, na, nb)?;
    let reference_text = reference.describe();
    let problem = VqeProblem::new(h.clone(), &ansatz, reference, basis.clone())?;
    let options = MultistartOptions {
        restarts: config.restarts,
        seed: config.seed,
        init_scale: config.init_scale,
        ..Default::default()
    };

    let result = match minimize_multistart(&problem, &options) {
        Ok(r) => r,
        Err(Error::NotConverged(r)) => *r,
        Err(e) => return Err(e.into()),
    };
    let ground = GroundSection {
        reference: reference_text,
        e_vqe: result.energy,
        e_fci: exact[0].energy,
        error_meh: (result.energy - exact[0].energy) * MEH,
        converged: result.converged,
        result,
    };

    let estimate = estimate_resources(&ansatz);
    let excited = if config.excited {
        let promotions = match &config.reference {
            Some(p) => p.clone(),
            None => vec![default_promotion(n / 2, na, nb)?],
        };
        let reference = singly_excited_reference(n, na, nb, &promotions)?;
        let reference_text = reference.describe();
        let excited_problem = VqeProblem::new(h.clone(), &ansatz, reference, basis.clone())?;
        let ground_state = problem.state(&ground.result.params)?;
        let oc = OcVqeConfig::new(&excited_problem, ground_state.clone(), ground.e_vqe, config.mu)?;
        let e_fci = exact[1].energy;
        let section = match solve_excited(&oc, &options) {
            Ok(r) => ExcitedSection {
                reference: reference_text,
                mu: r.mu,
                mu_overridden: oc.mu_overridden(),
                e_vqe: r.energy,
                e_fci,
                error_meh: (r.energy - e_fci) * MEH,
                objective: r.objective,
                overlap_residual: r.overlap_squared.clamp(0.0, 1.0),
                flagged: r.flagged,
                converged: r.converged,
                params: r.params,
                gradient_norm: r.gradient_norm,
                restart_index: r.restart_index,
                restart_objectives: r.restart_objectives,
                restart_converged: r.restart_converged,
                iterations: r.iterations,
            },
            Err(Error::NotConverged(r)) => {
                let state = excited_problem.state(&r.params)?;
                let overlap = overlap_squared(&state, &ground_state)?.clamp(0.0, 1.0);
                let energy = excited_problem.energy(&r.params)?;
                ExcitedSection {
                    reference: reference_text,
                    mu: oc.mu(),
                    mu_overridden: oc.mu_overridden(),
                    e_vqe: energy,
                    e_fci,
                    error_meh: (energy - e_fci) * MEH,
                    objective: r.energy,
                    overlap_residual: overlap,
                    flagged: overlap > uccvqe::excited::OVERLAP_FLAG_THRESHOLD,
                    converged: false,
                    params: r.params,
                    gradient_norm: r.gradient_norm,
                    restart_index: r.restart_index,
                    restart_objectives: r.restart_energies,
                    restart_converged: r.restart_converged,
                    iterations: r.iterations,
                }
            }
            Err(e) => return Err(e.into()),
        };
        Some(section)
    } else {
        None
    };

    let overlap_evaluation = excited.as_ref().map(|_| OverlapCost {
        layer_count: 2 * estimate.layer_count,
        term_count: 2 * estimate.term_count,
        note: "overlap with the ground state prepares both states, doubling the state-preparation depth",
    });
    let converged = ground.converged && excited.as_ref().is_none_or(|e| e.converged);
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        command,
        timestamp_unix: timestamp(),
        config: RunConfig {
            source: Some(source.clone()),
            ..config.clone()
        },
        system: SystemInfo {
            source: source.describe(),
            n_spin_orbitals: n,
            n_alpha: na,
            n_beta: nb,
            dim: basis.dim(),
            core_energy: ham.core_energy(),
        },
        ansatz: AnsatzInfo {
            kind: config.ansatz.as_str().to_string(),
            k: config.k,
            n_params: ansatz.n_params,
        },
        ground,
        excited,
        resources: ResourceSection {
            state_preparation: estimate,
            overlap_evaluation,
        },
        converged,
    })
}
