//! Classical simulation of unitary coupled-cluster variational eigensolvers.
//!
//! The crate builds UCCSD, UCCGSD, UpCCSD and k-UpCCGSD ansätze over a
//! fixed-particle determinant sector, minimizes the energy with multi-start
//! BFGS, solves for the first excited state with an overlap penalty, checks
//! everything against exact diagonalization, and counts state-preparation
//! resources.
//!
//! Restarts, gradient components and sweep points run on rayon when the
//! default `parallel` feature is enabled. Results do not depend on the
//! number of threads.

pub mod ansatz;
pub mod bfgs;
pub mod error;
pub mod excited;
pub mod fock;
pub mod hamiltonian;
pub mod oracle;
pub mod par;
pub mod resources;
pub mod sparse;
pub mod vqe;

pub use ansatz::{
    aufbau_reference, build_ansatz, prepare_state, singly_excited_reference, Ansatz, AnsatzKind,
    Excitation, MultiDetReference, PreparedAnsatz,
};
pub use error::{Error, Result};
pub use excited::{epsilon_scaling_study, overlap_squared, solve_excited, ExcitedResult, OcVqeConfig};
pub use fock::{assemble_generator, excitation_generator, expmv, sector_basis, SectorBasis, StateVector};
pub use hamiltonian::{hubbard_hamiltonian, parse_fcidump, sector_matrix, write_fcidump, MolecularHamiltonian};
pub use oracle::{fci_lowest, npe, CurveErrors, Eigenpair};
pub use resources::{count_resources, estimate_resources, scaling_report, schedule_layers, ResourceEstimate};
pub use sparse::SparseMatrix;
pub use vqe::{minimize_multistart, GradientMode, MultistartOptions, VqeProblem, VqeResult};
