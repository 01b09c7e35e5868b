//! Variational energy minimization over ansatz amplitudes.

use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{Ansatz, MultiDetReference, PreparedAnsatz};
use crate::bfgs::{self, BfgsOptions, Termination};
use crate::error::{Error, Result};
use crate::fock::{expmv_op, DerivativeBlock, SectorBasis, StateVector};
use crate::par;
use crate::sparse::{dot, norm2, SparseMatrix};

/// Energies closer than this are treated as ties.
pub const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    FiniteDifference,
    Exact,
}

impl FromStr for GradientMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "finite_difference" | "fd" => Ok(GradientMode::FiniteDifference),
            "exact" => Ok(GradientMode::Exact),
            other => Err(Error::InvalidArgument(format!("unknown gradient mode {other:?}"))),
        }
    }
}

/// Projector penalty `mu |<target|psi>|^2` added to the energy.
#[derive(Debug, Clone)]
pub(crate) struct Penalty {
    pub mu: f64,
    pub target: Vec<f64>,
}

/// Hamiltonian, ansatz and reference over one sector.
#[derive(Debug, Clone)]
pub struct VqeProblem {
    hamiltonian: Arc<SparseMatrix>,
    prepared: PreparedAnsatz,
    reference: MultiDetReference,
    reference_amplitudes: Vec<f64>,
    penalty: Option<Penalty>,
}

impl VqeProblem {
    pub fn new(
        hamiltonian: Arc<SparseMatrix>,
        ansatz: &Ansatz,
        reference: MultiDetReference,
        basis: Arc<SectorBasis>,
    ) -> Result<Self> {
        if hamiltonian.dim() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                actual: hamiltonian.dim(),
            });
        }
        let prepared = PreparedAnsatz::new(ansatz, basis.clone())?;
        let reference_amplitudes = reference.to_state(&basis)?.into_amplitudes();
        Ok(Self {
            hamiltonian,
            prepared,
            reference,
            reference_amplitudes,
            penalty: None,
        })
    }

    pub(crate) fn with_penalty(&self, penalty: Option<Penalty>) -> Self {
        let mut out = self.clone();
        out.penalty = penalty;
        out
    }

    pub fn hamiltonian(&self) -> &Arc<SparseMatrix> {
        &self.hamiltonian
    }

    pub fn ansatz(&self) -> &Ansatz {
        self.prepared.ansatz()
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        self.prepared.basis()
    }

    pub fn reference(&self) -> &MultiDetReference {
        &self.reference
    }

    pub fn n_params(&self) -> usize {
        self.ansatz().n_params
    }

    /// Same Hamiltonian and reference with a different ansatz.
    pub fn with_ansatz(&self, ansatz: &Ansatz) -> Result<Self> {
        let mut out = self.clone();
        out.prepared = PreparedAnsatz::new(ansatz, self.basis().clone())?;
        Ok(out)
    }

    pub fn state(&self, params: &[f64]) -> Result<StateVector> {
        let amplitudes = self.prepared.apply(params, &self.reference_amplitudes)?;
        StateVector::new(self.basis().clone(), amplitudes)
    }

    /// `A psi` for the objective operator `H (+ mu |t><t|)`.
    fn objective_action(&self, psi: &[f64]) -> Vec<f64> {
        let mut sigma = self.hamiltonian.matvec(psi);
        if let Some(p) = &self.penalty {
            let overlap = dot(&p.target, psi);
            for (s, t) in sigma.iter_mut().zip(&p.target) {
                *s += p.mu * overlap * t;
            }
        }
        sigma
    }

    /// `<psi(params)| H |psi(params)>`, plus the penalty when present.
    pub fn objective(&self, params: &[f64]) -> Result<f64> {
        let psi = self.prepared.apply(params, &self.reference_amplitudes)?;
        Ok(dot(&psi, &self.objective_action(&psi)))
    }

    /// Plain energy expectation, ignoring any penalty.
    pub fn energy(&self, params: &[f64]) -> Result<f64> {
        let psi = self.prepared.apply(params, &self.reference_amplitudes)?;
        Ok(dot(&psi, &self.hamiltonian.matvec(&psi)))
    }

    pub fn gradient(&self, params: &[f64], mode: GradientMode) -> Result<Vec<f64>> {
        Ok(self.value_and_gradient(params, mode)?.1)
    }

    pub fn value_and_gradient(&self, params: &[f64], mode: GradientMode) -> Result<(f64, Vec<f64>)> {
        match mode {
            GradientMode::Exact => self.exact_gradient(params),
            GradientMode::FiniteDifference => {
                let value = self.objective(params)?;
                let grads = par::map_range(params.len(), |mu| {
                    let h = 1e-5 * params[mu].abs().max(1.0);
                    let mut shifted = params.to_vec();
                    shifted[mu] = params[mu] + h;
                    let plus = self.objective(&shifted)?;
                    shifted[mu] = params[mu] - h;
                    let minus = self.objective(&shifted)?;
                    Ok((plus - minus) / (2.0 * h))
                });
                Ok((value, grads.into_iter().collect::<Result<Vec<_>>>()?))
            }
        }
    }

    /// Reverse sweep through the block product. For block `b` with input
    /// `v` and back-propagated co-state `lambda`, the derivative along
    /// amplitude `mu` is `2 lambda^T D_mu v`, where `D_mu v` is the top half
    /// of `exp([[G, G_mu], [0, G]]) [0; v]`.
    fn exact_gradient(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.prepared.check_params(params)?;
        let templates = self.prepared.templates();
        let offsets = self.ansatz().block_offsets();

        let mut generators = Vec::with_capacity(templates.len());
        let mut inputs = Vec::with_capacity(templates.len());
        let mut state = self.reference_amplitudes.clone();
        for (template, &offset) in templates.iter().zip(&offsets) {
            let g = template.assemble(&params[offset..offset + template.n_excitations()])?;
            let next = expmv_op(&g, &state)?;
            inputs.push(std::mem::replace(&mut state, next));
            generators.push(g);
        }
        let sigma = self.objective_action(&state);
        let value = dot(&state, &sigma);

        let dim = state.len();
        let mut grad = vec![0.0; params.len()];
        let mut costate = sigma;
        for b in (0..templates.len()).rev() {
            let g = &generators[b];
            let v = &inputs[b];
            let mut stacked = vec![0.0; 2 * dim];
            stacked[dim..].copy_from_slice(v);
            let block_grad = par::map_range(templates[b].n_excitations(), |mu| {
                let op = DerivativeBlock {
                    a: g,
                    b: templates[b].excitation_matrix(mu),
                };
                let out = expmv_op(&op, &stacked)?;
                Ok(2.0 * dot(&costate, &out[..dim]))
            });
            for (slot, d) in grad[offsets[b]..].iter_mut().zip(block_grad) {
                *slot = d?;
            }
            if b > 0 {
                // exp(G)^T = exp(-G) for antisymmetric G.
                costate = expmv_op(&g.scaled(-1.0), &costate)?;
            }
        }
        Ok((value, grad))
    }
}

/// `<psi(params)|H|psi(params)>`.
pub fn objective(problem: &VqeProblem, params: &[f64]) -> Result<f64> {
    problem.objective(params)
}

pub fn gradient(problem: &VqeProblem, params: &[f64], mode: GradientMode) -> Result<Vec<f64>> {
    problem.gradient(params, mode)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeResult {
    pub energy: f64,
    pub params: Vec<f64>,
    pub gradient_norm: f64,
    pub restart_index: usize,
    pub converged: bool,
    pub restart_energies: Vec<f64>,
    pub restart_converged: Vec<bool>,
    pub iterations: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultistartOptions {
    pub restarts: usize,
    pub seed: u64,
    pub init_scale: f64,
    pub gradient: GradientMode,
    pub bfgs: BfgsOptions,
}

impl Default for MultistartOptions {
    fn default() -> Self {
        Self {
            restarts: 50,
            seed: 0,
            init_scale: 0.1,
            gradient: GradientMode::Exact,
            bfgs: BfgsOptions::default(),
        }
    }
}

/// Starting amplitudes of one restart: zeros for restart 0, otherwise
/// uniform in `[-init_scale, init_scale]` from a stream keyed by
/// `(seed, restart)`.
pub fn initial_params(n_params: usize, restart: usize, seed: u64, init_scale: f64) -> Vec<f64> {
    if restart == 0 || init_scale == 0.0 {
        return vec![0.0; n_params];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    (0..n_params)
        .map(|_| rng.random_range(-init_scale..=init_scale))
        .collect()
}

#[derive(Debug, Clone)]
pub(crate) struct RunOutcome {
    pub value: f64,
    pub params: Vec<f64>,
    pub gradient_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    pub termination: Termination,
}

pub(crate) fn run_bfgs(
    problem: &VqeProblem,
    x0: &[f64],
    mode: GradientMode,
    options: &BfgsOptions,
) -> Result<RunOutcome> {
    problem.prepared.check_params(x0)?;
    let out = bfgs::minimize(
        |x| {
            problem
                .value_and_gradient(x, mode)
                .expect("parameter length checked before optimization")
        },
        x0,
        options,
    );
    Ok(RunOutcome {
        value: out.value,
        gradient_norm: norm2(&out.gradient),
        params: out.x,
        converged: out.converged,
        iterations: out.iterations,
        termination: out.termination,
    })
}

/// Index of the lowest value; ties within [`TIE_TOLERANCE`] go to the
/// earliest index.
pub(crate) fn best_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] - TIE_TOLERANCE {
            best = i;
        }
    }
    best
}

pub(crate) fn run_restarts(problem: &VqeProblem, options: &MultistartOptions) -> Result<Vec<RunOutcome>> {
    if options.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    if !(options.init_scale >= 0.0 && options.init_scale.is_finite()) {
        return Err(Error::InvalidArgument("init_scale must be finite and non-negative".into()));
    }
    let n = problem.n_params();
    par::map_range(options.restarts, |r| {
        let x0 = initial_params(n, r, options.seed, options.init_scale);
        run_bfgs(problem, &x0, options.gradient, &options.bfgs)
    })
    .into_iter()
    .collect()
}

fn collect_result(runs: Vec<RunOutcome>) -> Result<VqeResult> {
    let energies: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let converged_flags: Vec<bool> = runs.iter().map(|r| r.converged).collect();
    let best = best_index(&energies);
    let run = &runs[best];
    let result = VqeResult {
        energy: run.value,
        params: run.params.clone(),
        gradient_norm: run.gradient_norm,
        restart_index: best,
        converged: run.converged,
        restart_energies: energies,
        restart_converged: converged_flags.clone(),
        iterations: run.iterations,
        termination: run.termination,
    };
    if converged_flags.iter().any(|c| *c) {
        Ok(result)
    } else {
        Err(Error::NotConverged(Box::new(result)))
    }
}

/// Best of `restarts` BFGS runs. Restart 0 starts from zero amplitudes.
pub fn minimize_multistart(problem: &VqeProblem, options: &MultistartOptions) -> Result<VqeResult> {
    collect_result(run_restarts(problem, options)?)
}

/// Single BFGS run from explicit starting amplitudes.
pub fn minimize_from(problem: &VqeProblem, x0: &[f64], options: &MultistartOptions) -> Result<VqeResult> {
    collect_result(vec![run_bfgs(problem, x0, options.gradient, &options.bfgs)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{aufbau_reference, build_ansatz, AnsatzKind};
    use crate::fock::sector_basis;
    use crate::hamiltonian::{hubbard_hamiltonian, sector_matrix};

    fn hubbard2(kind: AnsatzKind) -> VqeProblem {
        let h = hubbard_hamiltonian(2, 1.0, 4.0).unwrap();
        let basis = Arc::new(sector_basis(4, 1, 1).unwrap());
        let m = Arc::new(sector_matrix(&h, &basis).unwrap());
        let ansatz = build_ansatz(kind, 4, 1, 1, 1).unwrap();
        VqeProblem::new(m, &ansatz, aufbau_reference(4, 1, 1).unwrap(), basis).unwrap()
    }

    #[test]
    fn zero_params_give_reference_diagonal() {
        let p = hubbard2(AnsatzKind::Uccsd);
        // Both electrons on site 0: only the on-site repulsion survives.
        assert_eq!(p.objective(&[0.0; 3]).unwrap(), 4.0);
    }

    #[test]
    fn gradient_modes_agree() {
        let p = hubbard2(AnsatzKind::Uccgsd);
        let x = initial_params(p.n_params(), 3, 11, 0.5);
        let exact = p.gradient(&x, GradientMode::Exact).unwrap();
        let fd = p.gradient(&x, GradientMode::FiniteDifference).unwrap();
        for (a, b) in exact.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn unknown_gradient_mode() {
        assert!("adjoint".parse::<GradientMode>().is_err());
        assert_eq!("exact".parse::<GradientMode>().unwrap(), GradientMode::Exact);
    }

    #[test]
    fn initial_params_are_seeded() {
        assert_eq!(initial_params(4, 0, 5, 0.1), vec![0.0; 4]);
        let a = initial_params(4, 2, 5, 0.1);
        assert_eq!(a, initial_params(4, 2, 5, 0.1));
        assert_ne!(a, initial_params(4, 3, 5, 0.1));
        assert!(a.iter().all(|x| x.abs() <= 0.1));
    }

    #[test]
    fn best_index_prefers_earliest_tie() {
        assert_eq!(best_index(&[1.0, 1.0 - 1e-12, 2.0]), 0);
        assert_eq!(best_index(&[1.0, 0.5, 0.5 - 1e-11]), 1);
    }

    #[test]
    fn zero_restarts_rejected() {
        let p = hubbard2(AnsatzKind::Uccsd);
        let opts = MultistartOptions {
            restarts: 0,
            ..Default::default()
        };
        assert!(minimize_multistart(&p, &opts).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = hubbard2(AnsatzKind::Uccsd);
        assert!(p.objective(&[0.0; 2]).is_err());
        let basis = Arc::new(sector_basis(4, 1, 1).unwrap());
        let ansatz = build_ansatz(AnsatzKind::Uccsd, 4, 1, 1, 1).unwrap();
        let wrong = Arc::new(SparseMatrix::zeros(3));
        assert!(VqeProblem::new(wrong, &ansatz, aufbau_reference(4, 1, 1).unwrap(), basis).is_err());
    }
}
