//! First excited state by minimizing `H + mu |psi0><psi0|` over ansatz
//! amplitudes, and the error study for an inexact ground state.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::StateVector;
use crate::oracle::dense_lowest;
use crate::par;
use crate::sparse::{dot, norm2, SparseMatrix};
use crate::vqe::{best_index, run_restarts, MultistartOptions, Penalty, VqeProblem, VqeResult};
use crate::bfgs::Termination;

/// Residual ground-state overlap above which an excited run is flagged.
pub const OVERLAP_FLAG_THRESHOLD: f64 = 1e-2;

/// Penalized problem for the first excited state.
#[derive(Debug, Clone)]
pub struct OcVqeConfig {
    mu: f64,
    mu_overridden: bool,
    ground_state: StateVector,
    problem: VqeProblem,
}

impl OcVqeConfig {
    /// `problem` supplies the Hamiltonian, ansatz and excited-state
    /// reference. Without an override the shift is `-ground_energy`, which
    /// requires a bound ground state.
    pub fn new(
        problem: &VqeProblem,
        ground_state: StateVector,
        ground_energy: f64,
        mu_override: Option<f64>,
    ) -> Result<Self> {
        if !ground_state.basis().same_sector(problem.basis()) {
            return Err(Error::InvalidArgument(
                "ground state and problem live in different sectors".into(),
            ));
        }
        let mu = match mu_override {
            Some(mu) if mu.is_finite() => mu,
            Some(mu) => return Err(Error::MuValidation(format!("non-finite override {mu}"))),
            None => {
                if ground_energy.is_nan() || ground_energy >= 0.0 {
                    return Err(Error::MuValidation(format!(
                        "default shift mu = -E0 assumes a bound ground state (E0 < 0), got E0 = {ground_energy}; pass an explicit mu"
                    )));
                }
                -ground_energy
            }
        };
        let penalty = Penalty {
            mu,
            target: ground_state.amplitudes().to_vec(),
        };
        Ok(Self {
            mu,
            mu_overridden: mu_override.is_some(),
            problem: problem.with_penalty(Some(penalty)),
            ground_state,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn mu_overridden(&self) -> bool {
        self.mu_overridden
    }

    pub fn ground_state(&self) -> &StateVector {
        &self.ground_state
    }

    /// Penalized problem; its objective is [`OcVqeConfig::oc_objective`].
    pub fn problem(&self) -> &VqeProblem {
        &self.problem
    }

    /// `<psi1|H|psi1> + mu |<psi0|psi1>|^2`.
    pub fn oc_objective(&self, params: &[f64]) -> Result<f64> {
        self.problem.objective(params)
    }
}

/// `|<a|b>|^2`.
pub fn overlap_squared(a: &StateVector, b: &StateVector) -> Result<f64> {
    let s = a.inner(b)?;
    Ok(s * s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitedResult {
    /// `<psi1|H|psi1>` of the optimal state, without the penalty.
    pub energy: f64,
    /// Penalized objective at the optimum.
    pub objective: f64,
    pub overlap_squared: f64,
    pub mu: f64,
    pub params: Vec<f64>,
    pub gradient_norm: f64,
    pub restart_index: usize,
    pub converged: bool,
    pub restart_objectives: Vec<f64>,
    pub restart_converged: Vec<bool>,
    pub iterations: usize,
    pub termination: Termination,
    /// Residual overlap exceeds [`OVERLAP_FLAG_THRESHOLD`].
    pub flagged: bool,
}

/// Multi-start minimization of the penalized objective.
pub fn solve_excited(config: &OcVqeConfig, options: &MultistartOptions) -> Result<ExcitedResult> {
    let runs = run_restarts(&config.problem, options)?;
    let objectives: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let converged: Vec<bool> = runs.iter().map(|r| r.converged).collect();
    let best = best_index(&objectives);
    let run = &runs[best];
    if !converged.iter().any(|c| *c) {
        return Err(Error::NotConverged(Box::new(VqeResult {
            energy: run.value,
            params: run.params.clone(),
            gradient_norm: run.gradient_norm,
            restart_index: best,
            converged: false,
            restart_energies: objectives,
            restart_converged: converged,
            iterations: run.iterations,
            termination: run.termination,
        })));
    }
    let state = config.problem.state(&run.params)?;
    let overlap = overlap_squared(&state, &config.ground_state)?;
    Ok(ExcitedResult {
        energy: config.problem.energy(&run.params)?,
        objective: run.value,
        overlap_squared: overlap,
        mu: config.mu,
        params: run.params.clone(),
        gradient_norm: run.gradient_norm,
        restart_index: best,
        converged: run.converged,
        restart_objectives: objectives,
        restart_converged: converged,
        iterations: run.iterations,
        termination: run.termination,
        flagged: overlap > OVERLAP_FLAG_THRESHOLD,
    })
}

/// Lowest eigenvalue of `H + mu |g><g|` (dense).
pub fn penalized_minimum(h: &SparseMatrix, ground: &[f64], mu: f64) -> f64 {
    let mut m = h.to_dense();
    rank_one_update(&mut m, mu, ground);
    dense_lowest(&m, 1)[0].energy
}

/// Lowest eigenvalue of `(1 - P) H (1 - P)` on the complement of `ground`,
/// with `P = |g><g|` (dense; the null direction `g` is excluded).
pub fn projected_minimum(h: &SparseMatrix, ground: &[f64]) -> f64 {
    let n = h.dim();
    let mut q = DMatrix::<f64>::identity(n, n);
    rank_one_update(&mut q, -1.0, ground);
    let m = &q * h.to_dense() * &q;
    // Push the projected-out direction far above the spectrum.
    let mut shifted = m.clone();
    let lift = 1.0 + m.abs().max() * n as f64;
    rank_one_update(&mut shifted, lift, ground);
    dense_lowest(&shifted, 1)[0].energy
}

fn rank_one_update(m: &mut DMatrix<f64>, scale: f64, v: &[f64]) {
    let n = v.len();
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] += scale * v[i] * v[j];
        }
    }
}

/// Lowest eigenvalue of `H - E~ |g~><g~|` with
/// `g~ = sqrt(1 - eps^2) g + eps perp` and `E~ = <g~|H|g~>`.
pub fn perturbed_excited_energy(h: &SparseMatrix, ground: &[f64], perp: &[f64], eps: f64) -> f64 {
    let c = (1.0 - eps * eps).sqrt();
    let approx: Vec<f64> = ground.iter().zip(perp).map(|(g, p)| c * g + eps * p).collect();
    let e_approx = dot(&approx, &h.matvec(&approx));
    let mut m = h.to_dense();
    rank_one_update(&mut m, -e_approx, &approx);
    dense_lowest(&m, 1)[0].energy
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonStudy {
    pub epsilons: Vec<f64>,
    /// `|E1(eps) - E1(0)|` in Hartree.
    pub errors: Vec<f64>,
    pub exact_excited_energy: f64,
    /// Least-squares slope of `ln(error)` against `ln(eps)`.
    pub slope: f64,
}

/// Points below this error are numerical noise and left out of the fit.
pub const STUDY_ERROR_FLOOR: f64 = 1e-12;

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidArgument("need at least two positive points for a fit".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("fit abscissae are all equal".into()));
    }
    Ok(sxy / sxx)
}

/// Measures how the excited-state energy error grows with the ground-state
/// contamination `eps` along `perp`.
pub fn epsilon_scaling_study(
    h: &SparseMatrix,
    exact_ground: &StateVector,
    perp: &StateVector,
    epsilons: &[f64],
) -> Result<EpsilonStudy> {
    let g = exact_ground.amplitudes();
    let p = perp.amplitudes();
    if g.len() != h.dim() || p.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            actual: g.len().max(p.len()),
        });
    }
    let overlap = perp.inner(exact_ground)?;
    if overlap.abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "perturbation direction not orthogonal to the ground state (overlap {overlap:.3e})"
        )));
    }
    let pn = norm2(p);
    if (pn - 1.0).abs() > 1e-10 || (norm2(g) - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument("ground and perturbation must be unit vectors".into()));
    }
    let e0 = dot(g, &h.matvec(g));
    let residual = crate::oracle::residual(h, e0, g);
    if residual > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "ground state is not an eigenvector (residual {residual:.3e})"
        )));
    }
    if epsilons.is_empty()
        || epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0))
        || epsilons.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidArgument(
            "epsilons must lie in (0, 1) and strictly decrease".into(),
        ));
    }

    let exact = perturbed_excited_energy(h, g, p, 0.0);
    let errors = par::map_slice(epsilons, |&eps| {
        (perturbed_excited_energy(h, g, p, eps) - exact).abs()
    });
    let (xs, ys): (Vec<f64>, Vec<f64>) = epsilons
        .iter()
        .zip(&errors)
        .filter(|(_, e)| **e >= STUDY_ERROR_FLOOR)
        .map(|(x, e)| (*x, *e))
        .unzip();
    let slope = loglog_slope(&xs, &ys)?;
    Ok(EpsilonStudy {
        epsilons: epsilons.to_vec(),
        errors,
        exact_excited_energy: exact,
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::sector_basis;
    use std::sync::Arc;

    #[test]
    fn overlap_examples() {
        let basis = Arc::new(sector_basis(4, 1, 1).unwrap());
        let a = StateVector::basis_state(basis.clone(), 0);
        let b = StateVector::basis_state(basis.clone(), 1);
        assert_eq!(overlap_squared(&a, &a).unwrap(), 1.0);
        assert_eq!(overlap_squared(&a, &b).unwrap(), 0.0);
        let s = 1.0 / 2f64.sqrt();
        let c = StateVector::new(basis, vec![s, s, 0.0, 0.0]).unwrap();
        assert!((overlap_squared(&a, &c).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(overlap_squared(&a, &c).unwrap(), overlap_squared(&c, &a).unwrap());
    }

    #[test]
    fn overlap_requires_same_sector() {
        let a = StateVector::basis_state(Arc::new(sector_basis(4, 1, 1).unwrap()), 0);
        let b = StateVector::basis_state(Arc::new(sector_basis(4, 2, 0).unwrap()), 0);
        assert!(overlap_squared(&a, &b).is_err());
    }

    #[test]
    fn loglog_fit() {
        let xs = [1e-1, 1e-2, 1e-3];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_err());
    }
}
