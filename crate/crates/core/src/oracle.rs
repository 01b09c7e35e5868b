//! Exact reference energies by sector diagonalization, and curve error
//! metrics.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, SparseMatrix};

/// Eigenvalues closer than this are flagged degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;

/// Largest dimension handled by dense diagonalization under
/// [`EigenMethod::Auto`].
pub const DENSE_LIMIT: usize = 4096;

const RESIDUAL_LIMIT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub energy: f64,
    pub vector: Vec<f64>,
    /// Shares its eigenvalue with a neighbouring level.
    pub degenerate: bool,
}

/// The `n_states` lowest eigenpairs of a symmetric sector matrix.
pub fn fci_lowest(h: &SparseMatrix, n_states: usize) -> Result<Vec<Eigenpair>> {
    fci_lowest_with(h, n_states, EigenMethod::Auto)
}

pub fn fci_lowest_with(h: &SparseMatrix, n_states: usize, method: EigenMethod) -> Result<Vec<Eigenpair>> {
    if n_states == 0 || n_states > h.dim() {
        return Err(Error::InvalidArgument(format!(
            "requested {n_states} states from a {}-dimensional sector",
            h.dim()
        )));
    }
    let use_dense = match method {
        EigenMethod::Dense => true,
        EigenMethod::Lanczos => false,
        EigenMethod::Auto => h.dim() < DENSE_LIMIT,
    };
    let pairs = if use_dense {
        dense_lowest(&h.to_dense(), n_states)
    } else {
        lanczos_lowest(h, n_states)?
    };
    for p in &pairs {
        let r = residual(h, p.energy, &p.vector);
        if r > RESIDUAL_LIMIT {
            return Err(Error::EigenNonConvergence(format!(
                "residual {r:.3e} at E={:.12}",
                p.energy
            )));
        }
    }
    Ok(pairs)
}

/// `||H v - E v||`.
pub fn residual(h: &SparseMatrix, energy: f64, v: &[f64]) -> f64 {
    let hv = h.matvec(v);
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - energy * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn flag_degeneracies(values: &[f64], count: usize) -> Vec<bool> {
    (0..count)
        .map(|i| {
            let below = i > 0 && (values[i] - values[i - 1]).abs() < DEGENERACY_TOLERANCE;
            let above = i + 1 < values.len() && (values[i + 1] - values[i]).abs() < DEGENERACY_TOLERANCE;
            below || above
        })
        .collect()
}

/// Full dense diagonalization; eigenvalues ascending.
pub fn dense_lowest(m: &DMatrix<f64>, n_states: usize) -> Vec<Eigenpair> {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let flags = flag_degeneracies(&values, n_states);
    order
        .iter()
        .take(n_states)
        .zip(flags)
        .map(|(&i, degenerate)| Eigenpair {
            energy: eig.eigenvalues[i],
            vector: eig.eigenvectors.column(i).iter().copied().collect(),
            degenerate,
        })
        .collect()
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    // Two passes of classical Gram-Schmidt.
    for _ in 0..2 {
        for u in against {
            let c = dot(u, v);
            for (x, y) in v.iter_mut().zip(u) {
                *x -= c * y;
            }
        }
    }
}

const LANCZOS_MAX_KRYLOV: usize = 240;
const LANCZOS_MAX_RESTARTS: usize = 200;
const LANCZOS_TARGET: f64 = 1e-10;

/// Lowest eigenpair of `h` restricted to the orthogonal complement of
/// `locked`, by restarted Lanczos with full reorthogonalization.
fn lanczos_one(h: &SparseMatrix, locked: &[Vec<f64>], start: Vec<f64>) -> Result<(f64, Vec<f64>)> {
    let dim = h.dim();
    let free = dim - locked.len();
    let krylov_cap = LANCZOS_MAX_KRYLOV.min(free).max(1);
    let mut v0 = start;
    for _ in 0..LANCZOS_MAX_RESTARTS {
        orthogonalize(&mut v0, locked);
        let n0 = norm2(&v0);
        if n0 == 0.0 {
            return Err(Error::EigenNonConvergence("start vector lies in the locked space".into()));
        }
        v0.iter_mut().for_each(|x| *x /= n0);

        let mut basis: Vec<Vec<f64>> = vec![v0.clone()];
        let mut alphas = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        loop {
            let j = basis.len() - 1;
            let mut w = h.matvec(&basis[j]);
            let alpha = dot(&w, &basis[j]);
            alphas.push(alpha);
            orthogonalize(&mut w, locked);
            orthogonalize(&mut w, &basis);
            let beta = norm2(&w);
            if basis.len() >= krylov_cap || beta < 1e-12 {
                break;
            }
            betas.push(beta);
            w.iter_mut().for_each(|x| *x /= beta);
            basis.push(w);
        }

        let m = alphas.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let lowest = (0..m)
            .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
            .expect("nonempty tridiagonal");
        let mut x = vec![0.0; dim];
        for (k, b) in basis.iter().enumerate() {
            let c = eig.eigenvectors[(k, lowest)];
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += c * bi;
            }
        }
        orthogonalize(&mut x, locked);
        let nx = norm2(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let energy = dot(&x, &h.matvec(&x));
        if residual(h, energy, &x) <= LANCZOS_TARGET {
            return Ok((energy, x));
        }
        v0 = x;
    }
    Err(Error::EigenNonConvergence(format!(
        "Lanczos exceeded {LANCZOS_MAX_RESTARTS} restarts"
    )))
}

/// Lowest eigenpairs by successive deflation.
pub fn lanczos_lowest(h: &SparseMatrix, n_states: usize) -> Result<Vec<Eigenpair>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut values = Vec::new();
    // One extra level, when available, to flag degeneracy of the last one.
    let wanted = (n_states + 1).min(h.dim());
    for _ in 0..wanted {
        let start: Vec<f64> = (0..h.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (e, v) = lanczos_one(h, &locked, start)?;
        values.push(e);
        locked.push(v);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let flags = flag_degeneracies(&sorted, n_states);
    Ok(order
        .into_iter()
        .take(n_states)
        .zip(flags)
        .map(|(i, degenerate)| Eigenpair {
            energy: values[i],
            vector: locked[i].clone(),
            degenerate,
        })
        .collect())
}

/// Non-parallelity error: spread of a curve's errors.
pub fn npe(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::InvalidArgument("NPE of an empty curve".into()));
    }
    let max = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = errors.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

/// Per-geometry errors of a method against FCI, in milli-Hartree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveErrors {
    pub labels: Vec<String>,
    pub errors: Vec<f64>,
    pub npe: f64,
}

impl CurveErrors {
    pub fn new(labels: Vec<String>, errors: Vec<f64>) -> Result<Self> {
        if labels.len() != errors.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                actual: errors.len(),
            });
        }
        if errors.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("non-finite curve error".into()));
        }
        let npe = npe(&errors)?;
        Ok(Self { labels, errors, npe })
    }

    /// From method and FCI energies in Hartree.
    pub fn from_energies(labels: Vec<String>, method: &[f64], fci: &[f64]) -> Result<Self> {
        if method.len() != fci.len() {
            return Err(Error::DimensionMismatch {
                expected: fci.len(),
                actual: method.len(),
            });
        }
        let errors = method.iter().zip(fci).map(|(m, f)| 1000.0 * (m - f)).collect();
        Self::new(labels, errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn npe_definition() {
        assert_eq!(npe(&[1.0, 3.0, 2.0]).unwrap(), 2.0);
        assert_eq!(npe(&[0.7, 0.7, 0.7]).unwrap(), 0.0);
        assert!(npe(&[]).is_err());
    }

    #[test]
    fn curve_errors_in_millihartree() {
        let c = CurveErrors::from_energies(
            vec!["a".into(), "b".into()],
            &[-1.0, -2.0],
            &[-1.001, -2.003],
        )
        .unwrap();
        assert!((c.errors[0] - 1.0).abs() < 1e-9);
        assert!((c.npe - 2.0).abs() < 1e-9);
        assert!(CurveErrors::new(vec!["a".into()], vec![f64::NAN]).is_err());
    }

    #[test]
    fn diagonal_matrix_lowest() {
        let m = SparseMatrix::from_triplets(3, vec![(0, 0, 2.0), (1, 1, -1.0), (2, 2, 5.0)]).unwrap();
        let pairs = fci_lowest(&m, 1).unwrap();
        assert_eq!(pairs[0].energy, -1.0);
        assert_eq!(pairs[0].vector.iter().map(|x| x.abs()).collect::<Vec<_>>(), vec![0.0, 1.0, 0.0]);
        assert!(!pairs[0].degenerate);
    }

    #[test]
    fn degeneracy_flagged() {
        let m = SparseMatrix::from_triplets(3, vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 3.0)]).unwrap();
        let pairs = fci_lowest(&m, 2).unwrap();
        assert!(pairs[0].degenerate && pairs[1].degenerate);
        let lz = fci_lowest_with(&m, 1, EigenMethod::Lanczos).unwrap();
        assert!(lz[0].degenerate);
    }

    #[test]
    fn state_count_out_of_range() {
        let m = SparseMatrix::zeros(2);
        assert!(fci_lowest(&m, 0).is_err());
        assert!(fci_lowest(&m, 3).is_err());
    }
}
