//! Determinant sectors, fermionic operator action and exponential action.
//!
//! Spin orbital `s` maps to spatial orbital `s / 2`; even bits carry alpha
//! spin and odd bits carry beta spin. A determinant is the bitmask of its
//! occupied spin orbitals, read as the ordered product of creation
//! operators with ascending index acting on the vacuum.

use std::sync::Arc;


use crate::ansatz::Excitation;
use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, LinearOperator, SparseMatrix};

/// Occupation bitmask over at most 64 spin orbitals.
pub type Det = u64;

pub const MAX_SPIN_ORBITALS: usize = 64;

const ALPHA_BITS: u64 = 0x5555_5555_5555_5555;
const BETA_BITS: u64 = 0xAAAA_AAAA_AAAA_AAAA;

#[inline]
fn parity_below(det: Det, p: usize) -> f64 {
    let below = if p == 0 { 0 } else { det & ((1u64 << p) - 1) };
    if below.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `a_p |det>` as `(det', sign)`, or `None` if mode `p` is empty.
#[inline]
pub fn annihilate(det: Det, p: usize) -> Option<(Det, f64)> {
    let bit = 1u64 << p;
    if det & bit == 0 {
        return None;
    }
    Some((det & !bit, parity_below(det, p)))
}

/// `a†_p |det>` as `(det', sign)`, or `None` if mode `p` is occupied.
#[inline]
pub fn create(det: Det, p: usize) -> Option<(Det, f64)> {
    let bit = 1u64 << p;
    if det & bit != 0 {
        return None;
    }
    Some((det | bit, parity_below(det, p)))
}

/// One ladder operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

/// Applies `ops` right to left, i.e. `ops.last()` acts first, matching how
/// an operator string is written.
pub fn apply_string(det: Det, ops: &[Ladder]) -> Option<(Det, f64)> {
    let mut state = det;
    let mut sign = 1.0;
    for op in ops.iter().rev() {
        let (next, s) = match *op {
            Ladder::Create(p) => create(state, p)?,
            Ladder::Annihilate(p) => annihilate(state, p)?,
        };
        state = next;
        sign *= s;
    }
    Some((state, sign))
}

/// Ordered determinant basis of one `(N, n_alpha, n_beta)` sector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    n_spin_orbitals: usize,
    n_alpha: usize,
    n_beta: usize,
    determinants: Vec<Det>,
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

pub(crate) fn check_sector(n_spin_orbitals: usize, n_alpha: usize, n_beta: usize) -> Result<()> {
    if !n_spin_orbitals.is_multiple_of(2) {
        return Err(Error::InvalidSector(format!(
            "spin-orbital count {n_spin_orbitals} must be even"
        )));
    }
    if n_spin_orbitals > MAX_SPIN_ORBITALS {
        return Err(Error::InvalidSector(format!(
            "at most {MAX_SPIN_ORBITALS} spin orbitals supported, got {n_spin_orbitals}"
        )));
    }
    let half = n_spin_orbitals / 2;
    if n_alpha > half || n_beta > half {
        return Err(Error::InvalidSector(format!(
            "occupation ({n_alpha}, {n_beta}) exceeds {half} spatial orbitals"
        )));
    }
    Ok(())
}

impl SectorBasis {
    pub fn new(n_spin_orbitals: usize, n_alpha: usize, n_beta: usize) -> Result<Self> {
        check_sector(n_spin_orbitals, n_alpha, n_beta)?;
        let half = n_spin_orbitals / 2;
        let to_mask = |spatial: &[usize], offset: usize| -> Det {
            spatial.iter().fold(0, |m, &s| m | (1u64 << (2 * s + offset)))
        };
        let alphas: Vec<Det> = combinations(half, n_alpha)
            .iter()
            .map(|c| to_mask(c, 0))
            .collect();
        let betas: Vec<Det> = combinations(half, n_beta)
            .iter()
            .map(|c| to_mask(c, 1))
            .collect();
        let mut determinants = Vec::with_capacity(alphas.len() * betas.len());
        for a in &alphas {
            for b in &betas {
                determinants.push(a | b);
            }
        }
        determinants.sort_unstable();
        Ok(Self {
            n_spin_orbitals,
            n_alpha,
            n_beta,
            determinants,
        })
    }

    pub fn n_spin_orbitals(&self) -> usize {
        self.n_spin_orbitals
    }

    pub fn n_alpha(&self) -> usize {
        self.n_alpha
    }

    pub fn n_beta(&self) -> usize {
        self.n_beta
    }

    pub fn dim(&self) -> usize {
        self.determinants.len()
    }

    pub fn determinants(&self) -> &[Det] {
        &self.determinants
    }

    pub fn det(&self, index: usize) -> Det {
        self.determinants[index]
    }

    pub fn index_of(&self, det: Det) -> Option<usize> {
        self.determinants.binary_search(&det).ok()
    }

    /// Whether `det` has this sector's spin-resolved electron counts.
    pub fn contains_sector(&self, det: Det) -> bool {
        let in_range = self.n_spin_orbitals == 64 || det >> self.n_spin_orbitals == 0;
        in_range
            && (det & ALPHA_BITS).count_ones() as usize == self.n_alpha
            && (det & BETA_BITS).count_ones() as usize == self.n_beta
    }

    pub fn same_sector(&self, other: &SectorBasis) -> bool {
        self.n_spin_orbitals == other.n_spin_orbitals
            && self.n_alpha == other.n_alpha
            && self.n_beta == other.n_beta
    }
}

/// Shorthand for [`SectorBasis::new`].
pub fn sector_basis(n_spin_orbitals: usize, n_alpha: usize, n_beta: usize) -> Result<SectorBasis> {
    SectorBasis::new(n_spin_orbitals, n_alpha, n_beta)
}

/// Real amplitudes over a sector basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    basis: Arc<SectorBasis>,
    amplitudes: Vec<f64>,
}

impl StateVector {
    pub fn new(basis: Arc<SectorBasis>, amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                actual: amplitudes.len(),
            });
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn basis_state(basis: Arc<SectorBasis>, index: usize) -> Self {
        let mut amplitudes = vec![0.0; basis.dim()];
        amplitudes[index] = 1.0;
        Self { basis, amplitudes }
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<f64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.amplitudes)
    }

    pub fn inner(&self, other: &StateVector) -> Result<f64> {
        if !self.basis.same_sector(&other.basis) {
            return Err(Error::InvalidArgument(
                "states live in different sectors".into(),
            ));
        }
        Ok(dot(&self.amplitudes, &other.amplitudes))
    }

    pub fn amplitude_of(&self, det: Det) -> Option<f64> {
        self.basis.index_of(det).map(|i| self.amplitudes[i])
    }
}

/// Matrix of `tau - tau†` for one excitation over `basis`, with the sign
/// convention of [`annihilate`] and [`create`].
pub fn excitation_generator(exc: &Excitation, basis: &SectorBasis) -> Result<SparseMatrix> {
    exc.validate(basis.n_spin_orbitals())?;
    SparseMatrix::from_triplets(basis.dim(), generator_entries(exc, basis))
}

/// `(row, col, value)` entries of `tau - tau†` restricted to `basis`.
pub(crate) fn generator_entries(exc: &Excitation, basis: &SectorBasis) -> Vec<(usize, usize, f64)> {
    let forward = exc.ladder_string();
    let mut entries = Vec::new();
    for (col, &det) in basis.determinants().iter().enumerate() {
        if let Some((target, sign)) = apply_string(det, &forward) {
            let row = basis
                .index_of(target)
                .expect("excitations conserve the spin sector");
            entries.push((row, col, sign));
            // The adjoint is the transpose for real operators.
            entries.push((col, row, -sign));
        }
    }
    entries
}

/// Fixed sparsity pattern of `sum_mu t_mu G_mu` for one excitation list, so
/// that assembling for new amplitudes is a single scatter pass.
#[derive(Debug, Clone)]
pub struct GeneratorTemplate {
    pattern: SparseMatrix,
    /// `(nonzero slot, excitation index, sign)`.
    scatter: Vec<(usize, usize, f64)>,
    /// Per-excitation matrices, used for derivative blocks.
    per_excitation: Vec<SparseMatrix>,
    n_excitations: usize,
}

impl GeneratorTemplate {
    pub fn new(excitations: &[Excitation], basis: &SectorBasis) -> Result<Self> {
        let dim = basis.dim();
        let mut tagged = Vec::new();
        let mut per_excitation = Vec::with_capacity(excitations.len());
        for (mu, exc) in excitations.iter().enumerate() {
            exc.validate(basis.n_spin_orbitals())?;
            let entries = generator_entries(exc, basis);
            per_excitation.push(SparseMatrix::from_triplets(dim, entries.clone())?);
            tagged.extend(entries.into_iter().map(|(r, c, s)| (r, c, mu, s)));
        }
        tagged.sort_by_key(|&(r, c, mu, _)| (r, c, mu));

        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::new();
        let mut scatter = Vec::with_capacity(tagged.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, mu, s) in tagged {
            if last != Some((r, c)) {
                col_idx.push(c);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
            scatter.push((col_idx.len() - 1, mu, s));
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        let values = vec![0.0; col_idx.len()];
        Ok(Self {
            pattern: SparseMatrix::from_raw(dim, row_ptr, col_idx, values),
            scatter,
            per_excitation,
            n_excitations: excitations.len(),
        })
    }

    pub fn n_excitations(&self) -> usize {
        self.n_excitations
    }

    pub fn excitation_matrix(&self, mu: usize) -> &SparseMatrix {
        &self.per_excitation[mu]
    }

    pub fn assemble(&self, params: &[f64]) -> Result<SparseMatrix> {
        if params.len() != self.n_excitations {
            return Err(Error::DimensionMismatch {
                expected: self.n_excitations,
                actual: params.len(),
            });
        }
        let mut g = self.pattern.clone();
        let values = g.values_mut();
        for &(slot, mu, sign) in &self.scatter {
            values[slot] += sign * params[mu];
        }
        Ok(g)
    }
}

/// `sum_mu params[mu] * G_mu` over `basis`.
pub fn assemble_generator(
    excitations: &[Excitation],
    params: &[f64],
    basis: &SectorBasis,
) -> Result<SparseMatrix> {
    if params.len() != excitations.len() {
        return Err(Error::DimensionMismatch {
            expected: excitations.len(),
            actual: params.len(),
        });
    }
    GeneratorTemplate::new(excitations, basis)?.assemble(params)
}

/// Upper-triangular block operator `[[a, b], [0, a]]` acting on stacked
/// vectors `[x_top; x_bottom]`. Its exponential carries the directional
/// derivative of `exp(a)` along `b` in the top-right block.
pub struct DerivativeBlock<'a> {
    pub a: &'a SparseMatrix,
    pub b: &'a SparseMatrix,
}

impl LinearOperator for DerivativeBlock<'_> {
    fn dim(&self) -> usize {
        2 * self.a.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.a.dim();
        let (x_top, x_bot) = x.split_at(n);
        let (y_top, y_bot) = y.split_at_mut(n);
        self.a.apply(x_top, y_top);
        let mut tmp = vec![0.0; n];
        self.b.apply(x_bot, &mut tmp);
        for (t, v) in y_top.iter_mut().zip(&tmp) {
            *t += v;
        }
        self.a.apply(x_bot, y_bot);
    }

    fn norm1_bound(&self) -> f64 {
        self.a.norm1_bound() + self.b.norm1_bound()
    }
}

/// Norm budget of one Taylor stage after scaling.
const TAYLOR_STAGE_NORM: f64 = 3.5;
const TAYLOR_MAX_TERMS: usize = 60;

/// `exp(op) v` by a scaled truncated Taylor series.
///
/// The operator is split into `s` stages with `||op||_1 / s <= 3.5`; each
/// stage sums terms until two consecutive terms fall below unit roundoff
/// relative to the partial sum.
pub fn expmv_op<A: LinearOperator + ?Sized>(op: &A, v: &[f64]) -> Result<Vec<f64>> {
    let n = op.dim();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: v.len(),
        });
    }
    let norm = op.norm1_bound();
    if norm == 0.0 {
        return Ok(v.to_vec());
    }
    let stages = (norm / TAYLOR_STAGE_NORM).ceil().max(1.0) as usize;
    let inv_stages = 1.0 / stages as f64;
    let tol = f64::EPSILON / 2.0;

    let mut f = v.to_vec();
    let mut term = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..stages {
        term.copy_from_slice(&f);
        let mut prev_small = false;
        for j in 1..=TAYLOR_MAX_TERMS {
            op.apply(&term, &mut next);
            let scale = inv_stages / j as f64;
            for (t, x) in term.iter_mut().zip(&next) {
                *t = x * scale;
            }
            let mut term_inf = 0.0f64;
            let mut f_inf = 0.0f64;
            for (fi, ti) in f.iter_mut().zip(&term) {
                *fi += ti;
                term_inf = term_inf.max(ti.abs());
                f_inf = f_inf.max(fi.abs());
            }
            let small = term_inf <= tol * f_inf;
            if small && prev_small {
                break;
            }
            prev_small = small;
        }
    }
    Ok(f)
}

/// `exp(g) v` for an antisymmetric sector generator.
pub fn expmv(g: &SparseMatrix, v: &StateVector) -> Result<StateVector> {
    let out = expmv_op(g, v.amplitudes())?;
    StateVector::new(v.basis().clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_4_1_1_enumeration() {
        let b = sector_basis(4, 1, 1).unwrap();
        assert_eq!(b.determinants(), &[0b0011, 0b0110, 0b1001, 0b1100]);
        for (i, &d) in b.determinants().iter().enumerate() {
            assert_eq!(b.index_of(d), Some(i));
        }
        assert_eq!(b.index_of(0b0101), None);
    }

    #[test]
    fn vacuum_sector() {
        let b = sector_basis(4, 0, 0).unwrap();
        assert_eq!(b.determinants(), &[0]);
    }

    #[test]
    fn sector_8_2_2_dimension_matches_enumeration() {
        let b = sector_basis(8, 2, 2).unwrap();
        assert_eq!(b.dim(), 36);
        let brute: Vec<u64> = (0u64..256)
            .filter(|m| (m & ALPHA_BITS).count_ones() == 2 && (m & BETA_BITS).count_ones() == 2)
            .collect();
        assert_eq!(b.determinants(), brute.as_slice());
    }

    #[test]
    fn invalid_sectors() {
        assert!(sector_basis(5, 1, 1).is_err());
        assert!(sector_basis(4, 3, 0).is_err());
        assert!(sector_basis(66, 1, 1).is_err());
    }

    #[test]
    fn ladder_signs() {
        // a_2 on |0,1,2> passes two occupied modes.
        assert_eq!(annihilate(0b111, 2), Some((0b011, 1.0)));
        assert_eq!(annihilate(0b111, 1), Some((0b101, -1.0)));
        assert_eq!(annihilate(0b010, 0), None);
        assert_eq!(create(0b001, 1), Some((0b011, -1.0)));
        assert_eq!(create(0b001, 0), None);
    }

    #[test]
    fn plane_rotation() {
        let theta = 0.3;
        let g = SparseMatrix::from_triplets(2, vec![(0, 1, -theta), (1, 0, theta)]).unwrap();
        let w = expmv_op(&g, &[1.0, 0.0]).unwrap();
        assert!((w[0] - theta.cos()).abs() < 1e-15);
        assert!((w[1] - theta.sin()).abs() < 1e-15);
        assert!((w[0] - 0.9553365).abs() < 1e-7);
        assert!((w[1] - 0.2955202).abs() < 1e-7);
    }

    #[test]
    fn zero_generator_is_identity() {
        let g = SparseMatrix::zeros(3);
        let v = vec![0.1, -0.7, 0.2];
        assert_eq!(expmv_op(&g, &v).unwrap(), v);
    }

    #[test]
    fn large_angle_rotation_is_accurate() {
        let theta = 40.0;
        let g = SparseMatrix::from_triplets(2, vec![(0, 1, -theta), (1, 0, theta)]).unwrap();
        let w = expmv_op(&g, &[1.0, 0.0]).unwrap();
        assert!((w[0] - theta.cos()).abs() < 1e-12);
        assert!((w[1] - theta.sin()).abs() < 1e-12);
    }

    #[test]
    fn expmv_dimension_mismatch() {
        let g = SparseMatrix::zeros(3);
        assert!(expmv_op(&g, &[1.0]).is_err());
    }
}
