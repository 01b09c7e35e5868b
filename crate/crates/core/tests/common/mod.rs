#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uccvqe::{AnsatzKind, MolecularHamiltonian, SectorBasis};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random real integrals with full 8-fold symmetry.
pub fn random_hamiltonian(
    rng: &mut impl Rng,
    n: usize,
    n_electrons: usize,
    ms2: i64,
) -> MolecularHamiltonian {
    let mut h = vec![0.0; n * n];
    for p in 0..n {
        for q in 0..=p {
            let v = rng.random_range(-1.0..1.0);
            h[p * n + q] = v;
            h[q * n + p] = v;
        }
    }
    let mut g = vec![0.0; n * n * n * n];
    let idx = |p: usize, q: usize, r: usize, s: usize| ((p * n + q) * n + r) * n + s;
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let (pq, rs) = (p * n + q, r * n + s);
                    if p < q || r < s || pq < rs {
                        continue;
                    }
                    let v = rng.random_range(-0.5..0.5);
                    for (a, b, c, d) in [
                        (p, q, r, s),
                        (q, p, r, s),
                        (p, q, s, r),
                        (q, p, s, r),
                        (r, s, p, q),
                        (s, r, p, q),
                        (r, s, q, p),
                        (s, r, q, p),
                    ] {
                        g[idx(a, b, c, d)] = v;
                    }
                }
            }
        }
    }
    let core = rng.random_range(-1.0..1.0);
    MolecularHamiltonian::new(n, n_electrons, ms2, core, h, g).unwrap()
}

/// Determinant as an ascending list of occupied spin orbitals, read as
/// `a+_{o0} a+_{o1} ... |vac>`.
pub fn occupied(det: u64) -> Vec<usize> {
    (0..64).filter(|p| det >> p & 1 == 1).collect()
}

/// Applies `a_p` by locating the operator in the creation product and
/// anticommuting it to the front.
pub fn op_annihilate(ops: &[usize], p: usize) -> Option<(Vec<usize>, f64)> {
    let pos = ops.iter().position(|&o| o == p)?;
    let mut rest = ops.to_vec();
    rest.remove(pos);
    Some((rest, if pos % 2 == 0 { 1.0 } else { -1.0 }))
}

/// Applies `a+_p` by prepending and bubble-sorting into ascending order.
pub fn op_create(ops: &[usize], p: usize) -> Option<(Vec<usize>, f64)> {
    if ops.contains(&p) {
        return None;
    }
    let mut v = vec![p];
    v.extend_from_slice(ops);
    let mut sign = 1.0;
    let mut i = 0;
    while i + 1 < v.len() && v[i] > v[i + 1] {
        v.swap(i, i + 1);
        sign = -sign;
        i += 1;
    }
    Some((v, sign))
}

pub fn to_mask(ops: &[usize]) -> u64 {
    ops.iter().fold(0, |m, &o| m | (1 << o))
}

/// `(create?, index)` pairs, rightmost acting first.
pub fn apply_ops(det: u64, string: &[(bool, usize)]) -> Option<(u64, f64)> {
    let mut ops = occupied(det);
    let mut sign = 1.0;
    for &(create, p) in string.iter().rev() {
        let (next, s) = if create { op_create(&ops, p)? } else { op_annihilate(&ops, p)? };
        ops = next;
        sign *= s;
    }
    Some((to_mask(&ops), sign))
}

/// Dense second-quantized Hamiltonian over `basis`, summing every term of
/// `sum h_pq a+_p a_q + 1/2 sum <pq|rs> a+_p a+_q a_s a_r` explicitly.
pub fn brute_force_matrix(h: &MolecularHamiltonian, basis: &SectorBasis) -> DMatrix<f64> {
    brute_force_over(h, basis.n_spin_orbitals(), basis.determinants())
}

/// As [`brute_force_matrix`] over an arbitrary determinant list, which must
/// be closed under the Hamiltonian's action.
pub fn brute_force_over(h: &MolecularHamiltonian, n: usize, dets: &[u64]) -> DMatrix<f64> {
    let dim = dets.len();
    let index_of = |d: u64| dets.iter().position(|&x| x == d).expect("closed determinant list");
    let spin = |p: usize| p % 2;
    let spatial = |p: usize| p / 2;
    let mut m = DMatrix::zeros(dim, dim);
    for (col, &det) in dets.iter().enumerate() {
        m[(col, col)] += h.core_energy();
        for p in 0..n {
            for q in 0..n {
                if spin(p) != spin(q) {
                    continue;
                }
                let v = h.one_body(spatial(p), spatial(q));
                if v == 0.0 {
                    continue;
                }
                if let Some((out, s)) = apply_ops(det, &[(true, p), (false, q)]) {
                    let row = index_of(out);
                    m[(row, col)] += s * v;
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s_ in 0..n {
                        if spin(p) != spin(r) || spin(q) != spin(s_) {
                            continue;
                        }
                        let v = h.eri(spatial(p), spatial(r), spatial(q), spatial(s_));
                        if v == 0.0 {
                            continue;
                        }
                        if let Some((out, s)) =
                            apply_ops(det, &[(true, p), (true, q), (false, s_), (false, r)])
                        {
                            let row = index_of(out);
                            m[(row, col)] += 0.5 * s * v;
                        }
                    }
                }
            }
        }
    }
    m
}

/// `exp(a)` by scaling and squaring of a truncated Taylor series.
pub fn dense_expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = a.abs().row_sum().max();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / 2f64.powi(squarings as i32);
    let n = a.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for j in 1..=30 {
        term = &term * &scaled / j as f64;
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Analytic spectrum of the two-site Hubbard dimer in the one-up,
/// one-down sector.
pub fn dimer_spectrum(t: f64, u: f64) -> [f64; 4] {
    let r = (u * u / 4.0 + 4.0 * t * t).sqrt();
    let mut e = [u / 2.0 - r, 0.0, u, u / 2.0 + r];
    e.sort_by(f64::total_cmp);
    e
}

#[derive(Debug, Default, PartialEq, Eq, Clone, Copy)]
pub struct Counts {
    pub singles: usize,
    pub doubles: usize,
    pub pair_doubles: usize,
}

impl Counts {
    pub fn total(&self) -> usize {
        self.singles + self.doubles + self.pair_doubles
    }
}

/// Counts canonical excitations by testing every index tuple.
pub fn enumerate_excitations(kind: AnsatzKind, n: usize, na: usize, nb: usize, k: usize) -> Counts {
    let occ = |p: usize| if p.is_multiple_of(2) { p / 2 < na } else { p / 2 < nb };
    let sz = |p: usize| if p.is_multiple_of(2) { 1i32 } else { -1 };
    let generalized = matches!(kind, AnsatzKind::Uccgsd | AnsatzKind::Kupccgsd);
    let mut c = Counts::default();
    for p in 0..n {
        for q in p + 1..n {
            if sz(p) != sz(q) {
                continue;
            }
            if generalized || (occ(p) && !occ(q)) || (occ(q) && !occ(p)) {
                c.singles += 1;
            }
        }
    }
    match kind {
        AnsatzKind::Uccsd => {
            for i in 0..n {
                for j in i + 1..n {
                    for a in 0..n {
                        for b in a + 1..n {
                            if occ(i) && occ(j) && !occ(a) && !occ(b) && sz(i) + sz(j) == sz(a) + sz(b) {
                                c.doubles += 1;
                            }
                        }
                    }
                }
            }
        }
        AnsatzKind::Uccgsd => {
            for i in 0..n {
                for j in i + 1..n {
                    for a in 0..n {
                        for b in a + 1..n {
                            if (i, j) < (a, b) && sz(i) + sz(j) == sz(a) + sz(b) {
                                c.doubles += 1;
                            }
                        }
                    }
                }
            }
        }
        AnsatzKind::Upccsd => {
            for from in 0..n / 2 {
                for to in 0..n / 2 {
                    let full = occ(2 * from) && occ(2 * from + 1);
                    let empty = !occ(2 * to) && !occ(2 * to + 1);
                    if full && empty {
                        c.pair_doubles += 1;
                    }
                }
            }
        }
        AnsatzKind::Kupccgsd => {
            for from in 0..n / 2 {
                c.pair_doubles += n / 2 - from - 1;
            }
        }
    }
    Counts {
        singles: c.singles * k,
        doubles: c.doubles * k,
        pair_doubles: c.pair_doubles * k,
    }
}

pub fn random_unit(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}
