//! Molecular and lattice Hamiltonians in a spatial-orbital basis, FCIDUMP
//! ingestion, and Slater–Condon realization over a determinant sector.
//!
//! Two-electron integrals are stored in chemists' notation `(pq|rs)` with
//! full 8-fold permutational symmetry. Orbitals are taken in file order;
//! frozen-core orbitals must already be removed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fock::{apply_string, Det, Ladder, SectorBasis};
use crate::par;
use crate::sparse::SparseMatrix;

/// Records differing by more than this are treated as corrupt duplicates.
pub const DUPLICATE_TOLERANCE: f64 = 1e-10;

/// Integrals at or below this magnitude are not written.
pub const WRITE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MolecularHamiltonian {
    n_spatial: usize,
    n_electrons: usize,
    ms2: i64,
    core_energy: f64,
    one_body: Vec<f64>,
    two_body: Vec<f64>,
}

/// The 8 index permutations sharing the value of `(pq|rs)`.
fn eri_permutations(p: usize, q: usize, r: usize, s: usize) -> [[usize; 4]; 8] {
    [
        [p, q, r, s],
        [q, p, r, s],
        [p, q, s, r],
        [q, p, s, r],
        [r, s, p, q],
        [s, r, p, q],
        [r, s, q, p],
        [s, r, q, p],
    ]
}

/// Representative with `p >= q`, `r >= s` and `(p, q) >= (r, s)`.
fn eri_canonical(p: usize, q: usize, r: usize, s: usize) -> [usize; 4] {
    let first = (p.max(q), p.min(q));
    let second = (r.max(s), r.min(s));
    let (a, b) = if first >= second {
        (first, second)
    } else {
        (second, first)
    };
    [a.0, a.1, b.0, b.1]
}

impl MolecularHamiltonian {
    /// Validates and wraps dense integral arrays (`one_body` row-major
    /// `n x n`, `two_body` row-major `n^4` in chemists' order).
    pub fn new(
        n_spatial: usize,
        n_electrons: usize,
        ms2: i64,
        core_energy: f64,
        one_body: Vec<f64>,
        two_body: Vec<f64>,
    ) -> Result<Self> {
        let n = n_spatial;
        if n == 0 {
            return Err(Error::InvalidHamiltonian("no orbitals".into()));
        }
        if one_body.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: one_body.len(),
            });
        }
        if two_body.len() != n * n * n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n * n * n,
                actual: two_body.len(),
            });
        }
        if n_electrons > 2 * n {
            return Err(Error::InvalidHamiltonian(format!(
                "{n_electrons} electrons do not fit in {n} spatial orbitals"
            )));
        }
        if ms2.unsigned_abs() as usize > n_electrons
            || (ms2.unsigned_abs() as usize) % 2 != n_electrons % 2
        {
            return Err(Error::InvalidHamiltonian(format!(
                "MS2={ms2} inconsistent with {n_electrons} electrons"
            )));
        }
        if !core_energy.is_finite()
            || one_body.iter().any(|v| !v.is_finite())
            || two_body.iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidHamiltonian("non-finite integral".into()));
        }
        let h = Self {
            n_spatial,
            n_electrons,
            ms2,
            core_energy,
            one_body,
            two_body,
        };
        for p in 0..n {
            for q in 0..p {
                if h.one_body(p, q) != h.one_body(q, p) {
                    return Err(Error::InvalidHamiltonian(format!(
                        "one-body integrals not symmetric at ({p}, {q})"
                    )));
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = h.eri(p, q, r, s);
                        for [a, b, c, d] in eri_permutations(p, q, r, s) {
                            if h.eri(a, b, c, d) != v {
                                return Err(Error::InvalidHamiltonian(format!(
                                    "two-body integrals lack 8-fold symmetry at ({p}{q}|{r}{s})"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(h)
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_spin_orbitals(&self) -> usize {
        2 * self.n_spatial
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    pub fn ms2(&self) -> i64 {
        self.ms2
    }

    pub fn core_energy(&self) -> f64 {
        self.core_energy
    }

    /// `(n_alpha, n_beta)` implied by NELEC and MS2.
    pub fn default_occupation(&self) -> (usize, usize) {
        let n = self.n_electrons as i64;
        (((n + self.ms2) / 2) as usize, ((n - self.ms2) / 2) as usize)
    }

    #[inline]
    pub fn one_body(&self, p: usize, q: usize) -> f64 {
        self.one_body[p * self.n_spatial + q]
    }

    /// `(pq|rs)` in chemists' notation.
    #[inline]
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let n = self.n_spatial;
        self.two_body[((p * n + q) * n + r) * n + s]
    }

    pub fn one_body_matrix(&self) -> &[f64] {
        &self.one_body
    }

    pub fn two_body_tensor(&self) -> &[f64] {
        &self.two_body
    }

    /// Spin-orbital one-body element `h_pq`.
    #[inline]
    pub fn spin_one_body(&self, p: usize, q: usize) -> f64 {
        if p % 2 != q % 2 {
            0.0
        } else {
            self.one_body(p / 2, q / 2)
        }
    }

    /// Physicists' `<pq|rs>` over spin orbitals.
    #[inline]
    pub fn spin_coulomb(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        if p % 2 != r % 2 || q % 2 != s % 2 {
            0.0
        } else {
            self.eri(p / 2, r / 2, q / 2, s / 2)
        }
    }

    /// Antisymmetrized `<pq||rs> = <pq|rs> - <pq|sr>`.
    #[inline]
    pub fn spin_antisym(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.spin_coulomb(p, q, r, s) - self.spin_coulomb(p, q, s, r)
    }
}

/// Collects unique integral records, completing symmetry on output.
struct IntegralSink {
    n: usize,
    core: Option<(f64, usize)>,
    one: BTreeMap<(usize, usize), (f64, usize)>,
    two: BTreeMap<[usize; 4], (f64, usize)>,
}

impl IntegralSink {
    fn new(n: usize) -> Self {
        Self {
            n,
            core: None,
            one: BTreeMap::new(),
            two: BTreeMap::new(),
        }
    }

    fn conflict(indices: [usize; 4], first: f64, second: f64, line: usize) -> Error {
        Error::ConflictingDuplicate {
            indices,
            first,
            second,
            line,
        }
    }

    fn core(&mut self, v: f64, line: usize) -> Result<()> {
        match self.core {
            Some((old, _)) if (old - v).abs() > DUPLICATE_TOLERANCE => {
                Err(Self::conflict([0; 4], old, v, line))
            }
            Some(_) => Ok(()),
            None => {
                self.core = Some((v, line));
                Ok(())
            }
        }
    }

    fn one(&mut self, p: usize, q: usize, v: f64, line: usize) -> Result<()> {
        let key = (p.max(q), p.min(q));
        match self.one.get(&key) {
            Some(&(old, _)) if (old - v).abs() > DUPLICATE_TOLERANCE => Err(Self::conflict(
                [key.0 + 1, key.1 + 1, 0, 0],
                old,
                v,
                line,
            )),
            Some(_) => Ok(()),
            None => {
                self.one.insert(key, (v, line));
                Ok(())
            }
        }
    }

    fn two(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64, line: usize) -> Result<()> {
        let key = eri_canonical(p, q, r, s);
        match self.two.get(&key) {
            Some(&(old, _)) if (old - v).abs() > DUPLICATE_TOLERANCE => Err(Self::conflict(
                key.map(|i| i + 1),
                old,
                v,
                line,
            )),
            Some(_) => Ok(()),
            None => {
                self.two.insert(key, (v, line));
                Ok(())
            }
        }
    }

    fn finish(self, n_electrons: usize, ms2: i64) -> Result<MolecularHamiltonian> {
        let n = self.n;
        let mut one_body = vec![0.0; n * n];
        for (&(p, q), &(v, _)) in &self.one {
            one_body[p * n + q] = v;
            one_body[q * n + p] = v;
        }
        let mut two_body = vec![0.0; n * n * n * n];
        for (&[p, q, r, s], &(v, _)) in &self.two {
            for [a, b, c, d] in eri_permutations(p, q, r, s) {
                two_body[((a * n + b) * n + c) * n + d] = v;
            }
        }
        let core = self.core.map_or(0.0, |(v, _)| v);
        MolecularHamiltonian::new(n, n_electrons, ms2, core, one_body, two_body)
    }
}

struct FcidumpHeader {
    norb: usize,
    nelec: usize,
    ms2: i64,
}

fn parse_header(text: &str) -> Result<FcidumpHeader> {
    let cleaned = text.replace(',', " ").replace('=', " = ");
    let tokens: Vec<&str> = cleaned.split_whitespace().collect();
    let mut fields: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    let mut i = 0;
    while i < tokens.len() {
        if i + 1 < tokens.len() && tokens[i + 1] == "=" {
            let key = tokens[i].to_ascii_uppercase();
            i += 2;
            let mut values = Vec::new();
            while i < tokens.len() && !(i + 1 < tokens.len() && tokens[i + 1] == "=") {
                let t = tokens[i];
                if t.starts_with('&') || t == "/" {
                    break;
                }
                values.push(t);
                i += 1;
            }
            fields.insert(key, values);
        } else {
            i += 1;
        }
    }
    let int_field = |name: &str| -> Result<i64> {
        let values = fields.get(name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing header field {name}"),
        })?;
        let first = values.first().ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("header field {name} has no value"),
        })?;
        first.parse::<i64>().map_err(|_| Error::Parse {
            line: 1,
            message: format!("header field {name} is not an integer: {first}"),
        })
    };
    let norb = int_field("NORB")?;
    let nelec = int_field("NELEC")?;
    let ms2 = int_field("MS2")?;
    if norb <= 0 || nelec < 0 {
        return Err(Error::Parse {
            line: 1,
            message: format!("invalid NORB={norb} or NELEC={nelec}"),
        });
    }
    Ok(FcidumpHeader {
        norb: norb as usize,
        nelec: nelec as usize,
        ms2,
    })
}

fn parse_value(token: &str, line: usize) -> Result<f64> {
    let normalized = token.replace(['D', 'd'], "e");
    let v: f64 = normalized.parse().map_err(|_| Error::Parse {
        line,
        message: format!("non-numeric value {token:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite value {token:?}"),
        });
    }
    Ok(v)
}

/// Reads an FCIDUMP file body.
///
/// Records `value i j k l` are 1-indexed: `0 0 0 0` is the core energy,
/// `i j 0 0` a one-body integral, `i 0 0 0` an orbital energy (ignored),
/// and four nonzero indices a two-body integral in chemists' order. Any
/// single member of a symmetry class suffices.
pub fn parse_fcidump(text: &str) -> Result<MolecularHamiltonian> {
    let lines: Vec<&str> = text.lines().collect();
    let start = lines
        .iter()
        .position(|l| !l.trim().is_empty())
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty input".into(),
        })?;
    if !lines[start].trim_start().to_ascii_uppercase().starts_with("&FCI") {
        return Err(Error::Parse {
            line: start + 1,
            message: "expected &FCI header".into(),
        });
    }
    let end = lines[start..]
        .iter()
        .position(|l| {
            let u = l.trim().to_ascii_uppercase();
            u.contains("&END") || u == "/"
        })
        .map(|off| start + off)
        .ok_or_else(|| Error::Parse {
            line: lines.len(),
            message: "unterminated header (no &END)".into(),
        })?;
    let header_text = lines[start..=end].join(" ");
    let header_text = header_text.trim_start();
    let header_text = &header_text[4..]; // drop "&FCI"
    let header_text = header_text.to_ascii_uppercase().replace("&END", " ");
    let header = parse_header(&header_text)?;
    let norb = header.norb;

    let mut sink = IntegralSink::new(norb);
    for (offset, raw) in lines[end + 1..].iter().enumerate() {
        let line_no = end + 2 + offset;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let value = parse_value(fields[0], line_no)?;
        let mut idx = [0usize; 4];
        for (slot, tok) in idx.iter_mut().zip(&fields[1..]) {
            let i: i64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("non-integer index {tok:?}"),
            })?;
            if i < 0 || i as usize > norb {
                return Err(Error::OrbitalIndexOutOfRange {
                    index: i.max(0) as usize,
                    norb,
                    line: line_no,
                });
            }
            *slot = i as usize;
        }
        match idx {
            [0, 0, 0, 0] => sink.core(value, line_no)?,
            [i, 0, 0, 0] if i > 0 => {}
            [i, j, 0, 0] if i > 0 && j > 0 => sink.one(i - 1, j - 1, value, line_no)?,
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                sink.two(i - 1, j - 1, k - 1, l - 1, value, line_no)?
            }
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("malformed index pattern {other:?}"),
                })
            }
        }
    }
    sink.finish(header.nelec, header.ms2)
}

/// Writes an FCIDUMP with one record per symmetry class.
pub fn write_fcidump(h: &MolecularHamiltonian) -> String {
    let n = h.n_spatial;
    let mut out = String::new();
    let orbsym = vec!["1"; n].join(",");
    let _ = writeln!(
        out,
        "&FCI NORB={},NELEC={},MS2={},\n ORBSYM={},\n ISYM=1,\n&END",
        n, h.n_electrons, h.ms2, orbsym
    );
    for p in 0..n {
        for q in 0..=p {
            for r in 0..n {
                for s in 0..=r {
                    if (r, s) > (p, q) {
                        continue;
                    }
                    let v = h.eri(p, q, r, s);
                    if v.abs() > WRITE_THRESHOLD {
                        let _ = writeln!(out, "{:>25.17e} {:>4} {:>4} {:>4} {:>4}", v, p + 1, q + 1, r + 1, s + 1);
                    }
                }
            }
        }
    }
    for p in 0..n {
        for q in 0..=p {
            let v = h.one_body(p, q);
            if v.abs() > WRITE_THRESHOLD {
                let _ = writeln!(out, "{:>25.17e} {:>4} {:>4} {:>4} {:>4}", v, p + 1, q + 1, 0, 0);
            }
        }
    }
    let _ = writeln!(out, "{:>25.17e} {:>4} {:>4} {:>4} {:>4}", h.core_energy, 0, 0, 0, 0);
    out
}

/// Open-boundary Hubbard chain in the site basis: hopping `-t` between
/// neighbours and on-site repulsion `u` as `(ii|ii)`. Half filling.
pub fn hubbard_hamiltonian(n_sites: usize, t: f64, u: f64) -> Result<MolecularHamiltonian> {
    if n_sites == 0 {
        return Err(Error::InvalidArgument("hubbard chain needs at least one site".into()));
    }
    let n = n_sites;
    let mut one_body = vec![0.0; n * n];
    for i in 0..n.saturating_sub(1) {
        one_body[i * n + i + 1] = -t;
        one_body[(i + 1) * n + i] = -t;
    }
    let mut two_body = vec![0.0; n * n * n * n];
    for i in 0..n {
        two_body[((i * n + i) * n + i) * n + i] = u;
    }
    MolecularHamiltonian::new(n, n, (n % 2) as i64, 0.0, one_body, two_body)
}

fn bits(mut mask: Det) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let p = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(p)
        }
    })
}

/// Connected matrix elements `(row, value)` with `row > col` for column
/// determinant `det`, plus its diagonal.
fn column_elements(
    h: &MolecularHamiltonian,
    basis: &SectorBasis,
    col: usize,
) -> (f64, Vec<(usize, f64)>) {
    let n_so = basis.n_spin_orbitals();
    let det = basis.det(col);
    let full = if n_so == 64 { u64::MAX } else { (1u64 << n_so) - 1 };
    let occ: Vec<usize> = bits(det).collect();
    let virt: Vec<usize> = bits(!det & full).collect();

    let mut diag = h.core_energy;
    for (x, &i) in occ.iter().enumerate() {
        diag += h.spin_one_body(i, i);
        for &j in &occ[x + 1..] {
            diag += h.spin_antisym(i, j, i, j);
        }
    }

    let mut out = Vec::new();
    let mut push = |target: Det, sign: f64, value: f64| {
        if value == 0.0 {
            return;
        }
        let row = basis
            .index_of(target)
            .expect("spin-conserving excitation stays in sector");
        if row > col {
            out.push((row, sign * value));
        }
    };

    for &i in &occ {
        for &a in &virt {
            if i % 2 != a % 2 {
                continue;
            }
            let mut value = h.spin_one_body(a, i);
            for &j in &occ {
                if j != i {
                    value += h.spin_antisym(a, j, i, j);
                }
            }
            let (target, sign) = apply_string(det, &[Ladder::Create(a), Ladder::Annihilate(i)])
                .expect("occupied to virtual");
            push(target, sign, value);
        }
    }

    for (x, &i) in occ.iter().enumerate() {
        for &j in &occ[x + 1..] {
            let spin_in = i % 2 + j % 2;
            for (y, &a) in virt.iter().enumerate() {
                for &b in &virt[y + 1..] {
                    if a % 2 + b % 2 != spin_in {
                        continue;
                    }
                    let value = h.spin_antisym(a, b, i, j);
                    if value == 0.0 {
                        continue;
                    }
                    let (target, sign) = apply_string(
                        det,
                        &[
                            Ladder::Create(a),
                            Ladder::Create(b),
                            Ladder::Annihilate(j),
                            Ladder::Annihilate(i),
                        ],
                    )
                    .expect("occupied pair to virtual pair");
                    push(target, sign, value);
                }
            }
        }
    }
    (diag, out)
}

/// Hamiltonian matrix over `basis` by the Slater–Condon rules, including the
/// core energy on the diagonal. The upper triangle mirrors the lower, so the
/// result is exactly symmetric.
pub fn sector_matrix(h: &MolecularHamiltonian, basis: &SectorBasis) -> Result<SparseMatrix> {
    if basis.n_spin_orbitals() != h.n_spin_orbitals() {
        return Err(Error::DimensionMismatch {
            expected: h.n_spin_orbitals(),
            actual: basis.n_spin_orbitals(),
        });
    }
    let columns = par::map_range(basis.dim(), |col| column_elements(h, basis, col));
    let mut triplets = Vec::new();
    for (col, (diag, entries)) in columns.into_iter().enumerate() {
        if diag != 0.0 {
            triplets.push((col, col, diag));
        }
        for (row, v) in entries {
            triplets.push((row, col, v));
            triplets.push((col, row, v));
        }
    }
    SparseMatrix::from_triplets(basis.dim(), triplets)
}
