//! Excitation catalogs for UCCSD, UCCGSD, UpCCSD and k-UpCCGSD, reference
//! determinants, and state preparation.
//!
//! Every excitation carries one real amplitude and enters the generator as
//! `t (tau - tau†)`. Only spin-projection conserving excitations are built.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{check_sector, expmv_op, Det, GeneratorTemplate, Ladder, SectorBasis, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzKind {
    Uccsd,
    Uccgsd,
    Upccsd,
    Kupccgsd,
}

impl AnsatzKind {
    pub const ALL: [AnsatzKind; 4] = [
        AnsatzKind::Uccsd,
        AnsatzKind::Uccgsd,
        AnsatzKind::Upccsd,
        AnsatzKind::Kupccgsd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AnsatzKind::Uccsd => "uccsd",
            AnsatzKind::Uccgsd => "uccgsd",
            AnsatzKind::Upccsd => "upccsd",
            AnsatzKind::Kupccgsd => "kupccgsd",
        }
    }
}

impl fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnsatzKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "").as_str() {
            "uccsd" => Ok(AnsatzKind::Uccsd),
            "uccgsd" => Ok(AnsatzKind::Uccgsd),
            "upccsd" => Ok(AnsatzKind::Upccsd),
            "kupccgsd" => Ok(AnsatzKind::Kupccgsd),
            other => Err(Error::InvalidArgument(format!("unknown ansatz kind {other:?}"))),
        }
    }
}

/// One canonical excitation. Indices are spin orbitals except for
/// `PairDouble`, whose indices are spatial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Excitation {
    /// `a†_q a_p`, `p < q`, same spin.
    Single { p: usize, q: usize },
    /// `a†_a a†_b a_j a_i`, `i < j`, `a < b`, `(i, j) < (a, b)`.
    Double { i: usize, j: usize, a: usize, b: usize },
    /// Moves the alpha/beta pair of spatial orbital `from` into `to`.
    PairDouble { from: usize, to: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcitationClass {
    Single,
    Double,
    PairDouble,
}

impl Excitation {
    pub fn class(&self) -> ExcitationClass {
        match self {
            Excitation::Single { .. } => ExcitationClass::Single,
            Excitation::Double { .. } => ExcitationClass::Double,
            Excitation::PairDouble { .. } => ExcitationClass::PairDouble,
        }
    }

    /// Ladder string of `tau`, rightmost operator acting first.
    pub fn ladder_string(&self) -> Vec<Ladder> {
        match *self {
            Excitation::Single { p, q } => vec![Ladder::Create(q), Ladder::Annihilate(p)],
            Excitation::Double { i, j, a, b } => vec![
                Ladder::Create(a),
                Ladder::Create(b),
                Ladder::Annihilate(j),
                Ladder::Annihilate(i),
            ],
            Excitation::PairDouble { from, to } => vec![
                Ladder::Create(2 * to),
                Ladder::Create(2 * to + 1),
                Ladder::Annihilate(2 * from + 1),
                Ladder::Annihilate(2 * from),
            ],
        }
    }

    /// Spin orbitals touched by the excitation.
    pub fn support(&self) -> Det {
        match *self {
            Excitation::Single { p, q } => (1 << p) | (1 << q),
            Excitation::Double { i, j, a, b } => (1 << i) | (1 << j) | (1 << a) | (1 << b),
            Excitation::PairDouble { from, to } => {
                (0b11u64 << (2 * from)) | (0b11u64 << (2 * to))
            }
        }
    }

    pub fn validate(&self, n_spin_orbitals: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidExcitation(format!("{self:?}: {msg}")));
        match *self {
            Excitation::Single { p, q } => {
                if q >= n_spin_orbitals {
                    return bad(format!("index out of range for N={n_spin_orbitals}"));
                }
                if p >= q {
                    return bad("requires p < q".into());
                }
                if p % 2 != q % 2 {
                    return bad("spin flip".into());
                }
            }
            Excitation::Double { i, j, a, b } => {
                if i.max(j).max(a).max(b) >= n_spin_orbitals {
                    return bad(format!("index out of range for N={n_spin_orbitals}"));
                }
                if i >= j || a >= b || (i, j) >= (a, b) {
                    return bad("requires i < j, a < b, (i, j) < (a, b)".into());
                }
                if i % 2 + j % 2 != a % 2 + b % 2 {
                    return bad("does not conserve spin projection".into());
                }
            }
            Excitation::PairDouble { from, to } => {
                if 2 * to + 1 >= n_spin_orbitals {
                    return bad(format!("index out of range for N={n_spin_orbitals}"));
                }
                if from >= to {
                    return bad("requires from < to".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ansatz {
    pub kind: AnsatzKind,
    pub n_spin_orbitals: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub k: usize,
    pub blocks: Vec<Vec<Excitation>>,
    pub n_params: usize,
}

impl Ansatz {
    /// Wraps explicit blocks, validating every excitation.
    pub fn from_blocks(
        kind: AnsatzKind,
        n_spin_orbitals: usize,
        n_alpha: usize,
        n_beta: usize,
        blocks: Vec<Vec<Excitation>>,
    ) -> Result<Self> {
        check_sector(n_spin_orbitals, n_alpha, n_beta)?;
        for block in &blocks {
            let mut seen = std::collections::HashSet::new();
            for exc in block {
                exc.validate(n_spin_orbitals)?;
                if !seen.insert(*exc) {
                    return Err(Error::InvalidExcitation(format!("duplicate {exc:?}")));
                }
            }
        }
        let n_params = blocks.iter().map(Vec::len).sum();
        Ok(Self {
            kind,
            n_spin_orbitals,
            n_alpha,
            n_beta,
            k: blocks.len(),
            blocks,
            n_params,
        })
    }

    /// Parameter offsets of each block.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.blocks.len());
        let mut acc = 0;
        for b in &self.blocks {
            offsets.push(acc);
            acc += b.len();
        }
        offsets
    }

    pub fn excitations(&self) -> impl Iterator<Item = &Excitation> {
        self.blocks.iter().flatten()
    }

    /// Same ansatz with one more (identical) block appended. Only
    /// meaningful for k-UpCCGSD.
    pub fn with_extra_block(&self) -> Result<Self> {
        if self.kind != AnsatzKind::Kupccgsd {
            return Err(Error::InvalidArgument(format!(
                "{} has a single block",
                self.kind
            )));
        }
        build_ansatz(self.kind, self.n_spin_orbitals, self.n_alpha, self.n_beta, self.k + 1)
    }
}

fn same_spin_pairs(n_spin_orbitals: usize, from: &[usize], to: &[usize]) -> Vec<Excitation> {
    let mut out = Vec::new();
    for &p in from {
        for &q in to {
            if p % 2 == q % 2 && p < q {
                out.push(Excitation::Single { p, q });
            }
        }
    }
    debug_assert!(out.iter().all(|e| e.validate(n_spin_orbitals).is_ok()));
    out.sort();
    out
}

fn ordered_pairs(orbitals: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (x, &p) in orbitals.iter().enumerate() {
        for &q in &orbitals[x + 1..] {
            out.push((p.min(q), p.max(q)));
        }
    }
    out
}

/// Canonical double from an annihilated pair and a created pair. A pair
/// given in reverse order maps onto the same generator with flipped sign,
/// so only the canonical orientation is kept.
fn canonical_double(from: (usize, usize), to: (usize, usize)) -> Excitation {
    let (lo, hi) = if from < to { (from, to) } else { (to, from) };
    Excitation::Double {
        i: lo.0,
        j: lo.1,
        a: hi.0,
        b: hi.1,
    }
}

fn spin_signature(pair: (usize, usize)) -> usize {
    pair.0 % 2 + pair.1 % 2
}

/// Builds the excitation catalog of `kind`.
///
/// The aufbau reference occupies alpha spin orbitals `0, 2, ..` and beta
/// spin orbitals `1, 3, ..` of the lowest spatial orbitals.
pub fn build_ansatz(
    kind: AnsatzKind,
    n_spin_orbitals: usize,
    n_alpha: usize,
    n_beta: usize,
    k: usize,
) -> Result<Ansatz> {
    check_sector(n_spin_orbitals, n_alpha, n_beta)?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k != 1 && kind != AnsatzKind::Kupccgsd {
        return Err(Error::InvalidArgument(format!("k={k} is only valid for kupccgsd")));
    }
    let n = n_spin_orbitals;
    let n_spatial = n / 2;
    let aufbau = aufbau_mask(n_alpha, n_beta);
    let occupied: Vec<usize> = (0..n).filter(|p| aufbau & (1 << p) != 0).collect();
    let virtual_: Vec<usize> = (0..n).filter(|p| aufbau & (1 << p) == 0).collect();
    let all: Vec<usize> = (0..n).collect();

    let block = match kind {
        AnsatzKind::Uccsd => {
            let mut block = same_spin_pairs(n, &occupied, &virtual_);
            let mut doubles = Vec::new();
            for from in ordered_pairs(&occupied) {
                for to in ordered_pairs(&virtual_) {
                    if spin_signature(from) == spin_signature(to) {
                        doubles.push(canonical_double(from, to));
                    }
                }
            }
            doubles.sort();
            block.extend(doubles);
            block
        }
        AnsatzKind::Uccgsd => {
            let mut block = same_spin_pairs(n, &all, &all);
            let pairs = ordered_pairs(&all);
            let mut doubles = Vec::new();
            for (x, &first) in pairs.iter().enumerate() {
                for &second in &pairs[x + 1..] {
                    if spin_signature(first) == spin_signature(second) {
                        doubles.push(canonical_double(first, second));
                    }
                }
            }
            doubles.sort();
            block.extend(doubles);
            block
        }
        AnsatzKind::Upccsd => {
            let mut block = same_spin_pairs(n, &occupied, &virtual_);
            let doubly = n_alpha.min(n_beta);
            let empty_from = n_alpha.max(n_beta);
            for from in 0..doubly {
                for to in empty_from..n_spatial {
                    block.push(Excitation::PairDouble { from, to });
                }
            }
            block
        }
        AnsatzKind::Kupccgsd => {
            let mut block = same_spin_pairs(n, &all, &all);
            for from in 0..n_spatial {
                for to in from + 1..n_spatial {
                    block.push(Excitation::PairDouble { from, to });
                }
            }
            block
        }
    };
    Ansatz::from_blocks(kind, n, n_alpha, n_beta, vec![block; k])
}

/// Normalized linear combination of determinants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiDetReference {
    terms: Vec<(Det, f64)>,
}

impl MultiDetReference {
    /// Merges repeated determinants and normalizes.
    pub fn new(terms: Vec<(Det, f64)>) -> Result<Self> {
        let mut merged: BTreeMap<Det, f64> = BTreeMap::new();
        for (d, c) in terms {
            if !c.is_finite() {
                return Err(Error::InvalidArgument("non-finite reference coefficient".into()));
            }
            *merged.entry(d).or_insert(0.0) += c;
        }
        let norm = merged.values().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("reference has zero norm".into()));
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(d, c)| (d, c / norm))
            .collect();
        Ok(Self { terms })
    }

    pub fn single(det: Det) -> Self {
        Self {
            terms: vec![(det, 1.0)],
        }
    }

    pub fn terms(&self) -> &[(Det, f64)] {
        &self.terms
    }

    pub fn to_state(&self, basis: &Arc<SectorBasis>) -> Result<StateVector> {
        let mut amplitudes = vec![0.0; basis.dim()];
        for &(det, c) in &self.terms {
            let i = basis.index_of(det).ok_or_else(|| {
                Error::InvalidArgument(format!("reference determinant {det:#b} outside sector"))
            })?;
            amplitudes[i] = c;
        }
        StateVector::new(basis.clone(), amplitudes)
    }

    pub fn describe(&self) -> String {
        self.terms
            .iter()
            .map(|(d, c)| format!("{c:+.6}*{d:#b}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn aufbau_mask(n_alpha: usize, n_beta: usize) -> Det {
    let mut mask = 0;
    for s in 0..n_alpha {
        mask |= 1 << (2 * s);
    }
    for s in 0..n_beta {
        mask |= 1 << (2 * s + 1);
    }
    mask
}

pub fn aufbau_reference(
    n_spin_orbitals: usize,
    n_alpha: usize,
    n_beta: usize,
) -> Result<MultiDetReference> {
    check_sector(n_spin_orbitals, n_alpha, n_beta)?;
    Ok(MultiDetReference::single(aufbau_mask(n_alpha, n_beta)))
}

/// Equal-weight combination of the alpha- and beta-excited determinants of
/// each spatial promotion `(i, a)` out of the aufbau determinant.
pub fn singly_excited_reference(
    n_spin_orbitals: usize,
    n_alpha: usize,
    n_beta: usize,
    promotions: &[(usize, usize)],
) -> Result<MultiDetReference> {
    check_sector(n_spin_orbitals, n_alpha, n_beta)?;
    if promotions.is_empty() {
        return Err(Error::InvalidArgument("no promotions given".into()));
    }
    let aufbau = aufbau_mask(n_alpha, n_beta);
    let n_spatial = n_spin_orbitals / 2;
    let mut terms = Vec::new();
    for &(i, a) in promotions {
        if i >= n_spatial || a >= n_spatial {
            return Err(Error::InvalidArgument(format!(
                "promotion {i}>{a} outside {n_spatial} spatial orbitals"
            )));
        }
        for spin in 0..2 {
            let from = 2 * i + spin;
            let to = 2 * a + spin;
            if aufbau & (1 << from) == 0 {
                return Err(Error::InvalidArgument(format!(
                    "promotion {i}>{a}: spin orbital {from} is unoccupied"
                )));
            }
            if aufbau & (1 << to) != 0 {
                return Err(Error::InvalidArgument(format!(
                    "promotion {i}>{a}: spin orbital {to} is occupied"
                )));
            }
            terms.push(((aufbau & !(1 << from)) | (1 << to), 1.0));
        }
    }
    MultiDetReference::new(terms)
}

/// An ansatz compiled against one sector basis.
#[derive(Debug, Clone)]
pub struct PreparedAnsatz {
    ansatz: Ansatz,
    basis: Arc<SectorBasis>,
    templates: Vec<GeneratorTemplate>,
}

impl PreparedAnsatz {
    pub fn new(ansatz: &Ansatz, basis: Arc<SectorBasis>) -> Result<Self> {
        if ansatz.n_spin_orbitals != basis.n_spin_orbitals()
            || ansatz.n_alpha != basis.n_alpha()
            || ansatz.n_beta != basis.n_beta()
        {
            return Err(Error::InvalidArgument(
                "ansatz and basis describe different sectors".into(),
            ));
        }
        let templates = ansatz
            .blocks
            .iter()
            .map(|b| GeneratorTemplate::new(b, &basis))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            ansatz: ansatz.clone(),
            basis,
            templates,
        })
    }

    pub fn ansatz(&self) -> &Ansatz {
        &self.ansatz
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn templates(&self) -> &[GeneratorTemplate] {
        &self.templates
    }

    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.ansatz.n_params {
            return Err(Error::DimensionMismatch {
                expected: self.ansatz.n_params,
                actual: params.len(),
            });
        }
        Ok(())
    }

    /// Applies block exponentials in order, block 0 acting first on the
    /// reference amplitudes.
    pub fn apply(&self, params: &[f64], reference: &[f64]) -> Result<Vec<f64>> {
        self.check_params(params)?;
        let mut state = reference.to_vec();
        for (template, offset) in self.templates.iter().zip(self.ansatz.block_offsets()) {
            let g = template.assemble(&params[offset..offset + template.n_excitations()])?;
            state = expmv_op(&g, &state)?;
        }
        Ok(state)
    }

    pub fn prepare(&self, params: &[f64], reference: &MultiDetReference) -> Result<StateVector> {
        let r = reference.to_state(&self.basis)?;
        let amplitudes = self.apply(params, r.amplitudes())?;
        StateVector::new(self.basis.clone(), amplitudes)
    }
}

/// `prod_b exp(G_b(t)) |reference>` with block 0 applied first.
pub fn prepare_state(
    ansatz: &Ansatz,
    params: &[f64],
    reference: &MultiDetReference,
    basis: &Arc<SectorBasis>,
) -> Result<StateVector> {
    PreparedAnsatz::new(ansatz, basis.clone())?.prepare(params, reference)
}
