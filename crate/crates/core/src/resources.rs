//! Term counts and layered schedules of exponentiated cluster terms.
//!
//! A term's support is the set of spin orbitals it touches; terms in one
//! layer have pairwise disjoint supports. Blocks of a product ansatz are
//! scheduled one after another and never share a layer. Jordan–Wigner
//! string overhead is not counted.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::ansatz::{build_ansatz, Ansatz, AnsatzKind, Excitation, ExcitationClass};
use crate::error::{Error, Result};
use crate::excited::loglog_slope;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub singles: usize,
    pub doubles: usize,
    pub pair_doubles: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.singles + self.doubles + self.pair_doubles
    }
}

/// One term of a schedule: block and position within that block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRef {
    pub block: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub layers: Vec<Vec<TermRef>>,
    /// Number of layers used by each block.
    pub block_layers: Vec<usize>,
}

impl Schedule {
    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Checks disjoint supports within layers, block separation, and that
    /// every term of `ansatz` is placed exactly once.
    pub fn validate(&self, ansatz: &Ansatz) -> Result<()> {
        let mut seen: Vec<Vec<bool>> = ansatz.blocks.iter().map(|b| vec![false; b.len()]).collect();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut used = 0u64;
            let block = layer.first().map(|t| t.block);
            for t in layer {
                if Some(t.block) != block {
                    return Err(Error::InvalidArgument(format!("layer {l} mixes blocks")));
                }
                let exc = ansatz
                    .blocks
                    .get(t.block)
                    .and_then(|b| b.get(t.index))
                    .ok_or_else(|| Error::InvalidArgument(format!("layer {l} names a missing term")))?;
                let support = exc.support();
                if used & support != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "layer {l}: overlapping support at {exc:?}"
                    )));
                }
                used |= support;
                if std::mem::replace(&mut seen[t.block][t.index], true) {
                    return Err(Error::InvalidArgument(format!("term {t:?} scheduled twice")));
                }
            }
        }
        if seen.iter().flatten().any(|s| !s) {
            return Err(Error::InvalidArgument("some terms are unscheduled".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub kind: AnsatzKind,
    pub n_spin_orbitals: usize,
    pub eta: usize,
    pub k: usize,
    pub term_count: usize,
    pub layer_count: usize,
    pub per_class: ClassCounts,
}

/// Number of exponentiated terms per class, one per canonical excitation.
pub fn count_resources(ansatz: &Ansatz) -> ClassCounts {
    let mut counts = ClassCounts::default();
    for exc in ansatz.excitations() {
        match exc.class() {
            ExcitationClass::Single => counts.singles += 1,
            ExcitationClass::Double => counts.doubles += 1,
            ExcitationClass::PairDouble => counts.pair_doubles += 1,
        }
    }
    counts
}

/// Greedy first-fit layering of `terms` in the given order. Returns term
/// indices per layer.
pub fn schedule_terms(terms: &[Excitation]) -> Vec<Vec<usize>> {
    let mut layers: Vec<(u64, Vec<usize>)> = Vec::new();
    for (i, exc) in terms.iter().enumerate() {
        let support = exc.support();
        match layers.iter_mut().find(|(used, _)| used & support == 0) {
            Some((used, members)) => {
                *used |= support;
                members.push(i);
            }
            None => layers.push((support, vec![i])),
        }
    }
    layers.into_iter().map(|(_, m)| m).collect()
}

pub fn schedule_layers(ansatz: &Ansatz) -> Schedule {
    let mut layers = Vec::new();
    let mut block_layers = Vec::with_capacity(ansatz.blocks.len());
    for (b, block) in ansatz.blocks.iter().enumerate() {
        let local = schedule_terms(block);
        block_layers.push(local.len());
        layers.extend(local.into_iter().map(|members| {
            members
                .into_iter()
                .map(|index| TermRef { block: b, index })
                .collect::<Vec<_>>()
        }));
    }
    Schedule {
        layers,
        block_layers,
    }
}

pub fn estimate_resources(ansatz: &Ansatz) -> ResourceEstimate {
    let per_class = count_resources(ansatz);
    ResourceEstimate {
        kind: ansatz.kind,
        n_spin_orbitals: ansatz.n_spin_orbitals,
        eta: ansatz.n_alpha + ansatz.n_beta,
        k: ansatz.k,
        term_count: per_class.total(),
        layer_count: schedule_layers(ansatz).layer_count(),
        per_class,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ResourceEstimate>,
    /// Log-log slope of term count against N.
    pub term_exponent: Option<f64>,
    /// Log-log slope of layer count against N.
    pub layer_exponent: Option<f64>,
    /// Log-log slope of term count against N - eta.
    pub term_exponent_virtual: Option<f64>,
}

/// Resource estimates over `(N, eta)` sizes. Electrons are split as
/// `n_alpha = ceil(eta / 2)`, `n_beta = floor(eta / 2)`.
pub fn scaling_report(kind: AnsatzKind, k: usize, sizes: &[(usize, usize)]) -> Result<ScalingReport> {
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("no sizes given".into()));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &(n, eta) in sizes {
        let ansatz = build_ansatz(kind, n, eta.div_ceil(2), eta / 2, k)?;
        let schedule = schedule_layers(&ansatz);
        schedule.validate(&ansatz)?;
        let mut row = estimate_resources(&ansatz);
        row.layer_count = schedule.layer_count();
        rows.push(row);
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n_spin_orbitals as f64).collect();
    let virt: Vec<f64> = rows.iter().map(|r| (r.n_spin_orbitals - r.eta) as f64).collect();
    let terms: Vec<f64> = rows.iter().map(|r| r.term_count as f64).collect();
    let layers: Vec<f64> = rows.iter().map(|r| r.layer_count as f64).collect();
    Ok(ScalingReport {
        term_exponent: loglog_slope(&ns, &terms).ok(),
        layer_exponent: loglog_slope(&ns, &layers).ok(),
        term_exponent_virtual: loglog_slope(&virt, &terms).ok(),
        rows,
    })
}

pub const RESOURCE_CSV_HEADER: &str =
    "kind,k,N,eta,terms_singles,terms_doubles,terms_pair,term_count,layer_count";

impl ScalingReport {
    /// CSV rows followed by `#`-prefixed fitted exponents.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(RESOURCE_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.kind,
                r.k,
                r.n_spin_orbitals,
                r.eta,
                r.per_class.singles,
                r.per_class.doubles,
                r.per_class.pair_doubles,
                r.term_count,
                r.layer_count
            );
        }
        let fmt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| format!("{x:.6}"));
        let _ = writeln!(out, "# term_exponent_vs_N={}", fmt(self.term_exponent));
        let _ = writeln!(out, "# layer_exponent_vs_N={}", fmt(self.layer_exponent));
        let _ = writeln!(
            out,
            "# term_exponent_vs_N_minus_eta={}",
            fmt(self.term_exponent_virtual)
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_term_one_layer() {
        assert_eq!(schedule_terms(&[Excitation::Single { p: 0, q: 2 }]).len(), 1);
    }

    #[test]
    fn shared_orbital_forces_two_layers() {
        let terms = [Excitation::Single { p: 0, q: 2 }, Excitation::Single { p: 0, q: 4 }];
        assert_eq!(schedule_terms(&terms), vec![vec![0], vec![1]]);
    }

    #[test]
    fn pair_doubles_on_four_spatial_orbitals_take_three_layers() {
        let ansatz = build_ansatz(AnsatzKind::Kupccgsd, 8, 2, 2, 1).unwrap();
        let pairs: Vec<Excitation> = ansatz.blocks[0]
            .iter()
            .copied()
            .filter(|e| e.class() == ExcitationClass::PairDouble)
            .collect();
        assert_eq!(pairs.len(), 6);
        let layers = schedule_terms(&pairs);
        assert_eq!(layers.len(), 3);
        assert!(layers.iter().all(|l| l.len() == 2));
    }

    #[test]
    fn counts_for_eight_spin_orbitals() {
        let uccsd = build_ansatz(AnsatzKind::Uccsd, 8, 2, 2, 1).unwrap();
        assert_eq!(count_resources(&uccsd), ClassCounts { singles: 8, doubles: 18, pair_doubles: 0 });
        let uccgsd = build_ansatz(AnsatzKind::Uccgsd, 8, 2, 2, 1).unwrap();
        assert_eq!(count_resources(&uccgsd).total(), 162);
        let k2 = build_ansatz(AnsatzKind::Kupccgsd, 8, 2, 2, 2).unwrap();
        assert_eq!(count_resources(&k2), ClassCounts { singles: 24, doubles: 0, pair_doubles: 12 });
    }

    #[test]
    fn validation_catches_bad_schedules() {
        let ansatz = build_ansatz(AnsatzKind::Uccsd, 4, 1, 1, 1).unwrap();
        let good = schedule_layers(&ansatz);
        good.validate(&ansatz).unwrap();
        let mut missing = good.clone();
        missing.layers.pop();
        assert!(missing.validate(&ansatz).is_err());
        let all_in_one = Schedule {
            layers: vec![(0..ansatz.n_params).map(|index| TermRef { block: 0, index }).collect()],
            block_layers: vec![1],
        };
        assert!(all_in_one.validate(&ansatz).is_err());
    }

    #[test]
    fn csv_layout() {
        let report = scaling_report(AnsatzKind::Uccsd, 1, &[(8, 4)]).unwrap();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), RESOURCE_CSV_HEADER);
        let row = lines.next().unwrap();
        assert!(row.starts_with("uccsd,1,8,4,8,18,0,26,"));
        assert!(scaling_report(AnsatzKind::Uccsd, 1, &[]).is_err());
    }
}
