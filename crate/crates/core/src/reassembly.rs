//! Energy bookkeeping and reassembly of a fragment plan:
//! `Em = Σ E(fragment) + Σ sign · count · E(species)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fragment::{CorrectionTerm, FragmentPlan, Mode};
use crate::hf::{run_scf, to_bohr, HfError, ScfOptions, ScfResult, SpinTreatment, BASIS_NAME};
use crate::molio::{Formula, Molecule};

/// Method and basis that an energy was (or would be) computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LevelOfTheory {
    pub spin: SpinTreatment,
}

impl LevelOfTheory {
    pub fn basis(&self) -> &'static str {
        BASIS_NAME
    }

    pub fn method_for(&self, m: &Molecule) -> &'static str {
        self.spin.method_for(m)
    }
}

/// Exact identity of an energy calculation: basis, method, charge,
/// multiplicity and every atom position (Bohr, six decimals).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fingerprint {
    pub hash: String,
    pub canonical: String,
}

fn coord(x: f64) -> String {
    let s = format!("{x:.6}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

impl Fingerprint {
    pub fn new(m: &Molecule, level: &LevelOfTheory) -> Self {
        let mut canonical = format!(
            "basis={};method={};charge={};multiplicity={};atoms=",
            level.basis(),
            level.method_for(m),
            m.net_charge(),
            m.multiplicity()
        );
        for (k, a) in m.atoms().iter().enumerate() {
            let p = to_bohr(a.position);
            if k > 0 {
                canonical.push('|');
            }
            canonical.push_str(&format!("{}:{},{},{}", a.element, coord(p[0]), coord(p[1]), coord(p[2])));
        }
        let hash = hex::encode(Sha256::digest(canonical.as_bytes()));
        Self { hash, canonical }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EnergyKey {
    pub label: String,
    pub fingerprint: Fingerprint,
}

impl EnergyKey {
    pub fn new(label: impl Into<String>, fingerprint: Fingerprint) -> Self {
        Self {
            label: label.into(),
            fingerprint,
        }
    }
}

impl fmt::Display for EnergyKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.label, &self.fingerprint.hash[..12])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Computed,
    Fixture,
    Cache,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    /// Hartree.
    pub energy: f64,
    pub converged: bool,
    pub provenance: Provenance,
    pub method: String,
    pub iterations: Option<usize>,
}

impl EnergyRecord {
    pub fn fixture(energy: f64, method: &str) -> Self {
        Self {
            energy,
            converged: true,
            provenance: Provenance::Fixture,
            method: method.to_string(),
            iterations: None,
        }
    }

    pub fn from_scf(r: &ScfResult) -> Self {
        Self {
            energy: r.total_energy,
            converged: r.converged,
            provenance: Provenance::Computed,
            method: r.method.clone(),
            iterations: Some(r.iterations),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReassemblyError {
    #[error("no energy for {0}")]
    Missing(EnergyKey),
    #[error("energy for {0} comes from an unconverged SCF")]
    Unconverged(EnergyKey),
    #[error("{key} already maps to {existing} Ha; refusing {new} Ha")]
    Conflict { key: EnergyKey, existing: f64, new: f64 },
    #[error("energy calculation for {label} failed: {source}")]
    Engine {
        label: String,
        #[source]
        source: HfError,
    },
}

/// Energies keyed by label and calculation fingerprint.
#[derive(Debug, Clone, Default)]
pub struct EnergyTable {
    level: LevelOfTheory,
    records: BTreeMap<EnergyKey, EnergyRecord>,
}

impl EnergyTable {
    pub fn new(level: LevelOfTheory) -> Self {
        Self { level, records: BTreeMap::new() }
    }

    pub fn level(&self) -> &LevelOfTheory {
        &self.level
    }

    pub fn key(&self, label: &str, m: &Molecule) -> EnergyKey {
        EnergyKey {
            label: label.to_string(),
            fingerprint: Fingerprint::new(m, &self.level),
        }
    }

    /// Stores a record. Re-inserting the same energy is a no-op; a different
    /// energy for an existing key is an error.
    pub fn insert(&mut self, key: EnergyKey, record: EnergyRecord) -> Result<(), ReassemblyError> {
        if let Some(old) = self.records.get(&key) {
            if old.energy.to_bits() != record.energy.to_bits() {
                return Err(ReassemblyError::Conflict {
                    key,
                    existing: old.energy,
                    new: record.energy,
                });
            }
            return Ok(());
        }
        self.records.insert(key, record);
        Ok(())
    }

    /// Convenience for tabulated energies.
    pub fn insert_fixture(&mut self, label: &str, m: &Molecule, energy: f64) -> Result<(), ReassemblyError> {
        let method = self.level.method_for(m);
        self.insert(self.key(label, m), EnergyRecord::fixture(energy, method))
    }

    pub fn get(&self, key: &EnergyKey) -> Option<&EnergyRecord> {
        self.records.get(key)
    }

    pub fn lookup(&self, label: &str, m: &Molecule) -> Option<&EnergyRecord> {
        self.records.get(&self.key(label, m))
    }

    /// Converged energy or the matching error.
    pub fn energy(&self, label: &str, m: &Molecule) -> Result<f64, ReassemblyError> {
        let key = self.key(label, m);
        match self.records.get(&key) {
            None => Err(ReassemblyError::Missing(key)),
            Some(r) if !r.converged => Err(ReassemblyError::Unconverged(key)),
            Some(r) => Ok(r.energy),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EnergyKey, &EnergyRecord)> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContributionKind {
    Fragment,
    Correction,
}

/// One signed summand of Em.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub kind: ContributionKind,
    pub label: String,
    /// Position in the plan's fragment or correction list.
    pub index: usize,
    pub energy: f64,
    pub sign: i8,
    pub count: u32,
    /// sign · count · energy.
    pub value: f64,
    pub fingerprint: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReassemblyResult {
    pub source: String,
    pub mode: Mode,
    /// Reassembled energy, Hartree.
    pub em: f64,
    pub fragments: Vec<Contribution>,
    pub corrections: Vec<Contribution>,
    pub declared_residual: Formula,
    pub convention_dependent: bool,
}

impl ReassemblyResult {
    /// All summands in the order they were added.
    pub fn summation_order(&self) -> Vec<&Contribution> {
        let mut all: Vec<&Contribution> = self.fragments.iter().chain(&self.corrections).collect();
        all.sort_by(|a, b| a.label.cmp(&b.label).then(a.value.total_cmp(&b.value)));
        all
    }
}

/// Evaluates the plan against the table. Summands are added in (label,
/// value) order, so the result does not depend on fragment order.
pub fn reassemble(plan: &FragmentPlan, table: &EnergyTable) -> Result<ReassemblyResult, ReassemblyError> {
    let mut fragments = Vec::with_capacity(plan.fragments.len());
    for (index, f) in plan.fragments.iter().enumerate() {
        let energy = table.energy(&f.label, &f.molecule)?;
        fragments.push(Contribution {
            kind: ContributionKind::Fragment,
            label: f.label.clone(),
            index,
            energy,
            sign: 1,
            count: 1,
            value: energy,
            fingerprint: table.key(&f.label, &f.molecule).fingerprint.hash,
        });
    }
    let mut corrections = Vec::with_capacity(plan.corrections.len());
    for (index, c) in plan.corrections.iter().enumerate() {
        let energy = table.energy(&c.label, &c.species)?;
        corrections.push(Contribution {
            kind: ContributionKind::Correction,
            label: c.label.clone(),
            index,
            energy,
            sign: c.sign,
            count: c.count,
            value: c.sign as f64 * c.count as f64 * energy,
            fingerprint: table.key(&c.label, &c.species).fingerprint.hash,
        });
    }
    let mut result = ReassemblyResult {
        source: plan.source.clone(),
        mode: plan.mode,
        em: 0.0,
        fragments,
        corrections,
        declared_residual: plan.declared_residual.clone(),
        convention_dependent: plan.convention_dependent,
    };
    result.em = result.summation_order().iter().map(|c| c.value).sum();
    Ok(result)
}

/// Something that can produce an energy for a molecule.
pub trait EnergyEngine: Sync {
    fn level(&self) -> LevelOfTheory;
    fn compute(&self, label: &str, m: &Molecule) -> Result<ScfResult, ReassemblyError>;
}

/// The built-in Hartree–Fock solver.
#[derive(Debug, Clone, Default)]
pub struct HfEngine {
    pub spin: SpinTreatment,
    pub options: ScfOptions,
}

impl EnergyEngine for HfEngine {
    fn level(&self) -> LevelOfTheory {
        LevelOfTheory { spin: self.spin }
    }

    fn compute(&self, label: &str, m: &Molecule) -> Result<ScfResult, ReassemblyError> {
        run_scf(m, self.spin, &self.options).map_err(|source| ReassemblyError::Engine {
            label: label.to_string(),
            source,
        })
    }
}

/// Table hit or a fresh calculation, which is stored before returning.
pub fn resolve_energy(
    label: &str,
    m: &Molecule,
    engine: &dyn EnergyEngine,
    table: &mut EnergyTable,
) -> Result<f64, ReassemblyError> {
    let key = table.key(label, m);
    if table.get(&key).is_none() {
        let r = engine.compute(label, m)?;
        table.insert(key, EnergyRecord::from_scf(&r))?;
    }
    table.energy(label, m)
}

pub fn resolve_correction_energy(
    term: &CorrectionTerm,
    engine: &dyn EnergyEngine,
    table: &mut EnergyTable,
) -> Result<f64, ReassemblyError> {
    resolve_energy(&term.label, &term.species, engine, table)
}
