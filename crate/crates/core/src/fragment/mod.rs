//! Cleavage-site detection and fragment plans.
//!
//! A [`FragmentPlan`] lists the fragments whose energies are summed and a
//! signed ledger of small molecules released or added when the source
//! molecule was formed from them.

mod amino_acid;
mod capping;
mod peptide;
mod residue;
mod sites;

pub use amino_acid::fragment_amino_acid;
pub use peptide::{fragment_peptide, EsterConvention, FragmentOptions, Strategy};
pub use residue::{identify_residue, Residue, ResidueLibrary, Template};
pub use sites::{detect_peptide_bonds, detect_special_links};

use serde::{Deserialize, Serialize};

use crate::molio::{Formula, Molecule, MoleculeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BondKind {
    BackboneAmide,
    Disulfide,
    EsterModification,
}

/// A bond that is cut during fragmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BondSite {
    pub kind: BondKind,
    /// The two bonded atoms, in orientation order.
    pub atoms: (usize, usize),
    /// Amide: (carbonyl C, amine N). Disulfide: (lower S, higher S).
    /// Ester: (ester O, methyl C).
    pub orientation: (usize, usize),
}

impl BondSite {
    pub(crate) fn new(kind: BondKind, first: usize, second: usize) -> Self {
        Self {
            kind,
            atoms: (first, second),
            orientation: (first, second),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    PeptideLevel,
    AminoAcidLevel,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::PeptideLevel => "peptide_level",
            Mode::AminoAcidLevel => "amino_acid_level",
        })
    }
}

/// Where a fragment's geometry comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Canonical free amino acid from the residue library.
    Library,
    /// Source atoms with caps placed on the cut bonds.
    Capped,
    /// Source atoms as cut, no caps (open-shell groups).
    Cut,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fragment {
    pub label: String,
    pub molecule: Molecule,
    /// Indices of the source atoms this fragment stands for.
    pub source_atoms: Vec<usize>,
    pub origin: Origin,
}

impl Fragment {
    pub fn formula(&self) -> Formula {
        self.molecule.formula()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectionTerm {
    pub label: String,
    pub species: Molecule,
    /// +1: the species was added when forming the source, so its energy is
    /// added. −1: it was released, so its energy is subtracted.
    pub sign: i8,
    pub count: u32,
    /// Sites that produced this term.
    pub sites: Vec<BondSite>,
}

impl CorrectionTerm {
    pub fn signed_formula(&self) -> Formula {
        &self.species.formula() * (self.sign as i64 * self.count as i64)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FragmentPlan {
    pub source: String,
    pub source_formula: Formula,
    pub mode: Mode,
    pub fragments: Vec<Fragment>,
    pub corrections: Vec<CorrectionTerm>,
    pub sites: Vec<BondSite>,
    /// Atoms the ledger knowingly leaves unbalanced (source minus fragments
    /// minus signed corrections). Empty for a balanced plan.
    pub declared_residual: Formula,
    /// The plan rests on a convention with no unique chemical answer.
    pub convention_dependent: bool,
    pub notes: Vec<String>,
}

impl FragmentPlan {
    /// source − Σ fragments − Σ signed corrections, element-wise.
    pub fn residual(&self) -> Formula {
        let mut r = self.source_formula.clone();
        for f in &self.fragments {
            r = r - &f.formula();
        }
        for c in &self.corrections {
            r = r - &c.signed_formula();
        }
        r
    }

    /// Exact atom bookkeeping with no declared residual.
    pub fn is_balanced(&self) -> bool {
        self.residual().total_abs() == 0
    }

    /// Total count of a correction species (by label) with a given sign.
    pub fn correction_count(&self, label: &str, sign: i8) -> u32 {
        self.corrections
            .iter()
            .filter(|c| c.label == label && c.sign == sign)
            .map(|c| c.count)
            .sum()
    }

    pub fn fragment_labels(&self) -> Vec<&str> {
        self.fragments.iter().map(|f| f.label.as_str()).collect()
    }

    pub(crate) fn check_bookkeeping(&self) -> Result<(), FragmentError> {
        let residual = self.residual();
        if residual != self.declared_residual {
            return Err(FragmentError::Bookkeeping {
                molecule: self.source.clone(),
                residual: residual.to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FragmentError {
    #[error("{0}: no peptide bonds or special links to cut")]
    NoCleavageSites(String),
    #[error("{source_name}: fragment with formula {formula} matches no residue template")]
    UnknownResidue { source_name: String, formula: String },
    #[error("{0}: cyclic backbone; only linear peptides can be fragmented")]
    Cyclic(String),
    #[error("{0}: residues are branched along the backbone")]
    Branched(String),
    #[error("{0}: not a free amino acid")]
    NotAminoAcid(String),
    #[error("correction species {0} is not in the library")]
    MissingSpecies(String),
    #[error("{molecule}: atom bookkeeping off by {residual}")]
    Bookkeeping { molecule: String, residual: String },
    #[error(transparent)]
    Molecule(#[from] MoleculeError),
}
