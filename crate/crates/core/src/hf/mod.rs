//! Hartree–Fock energies in the STO-3G basis.

pub mod basis;
pub mod boys;
pub mod integrals;
mod linalg;
pub mod scf;

pub use basis::{build_basis, BasisSet, Shell};
pub use integrals::{compute_integrals, EriStorage, IntegralSet};
pub use scf::{run_scf, scf_rhf, scf_uhf, Guess, ScfOptions, ScfResult, SpinTreatment};

use crate::molio::Molecule;

/// Name of the only basis set this engine implements.
pub const BASIS_NAME: &str = "STO-3G";

/// Ångström → Bohr. The only length conversion in the crate.
pub const BOHR_PER_ANGSTROM: f64 = 1.0 / 0.529_177_210_92;

pub fn to_bohr(p: [f64; 3]) -> [f64; 3] {
    [
        p[0] * BOHR_PER_ANGSTROM,
        p[1] * BOHR_PER_ANGSTROM,
        p[2] * BOHR_PER_ANGSTROM,
    ]
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HfError {
    #[error("unsupported element {0}")]
    UnsupportedElement(String),
    #[error("atoms {0} and {1} coincide")]
    CoincidentAtoms(usize, usize),
    #[error("{electrons} electrons cannot form a closed shell; use the unrestricted (UHF) solver")]
    OpenShell { electrons: u32 },
    #[error("multiplicity {multiplicity} inconsistent with {electrons} electrons")]
    SpinState { electrons: u32, multiplicity: u32 },
    #[error("basis set does not belong to this molecule")]
    BasisMismatch,
    #[error("overlap matrix is numerically singular")]
    SingularOverlap,
}

/// Σ_{A<B} Z_A Z_B / R_AB in Hartree.
pub fn nuclear_repulsion(m: &Molecule) -> Result<f64, HfError> {
    let atoms = m.atoms();
    let mut e = 0.0;
    for a in 0..atoms.len() {
        let pa = to_bohr(atoms[a].position);
        for b in (a + 1)..atoms.len() {
            let pb = to_bohr(atoms[b].position);
            let r = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2) + (pa[2] - pb[2]).powi(2)).sqrt();
            if r == 0.0 {
                return Err(HfError::CoincidentAtoms(a, b));
            }
            e += (atoms[a].element.atomic_number() * atoms[b].element.atomic_number()) as f64 / r;
        }
    }
    Ok(e)
}
