//! Molecule model, SDF I/O, the bundled dataset and the PubChem client.

pub mod dataset;
pub mod element;
pub mod molecule;
pub mod pubchem;
pub mod sdf;

pub use dataset::{Dataset, DatasetEntry, DatasetError, Role};
pub use element::{Element, UnknownElement};
pub use molecule::{Atom, Bond, Formula, Molecule, MoleculeError};
pub use pubchem::{FetchError, FetchedSdf, Identifier, PubChemClient, RecordType, Transport};
pub use sdf::{parse_sdf, parse_sdf_all, parse_sdf_record, write_sdf, SdfError, SdfRecord};
