//! The bundled validation set: `ground_truth.csv` plus the SDF files it
//! points at.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::sdf::{parse_sdf, SdfError};
use super::Molecule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Peptide,
    AminoAcid,
    CorrectionSpecies,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Peptide => "peptide",
            Role::AminoAcid => "amino_acid",
            Role::CorrectionSpecies => "correction_species",
        })
    }
}

#[derive(Debug, Clone)]
pub struct DatasetEntry {
    pub label: String,
    pub role: Role,
    pub molecule: Molecule,
    /// Whole-molecule reference energy, Hartree.
    pub ground_truth_energy: Option<f64>,
    /// Residue codes (three-letter, upper case) N→C; one code for amino acids.
    pub sequence: Vec<String>,
    /// Published reassembled energy for this entry, when tabulated.
    pub reference_em: Option<f64>,
    pub reference_re_pct: Option<f64>,
    pub sdf_path: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("ground truth table: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Sdf {
        path: PathBuf,
        #[source]
        source: SdfError,
    },
    #[error("duplicate dataset label {0:?}")]
    DuplicateLabel(String),
}

#[derive(Debug, Deserialize)]
struct Row {
    label: String,
    role: Role,
    sdf: String,
    sequence: String,
    gt_ha: Option<f64>,
    reference_em_ha: Option<f64>,
    reference_re_pct: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct SpeciesRow {
    label: String,
    energy_ha: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    entries: Vec<DatasetEntry>,
    by_label: HashMap<String, usize>,
    species_energies: BTreeMap<String, f64>,
}

impl Dataset {
    /// Directory holding the fixtures shipped with the source tree, or
    /// `$PEPFRAG_DATA` when set.
    pub fn default_dir() -> PathBuf {
        match std::env::var_os("PEPFRAG_DATA") {
            Some(dir) => PathBuf::from(dir),
            None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"),
        }
    }

    pub fn load_default() -> Result<Dataset, DatasetError> {
        Dataset::load(Dataset::default_dir())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
        let dir = dir.as_ref();
        let csv_path = dir.join("ground_truth.csv");
        let file = std::fs::File::open(&csv_path).map_err(|source| DatasetError::Io {
            path: csv_path.clone(),
            source,
        })?;
        let mut reader = csv::Reader::from_reader(file);
        let mut out = Dataset::default();
        for row in reader.deserialize() {
            let row: Row = row?;
            let path = dir.join(&row.sdf);
            let raw = std::fs::read(&path).map_err(|source| DatasetError::Io {
                path: path.clone(),
                source,
            })?;
            let molecule = parse_sdf(&raw)
                .map_err(|source| DatasetError::Sdf {
                    path: path.clone(),
                    source,
                })?
                .with_name(row.label.clone());
            let sequence = row
                .sequence
                .split('-')
                .filter(|s| !s.is_empty())
                .map(|s| s.trim().to_ascii_uppercase())
                .collect();
            out.push(DatasetEntry {
                label: row.label,
                role: row.role,
                molecule,
                ground_truth_energy: row.gt_ha,
                sequence,
                reference_em: row.reference_em_ha,
                reference_re_pct: row.reference_re_pct,
                sdf_path: path,
            })?;
        }
        let species_path = dir.join("species_energies.csv");
        if species_path.exists() {
            let file = std::fs::File::open(&species_path).map_err(|source| DatasetError::Io {
                path: species_path.clone(),
                source,
            })?;
            for row in csv::Reader::from_reader(file).deserialize() {
                let row: SpeciesRow = row?;
                out.species_energies.insert(row.label, row.energy_ha);
            }
        }
        Ok(out)
    }

    /// Tabulated energy of a correction species (`species_energies.csv`),
    /// consistent with the amino-acid and peptide reference energies.
    pub fn species_energy(&self, label: &str) -> Option<f64> {
        self.species_energies.get(label).copied()
    }

    pub fn push(&mut self, entry: DatasetEntry) -> Result<(), DatasetError> {
        if self.by_label.contains_key(&entry.label) {
            return Err(DatasetError::DuplicateLabel(entry.label));
        }
        self.by_label.insert(entry.label.clone(), self.entries.len());
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[DatasetEntry] {
        &self.entries
    }

    pub fn get(&self, label: &str) -> Option<&DatasetEntry> {
        self.by_label.get(label).map(|&k| &self.entries[k])
    }

    pub fn with_role(&self, role: Role) -> impl Iterator<Item = &DatasetEntry> {
        self.entries.iter().filter(move |e| e.role == role)
    }

    /// Free amino acid by three-letter code.
    pub fn amino_acid(&self, code: &str) -> Option<&DatasetEntry> {
        self.with_role(Role::AminoAcid)
            .find(|e| e.sequence.len() == 1 && e.sequence[0].eq_ignore_ascii_case(code))
    }

    /// Correction species by formula-style label ("H2O", "H2", "CH3").
    pub fn species(&self, label: &str) -> Option<&DatasetEntry> {
        self.with_role(Role::CorrectionSpecies).find(|e| e.label == label)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
