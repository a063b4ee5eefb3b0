use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::fragment::{fragment_peptide, FragmentOptions, ResidueLibrary};
use crate::metrics::{ErrorReport, ErrorRow};
use crate::molio::{Dataset, Role};
use crate::reassembly::{reassemble, EnergyTable, LevelOfTheory};

use super::run::PipelineError;

pub const GOLDEN_FILES: [&str; 2] = ["peptide_level_arithmetic.csv", "amino_acid_level_reference.csv"];

fn reference_err(msg: impl fmt::Display) -> PipelineError {
    PipelineError::Reference(msg.to_string())
}

/// Reports computed from tabulated energies only (no SCF):
/// every peptide reassembled from its amino acids' reference energies and
/// the tabulated species energies, and every amino acid's tabulated
/// reassembled energy against its reference.
pub fn reference_reports(dataset: &Dataset) -> Result<BTreeMap<&'static str, ErrorReport>, PipelineError> {
    let library = ResidueLibrary::from_dataset(dataset);
    let mut table = EnergyTable::new(LevelOfTheory::default());
    for t in library.templates() {
        let e = dataset
            .amino_acid(&t.code)
            .and_then(|e| e.ground_truth_energy)
            .ok_or_else(|| reference_err(format!("no reference energy for {}", t.code)))?;
        table.insert_fixture(&t.code, &t.molecule, e).map_err(reference_err)?;
    }
    for label in ["H2O", "H2", "CH3", "H"] {
        if let (Some(m), Some(e)) = (library.species(label), dataset.species_energy(label)) {
            table.insert_fixture(label, m, e).map_err(reference_err)?;
        }
    }

    let mut peptide_rows = Vec::new();
    for e in dataset.with_role(Role::Peptide) {
        let plan = fragment_peptide(&e.molecule, &library, FragmentOptions::default()).map_err(reference_err)?;
        let r = reassemble(&plan, &table).map_err(reference_err)?;
        let gt = e.ground_truth_energy.ok_or_else(|| reference_err(format!("{}: no reference energy", e.label)))?;
        peptide_rows.push(ErrorRow::new(e.label.clone(), gt, r.em).map_err(reference_err)?);
    }
    let mut aa_rows = Vec::new();
    for e in dataset.with_role(Role::AminoAcid) {
        if let (Some(gt), Some(em)) = (e.ground_truth_energy, e.reference_em) {
            aa_rows.push(ErrorRow::new(e.label.clone(), gt, em).map_err(reference_err)?);
        }
    }
    Ok(BTreeMap::from([
        (GOLDEN_FILES[0], ErrorReport::new(peptide_rows)),
        (GOLDEN_FILES[1], ErrorReport::new(aa_rows)),
    ]))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenDiff {
    pub file: String,
    /// 1-based line number.
    pub line: usize,
    pub expected: Option<String>,
    pub actual: Option<String>,
}

impl fmt::Display for GoldenDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |s: &Option<String>| s.clone().unwrap_or_else(|| "<none>".into());
        write!(
            f,
            "{}:{}: expected {} got {}",
            self.file,
            self.line,
            show(&self.expected),
            show(&self.actual)
        )
    }
}

/// Line-by-line comparison of fresh reference reports with the files in
/// `golden_dir`. Empty when everything matches.
pub fn diff_golden(dataset: &Dataset, golden_dir: &Path) -> Result<Vec<GoldenDiff>, PipelineError> {
    let mut diffs = Vec::new();
    for (file, report) in reference_reports(dataset)? {
        let actual = report.to_csv_string();
        let path = golden_dir.join(file);
        let expected = match std::fs::read_to_string(&path) {
            Ok(s) => s,
            Err(e) => {
                diffs.push(GoldenDiff {
                    file: file.to_string(),
                    line: 0,
                    expected: Some(format!("readable golden file ({e})")),
                    actual: None,
                });
                continue;
            }
        };
        let (a, b): (Vec<&str>, Vec<&str>) = (expected.lines().collect(), actual.lines().collect());
        for k in 0..a.len().max(b.len()) {
            let (x, y) = (a.get(k), b.get(k));
            if x != y {
                diffs.push(GoldenDiff {
                    file: file.to_string(),
                    line: k + 1,
                    expected: x.map(|s| s.to_string()),
                    actual: y.map(|s| s.to_string()),
                });
            }
        }
    }
    Ok(diffs)
}
