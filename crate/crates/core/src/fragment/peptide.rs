use serde::{Deserialize, Serialize};

use crate::molio::{Element, Formula, Molecule};

use super::capping::{capped, Cap, NH_LENGTH, OH_LENGTH, SH_LENGTH};
use super::residue::{identify_residue, Residue, ResidueLibrary};
use super::sites::{detect_peptide_bonds, detect_special_links, Graph};
use super::{BondKind, BondSite, CorrectionTerm, Fragment, FragmentError, FragmentPlan, Mode, Origin};

/// How residue fragments get their geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Replace each residue by the library's free amino acid.
    #[default]
    Library,
    /// Keep source coordinates and cap the cut bonds (H on N, OH on the
    /// carbonyl C, H on S and on ester O).
    Capping,
}

/// Ledger for a methyl ester on a backbone carboxyl.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EsterConvention {
    /// One (+1, CH3) term per ester. Leaves one surplus H per ester in the
    /// atom balance, which the plan declares.
    #[default]
    AddMethyl,
    /// (+1, CH3) and (−1, H) per ester; balances exactly.
    MethylForHydrogen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FragmentOptions {
    pub strategy: Strategy,
    pub ester_convention: EsterConvention,
}

fn correction(
    library: &ResidueLibrary,
    label: &str,
    sign: i8,
    sites: Vec<BondSite>,
) -> Result<Option<CorrectionTerm>, FragmentError> {
    if sites.is_empty() {
        return Ok(None);
    }
    let species = library
        .species(label)
        .ok_or_else(|| FragmentError::MissingSpecies(label.to_string()))?
        .clone();
    Ok(Some(CorrectionTerm {
        label: label.to_string(),
        species,
        sign,
        count: sites.len() as u32,
        sites,
    }))
}

/// Splits a peptide at its backbone amides and special links.
///
/// Residues are ordered chain by chain (chains by the lowest atom index of
/// their N-terminal residue), N→C within a chain.
pub fn fragment_peptide(
    m: &Molecule,
    library: &ResidueLibrary,
    options: FragmentOptions,
) -> Result<FragmentPlan, FragmentError> {
    let amides = detect_peptide_bonds(m);
    let links = detect_special_links(m);
    if amides.is_empty() && links.is_empty() {
        return Err(FragmentError::NoCleavageSites(m.name().to_string()));
    }
    let g = Graph::new(m);
    let sites: Vec<BondSite> = amides.iter().chain(&links).copied().collect();
    let cuts: Vec<(usize, usize)> = sites.iter().map(|s| s.atoms).collect();
    let comps = m.components_without(&cuts);
    let mut comp_of = vec![0; m.len()];
    for (k, c) in comps.iter().enumerate() {
        for &a in c {
            comp_of[a] = k;
        }
    }

    let mut is_methyl = vec![false; comps.len()];
    let mut caps: Vec<Vec<Cap>> = vec![Vec::new(); comps.len()];
    let mut next = vec![None; comps.len()];
    let mut prev = vec![None; comps.len()];
    for s in &sites {
        let (a, b) = s.orientation;
        match s.kind {
            BondKind::BackboneAmide => {
                let n_alpha = g.amide_n_alpha(a, b).expect("amide site without α-carbon");
                caps[comp_of[b]].push(Cap::Hydrogen { atom: b, toward: a, length: NH_LENGTH });
                caps[comp_of[a]].push(Cap::Hydroxyl { atom: a, toward: b, h_from: b, h_to: n_alpha });
                let (ca, cb) = (comp_of[a], comp_of[b]);
                if ca == cb {
                    return Err(FragmentError::Cyclic(m.name().to_string()));
                }
                if next[ca].replace(cb).is_some() || prev[cb].replace(ca).is_some() {
                    return Err(FragmentError::Branched(m.name().to_string()));
                }
            }
            BondKind::Disulfide => {
                caps[comp_of[a]].push(Cap::Hydrogen { atom: a, toward: b, length: SH_LENGTH });
                caps[comp_of[b]].push(Cap::Hydrogen { atom: b, toward: a, length: SH_LENGTH });
            }
            BondKind::EsterModification => {
                caps[comp_of[a]].push(Cap::Hydrogen { atom: a, toward: b, length: OH_LENGTH });
                is_methyl[comp_of[b]] = true;
            }
        }
    }
    for (k, c) in comps.iter().enumerate() {
        if is_methyl[k] && (c.len() != 4 || c.iter().filter(|&&a| g.element(a) == Element::H).count() != 3) {
            return Err(FragmentError::UnknownResidue {
                source_name: m.name().to_string(),
                formula: m.subgraph("", c)?.formula().to_string(),
            });
        }
    }

    let residues: Vec<usize> = (0..comps.len()).filter(|&k| !is_methyl[k]).collect();
    let mut order = Vec::with_capacity(residues.len());
    let mut starts: Vec<usize> = residues.iter().copied().filter(|&k| prev[k].is_none()).collect();
    starts.sort_by_key(|&k| comps[k][0]);
    for s in starts {
        let mut k = Some(s);
        while let Some(c) = k {
            order.push(c);
            k = next[c];
        }
    }
    if order.len() != residues.len() {
        return Err(FragmentError::Cyclic(m.name().to_string()));
    }

    let mut fragments = Vec::with_capacity(order.len());
    for &k in &order {
        let piece = capped(m, m.name(), &comps[k], &caps[k])?;
        let code = match identify_residue(&piece, library) {
            Residue::Known(code) => code,
            Residue::Unknown(formula) => {
                return Err(FragmentError::UnknownResidue {
                    source_name: m.name().to_string(),
                    formula: formula.to_string(),
                })
            }
        };
        let (molecule, origin) = match options.strategy {
            Strategy::Library => {
                let t = library.template(&code).expect("identified template exists");
                (t.molecule.clone(), Origin::Library)
            }
            Strategy::Capping => (piece.with_name(format!("{code} capped from {}", m.name())), Origin::Capped),
        };
        fragments.push(Fragment {
            label: code,
            molecule,
            source_atoms: comps[k].clone(),
            origin,
        });
    }

    let by_kind = |kind: BondKind| -> Vec<BondSite> { sites.iter().copied().filter(|s| s.kind == kind).collect() };
    let esters = by_kind(BondKind::EsterModification);
    let mut corrections = Vec::new();
    corrections.extend(correction(library, "H2O", -1, by_kind(BondKind::BackboneAmide))?);
    corrections.extend(correction(library, "H2", -1, by_kind(BondKind::Disulfide))?);
    corrections.extend(correction(library, "CH3", 1, esters.clone())?);
    let mut declared_residual = Formula::default();
    let mut notes = Vec::new();
    if !esters.is_empty() {
        match options.ester_convention {
            EsterConvention::AddMethyl => {
                declared_residual.add_atom(Element::H, -(esters.len() as i64));
                notes.push(
                    "methyl ester counted as +CH3 only; one H per ester is left unbalanced".to_string(),
                );
            }
            EsterConvention::MethylForHydrogen => {
                corrections.extend(correction(library, "H", -1, esters.clone())?);
            }
        }
    }

    let plan = FragmentPlan {
        source: m.name().to_string(),
        source_formula: m.formula(),
        mode: Mode::PeptideLevel,
        fragments,
        corrections,
        sites,
        declared_residual,
        convention_dependent: !esters.is_empty(),
        notes,
    };
    plan.check_bookkeeping()?;
    Ok(plan)
}
