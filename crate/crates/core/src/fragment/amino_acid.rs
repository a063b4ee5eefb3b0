use crate::molio::{Element, Formula, Molecule};

use super::sites::Graph;
use super::{Fragment, FragmentError, FragmentPlan, Mode, Origin};

fn carboxyl_carbon(g: &Graph, c: usize) -> bool {
    g.is_carbonyl(c)
        && g.neighbors_of(c, Element::O).any(|o| g.adj[o].len() == 1 + g.hydrogen_count(o) && g.hydrogen_count(o) == 1)
}

/// Splits a free amino acid at its α-carbon into the amine, carboxyl, CH and
/// side-chain groups. Pieces keep source coordinates and take the lowest
/// multiplicity for their electron count; no corrections are recorded.
///
/// For glycine the side chain is the higher-index α-hydrogen. For proline
/// the ring closes the amine onto the side chain, so cutting leaves one
/// NH–(CH2)3 piece and three fragments in total; that plan is flagged as
/// convention-dependent.
pub fn fragment_amino_acid(m: &Molecule) -> Result<FragmentPlan, FragmentError> {
    let g = Graph::new(m);
    let not_aa = || FragmentError::NotAminoAcid(m.name().to_string());
    let candidates: Vec<usize> = (0..m.len())
        .filter(|&c| g.element(c) == Element::C)
        .filter(|&c| g.neighbors_of(c, Element::N).count() == 1)
        .filter(|&c| {
            let n = g.neighbors_of(c, Element::N).next().unwrap();
            !g.adj[n].iter().any(|&x| g.is_carbonyl(x))
        })
        .filter(|&c| g.adj[c].iter().filter(|&&x| carboxyl_carbon(&g, x)).count() == 1)
        .filter(|&c| g.hydrogen_count(c) >= 1)
        .collect();
    let &[ca] = candidates.as_slice() else { return Err(not_aa()) };
    let n = g.neighbors_of(ca, Element::N).next().unwrap();
    let cooh = g.adj[ca].iter().copied().find(|&x| carboxyl_carbon(&g, x)).unwrap();
    let heavy: Vec<usize> = g.adj[ca]
        .iter()
        .copied()
        .filter(|&x| x != n && x != cooh && g.element(x) != Element::H)
        .collect();
    let r = match heavy.as_slice() {
        [r] => *r,
        [] => g.neighbors_of(ca, Element::H).max().ok_or_else(not_aa)?,
        _ => return Err(not_aa()),
    };

    let comps = m.components_without(&[(ca, n), (ca, cooh), (ca, r)]);
    let comp = |atom: usize| comps.iter().find(|c| c.contains(&atom)).unwrap().clone();
    let (n_comp, cooh_comp, ch_comp, r_comp) = (comp(n), comp(cooh), comp(ca), comp(r));
    let ring = n_comp == r_comp;

    let mut pieces: Vec<(String, Vec<usize>)> = Vec::with_capacity(4);
    if ring {
        pieces.push(("NH(CH2)3".to_string(), n_comp));
    } else {
        pieces.push(("NH2".to_string(), n_comp));
    }
    pieces.push(("COOH".to_string(), cooh_comp));
    pieces.push(("CH".to_string(), ch_comp));
    if !ring {
        let label = m.subgraph("", &r_comp)?.formula().to_string();
        pieces.push((label, r_comp));
    }

    let mut fragments = Vec::with_capacity(pieces.len());
    for (label, atoms) in pieces {
        let molecule = m.subgraph(format!("{} {label}", m.name()), &atoms)?;
        fragments.push(Fragment {
            label,
            molecule,
            source_atoms: atoms,
            origin: Origin::Cut,
        });
    }
    let notes = if ring {
        vec!["ring amine: amine and side chain form a single fragment".to_string()]
    } else {
        Vec::new()
    };
    let plan = FragmentPlan {
        source: m.name().to_string(),
        source_formula: m.formula(),
        mode: Mode::AminoAcidLevel,
        fragments,
        corrections: Vec::new(),
        sites: Vec::new(),
        declared_residual: Formula::default(),
        convention_dependent: ring,
        notes,
    };
    plan.check_bookkeeping()?;
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molio::{Dataset, Role};

    fn aa(code: &str) -> Molecule {
        Dataset::load_default().unwrap().amino_acid(code).unwrap().molecule.clone()
    }

    #[test]
    fn glycine_groups() {
        let p = fragment_amino_acid(&aa("GLY")).unwrap();
        assert_eq!(p.fragment_labels(), ["NH2", "COOH", "CH", "H"]);
        let mult: Vec<u32> = p.fragments.iter().map(|f| f.molecule.multiplicity()).collect();
        assert_eq!(mult, [2, 2, 2, 2]);
        assert!(p.corrections.is_empty());
        assert!(p.is_balanced());
    }

    #[test]
    fn alanine_side_chain_is_methyl() {
        let p = fragment_amino_acid(&aa("ALA")).unwrap();
        assert_eq!(p.fragment_labels(), ["NH2", "COOH", "CH", "CH3"]);
    }

    #[test]
    fn proline_ring_piece() {
        let p = fragment_amino_acid(&aa("PRO")).unwrap();
        assert_eq!(p.fragment_labels(), ["NH(CH2)3", "COOH", "CH"]);
        assert_eq!(p.fragments[0].formula().to_string(), "C3H7N");
        assert!(p.convention_dependent);
        assert!(p.is_balanced());
    }

    #[test]
    fn all_amino_acids_split() {
        let d = Dataset::load_default().unwrap();
        for e in d.with_role(Role::AminoAcid) {
            let p = fragment_amino_acid(&e.molecule).unwrap();
            let expected = if e.sequence[0] == "PRO" { 3 } else { 4 };
            assert_eq!(p.fragments.len(), expected, "{}", e.label);
            assert!(p.is_balanced(), "{}", e.label);
            for f in &p.fragments {
                let odd = f.molecule.electron_count() % 2 == 1;
                assert_eq!(f.molecule.multiplicity(), if odd { 2 } else { 1 });
            }
        }
    }

    #[test]
    fn peptide_and_species_rejected() {
        let d = Dataset::load_default().unwrap();
        let gg = &d.get("Gly-Gly").unwrap().molecule;
        assert!(matches!(fragment_amino_acid(gg), Err(FragmentError::NotAminoAcid(_))));
        let w = &d.species("H2O").unwrap().molecule;
        assert!(matches!(fragment_amino_acid(w), Err(FragmentError::NotAminoAcid(_))));
    }
}
