use crate::molio::{Element, Molecule};

use super::{BondKind, BondSite};

pub(crate) struct Graph<'a> {
    pub m: &'a Molecule,
    pub adj: Vec<Vec<usize>>,
}

impl<'a> Graph<'a> {
    pub fn new(m: &'a Molecule) -> Self {
        Self { m, adj: m.adjacency() }
    }

    pub fn element(&self, a: usize) -> Element {
        self.m.atoms()[a].element
    }

    pub fn neighbors_of(&self, a: usize, e: Element) -> impl Iterator<Item = usize> + '_ {
        self.adj[a].iter().copied().filter(move |&b| self.element(b) == e)
    }

    pub fn hydrogen_count(&self, a: usize) -> usize {
        self.neighbors_of(a, Element::H).count()
    }

    fn order(&self, a: usize, b: usize) -> u8 {
        self.m.bond_between(a, b).map_or(0, |bd| bd.order)
    }

    /// Carbon carrying a doubly bonded oxygen.
    pub fn is_carbonyl(&self, c: usize) -> bool {
        self.element(c) == Element::C
            && self.neighbors_of(c, Element::O).any(|o| self.order(c, o) == 2)
    }

    /// Carbonyl carbon whose α-carbon bonds a nitrogen.
    pub fn is_backbone_carbonyl(&self, c: usize) -> bool {
        self.is_carbonyl(c)
            && self
                .neighbors_of(c, Element::C)
                .any(|ca| self.neighbors_of(ca, Element::N).next().is_some())
    }

    /// The α-carbon on the amine side of a C(=O)–N bond: a carbon bonded to
    /// `n` that itself bonds another carbonyl carbon.
    pub fn amide_n_alpha(&self, c: usize, n: usize) -> Option<usize> {
        self.neighbors_of(n, Element::C)
            .filter(|&ca| ca != c)
            .find(|&ca| self.adj[ca].iter().any(|&x| x != c && self.is_carbonyl(x)))
    }

    /// True when `a` and `b` (bonded) lie on a common 5-membered ring.
    pub fn share_five_ring(&self, a: usize, b: usize) -> bool {
        // simple paths b → … → a of exactly four bonds avoiding the a–b edge
        fn walk(g: &Graph, path: &mut Vec<usize>, target: usize) -> bool {
            let last = *path.last().unwrap();
            if path.len() == 5 {
                return last == target;
            }
            for &n in &g.adj[last] {
                if path.len() == 1 && n == target {
                    continue;
                }
                if n != target && path.contains(&n) {
                    continue;
                }
                if n == target && path.len() != 4 {
                    continue;
                }
                path.push(n);
                if walk(g, path, target) {
                    return true;
                }
                path.pop();
            }
            false
        }
        walk(self, &mut vec![b], a)
    }
}

/// Every backbone amide C–N bond, ordered by carbonyl atom index.
/// Orientation is (carbonyl C, amide N).
pub fn detect_peptide_bonds(m: &Molecule) -> Vec<BondSite> {
    let g = Graph::new(m);
    let mut out = Vec::new();
    for c in 0..m.len() {
        if !g.is_carbonyl(c) {
            continue;
        }
        let c_alpha_ok = g
            .neighbors_of(c, Element::C)
            .any(|ca| g.neighbors_of(ca, Element::N).next().is_some());
        if !c_alpha_ok {
            continue;
        }
        for n in g.neighbors_of(c, Element::N) {
            let Some(ca) = g.amide_n_alpha(c, n) else { continue };
            if g.hydrogen_count(n) >= 1 || g.share_five_ring(n, ca) {
                out.push(BondSite::new(BondKind::BackboneAmide, c, n));
            }
        }
    }
    out
}

/// S–S bonds and methyl esters on backbone carboxyls.
///
/// Disulfide orientation is (lower S, higher S); ester orientation is
/// (ester O, methyl C).
pub fn detect_special_links(m: &Molecule) -> Vec<BondSite> {
    let g = Graph::new(m);
    let mut out = Vec::new();
    for b in m.bonds() {
        if g.element(b.i) == Element::S && g.element(b.j) == Element::S {
            out.push(BondSite::new(BondKind::Disulfide, b.i.min(b.j), b.i.max(b.j)));
        }
    }
    for o in 0..m.len() {
        if g.element(o) != Element::O || g.adj[o].len() != 2 {
            continue;
        }
        let methyl = g.adj[o].iter().copied().find(|&c| {
            g.element(c) == Element::C && g.adj[c].len() == 4 && g.hydrogen_count(c) == 3
        });
        let Some(me) = methyl else { continue };
        let other = g.adj[o].iter().copied().find(|&x| x != me).unwrap();
        if g.is_backbone_carbonyl(other) {
            out.push(BondSite::new(BondKind::EsterModification, o, me));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molio::Dataset;

    fn fixture(label: &str) -> Molecule {
        Dataset::load_default().unwrap().get(label).unwrap().molecule.clone()
    }

    #[test]
    fn peptide_bond_counts() {
        let d = Dataset::load_default().unwrap();
        for e in d.entries() {
            let chains = 1 + detect_special_links(&e.molecule)
                .iter()
                .filter(|s| s.kind == BondKind::Disulfide)
                .count();
            let expected = e.sequence.len().saturating_sub(chains);
            let n = detect_peptide_bonds(&e.molecule).len();
            match e.role {
                crate::molio::Role::Peptide => assert_eq!(n, expected, "{}", e.label),
                _ => assert_eq!(n, 0, "{}", e.label),
            }
        }
    }

    #[test]
    fn amide_orientation() {
        let m = fixture("Gly-Gly");
        let sites = detect_peptide_bonds(&m);
        assert_eq!(sites.len(), 1);
        let (c, n) = sites[0].orientation;
        assert_eq!(m.atoms()[c].element, Element::C);
        assert_eq!(m.atoms()[n].element, Element::N);
        assert!(m.bond_between(c, n).is_some());
    }

    #[test]
    fn special_links() {
        let cys = detect_special_links(&fixture("Cystine (Cys-Cys)"));
        assert_eq!(cys.len(), 1);
        assert_eq!(cys[0].kind, BondKind::Disulfide);
        let asp = detect_special_links(&fixture("Aspartame (Asp-Phe)"));
        assert_eq!(asp.len(), 1);
        assert_eq!(asp[0].kind, BondKind::EsterModification);
        assert!(detect_special_links(&fixture("Gly-Ala")).is_empty());
    }

    #[test]
    fn proline_ring_detected() {
        let m = fixture("Proline");
        let g = Graph::new(&m);
        let n = (0..m.len()).find(|&k| g.element(k) == Element::N).unwrap();
        let ring: Vec<_> = g.neighbors_of(n, Element::C).filter(|&c| g.share_five_ring(n, c)).collect();
        assert_eq!(ring.len(), 2);
    }
}
