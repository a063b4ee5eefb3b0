use std::collections::BTreeMap;

use petgraph::algo::is_isomorphic_matching;
use petgraph::graph::UnGraph;
use serde::{Deserialize, Serialize};

use crate::molio::{Atom, Dataset, Element, Formula, Molecule, Role};

/// A canonical free amino acid used for matching and substitution.
#[derive(Debug, Clone)]
pub struct Template {
    pub code: String,
    pub molecule: Molecule,
    formula: Formula,
    graph: UnGraph<Element, ()>,
}

impl Template {
    pub fn new(code: impl Into<String>, molecule: Molecule) -> Self {
        Self {
            code: code.into(),
            formula: molecule.formula(),
            graph: element_graph(&molecule),
            molecule,
        }
    }
}

fn element_graph(m: &Molecule) -> UnGraph<Element, ()> {
    let mut g = UnGraph::with_capacity(m.len(), m.bonds().len());
    let nodes: Vec<_> = m.atoms().iter().map(|a| g.add_node(a.element)).collect();
    for b in m.bonds() {
        g.add_edge(nodes[b.i], nodes[b.j], ());
    }
    g
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Residue {
    Known(String),
    Unknown(Formula),
}

/// Amino-acid templates plus the small molecules used in correction terms.
#[derive(Debug, Clone, Default)]
pub struct ResidueLibrary {
    templates: Vec<Template>,
    species: BTreeMap<String, Molecule>,
}

impl ResidueLibrary {
    /// Templates from every single-residue amino-acid entry and species from
    /// every correction-species entry, plus a hydrogen atom under "H".
    pub fn from_dataset(d: &Dataset) -> Self {
        let mut lib = ResidueLibrary::default();
        for e in d.with_role(Role::AminoAcid) {
            if let [code] = e.sequence.as_slice() {
                lib.add_template(Template::new(code.clone(), e.molecule.clone()));
            }
        }
        for e in d.with_role(Role::CorrectionSpecies) {
            lib.add_species(e.label.clone(), e.molecule.clone());
        }
        let h = Molecule::new("H", vec![Atom::new(Element::H, [0.0; 3])], vec![], 0, None)
            .expect("hydrogen atom");
        lib.species.entry("H".into()).or_insert(h);
        lib
    }

    pub fn add_template(&mut self, t: Template) {
        self.templates.retain(|x| x.code != t.code);
        self.templates.push(t);
        self.templates.sort_by(|a, b| a.code.cmp(&b.code));
    }

    pub fn add_species(&mut self, label: impl Into<String>, m: Molecule) {
        self.species.insert(label.into(), m);
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn template(&self, code: &str) -> Option<&Template> {
        self.templates.iter().find(|t| t.code.eq_ignore_ascii_case(code))
    }

    pub fn species(&self, label: &str) -> Option<&Molecule> {
        self.species.get(label)
    }
}

/// Matches a closed-shell fragment against the templates by element-labelled
/// graph isomorphism (hydrogens included, bond orders and geometry ignored).
pub fn identify_residue(fragment: &Molecule, library: &ResidueLibrary) -> Residue {
    let formula = fragment.formula();
    let graph = element_graph(fragment);
    for t in &library.templates {
        if t.formula != formula || t.graph.edge_count() != graph.edge_count() {
            continue;
        }
        if is_isomorphic_matching(&t.graph, &graph, |a, b| a == b, |_, _| true) {
            return Residue::Known(t.code.clone());
        }
    }
    Residue::Unknown(formula)
}
