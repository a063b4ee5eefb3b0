use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::Element;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MoleculeError {
    #[error("molecule has no atoms")]
    Empty,
    #[error("bond {0}-{1} references a missing atom")]
    BondOutOfRange(usize, usize),
    #[error("self-bond on atom {0}")]
    SelfBond(usize),
    #[error("duplicate bond {0}-{1}")]
    DuplicateBond(usize, usize),
    #[error("bond {0}-{1} has unsupported order {2}")]
    BondOrder(usize, usize, u8),
    #[error("atom {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("atoms {0} and {1} occupy the same position")]
    CoincidentAtoms(usize, usize),
    #[error("electron count {0} is below 1")]
    TooFewElectrons(i64),
    #[error("multiplicity {multiplicity} is inconsistent with {electrons} electrons")]
    SpinParity { electrons: i64, multiplicity: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    /// Cartesian position in Ångström.
    pub position: [f64; 3],
}

impl Atom {
    pub fn new(element: Element, position: [f64; 3]) -> Self {
        Self { element, position }
    }

    pub fn distance(&self, other: &Atom) -> f64 {
        let d: f64 = (0..3)
            .map(|k| (self.position[k] - other.position[k]).powi(2))
            .sum();
        d.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub order: u8,
}

impl Bond {
    pub fn new(i: usize, j: usize, order: u8) -> Self {
        Self { i, j, order }
    }

    pub fn other(&self, a: usize) -> Option<usize> {
        if self.i == a {
            Some(self.j)
        } else if self.j == a {
            Some(self.i)
        } else {
            None
        }
    }

    fn key(&self) -> (usize, usize) {
        (self.i.min(self.j), self.i.max(self.j))
    }
}

/// An element-labelled 3D molecular graph.
///
/// Values are validated on construction and immutable afterwards; use the
/// `with_*` builders to derive modified copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMolecule")]
pub struct Molecule {
    name: String,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    net_charge: i32,
    multiplicity: u32,
}

#[derive(Deserialize)]
struct RawMolecule {
    name: String,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    net_charge: i32,
    multiplicity: u32,
}

impl TryFrom<RawMolecule> for Molecule {
    type Error = MoleculeError;

    fn try_from(raw: RawMolecule) -> Result<Self, Self::Error> {
        Molecule::new(raw.name, raw.atoms, raw.bonds, raw.net_charge, Some(raw.multiplicity))
    }
}

impl Molecule {
    /// Builds a molecule, checking every structural invariant.
    ///
    /// When `multiplicity` is `None` the lowest multiplicity compatible with
    /// the electron count is used (singlet for even, doublet for odd).
    pub fn new(
        name: impl Into<String>,
        atoms: Vec<Atom>,
        bonds: Vec<Bond>,
        net_charge: i32,
        multiplicity: Option<u32>,
    ) -> Result<Self, MoleculeError> {
        if atoms.is_empty() {
            return Err(MoleculeError::Empty);
        }
        let mut seen = std::collections::HashSet::new();
        for b in &bonds {
            if b.i >= atoms.len() || b.j >= atoms.len() {
                return Err(MoleculeError::BondOutOfRange(b.i, b.j));
            }
            if b.i == b.j {
                return Err(MoleculeError::SelfBond(b.i));
            }
            if !(1..=3).contains(&b.order) {
                return Err(MoleculeError::BondOrder(b.i, b.j, b.order));
            }
            if !seen.insert(b.key()) {
                return Err(MoleculeError::DuplicateBond(b.i, b.j));
            }
        }
        for (k, a) in atoms.iter().enumerate() {
            if a.position.iter().any(|c| !c.is_finite()) {
                return Err(MoleculeError::NonFinite(k));
            }
        }
        for a in 0..atoms.len() {
            for b in (a + 1)..atoms.len() {
                if atoms[a].position == atoms[b].position {
                    return Err(MoleculeError::CoincidentAtoms(a, b));
                }
            }
        }
        let electrons: i64 =
            atoms.iter().map(|a| a.element.atomic_number() as i64).sum::<i64>() - net_charge as i64;
        if electrons < 1 {
            return Err(MoleculeError::TooFewElectrons(electrons));
        }
        let multiplicity = multiplicity.unwrap_or(if electrons % 2 == 0 { 1 } else { 2 });
        let odd_multiplicity = multiplicity % 2 == 1;
        if multiplicity == 0
            || (electrons % 2 == 0) != odd_multiplicity
            || (multiplicity as i64 - 1) > electrons
        {
            return Err(MoleculeError::SpinParity { electrons, multiplicity });
        }
        Ok(Self {
            name: name.into(),
            atoms,
            bonds,
            net_charge,
            multiplicity,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn net_charge(&self) -> i32 {
        self.net_charge
    }

    pub fn multiplicity(&self) -> u32 {
        self.multiplicity
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Σ Z − net charge. Always ≥ 1 for a constructed molecule.
    pub fn electron_count(&self) -> u32 {
        let z: i64 = self.atoms.iter().map(|a| a.element.atomic_number() as i64).sum();
        (z - self.net_charge as i64) as u32
    }

    /// Number of α and β electrons implied by the multiplicity.
    pub fn spin_occupations(&self) -> (usize, usize) {
        let n = self.electron_count() as usize;
        let unpaired = (self.multiplicity - 1) as usize;
        ((n + unpaired) / 2, (n - unpaired) / 2)
    }

    pub fn formula(&self) -> Formula {
        let mut f = Formula::default();
        for a in &self.atoms {
            f.add_atom(a.element, 1);
        }
        f
    }

    pub fn with_name(&self, name: impl Into<String>) -> Molecule {
        let mut m = self.clone();
        m.name = name.into();
        m
    }

    pub fn with_charge_and_multiplicity(
        &self,
        net_charge: i32,
        multiplicity: Option<u32>,
    ) -> Result<Molecule, MoleculeError> {
        Molecule::new(
            self.name.clone(),
            self.atoms.clone(),
            self.bonds.clone(),
            net_charge,
            multiplicity,
        )
    }

    /// Rigidly transformed copy: `x' = R x + t` (Ångström).
    pub fn transformed(&self, rotation: [[f64; 3]; 3], translation: [f64; 3]) -> Molecule {
        let mut m = self.clone();
        for a in &mut m.atoms {
            let p = a.position;
            let mut q = [0.0; 3];
            for (r, qr) in q.iter_mut().enumerate() {
                *qr = rotation[r][0] * p[0] + rotation[r][1] * p[1] + rotation[r][2] * p[2]
                    + translation[r];
            }
            a.position = q;
        }
        m
    }

    pub fn neighbors(&self, atom: usize) -> impl Iterator<Item = usize> + '_ {
        self.bonds.iter().filter_map(move |b| b.other(atom))
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.bonds
            .iter()
            .find(|bd| (bd.i == a && bd.j == b) || (bd.i == b && bd.j == a))
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.atoms.len()];
        for b in &self.bonds {
            adj[b.i].push(b.j);
            adj[b.j].push(b.i);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        adj
    }

    /// Induced subgraph on `atoms` (indices into `self`), in the given order.
    /// Bonds leaving the set are dropped. The multiplicity is reset to the
    /// lowest value consistent with the new electron count.
    pub fn subgraph(&self, name: impl Into<String>, atoms: &[usize]) -> Result<Molecule, MoleculeError> {
        let mut remap = vec![usize::MAX; self.atoms.len()];
        for (new, &old) in atoms.iter().enumerate() {
            remap[old] = new;
        }
        let new_atoms = atoms.iter().map(|&k| self.atoms[k]).collect();
        let new_bonds = self
            .bonds
            .iter()
            .filter(|b| remap[b.i] != usize::MAX && remap[b.j] != usize::MAX)
            .map(|b| Bond::new(remap[b.i], remap[b.j], b.order))
            .collect();
        Molecule::new(name, new_atoms, new_bonds, 0, None)
    }

    /// Connected components of the graph with `removed` bonds deleted,
    /// each sorted ascending, ordered by their smallest atom index.
    pub fn components_without(&self, removed: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let cut = |a: usize, b: usize| {
            removed
                .iter()
                .any(|&(x, y)| (x == a && y == b) || (x == b && y == a))
        };
        let adj = self.adjacency();
        let mut seen = vec![false; self.atoms.len()];
        let mut out = Vec::new();
        for start in 0..self.atoms.len() {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            let mut comp = Vec::new();
            seen[start] = true;
            while let Some(a) = stack.pop() {
                comp.push(a);
                for &b in &adj[a] {
                    if !seen[b] && !cut(a, b) {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Element counts. Signed so that correction ledgers can subtract species.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Formula(BTreeMap<Element, i64>);

impl Formula {
    pub fn add_atom(&mut self, e: Element, n: i64) {
        let c = self.0.entry(e).or_insert(0);
        *c += n;
        if *c == 0 {
            self.0.remove(&e);
        }
    }

    pub fn count(&self, e: Element) -> i64 {
        self.0.get(&e).copied().unwrap_or(0)
    }

    pub fn total(&self) -> i64 {
        self.0.values().sum()
    }

    /// Σ |count|; zero only for the empty formula.
    pub fn total_abs(&self) -> i64 {
        self.0.values().map(|n| n.abs()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Element, i64)> + '_ {
        self.0.iter().map(|(e, c)| (*e, *c))
    }

    /// Element order per the Hill convention: C, H, then alphabetical;
    /// without carbon, everything alphabetical.
    pub fn hill_order(&self) -> Vec<(Element, i64)> {
        let mut v: Vec<_> = self.iter().collect();
        let has_c = self.count(Element::C) != 0;
        v.sort_by_key(|(e, _)| match (has_c, e) {
            (true, Element::C) => (0, ""),
            (true, Element::H) => (1, ""),
            _ => (2, e.symbol()),
        });
        v
    }

    pub fn parse(s: &str) -> Option<Formula> {
        let mut f = Formula::default();
        let chars: Vec<char> = s.chars().collect();
        let mut k = 0;
        while k < chars.len() {
            if !chars[k].is_ascii_uppercase() {
                return None;
            }
            let mut sym = chars[k].to_string();
            k += 1;
            while k < chars.len() && chars[k].is_ascii_lowercase() {
                sym.push(chars[k]);
                k += 1;
            }
            let start = k;
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
            let n = if start == k {
                1
            } else {
                chars[start..k].iter().collect::<String>().parse().ok()?
            };
            f.add_atom(sym.parse().ok()?, n);
        }
        Some(f)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("(empty)");
        }
        for (e, n) in self.hill_order() {
            match n {
                1 => write!(f, "{e}")?,
                n => write!(f, "{e}{n}")?,
            }
        }
        Ok(())
    }
}

impl AddAssign<&Formula> for Formula {
    fn add_assign(&mut self, rhs: &Formula) {
        for (e, n) in rhs.iter() {
            self.add_atom(e, n);
        }
    }
}

impl Add<&Formula> for Formula {
    type Output = Formula;
    fn add(mut self, rhs: &Formula) -> Formula {
        self += rhs;
        self
    }
}

impl Sub<&Formula> for Formula {
    type Output = Formula;
    fn sub(mut self, rhs: &Formula) -> Formula {
        for (e, n) in rhs.iter() {
            self.add_atom(e, -n);
        }
        self
    }
}

impl Mul<i64> for &Formula {
    type Output = Formula;
    fn mul(self, k: i64) -> Formula {
        let mut f = Formula::default();
        for (e, n) in self.iter() {
            f.add_atom(e, n * k);
        }
        f
    }
}

impl Neg for Formula {
    type Output = Formula;
    fn neg(self) -> Formula {
        &self * -1
    }
}
