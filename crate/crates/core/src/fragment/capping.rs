use crate::molio::{Atom, Bond, Element, Molecule, MoleculeError};

pub(crate) const NH_LENGTH: f64 = 1.01;
pub(crate) const CO_LENGTH: f64 = 1.36;
pub(crate) const OH_LENGTH: f64 = 0.96;
pub(crate) const SH_LENGTH: f64 = 1.34;

/// A hydrogen or hydroxyl placed on an atom whose bond was cut.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Cap {
    /// H on `atom`, along `atom → toward`.
    Hydrogen { atom: usize, toward: usize, length: f64 },
    /// OH on carbonyl `atom`: O along `atom → toward`, H parallel to
    /// `h_from → h_to`.
    Hydroxyl { atom: usize, toward: usize, h_from: usize, h_to: usize },
}

fn direction(m: &Molecule, from: usize, to: usize) -> [f64; 3] {
    let a = m.atoms()[from].position;
    let b = m.atoms()[to].position;
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    [d[0] / n, d[1] / n, d[2] / n]
}

fn offset(p: [f64; 3], u: [f64; 3], len: f64) -> [f64; 3] {
    [p[0] + len * u[0], p[1] + len * u[1], p[2] + len * u[2]]
}

/// Induced subgraph on `atoms` with caps appended after the source atoms.
pub(crate) fn capped(
    m: &Molecule,
    name: &str,
    atoms: &[usize],
    caps: &[Cap],
) -> Result<Molecule, MoleculeError> {
    let base = m.subgraph(name, atoms)?;
    let local = |k: usize| atoms.iter().position(|&a| a == k).expect("cap on foreign atom");
    let mut new_atoms = base.atoms().to_vec();
    let mut new_bonds = base.bonds().to_vec();
    for cap in caps {
        match *cap {
            Cap::Hydrogen { atom, toward, length } => {
                let p = offset(m.atoms()[atom].position, direction(m, atom, toward), length);
                new_atoms.push(Atom::new(Element::H, p));
                new_bonds.push(Bond::new(local(atom), new_atoms.len() - 1, 1));
            }
            Cap::Hydroxyl { atom, toward, h_from, h_to } => {
                let o = offset(m.atoms()[atom].position, direction(m, atom, toward), CO_LENGTH);
                let h = offset(o, direction(m, h_from, h_to), OH_LENGTH);
                new_atoms.push(Atom::new(Element::O, o));
                let oi = new_atoms.len() - 1;
                new_bonds.push(Bond::new(local(atom), oi, 1));
                new_atoms.push(Atom::new(Element::H, h));
                new_bonds.push(Bond::new(oi, oi + 1, 1));
            }
        }
    }
    Molecule::new(name, new_atoms, new_bonds, 0, None)
}
