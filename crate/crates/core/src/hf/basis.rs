use std::f64::consts::PI;

use serde::Serialize;

use super::{to_bohr, HfError};
use crate::molio::{Element, Molecule};

/// One STO-3G contraction: angular momentum, three exponents, three
/// contraction coefficients (for unnormalized primitives).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellTemplate {
    pub l: u8,
    pub exponents: [f64; 3],
    pub coefficients: [f64; 3],
}

const S1: [f64; 3] = [0.15432897, 0.53532814, 0.44463454];
const S2: [f64; 3] = [-0.09996723, 0.39951283, 0.70011547];
const P2: [f64; 3] = [0.15591627, 0.60768372, 0.39195739];

const fn shell(l: u8, exponents: [f64; 3], coefficients: [f64; 3]) -> ShellTemplate {
    ShellTemplate { l, exponents, coefficients }
}

// Basis Set Exchange, STO-3G.
static H_SHELLS: [ShellTemplate; 1] = [shell(0, [3.42525091, 0.62391373, 0.16885540], S1)];

static C_SHELLS: [ShellTemplate; 3] = [
    shell(0, [71.6168370, 13.0450960, 3.5305122], S1),
    shell(0, [2.9412494, 0.6834831, 0.2222899], S2),
    shell(1, [2.9412494, 0.6834831, 0.2222899], P2),
];

static N_SHELLS: [ShellTemplate; 3] = [
    shell(0, [99.1061690, 18.0523120, 4.8856602], S1),
    shell(0, [3.7804559, 0.8784966, 0.2857144], S2),
    shell(1, [3.7804559, 0.8784966, 0.2857144], P2),
];

static O_SHELLS: [ShellTemplate; 3] = [
    shell(0, [130.7093200, 23.8088610, 6.4436083], S1),
    shell(0, [5.0331513, 1.1695961, 0.3803890], S2),
    shell(1, [5.0331513, 1.1695961, 0.3803890], P2),
];

static S_SHELLS: [ShellTemplate; 5] = [
    shell(0, [533.1257359, 97.1095183, 26.28162542], [0.1543289673, 0.5353281423, 0.4446345422]),
    shell(0, [33.32975173, 7.745117521, 2.518952599], [-0.09996722919, 0.3995128261, 0.7001154689]),
    shell(1, [33.32975173, 7.745117521, 2.518952599], [0.155916275, 0.6076837186, 0.3919573931]),
    shell(0, [2.029194274, 0.5661400518, 0.2215833792], [-0.219620369, 0.2255954336, 0.900398426]),
    shell(1, [2.029194274, 0.5661400518, 0.2215833792], [0.01058760429, 0.5951670053, 0.462001012]),
];

/// STO-3G shells of an element in the order 1s, 2s, 2p, 3s, 3p.
pub fn sto3g_shells(e: Element) -> &'static [ShellTemplate] {
    match e {
        Element::H => &H_SHELLS,
        Element::C => &C_SHELLS,
        Element::N => &N_SHELLS,
        Element::O => &O_SHELLS,
        Element::S => &S_SHELLS,
    }
}

/// Contracted Cartesian shell placed on an atom. `coefficients` already
/// include primitive normalization and the contraction renormalization, so
/// each function has unit self-overlap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Shell {
    pub atom: usize,
    /// Centre in Bohr.
    pub center: [f64; 3],
    pub l: u8,
    pub exponents: [f64; 3],
    pub coefficients: [f64; 3],
}

impl Shell {
    pub fn size(&self) -> usize {
        match self.l {
            0 => 1,
            _ => 3,
        }
    }

    /// Cartesian exponents of component `k` (x, y, z order for p).
    pub fn component(&self, k: usize) -> [u8; 3] {
        match (self.l, k) {
            (0, _) => [0, 0, 0],
            (_, 0) => [1, 0, 0],
            (_, 1) => [0, 1, 0],
            _ => [0, 0, 1],
        }
    }
}

/// Normalization of the primitive x^l e^{-a r^2} (one Cartesian p component).
fn primitive_norm(l: u8, a: f64) -> f64 {
    let s = (2.0 * a / PI).powf(0.75);
    match l {
        0 => s,
        _ => s * 2.0 * a.sqrt(),
    }
}

fn build_shell(atom: usize, center: [f64; 3], t: &ShellTemplate) -> Shell {
    let mut c = [0.0; 3];
    for k in 0..3 {
        c[k] = t.coefficients[k] * primitive_norm(t.l, t.exponents[k]);
    }
    // Self-overlap of the contracted function along its own axis.
    let mut ovl = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let p = t.exponents[i] + t.exponents[j];
            let base = (PI / p).powf(1.5);
            let ang = match t.l {
                0 => 1.0,
                _ => 0.5 / p,
            };
            ovl += c[i] * c[j] * base * ang;
        }
    }
    let scale = 1.0 / ovl.sqrt();
    for ck in &mut c {
        *ck *= scale;
    }
    Shell {
        atom,
        center,
        l: t.l,
        exponents: t.exponents,
        coefficients: c,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisSet {
    pub shells: Vec<Shell>,
    /// First basis-function index of each shell.
    pub offsets: Vec<usize>,
    pub nbf: usize,
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.nbf
    }

    pub fn is_empty(&self) -> bool {
        self.nbf == 0
    }

    /// (shell index, component) of every basis function.
    pub fn functions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.nbf);
        for (s, sh) in self.shells.iter().enumerate() {
            for k in 0..sh.size() {
                out.push((s, k));
            }
        }
        out
    }

    /// Atom index owning each basis function.
    pub fn function_atoms(&self) -> Vec<usize> {
        self.functions()
            .into_iter()
            .map(|(s, _)| self.shells[s].atom)
            .collect()
    }
}

/// STO-3G basis for a molecule.
pub fn build_basis(m: &Molecule) -> Result<BasisSet, HfError> {
    let mut shells = Vec::new();
    for (ia, atom) in m.atoms().iter().enumerate() {
        let center = to_bohr(atom.position);
        for t in sto3g_shells(atom.element) {
            shells.push(build_shell(ia, center, t));
        }
    }
    let mut offsets = Vec::with_capacity(shells.len());
    let mut nbf = 0;
    for s in &shells {
        offsets.push(nbf);
        nbf += s.size();
    }
    Ok(BasisSet { shells, offsets, nbf })
}

/// Stable text rendering of the embedded parameter table, used to pin it.
pub fn sto3g_table_text() -> String {
    let mut s = String::new();
    for e in Element::ALL {
        for t in sto3g_shells(e) {
            s.push_str(&format!("{} l={}", e.symbol(), t.l));
            for k in 0..3 {
                s.push_str(&format!(" {:.10e}/{:.10e}", t.exponents[k], t.coefficients[k]));
            }
            s.push('\n');
        }
    }
    s
}
