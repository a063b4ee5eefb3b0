//! Restricted and unrestricted SCF with DIIS extrapolation.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrals::{pair_index, EriStorage, IntegralSet, ShellPair, UniqueEri};
use super::linalg::{eigh, orthogonalizer, solve};
use super::{build_basis, compute_integrals, nuclear_repulsion, to_bohr, BasisSet, HfError};
use crate::molio::Molecule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScfOptions {
    /// |ΔE| between the last two iterations, Hartree.
    pub energy_tol: f64,
    /// Frobenius norm of FPS − SPF.
    pub gradient_tol: f64,
    pub max_iterations: usize,
    pub diis: bool,
    pub diis_size: usize,
    /// First iteration whose Fock matrix enters the DIIS subspace.
    pub diis_start: usize,
    /// Density mixing weight of the previous iterate (0 = plain fixed point).
    /// Only used when DIIS is off.
    pub damping: f64,
    /// Virtual-orbital shift (Hartree) switched on when DIIS stalls.
    pub level_shift: f64,
    /// Iterations without a new best gradient that count as a stall.
    pub stall_iterations: usize,
    /// Store ERIs up to this many basis functions; recompute above.
    pub direct_threshold: usize,
    /// Force integral-direct Fock builds regardless of size.
    pub integral_direct: bool,
    /// Overlap eigenvalue cutoff for symmetric orthogonalization.
    pub ortho_cutoff: f64,
    pub guess: Guess,
    /// Fall back to direct minimization over orbital rotations when DIIS
    /// (with level shift) exhausts `max_iterations`.
    pub direct_minimization: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guess {
    /// Orbitals of the bare core Hamiltonian.
    Core,
    /// Superposition of neutral-atom shell occupations.
    Atomic,
}

impl Default for ScfOptions {
    fn default() -> Self {
        Self {
            energy_tol: 1e-9,
            gradient_tol: 1e-6,
            max_iterations: 200,
            diis: true,
            diis_size: 8,
            diis_start: 2,
            damping: 0.0,
            level_shift: 0.2,
            stall_iterations: 15,
            direct_threshold: 128,
            integral_direct: false,
            ortho_cutoff: 1e-7,
            guess: Guess::Atomic,
            direct_minimization: true,
        }
    }
}

impl ScfOptions {
    fn storage_threshold(&self) -> usize {
        if self.integral_direct {
            0
        } else {
            self.direct_threshold
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinTreatment {
    /// RHF for singlets, UHF otherwise.
    #[default]
    Auto,
    Restricted,
    Unrestricted,
}

impl SpinTreatment {
    pub fn restricted_for(self, m: &Molecule) -> bool {
        match self {
            SpinTreatment::Auto => m.multiplicity() == 1,
            SpinTreatment::Restricted => true,
            SpinTreatment::Unrestricted => false,
        }
    }

    /// "RHF" or "UHF", as `run_scf` would choose for `m`.
    pub fn method_for(self, m: &Molecule) -> &'static str {
        if self.restricted_for(m) {
            "RHF"
        } else {
            "UHF"
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScfResult {
    /// "RHF" or "UHF".
    pub method: String,
    pub total_energy: f64,
    pub electronic_energy: f64,
    pub nuclear_repulsion: f64,
    pub converged: bool,
    pub iterations: usize,
    /// α orbital energies (all orbitals for RHF).
    pub orbital_energies: Vec<f64>,
    pub orbital_energies_beta: Option<Vec<f64>>,
    pub final_gradient_norm: f64,
    pub final_energy_change: f64,
    /// ⟨S²⟩ for UHF.
    pub s_squared: Option<f64>,
    pub level_shift_used: bool,
    /// DIIS gave up and the energy was minimized over orbital rotations.
    #[serde(default)]
    pub direct_minimization_used: bool,
    pub nbf: usize,
    /// Converged densities: [P] (total) for RHF, [Pα, Pβ] for UHF.
    #[serde(skip)]
    pub densities: Vec<DMatrix<f64>>,
}

/// J and K for each density, built from every unique ERI.
fn accumulate(e: UniqueEri, n: usize, dens: &[&[f64]], jt: &mut [Vec<f64>], kt: &mut [Vec<f64>]) {
    let UniqueEri { i, j, k, l, mut value } = e;
    if i == j {
        value *= 0.5;
    }
    if k == l {
        value *= 0.5;
    }
    if pair_index(i, j) == pair_index(k, l) {
        value *= 0.5;
    }
    for (s, p) in dens.iter().enumerate() {
        let jm = &mut jt[s];
        jm[i * n + j] += 2.0 * value * p[k * n + l];
        jm[k * n + l] += 2.0 * value * p[i * n + j];
        let km = &mut kt[s];
        km[i * n + k] += value * p[j * n + l];
        km[j * n + k] += value * p[i * n + l];
        km[i * n + l] += value * p[j * n + k];
        km[j * n + l] += value * p[i * n + k];
    }
}

fn finish(raw: Vec<f64>, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_row_slice(n, n, &raw);
    &m + m.transpose()
}

/// Integral-direct builds skip shell quartets whose Schwarz bound times the
/// largest coupled density element is below this.
const DENSITY_SCREEN: f64 = 1e-13;

/// Direct builds accumulate from density differences and restart from the
/// full density after this many incremental steps.
const INCREMENTAL_RESET: usize = 8;

/// Coulomb and exchange matrices for each density.
pub fn coulomb_exchange(ints: &IntegralSet, densities: &[&DMatrix<f64>]) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
    let n = ints.overlap.nrows();
    let flat: Vec<Vec<f64>> = densities
        .iter()
        .map(|d| {
            let mut v = Vec::with_capacity(n * n);
            for r in 0..n {
                for c in 0..n {
                    v.push(d[(r, c)]);
                }
            }
            v
        })
        .collect();
    let refs: Vec<&[f64]> = flat.iter().map(Vec::as_slice).collect();
    let nd = densities.len();
    let zero = || (vec![vec![0.0; n * n]; nd], vec![vec![0.0; n * n]; nd]);
    let (jt, kt) = match &ints.eri {
        EriStorage::Packed(p) => {
            let (mut jt, mut kt) = zero();
            let npair = n * (n + 1) / 2;
            let mut unpack = Vec::with_capacity(npair);
            for i in 0..n {
                for j in 0..=i {
                    unpack.push((i, j));
                }
            }
            let mut idx = 0;
            for ij in 0..npair {
                let (i, j) = unpack[ij];
                for &(k, l) in &unpack[..=ij] {
                    let value = p.data[idx];
                    idx += 1;
                    if value != 0.0 {
                        accumulate(UniqueEri { i, j, k, l, value }, n, &refs, &mut jt, &mut kt);
                    }
                }
            }
            (jt, kt)
        }
        EriStorage::Direct(engine) => {
            let ng = engine.groups.len();
            let mut dmax = vec![0.0f64; ng * ng];
            for (a, ga) in engine.groups.iter().enumerate() {
                for (b, gb) in engine.groups.iter().enumerate() {
                    let mut m = 0.0f64;
                    for d in densities {
                        for i in ga.offset..ga.offset + ga.nfunc {
                            for j in gb.offset..gb.offset + gb.nfunc {
                                m = m.max(d[(i, j)].abs());
                            }
                        }
                    }
                    dmax[a * ng + b] = m;
                }
            }
            let weight = |bra: &ShellPair, ket: &ShellPair| {
                let d = |x: usize, y: usize| dmax[x * ng + y];
                let (a, b, c, e) = (bra.a, bra.b, ket.a, ket.b);
                (2.0 * d(a, b))
                    .max(2.0 * d(c, e))
                    .max(d(a, c))
                    .max(d(a, e))
                    .max(d(b, c))
                    .max(d(b, e))
            };
            (0..engine.pairs.len())
            .into_par_iter()
            .fold(zero, |(mut jt, mut kt), pi| {
                engine.for_each_weighted_in(pi..pi + 1, weight, DENSITY_SCREEN, |e| {
                    accumulate(e, n, &refs, &mut jt, &mut kt)
                });
                (jt, kt)
            })
            .reduce(zero, |(mut ja, mut ka), (jb, kb)| {
                for s in 0..nd {
                    for (x, y) in ja[s].iter_mut().zip(&jb[s]) {
                        *x += y;
                    }
                    for (x, y) in ka[s].iter_mut().zip(&kb[s]) {
                        *x += y;
                    }
                }
                (ja, ka)
            })
        }
    };
    jt.into_iter()
        .zip(kt)
        .map(|(j, k)| (finish(j, n), finish(k, n)))
        .collect()
}

struct Diis {
    size: usize,
    focks: Vec<Vec<DMatrix<f64>>>,
    errors: Vec<Vec<DMatrix<f64>>>,
}

impl Diis {
    fn new(size: usize) -> Self {
        Self {
            size,
            focks: Vec::new(),
            errors: Vec::new(),
        }
    }

    fn clear(&mut self) {
        self.focks.clear();
        self.errors.clear();
    }

    fn push(&mut self, f: Vec<DMatrix<f64>>, e: Vec<DMatrix<f64>>) {
        self.focks.push(f);
        self.errors.push(e);
        if self.focks.len() > self.size {
            self.focks.remove(0);
            self.errors.remove(0);
        }
    }

    fn extrapolate(&mut self) -> Option<Vec<DMatrix<f64>>> {
        while self.focks.len() >= 2 {
            let m = self.focks.len();
            let mut b = DMatrix::zeros(m + 1, m + 1);
            for i in 0..m {
                for j in 0..=i {
                    let v: f64 = self.errors[i]
                        .iter()
                        .zip(&self.errors[j])
                        .map(|(a, c)| a.dot(c))
                        .sum();
                    b[(i, j)] = v;
                    b[(j, i)] = v;
                }
                b[(i, m)] = -1.0;
                b[(m, i)] = -1.0;
            }
            let mut rhs = DVector::zeros(m + 1);
            rhs[m] = -1.0;
            // scale for conditioning
            let scale = (0..m).map(|i| b[(i, i)]).fold(0.0, f64::max);
            if scale > 0.0 {
                for i in 0..m {
                    for j in 0..m {
                        b[(i, j)] /= scale;
                    }
                }
            }
            match solve(b, rhs) {
                Some(c) => {
                    let nspin = self.focks[0].len();
                    let out = (0..nspin)
                        .map(|s| {
                            let mut f = self.focks[0][s].clone() * c[0];
                            for i in 1..m {
                                f += &self.focks[i][s] * c[i];
                            }
                            f
                        })
                        .collect();
                    return Some(out);
                }
                None => {
                    self.focks.remove(0);
                    self.errors.remove(0);
                }
            }
        }
        None
    }
}

/// Largest single orbital-rotation parameter in one minimization step.
const MAX_ROTATION: f64 = 0.3;
const LBFGS_HISTORY: usize = 8;

type Evaluate<'a> = dyn Fn(&[DMatrix<f64>]) -> (Vec<DMatrix<f64>>, f64) + 'a;

struct MinimizerOutcome {
    converged: bool,
    iterations: usize,
    energy: f64,
    energy_change: f64,
    densities: Vec<DMatrix<f64>>,
    focks: Vec<DMatrix<f64>>,
}

/// L-BFGS descent over occupied-virtual orbital rotations with a
/// backtracking line search. Each accepted step re-expands about the new
/// orbitals.
struct Minimizer<'a> {
    overlap: &'a DMatrix<f64>,
    occupations: &'a [usize],
    occ_factor: f64,
    /// Density → (Fock matrices, electronic energy).
    eval: &'a Evaluate<'a>,
    density: &'a dyn Fn(&DMatrix<f64>, usize) -> DMatrix<f64>,
}

impl Minimizer<'_> {
    fn densities(&self, coeffs: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        coeffs
            .iter()
            .zip(self.occupations)
            .map(|(c, &o)| (self.density)(c, o))
            .collect()
    }

    /// dE/dκ_ai and a diagonal inverse-Hessian guess from orbital energy gaps.
    fn gradient(&self, coeffs: &[DMatrix<f64>], focks: &[DMatrix<f64>]) -> (DVector<f64>, DVector<f64>) {
        let fac = 2.0 * self.occ_factor;
        let (mut g, mut h0) = (Vec::new(), Vec::new());
        for ((c, f), &nocc) in coeffs.iter().zip(focks).zip(self.occupations) {
            let fm = c.transpose() * f * c;
            for i in 0..nocc {
                for a in nocc..fm.nrows() {
                    g.push(fac * fm[(a, i)]);
                    h0.push(1.0 / (fac * (fm[(a, a)] - fm[(i, i)]).max(0.1)));
                }
            }
        }
        (DVector::from_vec(g), DVector::from_vec(h0))
    }

    fn rotate(&self, coeffs: &[DMatrix<f64>], kappa: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut k = 0;
        coeffs
            .iter()
            .zip(self.occupations)
            .map(|(c, &nocc)| {
                let nmo = c.ncols();
                let mut gen = DMatrix::zeros(nmo, nmo);
                for i in 0..nocc {
                    for a in nocc..nmo {
                        gen[(a, i)] = kappa[k];
                        gen[(i, a)] = -kappa[k];
                        k += 1;
                    }
                }
                c * gen.exp()
            })
            .collect()
    }

    fn commutator_norm(&self, dens: &[DMatrix<f64>], focks: &[DMatrix<f64>]) -> f64 {
        let s = self.overlap;
        focks
            .iter()
            .zip(dens)
            .map(|(f, p)| (f * p * s - s * p * f).norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    fn run(&self, mut coeffs: Vec<DMatrix<f64>>, opts: &ScfOptions) -> MinimizerOutcome {
        let mut dens = self.densities(&coeffs);
        let (mut focks, mut e) = (self.eval)(&dens);
        let (mut g, mut h0) = self.gradient(&coeffs, &focks);
        let mut history: std::collections::VecDeque<(DVector<f64>, DVector<f64>, f64)> = Default::default();
        let mut de = f64::INFINITY;
        let mut converged = false;
        let mut iterations = 0;
        for iter in 1..=opts.max_iterations {
            iterations = iter;
            let grad = self.commutator_norm(&dens, &focks);
            log::trace!("minimization step {iter}: E = {e:.12} dE = {de:.3e} |FPS-SPF| = {grad:.3e}");
            if de.abs() <= opts.energy_tol && grad <= opts.gradient_tol {
                converged = true;
                break;
            }

            let mut q = g.clone();
            let mut alphas = Vec::with_capacity(history.len());
            for (s, y, rho) in history.iter().rev() {
                let a = rho * s.dot(&q);
                q -= y * a;
                alphas.push(a);
            }
            let mut r = h0.component_mul(&q);
            for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
                let b = rho * y.dot(&r);
                r += s * (a - b);
            }
            let mut d = -r;
            if d.dot(&g) >= 0.0 {
                history.clear();
                d = -h0.component_mul(&g);
            }
            let largest = d.amax();
            if largest > MAX_ROTATION {
                d *= MAX_ROTATION / largest;
            }

            let slope = g.dot(&d);
            let noise = 1e-12 * e.abs().max(1.0);
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..12 {
                let trial = self.rotate(&coeffs, &(&d * step));
                let trial_dens = self.densities(&trial);
                let (trial_focks, trial_e) = (self.eval)(&trial_dens);
                if trial_e - e <= 1e-4 * step * slope + noise {
                    accepted = Some((trial, trial_dens, trial_focks, trial_e));
                    break;
                }
                step *= 0.5;
            }
            let Some((trial, trial_dens, trial_focks, trial_e)) = accepted else {
                if history.is_empty() {
                    break;
                }
                history.clear();
                continue;
            };
            de = trial_e - e;
            e = trial_e;
            coeffs = trial;
            dens = trial_dens;
            focks = trial_focks;
            let (g_new, h_new) = self.gradient(&coeffs, &focks);
            let s = &d * step;
            let y = &g_new - &g;
            let sy = s.dot(&y);
            if sy > 1e-14 {
                history.push_back((s, y, 1.0 / sy));
                if history.len() > LBFGS_HISTORY {
                    history.pop_front();
                }
            }
            g = g_new;
            h0 = h_new;
        }
        MinimizerOutcome {
            converged,
            iterations,
            energy: e,
            energy_change: de,
            densities: dens,
            focks,
        }
    }
}

fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

fn check_basis(m: &Molecule, basis: &BasisSet) -> Result<(), HfError> {
    let owns = basis.shells.iter().all(|s| {
        m.atoms()
            .get(s.atom)
            .is_some_and(|a| to_bohr(a.position) == s.center)
    });
    if owns && basis.shells.last().map(|s| s.atom + 1) == Some(m.len()) {
        Ok(())
    } else {
        Err(HfError::BasisMismatch)
    }
}

/// Restricted closed-shell HF.
pub fn scf_rhf(m: &Molecule, basis: &BasisSet, opts: &ScfOptions) -> Result<ScfResult, HfError> {
    let electrons = m.electron_count();
    if !electrons.is_multiple_of(2) || m.multiplicity() != 1 {
        return Err(HfError::OpenShell { electrons });
    }
    check_basis(m, basis)?;
    let ints = compute_integrals(m, basis, opts.storage_threshold());
    let nocc = (electrons / 2) as usize;
    let guess = initial_occupations(m, basis, opts.guess);
    iterate(&ints, nuclear_repulsion(m)?, &[nocc], true, guess.as_deref(), opts)
}

/// Unrestricted HF (any spin state consistent with the electron count).
pub fn scf_uhf(m: &Molecule, basis: &BasisSet, opts: &ScfOptions) -> Result<ScfResult, HfError> {
    let electrons = m.electron_count();
    let mult = m.multiplicity();
    if mult == 0 || electrons.is_multiple_of(2) != (mult % 2 == 1) || mult - 1 > electrons {
        return Err(HfError::SpinState { electrons, multiplicity: mult });
    }
    check_basis(m, basis)?;
    let ints = compute_integrals(m, basis, opts.storage_threshold());
    let (na, nb) = m.spin_occupations();
    let guess = initial_occupations(m, basis, opts.guess);
    iterate(&ints, nuclear_repulsion(m)?, &[na, nb], false, guess.as_deref(), opts)
}

/// Builds the basis and picks RHF/UHF.
pub fn run_scf(m: &Molecule, spin: SpinTreatment, opts: &ScfOptions) -> Result<ScfResult, HfError> {
    let basis = build_basis(m)?;
    if spin.restricted_for(m) {
        scf_rhf(m, &basis, opts)
    } else {
        scf_uhf(m, &basis, opts)
    }
}

/// Per-function electron counts of the isolated neutral atoms, shells filled
/// in order with p electrons spread evenly over the three components.
fn initial_occupations(m: &Molecule, basis: &BasisSet, guess: Guess) -> Option<Vec<f64>> {
    if guess == Guess::Core {
        return None;
    }
    let mut occ = Vec::with_capacity(basis.nbf);
    let mut remaining: Vec<f64> = m.atoms().iter().map(|a| a.element.atomic_number() as f64).collect();
    for sh in &basis.shells {
        let size = sh.size();
        let cap = 2.0 * size as f64;
        let put = remaining[sh.atom].min(cap);
        remaining[sh.atom] -= put;
        occ.extend(std::iter::repeat_n(put / size as f64, size));
    }
    Some(occ)
}

/// SCF iterations on precomputed integrals. `occupations` holds one entry
/// (doubly occupied orbitals) for RHF or two (α, β) for UHF. `guess` gives
/// diagonal total-density elements; None starts from the core Hamiltonian.
pub fn iterate(
    ints: &IntegralSet,
    e_nuc: f64,
    occupations: &[usize],
    restricted: bool,
    guess: Option<&[f64]>,
    opts: &ScfOptions,
) -> Result<ScfResult, HfError> {
    let s = &ints.overlap;
    let h = ints.core_hamiltonian();
    let n = s.nrows();
    let (x, _) = orthogonalizer(s, opts.ortho_cutoff).ok_or(HfError::SingularOverlap)?;
    let nmo = x.ncols();
    if occupations.iter().any(|&o| o > nmo) {
        return Err(HfError::SingularOverlap);
    }
    let occ_factor = if restricted { 2.0 } else { 1.0 };

    let diagonalize = |f: &DMatrix<f64>| -> (DVector<f64>, DMatrix<f64>) {
        let fp = x.transpose() * f * &x;
        let (eps, cp) = eigh(&fp);
        (eps, &x * cp)
    };
    let density = |c: &DMatrix<f64>, nocc: usize| -> DMatrix<f64> {
        let occ = c.columns(0, nocc);
        (occ * occ.transpose()) * occ_factor
    };

    let incremental = matches!(ints.eri, EriStorage::Direct(_));
    let reference: std::cell::RefCell<Option<(Vec<DMatrix<f64>>, Vec<(DMatrix<f64>, DMatrix<f64>)>, usize)>> =
        std::cell::RefCell::new(None);
    let two_electron = |dens: &[DMatrix<f64>]| -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
        let mut slot = reference.borrow_mut();
        let jk = match slot.take() {
            Some((prev, prev_jk, steps)) if incremental && steps < INCREMENTAL_RESET && prev.len() == dens.len() => {
                let delta: Vec<DMatrix<f64>> = dens.iter().zip(&prev).map(|(d, p)| d - p).collect();
                let refs: Vec<&DMatrix<f64>> = delta.iter().collect();
                let jk: Vec<_> = coulomb_exchange(ints, &refs)
                    .into_iter()
                    .zip(prev_jk)
                    .map(|((dj, dk), (j, k))| (j + dj, k + dk))
                    .collect();
                *slot = Some((dens.to_vec(), jk.clone(), steps + 1));
                jk
            }
            _ => {
                let refs: Vec<&DMatrix<f64>> = dens.iter().collect();
                let jk = coulomb_exchange(ints, &refs);
                if incremental {
                    *slot = Some((dens.to_vec(), jk.clone(), 0));
                }
                jk
            }
        };
        jk
    };
    let build_fock = |dens: &[DMatrix<f64>]| -> Vec<DMatrix<f64>> {
        let jk = two_electron(dens);
        if restricted {
            let (j, k) = &jk[0];
            vec![&h + j - k * 0.5]
        } else {
            let j = &jk[0].0 + &jk[1].0;
            jk.iter().map(|(_, k)| &h + &j - k).collect()
        }
    };
    let energy = |dens: &[DMatrix<f64>], focks: &[DMatrix<f64>]| -> f64 {
        if restricted {
            0.5 * frob_dot(&dens[0], &(&h + &focks[0]))
        } else {
            let pt = &dens[0] + &dens[1];
            0.5 * (frob_dot(&pt, &h) + frob_dot(&dens[0], &focks[0]) + frob_dot(&dens[1], &focks[1]))
        }
    };

    let mut diis = Diis::new(opts.diis_size.max(2));
    let mut e_prev = f64::NAN;
    let mut converged = false;
    let mut iterations = 0;
    let mut e_elec = 0.0;
    let mut grad = f64::INFINITY;
    let mut de = f64::INFINITY;
    let mut best_grad = f64::INFINITY;
    let mut best_iter = 0;
    let mut shift_on = false;
    let start = match guess {
        Some(occ) => {
            let p0 = DMatrix::from_diagonal(&DVector::from_column_slice(occ));
            let f0 = if restricted {
                build_fock(&[p0])
            } else {
                let half = p0 * 0.5;
                build_fock(&[half.clone(), half])
            };
            f0.iter().map(|f| diagonalize(f).1).collect::<Vec<_>>()
        }
        None => vec![diagonalize(&h).1; occupations.len()],
    };
    let mut coeffs = start;
    let mut dens: Vec<DMatrix<f64>> = coeffs
        .iter()
        .zip(occupations)
        .map(|(c, &o)| density(c, o))
        .collect();
    let mut focks = build_fock(&dens);

    for iter in 1..=opts.max_iterations {
        iterations = iter;
        if iter > 1 {
            focks = build_fock(&dens);
        }
        e_elec = energy(&dens, &focks);
        let errors: Vec<DMatrix<f64>> = focks
            .iter()
            .zip(&dens)
            .map(|(f, p)| f * p * s - s * p * f)
            .collect();
        grad = errors.iter().map(|e| e.norm_squared()).sum::<f64>().sqrt();
        de = e_elec - e_prev;
        log::trace!("scf iter {iter}: E = {:.12} dE = {de:.3e} |FPS-SPF| = {grad:.3e}", e_elec + e_nuc);
        if iter > 1 && de.abs() <= opts.energy_tol && grad <= opts.gradient_tol {
            converged = true;
            break;
        }
        e_prev = e_elec;

        if grad < best_grad * 0.999 {
            best_grad = grad;
            best_iter = iter;
        } else if opts.diis
            && !shift_on
            && opts.level_shift > 0.0
            && iter - best_iter >= opts.stall_iterations
        {
            log::debug!("SCF stalled at iteration {iter}; enabling level shift {}", opts.level_shift);
            shift_on = true;
            diis.clear();
        }

        let mut step = focks.clone();
        if opts.diis && iter >= opts.diis_start {
            let ortho_err = errors.iter().map(|e| x.transpose() * e * &x).collect();
            diis.push(focks.clone(), ortho_err);
            if let Some(extrap) = diis.extrapolate() {
                step = extrap;
            }
        }
        if shift_on {
            for (f, p) in step.iter_mut().zip(&dens) {
                let d = p / occ_factor;
                *f += (s - s * d * s) * opts.level_shift;
            }
        }
        coeffs = step.iter().map(|f| diagonalize(f).1).collect();
        let new_dens: Vec<DMatrix<f64>> = coeffs
            .iter()
            .zip(occupations)
            .map(|(c, &o)| density(c, o))
            .collect();
        dens = if !opts.diis && opts.damping > 0.0 {
            new_dens
                .into_iter()
                .zip(&dens)
                .map(|(pn, po)| pn * (1.0 - opts.damping) + po * opts.damping)
                .collect()
        } else {
            new_dens
        };
    }

    let mut minimized = false;
    if !converged && opts.direct_minimization {
        log::debug!("DIIS did not converge in {iterations} iterations; switching to direct minimization");
        minimized = true;
        let state = Minimizer {
            overlap: s,
            occupations,
            occ_factor,
            eval: &|d: &[DMatrix<f64>]| {
                let f = build_fock(d);
                let e = energy(d, &f);
                (f, e)
            },
            density: &density,
        };
        let out = state.run(coeffs, opts);
        iterations += out.iterations;
        converged = out.converged;
        e_elec = out.energy;
        de = out.energy_change;
        dens = out.densities;
        focks = out.focks;
        grad = focks
            .iter()
            .zip(&dens)
            .map(|(f, p)| (f * p * s - s * p * f).norm_squared())
            .sum::<f64>()
            .sqrt();
    }

    let orbital: Vec<Vec<f64>> = focks.iter().map(|f| diagonalize(f).0.iter().copied().collect()).collect();
    let s_squared = if restricted {
        None
    } else {
        let (na, nb) = (occupations[0] as f64, occupations[1] as f64);
        let sz = 0.5 * (na - nb);
        let overlap = (&dens[0] * s * &dens[1] * s).trace();
        Some(sz * (sz + 1.0) + nb - overlap)
    };
    Ok(ScfResult {
        method: if restricted { "RHF" } else { "UHF" }.to_string(),
        total_energy: e_elec + e_nuc,
        electronic_energy: e_elec,
        nuclear_repulsion: e_nuc,
        converged,
        iterations,
        orbital_energies: orbital[0].clone(),
        orbital_energies_beta: orbital.get(1).cloned(),
        final_gradient_norm: grad,
        final_energy_change: de,
        s_squared,
        level_shift_used: shift_on,
        direct_minimization_used: minimized,
        nbf: n,
        densities: dens,
    })
}
