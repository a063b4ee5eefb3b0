//! One- and two-electron integrals over contracted Cartesian Gaussians by
//! McMurchie–Davidson Hermite expansion.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::basis::{BasisSet, Shell};
use super::boys::boys_into;
use super::to_bohr;
use crate::molio::Molecule;

/// Hermite expansion coefficient E_t^{ij} for the 1D overlap distribution of
/// x^i e^{-a x²} (centre A) and x^j e^{-b x²} (centre B), `ab = A - B`.
pub fn hermite_e(i: i32, j: i32, t: i32, ab: f64, a: f64, b: f64) -> f64 {
    let p = a + b;
    let q = a * b / p;
    if t < 0 || t > i + j {
        0.0
    } else if i == 0 && j == 0 && t == 0 {
        (-q * ab * ab).exp()
    } else if j == 0 {
        (1.0 / (2.0 * p)) * hermite_e(i - 1, j, t - 1, ab, a, b)
            - (q * ab / a) * hermite_e(i - 1, j, t, ab, a, b)
            + (t + 1) as f64 * hermite_e(i - 1, j, t + 1, ab, a, b)
    } else {
        (1.0 / (2.0 * p)) * hermite_e(i, j - 1, t - 1, ab, a, b)
            + (q * ab / b) * hermite_e(i, j - 1, t, ab, a, b)
            + (t + 1) as f64 * hermite_e(i, j - 1, t + 1, ab, a, b)
    }
}

// Hermite index sets ordered by total degree, so that the first
// HERM_COUNT[L] entries span t+u+v ≤ L.
const HERM_COUNT: [usize; 5] = [1, 4, 10, 20, 35];

fn hermite_indices() -> &'static [[usize; 3]; 35] {
    use std::sync::OnceLock;
    static IDX: OnceLock<[[usize; 3]; 35]> = OnceLock::new();
    IDX.get_or_init(|| {
        let mut out = [[0usize; 3]; 35];
        let mut k = 0;
        for total in 0..=4 {
            for t in (0..=total).rev() {
                for u in (0..=(total - t)).rev() {
                    out[k] = [t, u, total - t - u];
                    k += 1;
                }
            }
        }
        out
    })
}

struct HermiteTables {
    /// Position of (t, u, v) in the degree-ordered list, by (t*5+u)*5+v.
    position: [usize; 125],
    /// For each index: recursion axis, index lowered by one and by two
    /// along that axis, and the multiplier (count - 1) of the second term.
    step: [(usize, usize, usize, f64); 35],
}

fn hermite_tables() -> &'static HermiteTables {
    use std::sync::OnceLock;
    static T: OnceLock<HermiteTables> = OnceLock::new();
    T.get_or_init(|| {
        let idx = hermite_indices();
        let mut position = [usize::MAX; 125];
        for (k, &[t, u, v]) in idx.iter().enumerate() {
            position[(t * 5 + u) * 5 + v] = k;
        }
        let pos = |c: [usize; 3]| position[(c[0] * 5 + c[1]) * 5 + c[2]];
        let mut step = [(0, 0, 0, 0.0); 35];
        for (k, &c) in idx.iter().enumerate().skip(1) {
            let axis = (0..3).find(|&a| c[a] > 0).unwrap();
            let mut one = c;
            one[axis] -= 1;
            let (two, mult) = if c[axis] > 1 {
                let mut two = c;
                two[axis] -= 2;
                (pos(two), (c[axis] - 1) as f64)
            } else {
                (0, 0.0)
            };
            step[k] = (axis, pos(one), two, mult);
        }
        HermiteTables { position, step }
    })
}

#[inline]
fn hidx(t: usize, u: usize, v: usize) -> usize {
    hermite_tables().position[(t * 5 + u) * 5 + v]
}

/// Hermite Coulomb integrals R_{tuv}(α, PC) for t+u+v ≤ lmax (≤ 4). On
/// return `work[0][k]` holds R for the k-th degree-ordered Hermite index.
fn hermite_r(lmax: usize, alpha: f64, pc: [f64; 3], work: &mut [[f64; 35]; 5]) {
    let mut boys = [0.0; 5];
    let r2 = pc[0] * pc[0] + pc[1] * pc[1] + pc[2] * pc[2];
    boys_into(lmax, alpha * r2, &mut boys);
    let mut scale = 1.0;
    for n in 0..=lmax {
        work[n][0] = scale * boys[n];
        scale *= -2.0 * alpha;
    }
    if lmax == 0 {
        return;
    }
    let tables = hermite_tables();
    let mut k = 1;
    for total in 1..=lmax {
        for _ in HERM_COUNT[total - 1]..HERM_COUNT[total] {
            let (axis, one, two, mult) = tables.step[k];
            for n in 0..=(lmax - total) {
                work[n][k] = pc[axis] * work[n + 1][one] + mult * work[n + 1][two];
            }
            k += 1;
        }
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// 1D overlap ∫ x_A^i x_B^j e^{...}, without the √(π/p) factor.
fn overlap_1d(i: i32, j: i32, ab: f64, a: f64, b: f64) -> f64 {
    hermite_e(i, j, 0, ab, a, b)
}

fn primitive_overlap(la: [u8; 3], lb: [u8; 3], a: f64, b: f64, ab: [f64; 3]) -> f64 {
    let p = a + b;
    let mut s = (PI / p).powf(1.5);
    for k in 0..3 {
        s *= overlap_1d(la[k] as i32, lb[k] as i32, ab[k], a, b);
    }
    s
}

fn primitive_kinetic(la: [u8; 3], lb: [u8; 3], a: f64, b: f64, ab: [f64; 3]) -> f64 {
    let p = a + b;
    let pre = (PI / p).sqrt();
    let s1 = |k: usize, j: i32| -> f64 {
        if j < 0 {
            0.0
        } else {
            pre * overlap_1d(la[k] as i32, j, ab[k], a, b)
        }
    };
    let mut s = [0.0; 3];
    let mut t = [0.0; 3];
    for k in 0..3 {
        let j = lb[k] as i32;
        s[k] = s1(k, j);
        t[k] = -2.0 * b * b * s1(k, j + 2) + b * (2 * j + 1) as f64 * s1(k, j)
            - 0.5 * (j * (j - 1)) as f64 * s1(k, j - 2);
    }
    t[0] * s[1] * s[2] + s[0] * t[1] * s[2] + s[0] * s[1] * t[2]
}

fn primitive_nuclear(
    la: [u8; 3],
    lb: [u8; 3],
    a: f64,
    b: f64,
    center_a: [f64; 3],
    center_b: [f64; 3],
    c: [f64; 3],
) -> f64 {
    let p = a + b;
    let ab = sub(center_a, center_b);
    let pc = [
        (a * center_a[0] + b * center_b[0]) / p - c[0],
        (a * center_a[1] + b * center_b[1]) / p - c[1],
        (a * center_a[2] + b * center_b[2]) / p - c[2],
    ];
    let lsum = (0..3).map(|k| (la[k] + lb[k]) as usize).sum::<usize>();
    let mut r = [[0.0; 35]; 5];
    hermite_r(lsum, p, pc, &mut r);
    let mut v = 0.0;
    for t in 0..=(la[0] + lb[0]) as i32 {
        let ex = hermite_e(la[0] as i32, lb[0] as i32, t, ab[0], a, b);
        for u in 0..=(la[1] + lb[1]) as i32 {
            let ey = hermite_e(la[1] as i32, lb[1] as i32, u, ab[1], a, b);
            for w in 0..=(la[2] + lb[2]) as i32 {
                let ez = hermite_e(la[2] as i32, lb[2] as i32, w, ab[2], a, b);
                v += ex * ey * ez * r[0][hidx(t as usize, u as usize, w as usize)];
            }
        }
    }
    2.0 * PI / p * v
}

fn contract_one(
    sa: &Shell,
    ka: usize,
    sb: &Shell,
    kb: usize,
    f: impl Fn([u8; 3], [u8; 3], f64, f64) -> f64,
) -> f64 {
    let la = sa.component(ka);
    let lb = sb.component(kb);
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            acc += sa.coefficients[i]
                * sb.coefficients[j]
                * f(la, lb, sa.exponents[i], sb.exponents[j]);
        }
    }
    acc
}

fn one_electron_matrix(
    basis: &BasisSet,
    f: impl Fn(&Shell, usize, &Shell, usize) -> f64 + Sync,
) -> DMatrix<f64> {
    let funcs = basis.functions();
    let n = basis.nbf;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let (si, ki) = funcs[i];
            let (sj, kj) = funcs[j];
            let v = f(&basis.shells[si], ki, &basis.shells[sj], kj);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

pub fn overlap_matrix(basis: &BasisSet) -> DMatrix<f64> {
    one_electron_matrix(basis, |sa, ka, sb, kb| {
        let ab = sub(sa.center, sb.center);
        contract_one(sa, ka, sb, kb, |la, lb, a, b| primitive_overlap(la, lb, a, b, ab))
    })
}

pub fn kinetic_matrix(basis: &BasisSet) -> DMatrix<f64> {
    one_electron_matrix(basis, |sa, ka, sb, kb| {
        let ab = sub(sa.center, sb.center);
        contract_one(sa, ka, sb, kb, |la, lb, a, b| primitive_kinetic(la, lb, a, b, ab))
    })
}

/// Electron–nuclear attraction, summed over all nuclei of `m`.
pub fn nuclear_matrix(basis: &BasisSet, m: &Molecule) -> DMatrix<f64> {
    let nuclei: Vec<(f64, [f64; 3])> = m
        .atoms()
        .iter()
        .map(|a| (a.element.atomic_number() as f64, to_bohr(a.position)))
        .collect();
    one_electron_matrix(basis, |sa, ka, sb, kb| {
        contract_one(sa, ka, sb, kb, |la, lb, a, b| {
            nuclei
                .iter()
                .map(|&(z, c)| -z * primitive_nuclear(la, lb, a, b, sa.center, sb.center, c))
                .sum()
        })
    })
}

/// Consecutive shells on one atom sharing their exponents (2s/2p, 3s/3p),
/// handled as a single unit by the ERI code.
#[derive(Debug, Clone)]
pub struct ShellGroup {
    pub shells: std::ops::Range<usize>,
    /// First basis function of the group.
    pub offset: usize,
    pub nfunc: usize,
    lmax: usize,
}

pub fn shell_groups(basis: &BasisSet) -> Vec<ShellGroup> {
    let mut groups: Vec<ShellGroup> = Vec::new();
    for (k, sh) in basis.shells.iter().enumerate() {
        if let Some(g) = groups.last_mut() {
            let first = &basis.shells[g.shells.start];
            if first.atom == sh.atom && first.exponents == sh.exponents {
                g.shells.end = k + 1;
                g.nfunc += sh.size();
                g.lmax = g.lmax.max(sh.l as usize);
                continue;
            }
        }
        groups.push(ShellGroup {
            shells: k..k + 1,
            offset: basis.offsets[k],
            nfunc: sh.size(),
            lmax: sh.l as usize,
        });
    }
    groups
}

// (cartesian exponents, contraction coefficients) of each function in a group
fn group_functions(basis: &BasisSet, g: &ShellGroup) -> Vec<([u8; 3], [f64; 3])> {
    let mut out = Vec::with_capacity(g.nfunc);
    for sh in &basis.shells[g.shells.clone()] {
        for k in 0..sh.size() {
            out.push((sh.component(k), sh.coefficients));
        }
    }
    out
}

/// Primitive pairs whose largest Hermite coefficient falls below this are
/// dropped.
const PRIMITIVE_CUTOFF: f64 = 1e-18;

/// Precomputed data of one primitive pair inside a shell pair.
#[derive(Debug, Clone)]
struct PrimPair {
    p: f64,
    center: [f64; 3],
    /// herm[function pair][hermite index], contraction coefficients folded in.
    herm: Vec<[f64; 10]>,
}

/// A pair of shell groups prepared for ERI evaluation.
#[derive(Debug, Clone)]
pub struct ShellPair {
    pub a: usize,
    pub b: usize,
    l: usize,
    na: usize,
    nb: usize,
    prims: Vec<PrimPair>,
    /// Nonzero Hermite terms per function pair.
    nherm: Vec<usize>,
    /// √ max |(ab|ab)|, for Schwarz screening.
    pub bound: f64,
}

fn make_pair(basis: &BasisSet, groups: &[ShellGroup], a: usize, b: usize) -> ShellPair {
    let (ga, gb) = (&groups[a], &groups[b]);
    let sa = &basis.shells[ga.shells.start];
    let sb = &basis.shells[gb.shells.start];
    let fa = group_functions(basis, ga);
    let fb = group_functions(basis, gb);
    let ab = sub(sa.center, sb.center);
    let l = ga.lmax + gb.lmax;
    let nh = HERM_COUNT[l];
    let idx = hermite_indices();
    let mut prims = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            let (ea, eb) = (sa.exponents[i], sb.exponents[j]);
            let p = ea + eb;
            let center = [
                (ea * sa.center[0] + eb * sb.center[0]) / p,
                (ea * sa.center[1] + eb * sb.center[1]) / p,
                (ea * sa.center[2] + eb * sb.center[2]) / p,
            ];
            let mut herm = Vec::with_capacity(fa.len() * fb.len());
            let mut biggest = 0.0f64;
            for (la, ca) in &fa {
                for (lb, cb) in &fb {
                    let coef = ca[i] * cb[j];
                    let mut h = [0.0; 10];
                    for (hk, &[t, u, v]) in idx.iter().take(nh).enumerate() {
                        h[hk] = coef
                            * hermite_e(la[0] as i32, lb[0] as i32, t as i32, ab[0], ea, eb)
                            * hermite_e(la[1] as i32, lb[1] as i32, u as i32, ab[1], ea, eb)
                            * hermite_e(la[2] as i32, lb[2] as i32, v as i32, ab[2], ea, eb);
                        biggest = biggest.max(h[hk].abs());
                    }
                    herm.push(h);
                }
            }
            if biggest >= PRIMITIVE_CUTOFF {
                prims.push(PrimPair { p, center, herm });
            }
        }
    }
    let nherm = fa
        .iter()
        .flat_map(|(la, _)| {
            fb.iter()
                .map(move |(lb, _)| HERM_COUNT[(la.iter().sum::<u8>() + lb.iter().sum::<u8>()) as usize])
        })
        .collect();
    let mut pair = ShellPair {
        a,
        b,
        l,
        na: fa.len(),
        nb: fb.len(),
        prims,
        nherm,
        bound: 0.0,
    };
    let block = quartet(&pair, &pair);
    let n = pair.na * pair.nb;
    let max_diag = (0..n).map(|k| block[k * n + k].abs()).fold(0.0, f64::max);
    pair.bound = max_diag.sqrt();
    pair
}

// addition table for hermite indices: index of (t1+t2, u1+u2, v1+v2) and
// the ket sign (-1)^{t2+u2+v2}.
fn hermite_sum_table() -> &'static [[(usize, f64); 10]; 10] {
    use std::sync::OnceLock;
    static T: OnceLock<[[(usize, f64); 10]; 10]> = OnceLock::new();
    T.get_or_init(|| {
        let idx = hermite_indices();
        let mut out = [[(0usize, 0.0f64); 10]; 10];
        for h1 in 0..10 {
            for h2 in 0..10 {
                let [t1, u1, v1] = idx[h1];
                let [t2, u2, v2] = idx[h2];
                let sign = if (t2 + u2 + v2) % 2 == 0 { 1.0 } else { -1.0 };
                out[h1][h2] = (hidx(t1 + t2, u1 + u2, v1 + v2), sign);
            }
        }
        out
    })
}

/// Contracted ERI block for a shell quartet, laid out
/// `[(ka * nb + kb) * (nc * nd) + (kc * nd + kd)]`.
pub fn quartet(bra: &ShellPair, ket: &ShellPair) -> Vec<f64> {
    let nbra = bra.na * bra.nb;
    let nket = ket.na * ket.nb;
    let mut out = vec![0.0; nbra * nket];
    let lmax = bra.l + ket.l;
    let nh1 = HERM_COUNT[bra.l];
    let nh2 = HERM_COUNT[ket.l];
    let table = hermite_sum_table();
    let two_pi_52 = 2.0 * PI.powf(2.5);
    let mut r = [[0.0f64; 35]; 5];
    let mut rmat = [[0.0f64; 10]; 10];
    // w[fk][h1]: ket side contracted over ket primitives for one bra primitive
    let mut w = vec![[0.0f64; 10]; nket];
    for pp in &bra.prims {
        for row in w.iter_mut() {
            *row = [0.0; 10];
        }
        for qq in &ket.prims {
            let (p, q) = (pp.p, qq.p);
            let alpha = p * q / (p + q);
            let pre = two_pi_52 / (p * q * (p + q).sqrt());
            hermite_r(lmax, alpha, sub(pp.center, qq.center), &mut r);
            for h1 in 0..nh1 {
                for h2 in 0..nh2 {
                    let (k, s) = table[h1][h2];
                    rmat[h1][h2] = s * pre * r[0][k];
                }
            }
            for (fk, hk) in qq.herm.iter().enumerate() {
                let wk = &mut w[fk];
                let nk = ket.nherm[fk];
                for h1 in 0..nh1 {
                    let mut acc = 0.0;
                    for h2 in 0..nk {
                        acc += rmat[h1][h2] * hk[h2];
                    }
                    wk[h1] += acc;
                }
            }
        }
        for (fb, hb) in pp.herm.iter().enumerate() {
            let dst = &mut out[fb * nket..(fb + 1) * nket];
            let nb = bra.nherm[fb];
            for (o, wk) in dst.iter_mut().zip(&w) {
                let mut acc = 0.0;
                for h1 in 0..nb {
                    acc += hb[h1] * wk[h1];
                }
                *o += acc;
            }
        }
    }
    out
}

/// (ij|kl) evaluated directly in the given index order, without any
/// symmetry folding or screening.
pub fn eri_element(basis: &BasisSet, i: usize, j: usize, k: usize, l: usize) -> f64 {
    let groups = shell_groups(basis);
    let locate = |f: usize| {
        let g = groups.iter().position(|g| f >= g.offset && f < g.offset + g.nfunc).unwrap();
        (g, f - groups[g].offset)
    };
    let ((gi, ka), (gj, kb), (gk, kc), (gl, kd)) = (locate(i), locate(j), locate(k), locate(l));
    let bra = make_pair(basis, &groups, gi, gj);
    let ket = make_pair(basis, &groups, gk, gl);
    let block = quartet(&bra, &ket);
    block[(ka * bra.nb + kb) * (ket.na * ket.nb) + kc * ket.nb + kd]
}

/// Packed index of a symmetric pair (i ≥ j not required).
#[inline]
pub fn pair_index(i: usize, j: usize) -> usize {
    let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

/// Canonical packed index of (ij|kl) under 8-fold symmetry.
#[inline]
pub fn eri_index(i: usize, j: usize, k: usize, l: usize) -> usize {
    pair_index(pair_index(i, j), pair_index(k, l))
}

/// Shell-pair list and helpers shared by stored and integral-direct modes.
#[derive(Debug, Clone)]
pub struct EriEngine {
    pub pairs: Vec<ShellPair>,
    pub groups: Vec<ShellGroup>,
    pub nbf: usize,
    pub screen: f64,
}

/// One unique integral visited by [`EriEngine::for_each_unique`]:
/// canonical function indices i ≥ j, k ≥ l, ij ≥ kl.
#[derive(Debug, Clone, Copy)]
pub struct UniqueEri {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub value: f64,
}

impl EriEngine {
    pub fn new(basis: &BasisSet, screen: f64) -> Self {
        let groups = shell_groups(basis);
        let ng = groups.len();
        let list: Vec<(usize, usize)> = (0..ng).flat_map(|a| (0..=a).map(move |b| (a, b))).collect();
        let pairs = list
            .par_iter()
            .map(|&(a, b)| make_pair(basis, &groups, a, b))
            .collect();
        Self {
            pairs,
            groups,
            nbf: basis.nbf,
            screen,
        }
    }

    /// Visits every symmetry-unique integral exactly once, bra pair by bra
    /// pair. `bra_range` restricts the bra shell-pair indices (for batching).
    pub fn for_each_unique_in(&self, bra_range: std::ops::Range<usize>, f: impl FnMut(UniqueEri)) {
        self.for_each_weighted_in(bra_range, |_, _| 1.0, self.screen, f)
    }

    /// As [`Self::for_each_unique_in`], skipping shell quartets whose Schwarz
    /// bound times `weight(bra, ket)` is below `threshold`.
    pub fn for_each_weighted_in(
        &self,
        bra_range: std::ops::Range<usize>,
        weight: impl Fn(&ShellPair, &ShellPair) -> f64,
        threshold: f64,
        mut f: impl FnMut(UniqueEri),
    ) {
        for pi in bra_range {
            let bra = &self.pairs[pi];
            for ket in &self.pairs[..=pi] {
                let bound = bra.bound * ket.bound;
                if bound < self.screen || bound * weight(bra, ket) < threshold {
                    continue;
                }
                let block = quartet(bra, ket);
                self.emit(bra, ket, &block, &mut f);
            }
        }
    }

    pub fn for_each_unique(&self, f: impl FnMut(UniqueEri)) {
        self.for_each_unique_in(0..self.pairs.len(), f)
    }

    fn emit(&self, bra: &ShellPair, ket: &ShellPair, block: &[f64], f: &mut impl FnMut(UniqueEri)) {
        let same_pair = bra.a == ket.a && bra.b == ket.b;
        let nket = ket.na * ket.nb;
        let (oa, ob) = (self.groups[bra.a].offset, self.groups[bra.b].offset);
        let (oc, od) = (self.groups[ket.a].offset, self.groups[ket.b].offset);
        for ka in 0..bra.na {
            for kb in 0..bra.nb {
                let (i, j) = (oa + ka, ob + kb);
                if bra.a == bra.b && i < j {
                    continue;
                }
                for kc in 0..ket.na {
                    for kd in 0..ket.nb {
                        let (k, l) = (oc + kc, od + kd);
                        if ket.a == ket.b && k < l {
                            continue;
                        }
                        let ij = pair_index(i, j);
                        let kl = pair_index(k, l);
                        if same_pair && ij < kl {
                            continue;
                        }
                        let value = block[(ka * bra.nb + kb) * nket + kc * ket.nb + kd];
                        if ij >= kl {
                            f(UniqueEri { i, j, k, l, value });
                        } else {
                            f(UniqueEri { i: k, j: l, k: i, l: j, value });
                        }
                    }
                }
            }
        }
    }

    /// Full compressed list of unique integrals.
    pub fn packed(&self) -> PackedEri {
        let npair = self.nbf * (self.nbf + 1) / 2;
        let mut data = vec![0.0; npair * (npair + 1) / 2];
        let chunk = 256;
        let mut start = 0;
        while start < self.pairs.len() {
            let end = (start + chunk).min(self.pairs.len());
            let batches: Vec<Vec<(usize, f64)>> = (start..end)
                .into_par_iter()
                .map(|pi| {
                    let mut v = Vec::new();
                    self.for_each_unique_in(pi..pi + 1, |e| {
                        v.push((eri_index(e.i, e.j, e.k, e.l), e.value))
                    });
                    v
                })
                .collect();
            for b in batches {
                for (idx, val) in b {
                    data[idx] = val;
                }
            }
            start = end;
        }
        PackedEri { nbf: self.nbf, data }
    }
}

/// Unique two-electron integrals stored at [`eri_index`] positions.
#[derive(Debug, Clone)]
pub struct PackedEri {
    pub nbf: usize,
    pub data: Vec<f64>,
}

impl PackedEri {
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[eri_index(i, j, k, l)]
    }
}

/// All integrals needed by an SCF run.
#[derive(Debug, Clone)]
pub struct IntegralSet {
    pub overlap: DMatrix<f64>,
    pub kinetic: DMatrix<f64>,
    pub nuclear: DMatrix<f64>,
    pub eri: EriStorage,
}

#[derive(Debug, Clone)]
pub enum EriStorage {
    Packed(PackedEri),
    Direct(EriEngine),
}

impl IntegralSet {
    pub fn core_hamiltonian(&self) -> DMatrix<f64> {
        &self.kinetic + &self.nuclear
    }

    /// (ij|kl) regardless of storage mode (slow in direct mode).
    pub fn eri(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        match &self.eri {
            EriStorage::Packed(p) => p.get(i, j, k, l),
            EriStorage::Direct(engine) => {
                let target = eri_index(i, j, k, l);
                let mut found = 0.0;
                engine.for_each_unique(|e| {
                    if eri_index(e.i, e.j, e.k, e.l) == target {
                        found = e.value;
                    }
                });
                found
            }
        }
    }
}

pub const SCHWARZ_THRESHOLD: f64 = 1e-14;

/// Computes S, T, V and the two-electron integrals. ERIs are stored when
/// `nbf ≤ direct_threshold`, otherwise recomputed on every Fock build.
pub fn compute_integrals(m: &Molecule, basis: &BasisSet, direct_threshold: usize) -> IntegralSet {
    let engine = EriEngine::new(basis, SCHWARZ_THRESHOLD);
    let eri = if basis.nbf <= direct_threshold {
        EriStorage::Packed(engine.packed())
    } else {
        EriStorage::Direct(engine)
    };
    IntegralSet {
        overlap: overlap_matrix(basis),
        kinetic: kinetic_matrix(basis),
        nuclear: nuclear_matrix(basis, m),
        eri,
    }
}
