#!/usr/bin/env python3
"""Regenerates the bundled SDF fixtures under data/.

Amino acids and peptides: RDKit ETKDGv3 embedding (fixed seed), MMFF94s
minimization with the electrostatic term disabled, lowest-energy conformer of
N_CONFORMERS kept. Correction species (H2O, H2, CH3): RHF/UHF STO-3G
optimized geometries (pyscf + scipy), matching the standard tabulated
minimal-basis energies.

Usage: python3 tools/make_fixtures.py [data_dir]
"""

import csv
import math
import sys
from pathlib import Path

from rdkit import Chem
from rdkit.Chem import AllChem

N_CONFORMERS = 30
SEED = 20240101

AMINO_ACIDS = [
    # code, one-letter, name, ground-truth energy, reference four-group sum, reference RE %
    ("HIS", "H", "Histidine", -538.53389, -537.58932, 0.17540),
    ("LEU", "L", "Leucine", -433.42225, -434.01055, 0.13573),
    ("ILE", "I", "Isoleucine", -433.42805, -434.01055, 0.13439),
    ("LYS", "K", "Lysine", -487.74061, -487.36827, 0.076339),
    ("MET", "M", "Methionine", -788.02139, -787.09064, 0.11811),
    ("PHE", "F", "Phenylalanine", -544.43743, -544.04328, 0.072395),
    ("THR", "T", "Threonine", -430.09637, -429.12416, 0.22604),
    ("TRP", "W", "Tryptophan", -673.57378, -673.15017, 0.062891),
    ("VAL", "V", "Valine", -394.84750, -394.45688, 0.098928),
    ("ARG", "R", "Arginine", -595.17255, -594.18510, 0.16591),
    ("CYS", "C", "Cysteine", -710.85730, -715.26885, 0.62060),
    ("GLN", "Q", "Glutamine", -521.82179, -516.80354, 0.96168),
    ("ASN", "N", "Asparagine", -483.23923, -479.61163, 0.75068),
    ("TYR", "Y", "Tyrosine", -618.27595, -611.07066, 1.1654),
    ("SER", "S", "Serine", -391.51594, -391.12360, 0.10021),
    ("GLY", "G", "Glycine", -279.11151, -278.67407, 0.15673),
    ("ASP", "D", "Aspartic acid", -502.76713, -502.31178, 0.090569),
    ("GLU", "E", "Glutamic acid", -541.34980, -540.89235, 0.084502),
    ("PRO", "P", "Proline", -393.70020, -393.87365, 0.044055),
    ("ALA", "A", "Alanine", -317.69136, -317.28420, 0.12816),
]

PEPTIDES = [
    # label, file stem, sequence (one-letter) or SMILES override, ground truth, reference reassembled energy, reference RE %
    ("Gly-Gly", "gly_gly", "GG", -483.23779, -483.25713, 0.00400),
    ("Gly-Ala", "gly_ala", "GA", -521.82046, -521.83697, 0.00317),
    ("Gly-Ser", "gly_ser", "GS", -595.64593, -595.66156, 0.00262),
    ("Carnosine (Ala-His)", "carnosine", "AH", -781.24420, -781.25935, 0.00194),
    ("Aspartame (Asp-Phe)", "aspartame", "ASPARTAME", -1010.80954, -1011.31538, 0.05004),
    ("Cystine (Cys-Cys)", "cystine", "CYSTINE", -1420.58943, -1420.59711, 0.00054),
    ("Leu-Thr", "leu_thr", "LT", -788.53834, -788.55273, 0.00182),
    ("Thr-Lys", "thr_lys", "TK", -842.85520, -842.87108, 0.00188),
    ("Trp-His", "trp_his", "WH", -1137.12083, -1137.14177, 0.00184),
    ("Phe-Ile", "phe_ile", "FI", -902.88517, -902.89959, 0.00160),
    ("Arg-Met", "arg_met", "RM", -1308.21468, -1308.22803, 0.00102),
    ("Ser-Cys", "ser_cys", "SC", -1027.39113, -1027.40735, 0.00158),
    ("Tyr-Asp", "tyr_asp", "YD", -1046.06184, -1046.07719, 0.00147),
    ("Glu-Gly", "glu_gly", "EG", -745.47664, -745.49542, 0.00252),
    ("His-Arg-Val", "his_arg_val", "HRV", -1378.59438, -1378.62213, 0.00201),
    ("Val-Asp-Ser", "val_asp_ser", "VDS", -1139.16790, -1139.19877, 0.00271),
    ("Gly-His-Lys", "gly_his_lys", "GHK", -1155.42028, -1155.45421, 0.00294),
    ("Val-Ala-Ser", "val_ala_ser", "VAS", -954.09354, -954.12300, 0.00309),
    ("Gly-Val-Ala", "gly_val_ala", "GVA", -841.68835, -841.71857, 0.00359),
    ("Ser-Gly-Glu", "ser_gly_glu", "SGE", -1062.00937, -1062.04546, 0.00340),
]

SMILES_OVERRIDES = {
    "CYSTINE": "N[C@@H](CSSC[C@H](N)C(=O)O)C(=O)O",
    "ASPARTAME": "COC(=O)[C@H](Cc1ccccc1)NC(=O)[C@@H](N)CC(=O)O",
}

ONE_TO_THREE = {one: code for code, one, *_ in AMINO_ACIDS}


def build(seq_or_key):
    if seq_or_key in SMILES_OVERRIDES:
        mol = Chem.MolFromSmiles(SMILES_OVERRIDES[seq_or_key])
    else:
        mol = Chem.MolFromSequence(seq_or_key)
        # MolFromSequence keeps PDB residue info; drop it so output is plain.
        mol = Chem.MolFromSmiles(Chem.MolToSmiles(mol))
    return Chem.AddHs(mol)


def lowest_conformer(mol):
    params = AllChem.ETKDGv3()
    params.randomSeed = SEED
    cids = list(AllChem.EmbedMultipleConfs(mol, N_CONFORMERS, params))
    props = AllChem.MMFFGetMoleculeProperties(mol, mmffVariant="MMFF94s")
    props.SetMMFFEleTerm(False)
    best = None
    for cid in cids:
        ff = AllChem.MMFFGetMoleculeForceField(mol, props, confId=cid)
        ff.Minimize(maxIts=10000)
        e = ff.CalcEnergy()
        if best is None or e < best[0] - 1e-9:
            best = (e, cid)
    out = Chem.Mol(mol)
    out.RemoveAllConformers()
    out.AddConformer(Chem.Conformer(mol.GetConformer(best[1])), assignId=True)
    return out, best[0]


def write_sdf(path, mol, name, provenance):
    mol.SetProp("_Name", name)
    mol.SetProp("PEPFRAG_PROVENANCE", provenance)
    w = Chem.SDWriter(str(path))
    w.SetKekulize(True)
    w.write(mol)
    w.close()


def species_geometries():
    from pyscf import gto, scf
    from scipy.optimize import minimize

    def energy(atoms, spin):
        m = gto.M(atom=atoms, basis="sto-3g", spin=spin, verbose=0)
        mf = scf.RHF(m) if spin == 0 else scf.UHF(m)
        mf.conv_tol = 1e-12
        return mf.kernel()

    def water(x):
        r, theta = x
        t = math.radians(theta / 2)
        return [("O", (0.0, 0.0, 0.0)),
                ("H", (r * math.sin(t), 0.0, r * math.cos(t))),
                ("H", (-r * math.sin(t), 0.0, r * math.cos(t)))]

    def hydrogen(x):
        return [("H", (0.0, 0.0, 0.0)), ("H", (0.0, 0.0, x[0]))]

    def methyl(x):
        r = x[0]
        return [("C", (0.0, 0.0, 0.0)), ("H", (r, 0.0, 0.0)),
                ("H", (-r / 2, r * math.sqrt(3) / 2, 0.0)),
                ("H", (-r / 2, -r * math.sqrt(3) / 2, 0.0))]

    out = {}
    for key, geom, x0, spin, bonds in [
        ("H2O", water, [0.99, 100.0], 0, [(0, 1), (0, 2)]),
        ("H2", hydrogen, [0.71], 0, [(0, 1)]),
        ("CH3", methyl, [1.08], 1, [(0, 1), (0, 2), (0, 3)]),
    ]:
        res = minimize(lambda x: energy(geom(x), spin), x0, method="Nelder-Mead",
                       options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": 2000})
        out[key] = (geom(res.x), bonds, res.x, res.fun)
    return out


def species_mol(atoms, bonds):
    rw = Chem.RWMol()
    for sym, _ in atoms:
        a = Chem.Atom(sym)
        a.SetNoImplicit(True)
        rw.AddAtom(a)
    for i, j in bonds:
        rw.AddBond(i, j, Chem.BondType.SINGLE)
    mol = rw.GetMol()
    conf = Chem.Conformer(len(atoms))
    for k, (_, p) in enumerate(atoms):
        conf.SetAtomPosition(k, p)
    mol.AddConformer(conf)
    return mol


def main():
    data = Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    for sub in ("amino_acids", "peptides", "species"):
        (data / sub).mkdir(parents=True, exist_ok=True)
    rows = []
    gen = (f"rdkit {Chem.rdBase.rdkitVersion} ETKDGv3 seed={SEED} n={N_CONFORMERS}; "
           "MMFF94s (no electrostatics) lowest-energy conformer")
    for code, one, name, gt, em, re in AMINO_ACIDS:
        mol, e_mm = lowest_conformer(build(one))
        stem = code.lower()
        write_sdf(data / "amino_acids" / f"{stem}.sdf", mol, name, f"{gen}; mmff_energy={e_mm:.6f}")
        rows.append([name, "amino_acid", f"amino_acids/{stem}.sdf", code, gt, em, re])
    for label, stem, seq, gt, em, re in PEPTIDES:
        mol, e_mm = lowest_conformer(build(seq))
        write_sdf(data / "peptides" / f"{stem}.sdf", mol, label, f"{gen}; mmff_energy={e_mm:.6f}")
        if seq in SMILES_OVERRIDES:
            sequence = {"CYSTINE": "CYS-CYS", "ASPARTAME": "ASP-PHE"}[seq]
        else:
            sequence = "-".join(ONE_TO_THREE[c] for c in seq)
        rows.append([label, "peptide", f"peptides/{stem}.sdf", sequence, gt, em, re])
    for key, (atoms, bonds, x, e) in species_geometries().items():
        mol = species_mol(atoms, bonds)
        params = " ".join(f"{v:.6f}" for v in x)
        write_sdf(data / "species" / f"{key.lower()}.sdf", mol, key,
                  f"STO-3G optimized (params {params}); pyscf energy {e:.8f}")
        rows.append([key, "correction_species", f"species/{key.lower()}.sdf", "", "", "", ""])
    with open(data / "ground_truth.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "role", "sdf", "sequence", "gt_ha", "reference_em_ha", "reference_re_pct"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
