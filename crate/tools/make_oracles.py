#!/usr/bin/env python3
"""Writes independent reference values (pyscf, STO-3G) used by the core
integration tests to crates/core/tests/data/oracles.json."""

import json
import sys
from pathlib import Path

import numpy as np
from pyscf import gto, scf

WATER = [("O", (0.0, 0.0, 0.0)), ("H", (0.7581, 0.0, 0.6358)), ("H", (-0.7581, 0.0, 0.6358))]

SYSTEMS = {
    "h2": ([("H", (0, 0, 0)), ("H", (0, 0, 1.4))], "Bohr", 0, 0),
    "water": (WATER, "Angstrom", 0, 0),
    "methane": ([("C", (0, 0, 0)), ("H", (0.6276, 0.6276, 0.6276)), ("H", (-0.6276, -0.6276, 0.6276)),
                 ("H", (-0.6276, 0.6276, -0.6276)), ("H", (0.6276, -0.6276, -0.6276))], "Angstrom", 0, 0),
    "ammonia": ([("N", (0, 0, 0.1173)), ("H", (0, 0.9377, -0.2737)), ("H", (0.8121, -0.4689, -0.2737)),
                 ("H", (-0.8121, -0.4689, -0.2737))], "Angstrom", 0, 0),
    "hydrogen_sulfide": ([("S", (0, 0, 0.1030)), ("H", (0, 0.9616, -0.8239)), ("H", (0, -0.9616, -0.8239))],
                         "Angstrom", 0, 0),
    "hydrogen_atom": ([("H", (0, 0, 0))], "Angstrom", 0, 1),
    "methyl": ([("C", (0, 0, 0)), ("H", (1.078, 0, 0)), ("H", (-0.539, 0.933575, 0)),
                ("H", (-0.539, -0.933575, 0))], "Angstrom", 0, 1),
    "hydroxyl": ([("O", (0, 0, 0)), ("H", (0, 0, 0.97))], "Angstrom", 0, 1),
    "oxygen_triplet": ([("O", (0, 0, 0)), ("O", (0, 0, 1.21))], "Angstrom", 0, 2),
    # Glycine's carboxyl group cut at C-alpha; plain DIIS does not converge.
    "carboxyl_radical": ([("C", (0.8988, 0.2762, -0.1437)), ("O", (1.6585, 0.0424, 0.7844)),
                          ("O", (1.3061, 0.7811, -1.3378)), ("H", (2.2752, 0.9323, -1.3591))], "Angstrom", 0, 1),
}


def run(atoms, unit, charge, spin):
    m = gto.M(atom=atoms, unit=unit, basis="sto-3g", charge=charge, spin=spin, verbose=0)
    mf = scf.RHF(m) if spin == 0 else scf.UHF(m)
    mf.conv_tol = 1e-12
    mf.max_cycle = 500
    e = mf.kernel()
    if not mf.converged:
        mf = mf.newton()
        mf.conv_tol = 1e-12
        e = mf.kernel()
        while not mf.stability(return_status=True)[2]:
            mo = mf.stability()[0]
            e = mf.kernel(mf.make_rdm1(mo, mf.mo_occ))
    assert mf.converged
    out = {"atoms": [[s, list(map(float, p))] for s, p in atoms], "unit": unit,
           "charge": charge, "multiplicity": spin + 1, "energy": e, "method": "RHF" if spin == 0 else "UHF"}
    if spin:
        out["s_squared"] = float(mf.spin_square()[0])
    return m, out


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/data/oracles.json")
    result = {"systems": {}}
    for key, (atoms, unit, charge, spin) in SYSTEMS.items():
        mol, rec = run(atoms, unit, charge, spin)
        result["systems"][key] = rec
        if key == "water":
            eri = mol.intor("int2e", aosym="s8")
            result["water_integrals"] = {
                "overlap": mol.intor("int1e_ovlp").tolist(),
                "kinetic": mol.intor("int1e_kin").tolist(),
                "nuclear": mol.intor("int1e_nuc").tolist(),
                "eri_packed": np.asarray(eri).tolist(),
                "nuclear_repulsion": mol.energy_nuc(),
            }
    out.write_text(json.dumps(result, indent=1) + "\n")


if __name__ == "__main__":
    main()
