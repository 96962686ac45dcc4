"""Regenerate the bundled FCIDUMP files and their reference energies.

Requires pyscf. Writes into crates/core/data/.
"""
import json
import os

from pyscf import gto, scf, fci, mcscf, ao2mo
from pyscf.tools import fcidump

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "data")

SYSTEMS = {
    "h2_sto3g": "H 0 0 0; H 0 0 0.74",
    "h4_chain_sto3g": "H 0 0 0; H 0 0 1.0; H 0 0 2.0; H 0 0 3.0",
}


def main():
    refs = {}
    for name, atoms in SYSTEMS.items():
        mol = gto.M(atom=atoms, basis="sto-3g", unit="Angstrom", verbose=0)
        mf = scf.RHF(mol)
        mf.conv_tol = 1e-12
        mf.kernel()
        path = os.path.join(OUT, name + ".fcidump")
        fcidump.from_scf(mf, path, tol=1e-15)
        cis = fci.FCI(mf)
        cis.conv_tol = 1e-12
        e_fci, _ = cis.kernel()
        entry = {"e_rhf": mf.e_tot, "e_fci": e_fci, "n_orb": mol.nao, "n_elec": mol.nelectron}
        if mol.nao == 4:
            mc = mcscf.CASCI(mf, 2, 2)
            mc.fcisolver.conv_tol = 1e-12
            entry["e_casci_2_2"] = mc.kernel()[0]
        refs[name] = entry
    with open(os.path.join(OUT, "reference_energies.json"), "w") as f:
        json.dump(refs, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
