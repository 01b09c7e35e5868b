"""Generate H4/STO-3G FCIDUMP files over the two-H2 separation R.

Writes one FCIDUMP per R plus fci_energies.csv with the pyscf FCI energies
(two lowest roots of the Sz=0 space) for cross-checking.
"""
import sys
from pathlib import Path

from pyscf import ao2mo, fci, gto, scf
from pyscf.tools import fcidump

BOND = 1.23
RS = [1.0, 1.23, 1.5, 2.0, 2.5, 3.0]


def main(out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    rows = ["label,e_fci,e_fci_exc"]
    for r in RS:
        mol = gto.M(
            atom=f"H 0 0 0; H 0 0 {BOND}; H {r} 0 0; H {r} 0 {BOND}",
            basis="sto-3g",
            unit="Angstrom",
            symmetry=False,
            verbose=0,
        )
        mf = scf.RHF(mol).run()
        label = f"{r:.2f}"
        fcidump.from_scf(mf, str(out / f"R{label}.fcidump"), tol=1e-14)
        solver = fci.direct_spin1.FCI(mol)
        solver.conv_tol = 1e-12
        h1 = mf.mo_coeff.T @ mf.get_hcore() @ mf.mo_coeff
        e, _ = solver.kernel(
            h1,
            ao2mo.full(mol, mf.mo_coeff),
            mol.nao,
            mol.nelectron,
            nroots=2,
            ecore=mol.energy_nuc(),
        )
        rows.append(f"{label},{e[0]:.12f},{e[1]:.12f}")
    (out / "fci_energies.csv").write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("crates/core/tests/data/h4_sto3g"))
