"""Regenerate the FCIDUMP fixtures used by the integration tests.

Requires pyscf. Each system is written in its RHF canonical orbital basis,
and the pyscf FCI energy is printed for cross-checking.
"""
from pyscf import gto, scf, fci, tools

SYSTEMS = {
    "h2_sto3g": dict(atom="H 0 0 0; H 0 0 0.74", basis="sto-3g"),
    "h4_chain_sto3g": dict(atom="H 0 0 0; H 0 0 1.5; H 0 0 3.0; H 0 0 4.5", basis="sto-3g"),
    "lih_sto3g": dict(atom="Li 0 0 0; H 0 0 1.6", basis="sto-3g"),
    "h2o_sto3g": dict(atom="O 0 0 0; H 0.757 0.586 0; H -0.757 0.586 0", basis="sto-3g"),
}

for name, kw in SYSTEMS.items():
    mol = gto.M(unit="Angstrom", verbose=0, **kw)
    mf = scf.RHF(mol).run()
    tools.fcidump.from_scf(mf, f"{name}.fcidump", tol=1e-14)
    e, _ = fci.FCI(mf).kernel()
    print(f"{name} norb={mol.nao} nelec={mol.nelectron} e_hf={mf.e_tot:.12f} e_fci={e:.12f}")
