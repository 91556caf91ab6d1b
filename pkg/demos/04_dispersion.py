"""Dispersion branches of the isotropic relaxed model.

Sweeps k along [100] and then across to [110],
prints the cut-off frequencies and writes ``dispersion_demo.csv``.
With a positive couple modulus the three rotational branches start above
zero.
"""
import numpy as np

from micromorphx import IsotropicModuli, MaterialModel, cutoff_frequencies, dispersion_curves, wave_path

path = wave_path([(0, 0, 0), (6, 0, 0), (6, 6, 0)], 200)
for label, moduli in (("mu_c = 0", IsotropicModuli()), ("mu_c = 0.3", IsotropicModuli(mu_c=0.3))):
    for variant in ("FULL", "DEV_DEV"):
        mat = MaterialModel.isotropic(moduli, variant)
        res = dispersion_curves(path, mat)
        print(f"{label:10s} {variant:8s} cut-offs {np.round(cutoff_frequencies(mat), 4)}")
        print(f"{'':20s}max omega {res.omega.max():.3f}, min symbol eigenvalue {res.min_eigenvalue:.1e}")

dispersion_curves(path, MaterialModel.isotropic(IsotropicModuli())).to_csv("dispersion_demo.csv")
