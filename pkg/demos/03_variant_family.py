"""P-coercivity across the family of relaxed models.

For each variant the discrete constant of ||P||^2 over its micro-strain and
dislocation channels is computed on nested grids. Well-posed variants settle
down; the ones missing a channel lose coercivity (infinite constant).
Takes several minutes because of the 16^3 level.
"""
from micromorphx.inequalities import figure1_study

studies = figure1_study(levels=(4, 8, 16))
for name, study in studies.items():
    consts = "  ".join(f"{c:8.4f}" for c in study.constants)
    print(f"{name:16s} {consts}   {study.classification.value}")
with open("variant_family.csv", "w") as fh:
    for i, study in enumerate(studies.values()):
        text = study.to_csv()
        fh.write(text if i == 0 else text.split("\n", 1)[1])
