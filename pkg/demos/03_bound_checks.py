"""
Checking the code-length bounds
===============================

For each table row, run OGD with the row's step size on seeded random
instances and compare its code length with the row's right-hand side at
the best segmentation.
"""

from mixcomp import OgdConfig, run_mix_ogd, step_size
from mixcomp.analysis import check_bound
from mixcomp.synth import make_instance

n, m = 2000, 3
for row, B in [(1, 4), (2, 4), (3, 8), (4, 8)]:
    kind = "lin" if row <= 2 else "geo"
    inst = make_instance("switching", n, m, 8, B, seed=row, segments=4)
    trace = run_mix_ogd(OgdConfig(kind, step_size(row, m, B, n)), inst.x, inst.P)
    rep = check_bound(trace, inst.x, inst.P, f"row{row}", B=B)
    print(f"row {row} ({kind}, B={B}): OGD {rep.lhs:9.1f} bits <= bound {rep.rhs:11.1f} "
          f"with s={rep.params['s']} segments -> {'holds' if rep.holds else 'VIOLATED'}")
