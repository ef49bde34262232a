"""Walk through the atom of the five-vertex example graph at pi**2.

Prints the compact spectrum, the atom report, the bipartite companion and
the truncation-oracle verdict.  Run with ``python demos/atom_walkthrough.py``.
"""
import math

import numpy as np

from qtree.aomoto import point_spectrum, truncation_oracle
from qtree.compact import eigenvalues_in_window
from qtree.companions import companion, coupling_matrix, index_identity_check
from qtree.graph import load_fixture

g = load_fixture("fig2")
print(f"total length {g.total_length:.6f}")

print("compact eigenvalues in (0, 45]:")
for p in eigenvalues_in_window(g, (0, 45)):
    print(f"  {p.lam:.12f}  x{p.multiplicity}")

(rep,) = point_spectrum(g, (0, 45))
es = rep.maximizer
print(f"\natom at {rep.lam:.12f} (pi^2 = {math.pi ** 2:.12f})")
print(f"  index {rep.index}, mass {rep.atom_mass:.12f} (6/17 = {6 / 17:.12f})")
print(f"  support vertices {sorted(es.x.vset)}, edges {sorted(es.x.eset)}")
print(f"  boundary {sorted(es.finite_boundary)}, components {es.cc}")

comp = companion(g, rep)
np.set_printoptions(precision=6, suppress=True)
print(f"\ncoupling matrix / pi, rows {list(comp.boundary)}, "
      f"columns {list(comp.representatives)}:")
print(coupling_matrix(comp) / math.pi)
ok, nullity = index_identity_check(g, rep)
print(f"  nullity {nullity} >= index {rep.index}: {ok}")

v = truncation_oracle(g, rep.lam, depth=3, report=rep)
print(f"\ntruncation oracle at depth 3: confirmed={v.confirmed}, "
      f"frontier share {v.frontier_fraction:.2e}")
