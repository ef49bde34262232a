"""Atom masses on girth-controlled random covers, written as CSV.

Usage: ``python demos/cover_convergence.py [fixture] [max_sheets]``
(defaults: fig2, 4).  The table goes to stdout; plot it with any tool.
"""
import sys

from qtree.covers import convergence_csv, convergence_experiment, girth
from qtree.graph import load_fixture

name = sys.argv[1] if len(sys.argv) > 1 else "fig2"
top = int(sys.argv[2]) if len(sys.argv) > 2 else 4
g = load_fixture(name)
base = girth(g)
sizes = list(range(1, top + 1))
# ask for a bit more girth as the covers grow, never less than the base
targets = [0 if n == 1 else min(base + n - 1, 2 * base) for n in sizes]
rows = convergence_experiment(g, (0, 45), sizes, targets, seed=1)
sys.stdout.write(convergence_csv(rows))
