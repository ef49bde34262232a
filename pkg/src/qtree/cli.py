"""Command-line interface: ``qtree <command> --graph FILE ...``.

Every command prints JSON (``cover --table`` prints CSV) to stdout or to
``--output``.  Exit codes: 0 on success, 2 for invalid input, 3 when a
numerical procedure or a size cap fails (or ``verify`` finds a violation).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import aomoto, companions, compact, covers
from .errors import NumericError, QTreeError, ValidationError
from .graph import dumps, graph_to_dict, induced_acyclic, load_graph, normalize, unfold
from .transfer import reverse_consistency, transfer

__all__ = ["main", "build_parser", "run"]

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _window(text):
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("window must look like a,b") from None
    if not a < b:
        raise argparse.ArgumentTypeError("window must satisfy a < b")
    return a, b


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers") from None


def _tol(text):
    t = float(text)
    if not 0 < t <= 1e-6:
        raise argparse.ArgumentTypeError("tol must lie in (0, 1e-6]")
    return t


def _positive(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qtree", description="Spectra of compact quantum graphs and their universal covers.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(name, help_, window=False, lam=False):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--graph", required=True, help="graph JSON file or bundled fixture name")
        s.add_argument("--output", "-o", help="write to this file instead of stdout")
        s.add_argument("--tol", type=_tol, default=1e-8, help="relative tolerance (default 1e-8)")
        if window:
            s.add_argument("--window", type=_window, required=True, help="spectral window a,b")
        if lam:
            s.add_argument("--lambda", dest="lam", type=float, required=True)
        return s

    cmd("spectrum", "eigenvalues of the compact graph", window=True)
    for name, help_, kw in (("point-spectrum", "eigenvalues of the universal cover", {"window": True}),
                            ("aomoto", "atom report at one lambda", {"lam": True})):
        s = cmd(name, help_, **kw)
        s.add_argument("--exact", action="store_true",
                       help="exact arithmetic for edge coincidences (zero potential, rational lengths)")
        s.add_argument("--vertex-cap", type=_positive, default=aomoto.VERTEX_CAP)
    cmd("derived", "derived weighted graph at lambda", lam=True)
    s = cmd("companion", "bipartite companion of the atom at lambda", lam=True)
    s.add_argument("--vertex-cap", type=_positive, default=aomoto.VERTEX_CAP)
    s = cmd("cover", "random n-cover with a girth target")
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--girth-min", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-tries", type=_positive, default=1000)
    s.add_argument("--max-edges", type=_positive, default=covers.MAX_COVER_EDGES)
    s.add_argument("--table", action="store_true",
                   help="CSV of atom masses on covers with 1..n sheets (needs --window)")
    s.add_argument("--window", type=_window)
    s = cmd("dos-bounds", "check atoms and cover counts against the density-of-states bounds",
            window=True)
    s.add_argument("--covers", type=_int_list, default=[1, 2, 3], help="sheet counts, e.g. 1,2,3")
    s.add_argument("--seed", type=int, default=0)
    s = cmd("perturb", "share of length perturbations with no tree eigenvalue")
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--trials", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--window", type=_window, default=(0.0, 45.0), help="default 0,45")
    s = cmd("unfold", "finite ball of the universal cover")
    s.add_argument("--root", required=True)
    s.add_argument("--depth", type=int, required=True)
    s.add_argument("--max-vertices", type=_positive, default=20000)
    s = cmd("verify", "run the invariant checks on a graph", window=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--depth", type=int, default=3, help="truncation oracle depth")
    return p


# ---------------------------------------------------------------------------
# commands

def _no_atom(lam):
    return {"lambda": lam, "index": 0, "mass": 0.0, "components": [], "boundary": [],
            "dirichlet_boundary": []}


def _spectrum(g, args):
    pairs = compact.eigenvalues_in_window(g, args.window, args.tol, basis=False)
    return {"window": list(args.window), "total_length": g.total_length,
            "eigenvalues": [p.to_json() for p in pairs]}


def _point_spectrum(g, args):
    reps = aomoto.point_spectrum(g, args.window, cap=args.vertex_cap, exact=args.exact)
    return {"window": list(args.window), "total_length": g.total_length,
            "atoms": [r.to_json() for r in reps]}


def _aomoto(g, args):
    if args.exact:
        reps = aomoto.point_spectrum(g, (args.lam - 1e-6 * max(1, abs(args.lam)),
                                         args.lam + 1e-6 * max(1, abs(args.lam))),
                                     cap=args.vertex_cap, exact=True)
        rep = reps[0] if reps else None
    else:
        rep = aomoto.best_index(g, args.lam, cap=args.vertex_cap)
    return rep.to_json() if rep is not None else _no_atom(args.lam)


def _derived(g, args):
    dg = companions.derive(g, args.lam)
    return dict(dg.wgraph.to_json(), **{"lambda": args.lam})


def _companion(g, args):
    rep = aomoto.best_index(g, args.lam, cap=args.vertex_cap)
    if rep is None:
        raise ValidationError(f"lambda={args.lam} is not an eigenvalue of the universal cover")
    comp = companions.companion(g, rep)
    ok, nul = companions.index_identity_check(g, rep)
    return dict(comp.wgraph.to_json(), **{
        "lambda": rep.lam, "representatives": list(comp.representatives),
        "boundary": list(comp.boundary), "coupling_matrix": companions.coupling_matrix(comp).tolist(),
        "index": rep.index, "coupling_nullity": nul, "index_identity": ok})


def _cover(g, args):
    if args.table:
        if args.window is None:
            raise ValidationError("--table needs --window")
        rows = covers.convergence_experiment(g, args.window, list(range(1, args.n + 1)),
                                             [args.girth_min] * args.n, args.seed,
                                             max_tries=args.max_tries)
        return covers.convergence_csv(rows)
    cg = covers.random_cover_with_girth(g, args.n, args.girth_min, args.seed, args.max_tries,
                                        args.max_edges)
    gi = covers.girth(cg)
    return {"n": cg.n, "girth": gi, "graph": graph_to_dict(cg.cover), "fiber_map": cg.fiber_map,
            "voltage": {k: list(v) for k, v in cg.voltage.perm.items()}}


def _dos_bounds(g, args):
    atoms = aomoto.point_spectrum(g, args.window)
    cvs = [covers.random_cover_with_girth(g, n, 0, args.seed + k)
           for k, n in enumerate(args.covers)]
    rep = covers.dos_bounds_check(g, args.window, atoms, cvs)
    out = rep.to_json()
    out["weyl"] = []
    if g.has_zero_potential() and args.window[1] > 0:
        ratio, slack, ok = covers.weyl_check(g, args.window[1])
        out["weyl"].append({"x": args.window[1], "ratio": ratio, "slack": slack, "ok": ok})
    return out


def _perturb(g, args):
    res = covers.perturb_experiment(g, args.epsilon, args.trials, args.window, args.seed)
    return res


def _unfold(g, args):
    tt = unfold(g, args.root, args.depth, args.max_vertices)
    return {"root": tt.root, "graph": graph_to_dict(tt.tree), "cover_map": tt.cover_map,
            "frontier": sorted(tt.frontier), "depth": tt.depth}


def _verify(g, args):
    """Invariant suite; each entry is ``{"name", "ok", "detail"}``."""
    checks = []

    def add(name, ok, detail=None):
        checks.append({"name": name, "ok": bool(ok), "detail": detail})

    a, b = args.window
    worst, wron = 0.0, 0.0
    for e in g.edges:
        for lam in (-5.0, 0.5, 0.5 * (a + b), b):
            _, res = reverse_consistency(e, lam)
            worst = max(worst, float(np.max(res)))
            wron = max(wron, abs(transfer(e, lam).wronskian - 1.0))
    add("wronskian", wron <= 1e-10, wron)
    add("orientation identities", worst <= 1e-9, worst)

    pairs = compact.eigenvalues_in_window(g, args.window, args.tol)
    found = sum(p.multiplicity for p in pairs)
    expected = covers.counting_below(g, b) - covers.counting_below(g, a)
    add("eigenvalue count", found == expected, [found, expected])
    kernel = 0.0
    for p in pairs:
        dg = companions.derive(g, p.lam)
        A = companions.jacobi_matrix(dg.wgraph)
        for k in range(p.multiplicity):
            v = companions.gamma_map(g, p, k, dg)
            kernel = max(kernel, float(np.linalg.norm(A @ v) / np.linalg.norm(v)))
    add("derived kernel", kernel <= 1e-8, kernel)

    reps = aomoto.point_spectrum(g, args.window)
    reg = aomoto.regular_filter_check(g, reps)
    add("regular graph filter", reg is not False, "not applicable" if reg is None else reg)
    for r in reps:
        tag = f"lambda={r.lam:.12g}"
        add(f"{tag}: acyclic", induced_acyclic(g, r.maximizer.x.vset))
        add(f"{tag}: simple components", all(n == 1 for n, _ in r.certificates),
            [n for n, _ in r.certificates])
        m = compact.multiplicity_at(g, r.lam)
        add(f"{tag}: compact multiplicity >= index", m >= r.index, m)
        add(f"{tag}: pure cycle boundary", aomoto.pure_cycle_boundary_check(g, r))
        ok, nul = companions.index_identity_check(g, r)
        add(f"{tag}: index identity", ok, nul)
        v = aomoto.truncation_oracle(g, r.lam, args.depth, report=r)
        add(f"{tag}: truncation oracle", v.confirmed, v.frontier_fraction)
    cvs = []
    for k, n in enumerate((1, 2)):
        if n * len(g.edges) <= covers.MAX_COVER_EDGES:
            cvs.append(covers.random_cover_with_girth(g, n, 0, args.seed + k))
    for cg in cvs[1:]:
        for r in reps:
            add(f"lambda={r.lam:.12g}: {cg.n}-cover multiplicity",
                covers.cover_multiplicity_check(g, r, cg))
    if a > max(w for _, w in g.potential_bounds.values()):
        dos = covers.dos_bounds_check(g, args.window, reps, cvs)
        add("density-of-states bounds", dos.ok)
    return {"ok": all(c["ok"] for c in checks), "checks": checks}


COMMANDS = {
    "spectrum": _spectrum, "point-spectrum": _point_spectrum, "aomoto": _aomoto,
    "derived": _derived, "companion": _companion, "cover": _cover, "dos-bounds": _dos_bounds,
    "perturb": _perturb, "unfold": _unfold, "verify": _verify,
}


def run(args) -> tuple:
    """Execute parsed arguments; returns ``(exit code, text)``."""
    covers.thread_count()
    g = normalize(load_graph(args.graph))
    out = COMMANDS[args.command](g, args)
    text = out if isinstance(out, str) else dumps(out) + "\n"
    code = EXIT_OK
    if args.command == "verify" and not out["ok"]:
        code = EXIT_NUMERIC
    return code, text


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        code, text = run(args)
    except ValidationError as exc:
        print(f"qtree: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericError as exc:
        print(f"qtree: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except QTreeError as exc:
        print(f"qtree: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
