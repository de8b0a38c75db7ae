"""Command-line front end.

Exit codes: 0 success (or "injective"), 1 "not injective", 2 invalid input,
3 capacity limit exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import fano, numeric2d as nd, polyring as pr, symmetry as sy
from .exceptions import CapacityError, DomainError
from .starcore import (StarSymbol, classify_symbol, dual_symbol, is_injective,
                       laplacian_power_form)

EXIT_OK, EXIT_NO, EXIT_INVALID, EXIT_CAPACITY = 0, 1, 2, 3
GLOBAL_DEFAULTS = {"format": "json", "seed": 0, "threads": None}


class UsageError(Exception):
    pass


def _scalar_json(v):
    if isinstance(v, float):
        return v
    if hasattr(v, "denominator"):
        return v.numerator if v.denominator == 1 else str(v)
    return v


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Run:
    """Collects inputs and outputs for the machine-readable report."""

    def __init__(self, argv):
        self.argv = list(argv)
        self.inputs = {}
        self.outputs = {}
        self.text = []
        self.start = time.perf_counter()

    def star(self, path) -> StarSymbol:
        data = _load_json(path)
        self.inputs[str(path)] = _digest(path)
        return StarSymbol.from_json(data)

    def report(self) -> dict:
        return {
            "command": self.argv,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "version": __version__,
            "wall_time": round(time.perf_counter() - self.start, 6),
        }


# -- commands ----------------------------------------------------------------

def cmd_dual(args, run: Run):
    s = run.star(args.star)
    d = dual_symbol(s)
    form = laplacian_power_form(d)
    cls = classify_symbol(d) if d.sigma.is_homogeneous() else None
    run.outputs.update({
        "sigma": d.sigma.to_json(),
        "sigma_text": d.format(),
        "class": cls.value if cls else None,
        "laplacian_power": None if form is None else {"C": _scalar_json(form[0]), "j": form[1]},
        "injective": not d.sigma.is_zero(),
    })
    run.text += [f"sigma(xi) = {d.format()}", f"class: {cls.value if cls else 'n/a'}",
                 "laplacian power: " + ("none" if form is None else f"C = {form[0]}, j = {form[1]}")]
    return EXIT_OK


def cmd_injective(args, run: Run):
    s = run.star(args.star)
    ok = is_injective(s)
    run.outputs["injective"] = ok
    run.text.append("injective" if ok else "not injective")
    return EXIT_OK if ok else EXIT_NO


def cmd_symmetry(args, run: Run):
    s = run.star(args.star)
    d = dual_symbol(s)
    found = sy.branch_symmetries(s.U)
    entries = []
    for g, perm in found:
        entries.append({"g": np.round(g.g, 12).tolist(), "perm": list(perm.perm),
                        "invariant": sy.is_invariant_polynomial(d.sigma, g)})
    run.outputs.update({"count": len(entries), "symmetries": entries,
                        "all_invariant": all(e["invariant"] for e in entries),
                        "is_group": sy.is_group([g for g, _ in found])})
    run.text.append(f"{len(entries)} symmetries, dual symbol invariant under all: "
                    f"{run.outputs['all_invariant']}")
    return EXIT_OK


def cmd_shapes(args, run: Run):
    if args.shape == "polygon":
        if args.m is None:
            raise UsageError("shapes polygon needs --m")
        U = sy.regular_polygon_branches(args.m)
    else:
        U = sy.platonic_branches(args.shape)
    run.outputs["U"] = U.to_json()
    run.text += [" ".join(f"{float(v): .12g}" for v in r) for r in U.rows]
    return EXIT_OK


def cmd_fano(args, run: Run):
    if args.fano_cmd == "matchings":
        mats = []
        for mt in fano.perfect_matchings(2 * args.n):
            U = fano.matching_to_branch_matrix(mt)
            mats.append({"matching": [list(p) for p in mt.pairs], "U": U.to_json(),
                         "canonical": fano.canonical_subspace(U).to_json()})
        run.outputs.update({"count": len(mats), "matrices": mats})
        run.text.append(f"{len(mats)} perfect matchings of 1..{2 * args.n}")
    elif args.fano_cmd == "cayley":
        lines = [{"kind": ln.kind.value, "label": [list(x) if isinstance(x, tuple) else x
                                                   for x in ln.label],
                  "basis": ln.basis.to_json()} for ln in fano.cayley_lines()]
        run.outputs.update({"count": len(lines), "lines": lines})
        run.text += [f"{ln['kind']:8s} {ln['label']}" for ln in lines]
    else:
        cs = fano.chart_equations(args.m, args.n)
        run.outputs["system"] = cs.to_json()
        run.text += [f"[{' '.join(map(str, mon))}] {eq.format(names=cs.unknown_names())} = 0"
                     for mon, eq in zip(cs.monomials, cs.equations)]
        if args.solve:
            clusters = fano.solve_chart_newton(cs, args.starts, args.seed)
            rep = []
            for c in clusters:
                U = cs.branch_matrix(c.center)
                ok = fano.subspace_in_hypersurface(
                    U.tolist(), pr.elementary_symmetric(cs.m - 1, cs.m, pr.FLOAT))
                rep.append({"center": list(c.center), "multiplicity": c.multiplicity,
                            "residual": c.residual, "in_hypersurface": ok})
            run.outputs["clusters"] = rep
            run.text += [f"cluster {r['center']} x{r['multiplicity']}" for r in rep]
    return EXIT_OK


def _phantom(args, run: Run) -> nd.Phantom:
    if args.phantom is None:
        return nd.Phantom()
    run.inputs[str(args.phantom)] = _digest(args.phantom)
    return nd.Phantom.from_json(_load_json(args.phantom))


def _write(path, f: nd.Field2D):
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        nd.write_csv(path, f)
    elif suffix == ".pgm":
        nd.write_pgm(path, f)
    else:
        nd.write_field(path, f)


def cmd_sim(args, run: Run):
    s = run.star(args.star)
    dom = nd.Domain2D(args.n)
    f = nd.make_phantom(_phantom(args, run), dom)
    if args.sim_cmd == "forward":
        g = nd.apply_star(f, s)
        run.outputs.update({"n": args.n, "norm_f": f.norm(), "norm_g": g.norm()})
        if args.out:
            _write(args.out, g)
        run.text.append(f"||Sf|| = {g.norm():.6g}")
    elif args.sim_cmd == "invert":
        if args.input:
            run.inputs[str(args.input)] = _digest(args.input)
            g = nd.read_field(args.input)
            if g.domain.n != args.n:
                raise UsageError("--n does not match the input field")
        else:
            g = nd.apply_star(f, s)
        rec = nd.invert_star(g, s, args.reg, args.method)
        run.outputs.update({"n": args.n, "rel_l2_error": None if args.input else nd.rel_l2(rec, f)})
        if args.out:
            _write(args.out, rec)
        if not args.input:
            run.text.append(f"relative L2 error {run.outputs['rel_l2_error']:.6g}")
    else:
        r = nd.null_residual(s, f)
        run.outputs.update({"n": args.n, "null_residual": r})
        run.text.append(f"null residual {r:.6g}")
        if args.reference:
            ref = run.star(args.reference)
            r0 = nd.null_residual(ref, f)
            run.outputs.update({"reference_residual": r0, "ratio": r / r0})
            run.text.append(f"reference residual {r0:.6g}, ratio {r / r0:.3g}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a subcommand's defaults from clobbering flags given earlier
    common.add_argument("--format", choices=("json", "text"), default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="JSON file with defaults for global flags")

    p = argparse.ArgumentParser(prog="startransform", parents=[common],
                                description="Star transform symbols, symmetries, Fano data and 2D numerics.")
    sub = p.add_subparsers(dest="cmd", required=True)

    for name, fn in (("dual", cmd_dual), ("injective", cmd_injective), ("symmetry", cmd_symmetry)):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("star", help="StarSymbol JSON file")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("shapes", parents=[common])
    sp.add_argument("shape", choices=["polygon"] + [k.value for k in sy.SolidKind])
    sp.add_argument("--m", type=int)
    sp.set_defaults(func=cmd_shapes)

    fp = sub.add_parser("fano", parents=[common])
    fsub = fp.add_subparsers(dest="fano_cmd", required=True)
    a = fsub.add_parser("matchings", parents=[common])
    a.add_argument("--n", type=int, required=True)
    fsub.add_parser("cayley", parents=[common])
    c = fsub.add_parser("chart", parents=[common])
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--solve", action="store_true")
    c.add_argument("--starts", type=int, default=500)
    fp.set_defaults(func=cmd_fano)

    simp = sub.add_parser("sim", parents=[common])
    ssub = simp.add_subparsers(dest="sim_cmd", required=True)
    for name in ("forward", "invert", "nullcheck"):
        s = ssub.add_parser(name, parents=[common])
        s.add_argument("--star", required=True)
        s.add_argument("--phantom")
        s.add_argument("--n", type=int, default=128)
        s.add_argument("--out")
        if name == "invert":
            s.add_argument("--input", help="SFLD field to invert instead of simulating")
            s.add_argument("--reg", type=float, default=1e-3)
            s.add_argument("--method", choices=("auto", "fourier"), default="auto")
        if name == "nullcheck":
            s.add_argument("--reference", help="second star for a residual ratio")
    simp.set_defaults(func=cmd_sim)
    return p


def _resolve_globals(args):
    conf = {}
    if getattr(args, "config", None):
        conf = _load_json(args.config)
        if not isinstance(conf, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(conf) - set(GLOBAL_DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    for key, default in GLOBAL_DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, conf.get(key, default))


def _emit(run: Run, fmt: str, out=None):
    out = sys.stdout if out is None else out
    if fmt == "json":
        out.write(json.dumps(run.report(), sort_keys=True, indent=2) + "\n")
    else:
        out.write("\n".join(run.text) + "\n")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    run = Run(argv)
    try:
        _resolve_globals(args)
        if args.threads:
            import numba
            numba.set_num_threads(args.threads)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            code = args.func(args, run)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (DomainError, UsageError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _emit(run, args.format)
    return code


if __name__ == "__main__":
    sys.exit(main())
