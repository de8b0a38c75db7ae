"""Acceptance criteria 1-8.

Each ``criterion_N`` returns ``(passed, detail)``.  Under pytest every
criterion is one test and a PASS/FAIL line per criterion is printed in the
terminal summary; ``python tests/test_acceptance.py`` prints the same lines.
"""

import json
import math
import random
import subprocess
import sys
import time
from fractions import Fraction
from math import factorial

import numpy as np
import pytest

from startransform import fano
from startransform import polyring as pr
from startransform.numeric2d import (Domain2D, Phantom, apply_star, beam_transform,
                                     directional_derivative, invert_star, make_phantom,
                                     null_residual, rel_l2)
from startransform.starcore import (BranchMatrix, StarSymbol, dual_symbol,
                                    dual_symbol_permanent_path, elementary_of_forms_via_permanent,
                                    laplacian_power_form)
from startransform.symmetry import (SolidKind, branch_symmetries, is_invariant_polynomial,
                                    platonic_branches, regular_polygon_branches)

RESULTS = {}
S3 = math.sqrt(3) / 2
TRIANGLE = [[1.0, 0.0], [-0.5, S3], [-0.5, -S3]]
SQUARE = [[1, 0], [-1, 0], [0, 1], [0, -1]]


def _radial(n, j, field):
    r = sum((pr.variable(i, n, field) ** 2 for i in range(1, n)), pr.variable(0, n, field) ** 2)
    return r ** j


def _e_of_forms(r, U):
    return pr.substitute_linear_forms(pr.elementary_symmetric(r, U.m, U.field), U)


def criterion_1():
    t0 = time.perf_counter()
    worst = 0.0
    for m in range(3, 9):
        U = regular_polygon_branches(m)
        for r in range(1, m):
            sigma = _e_of_forms(r, U)
            if r % 2:
                dev = sigma.max_abs_coefficient() if len(sigma) else 0.0
            else:
                form = laplacian_power_form(sigma)
                if form is None or form[1] != r // 2:
                    return False, f"m={m} r={r}: not a Laplacian power"
                dev = pr.max_coefficient_deviation(sigma, _radial(2, r // 2, pr.FLOAT) * form[0])
                dev /= max(1.0, sigma.max_abs_coefficient())
            worst = max(worst, dev)
    C, j = laplacian_power_form(dual_symbol(StarSymbol.elementary(1, TRIANGLE)))
    c_err = abs(C + 0.75)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and j == 1 and c_err <= 1e-12 and dt < 1.0
    return ok, f"max deviation {worst:.2e}, triangle |C+3/4| = {c_err:.1e}, {dt:.2f}s"


def criterion_2():
    t0 = time.perf_counter()
    checks = []
    exact = {"tetrahedron": ([1], -2), "octahedron": ([1, 3, 5], -1), "cube": ([1, 3, 5, 7], -4)}
    for kind, (zeros, C) in exact.items():
        U = platonic_branches(kind)
        checks.append(U.field == pr.EXACT)
        checks += [_e_of_forms(r, U).is_zero() for r in zeros]
        checks.append(_e_of_forms(2, U) == _radial(3, 1, pr.EXACT) * C)
    for kind in ("icosahedron", "dodecahedron"):
        U = platonic_branches(kind)
        for r in (2, 4):
            sigma = _e_of_forms(r, U)
            form = laplacian_power_form(sigma)
            checks.append(form is not None and form[1] == r // 2)
            if form is not None:
                dev = pr.max_coefficient_deviation(sigma, _radial(3, r // 2, pr.FLOAT) * form[0])
                checks.append(dev <= 1e-9 * max(1.0, abs(form[0])))
    dt = time.perf_counter() - t0
    return all(checks) and dt < 30, f"{sum(checks)}/{len(checks)} identities, {dt:.2f}s"


def criterion_3():
    catalog = [("triangle", BranchMatrix(TRIANGLE)), ("square", BranchMatrix(SQUARE))]
    catalog += [(f"{m}-gon", regular_polygon_branches(m)) for m in range(3, 9)]
    catalog += [(k.value, platonic_branches(k)) for k in SolidKind]
    counts = {}
    bad = []
    for name, U in catalog:
        syms = [g for g, _ in branch_symmetries(U)]
        counts[name] = len(syms)
        for k in range(max(1, U.m - 4), U.m):
            sigma = dual_symbol(StarSymbol.elementary(k, U)).sigma
            if not all(is_invariant_polynomial(sigma, g) for g in syms):
                bad.append((name, k))
    ok = (not bad and counts["tetrahedron"] == 24 and counts["square"] == 8
          and counts["triangle"] == 6)
    return ok, (f"tetrahedron {counts['tetrahedron']}, square {counts['square']}, "
                f"triangle {counts['triangle']}, non-invariant cases {len(bad)}")


def criterion_4():
    t0 = time.perf_counter()
    rng = random.Random(2024)
    compared = 0
    for _ in range(50):
        m, n = rng.randint(1, 6), rng.randint(1, 3)
        U = BranchMatrix([[Fraction(rng.randint(-6, 6), rng.randint(1, 5)) for _ in range(n)]
                          for _ in range(m)])
        for r in range(0, min(4, m) + 1):
            if elementary_of_forms_via_permanent(r, U) != _e_of_forms(r, U):
                return False, f"e_r mismatch for m={m} n={n} r={r}"
            compared += 1
            if r < m:
                # full dual-symbol routes; e_0 is excluded since its reciprocal is 1, not e_m
                s = StarSymbol.elementary(m - r, U)
                if dual_symbol_permanent_path(s).sigma != dual_symbol(s).sigma:
                    return False, f"dual symbol mismatch for m={m} n={n} r={r}"
                compared += 1
    dt = time.perf_counter() - t0
    return dt < 10, f"{compared} exact agreements over 50 matrices, {dt:.2f}s"


def criterion_5():
    checks = {}
    for m, count in ((4, 3), (6, 15), (8, 105)):
        subs = fano.enumerate_isolated_subspaces(m // 2)
        e = pr.elementary_symmetric(m - 1, m)
        checks[f"m={m}"] = (len(subs) == count == fano.double_factorial(m - 1)
                            and len({c.rows for c in subs}) == count
                            and all(fano.subspace_in_hypersurface(c, e) for c in subs))
    for n in (1, 2, 3):
        checks[f"stab n={n}"] = fano.signed_permutation_stabilizer(n) == 2 ** n * factorial(n)
    rng = random.Random(7)

    def rand_rows(m, n, zeros):
        rows = [[Fraction(rng.choice([-1, 1]) * rng.randint(1, 9), rng.randint(1, 4))
                 for _ in range(n)] for _ in range(m)]
        for i in rng.sample(range(m), zeros):
            rows[i] = [0] * n
        return rows

    two = one = 0
    for _ in range(100):
        n = rng.randint(1, 3)
        m = rng.randint(n + 2, 7)
        two += fano.subspace_in_hypersurface(rand_rows(m, n, 2), pr.elementary_symmetric(m - 1, m))
        m = rng.randint(n + 1, 7)
        one += not fano.subspace_in_hypersurface(rand_rows(m, n, 1), pr.elementary_symmetric(m - 1, m))
    checks["two-zero"] = two == 100
    checks["one-zero"] = one == 100
    failed = [k for k, v in checks.items() if not v]
    return not failed, f"two-zero {two}/100, one-zero excluded {one}/100, failed: {failed or 'none'}"


def criterion_6():
    lines = fano.cayley_lines()
    e3 = pr.elementary_symmetric(3, 4)
    ok_lines = len(lines) == 9 and all(fano.subspace_in_hypersurface(ln.basis, e3) for ln in lines)
    reference = [[[1, 0], [-1, 0], [0, 1], [0, -1]], [[1, 0], [0, 1], [-1, 0], [0, -1]],
               [[1, 0], [-1, 0], [0, -1], [0, 1]]]
    ok_reference = all(pr.substitute_linear_forms(e3, U).is_zero() for U in reference)
    clusters = fano.solve_chart_newton(fano.chart_equations(4, 2), starts=500, seed=0)
    centers = sorted(tuple(round(v, 9) + 0.0 for v in c.center) for c in clusters)
    want = sorted([(0.0, 0.0, 0.0, 0.0), (-1.0, 0.0, 0.0, -1.0), (0.0, -1.0, -1.0, 0.0)])
    worst = max(c.residual for c in clusters) if clusters else float("inf")
    ok = ok_lines and ok_reference and centers == want and worst < 1e-12
    return ok, f"{len(lines)} lines, {len(clusters)} clusters, max residual {worst:.1e}"


def criterion_7():
    t0 = time.perf_counter()
    dirs = [(math.cos(a), math.sin(a)) for a in np.linspace(0, 2 * math.pi, 8, endpoint=False)]
    errs = []
    for n in (128, 256, 512):
        f = make_phantom(Phantom(), Domain2D(n))
        errs.append(max(rel_l2(directional_derivative(beam_transform(f, u), u), f) for u in dirs))
    order = math.log2(errs[1] / errs[2])
    tri = StarSymbol.elementary(1, TRIANGLE)
    inv = []
    for n in (128, 256):
        f = make_phantom(Phantom(), Domain2D(n))
        inv.append(rel_l2(invert_star(apply_star(f, tri), tri), f))
    f = make_phantom(Phantom(), Domain2D(256))
    ratio = null_residual(StarSymbol.elementary(1, SQUARE), f) / null_residual(tri, f)
    dt = time.perf_counter() - t0
    ok = (errs[2] <= 0.02 and order >= 1 and inv[1] <= 0.05 and inv[1] < inv[0]
          and ratio <= 1e-2 and dt < 60)
    return ok, (f"identity {errs[2]:.2%} at N=512 (order {order:.2f}), inversion "
                f"{inv[0]:.2%} -> {inv[1]:.2%}, null ratio {ratio:.1e}, {dt:.1f}s")


def criterion_8(tmp_dir):
    tri = tmp_dir / "tri.json"
    sq = tmp_dir / "sq.json"
    tri.write_text(json.dumps(StarSymbol.elementary(1, TRIANGLE).to_json()))
    sq.write_text(json.dumps(StarSymbol.elementary(1, SQUARE).to_json()))
    commands = [
        ["--seed", "0", "dual", str(tri)],
        ["--seed", "0", "symmetry", str(sq)],
        ["--seed", "5", "fano", "chart", "--m", "4", "--n", "2", "--solve", "--starts", "300"],
        ["--seed", "0", "sim", "nullcheck", "--star", str(sq), "--reference", str(tri), "--n", "64"],
    ]
    for argv in commands:
        outs = []
        for _ in range(2):
            res = subprocess.run([sys.executable, "-m", "startransform", *argv],
                                 capture_output=True, check=True)
            rep = json.loads(res.stdout)
            rep.pop("wall_time")
            outs.append(json.dumps(rep, sort_keys=True, indent=2).encode())
        if outs[0] != outs[1]:
            return False, f"reports differ for {' '.join(argv)}"
    return True, f"{len(commands)} commands byte-identical across runs"


def _record(num, result):
    ok, detail = result
    RESULTS[num] = f"criterion {num}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(RESULTS[num])
    return ok


@pytest.mark.parametrize("num", [1, 2, 3, 4, 5, 6, 7])
def test_criterion(num):
    assert _record(num, globals()[f"criterion_{num}"]())


def test_criterion_8(tmp_path):
    assert _record(8, criterion_8(tmp_path))


if __name__ == "__main__":
    import pathlib
    import tempfile
    okays = []
    for num in range(1, 8):
        okays.append(_record(num, globals()[f"criterion_{num}"]()))
    with tempfile.TemporaryDirectory() as d:
        okays.append(_record(8, criterion_8(pathlib.Path(d))))
    sys.exit(0 if all(okays) else 1)
