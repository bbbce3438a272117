"""Shared test fixtures and random path factories.

The factories produce paths that are admissible by construction
(strongly regular, and non-degenerate where arc-length machinery needs
it) and verify it numerically, retrying deterministically on the rare
draw that fails near the tolerance."""
import math

import numpy as np
import pytest

from pecurves.arclength import is_nondegenerate
from pecurves.forms import FieldTag, Signature
from pecurves.invariants import is_strongly_regular
from pecurves.pathexpr import (Const, Interval, PathDef, T, add, call, mul,
                               parse_path, sample_grid)

FULL_LINE = Interval(-math.inf, math.inf)


def path_from_text(text: str) -> PathDef:
    return parse_path(text)


HYPERBOLA_DOC = """
field: real
n: 2
p: 1
interval: (-inf, inf)
x1 = cosh(t)
x2 = sinh(t)
label: hyperbola
"""

CIRCLE_DOC = """
field: real
n: 2
p: 2
interval: (-inf, inf)
x1 = cos(t)
x2 = sin(t)
label: circle
"""


@pytest.fixture(scope="session")
def hyperbola():
    return parse_path(HYPERBOLA_DOC)


@pytest.fixture(scope="session")
def circle():
    return parse_path(CIRCLE_DOC)


def hyperbola_on(interval: Interval) -> PathDef:
    return parse_path(
        f"n: 2\np: 1\ninterval: ({interval.a}, {interval.b})\n"
        "x1 = cosh(t)\nx2 = sinh(t)\nlabel: hyperbola\n")


def exp_path(sig: Signature, seed: int, interval: Interval = FULL_LINE,
             kind: str = "mixed", field: FieldTag = FieldTag.REAL,
             check_grid=None) -> PathDef:
    """x(t) = A (exp(l_1 t), ..., exp(l_n t)) with distinct rates and a
    well-conditioned mixing matrix: det M(x) = det A * V(l) * prod e^{l t}
    never vanishes, so the path is strongly regular on the whole line (as
    is its derivative path, since no rate is zero); the Euclidean velocity
    form is automatically positive.  ``mixed`` rates are balanced to sum
    to zero, pinning the frame determinant to its t = 0 value so the path
    stays inside the scale-aware singularity window on wide grids."""
    from pecurves.pathexpr import chebyshev_grid, derivative_path

    n = sig.n
    if check_grid is None:
        check_grid = sorted(set(sample_grid(interval, 16, margin=0.12))
                            | set(chebyshev_grid(interval, 33, margin=0.08)))
    for attempt in range(8):
        rng = np.random.default_rng(10_000 * seed + attempt)
        lams = np.linspace(0.35, 0.95, n) + rng.uniform(-0.04, 0.04, n)
        if kind == "mixed":
            signs = np.ones(n)
            signs[: n // 2] = -1.0
            lams = lams * signs
            lams = lams - lams.mean()
            lams = lams[np.argsort(lams)]
        elif kind == "neg":
            lams = -lams
        if np.min(np.abs(lams)) < 0.08 or np.min(np.abs(np.diff(np.sort(lams)))) < 0.08:
            continue
        a = np.eye(n) + 0.22 * rng.uniform(-1.0, 1.0, (n, n))
        if field is FieldTag.COMPLEX:
            a = a + 0.1j * rng.uniform(-1.0, 1.0, (n, n))
        comps = []
        for i in range(n):
            e = None
            for j in range(n):
                coeff = complex(a[i, j]) if field is FieldTag.COMPLEX else float(a[i, j])
                term = mul(Const(coeff), call("exp", mul(Const(float(lams[j])), T)))
                e = term if e is None else add(e, term)
            comps.append(e)
        path = PathDef(sig=sig, field=field, components=tuple(comps),
                       interval=interval, label=f"exp{seed}")
        if (is_strongly_regular(path, check_grid).passed
                and is_strongly_regular(derivative_path(path), check_grid).passed):
            return path
    raise AssertionError(f"exp_path factory failed for sig={sig}, seed={seed}")


def trig_path(sig: Signature, seed: int, interval: Interval = FULL_LINE) -> PathDef:
    """Bounded strongly regular paths for larger n: mixed (cos w_k t,
    sin w_k t) pairs with distinct frequencies, plus a slow exponential
    when n is odd.  All complexified rates (lambda, +-i w_k) are distinct,
    so the frame determinant is |exp(lambda t)| times a nonzero constant
    and the entries stay small, keeping wide grids inside the scale-aware
    singularity window where steep exponential mixtures cannot."""
    from pecurves.pathexpr import chebyshev_grid, derivative_path

    n = sig.n
    check_grid = sorted(set(sample_grid(interval, 16, margin=0.12))
                        | set(chebyshev_grid(interval, 33, margin=0.08)))
    for attempt in range(8):
        rng = np.random.default_rng(77_000 * seed + attempt)
        m = n // 2
        omegas = np.linspace(0.6, 0.6 + 0.45 * (m - 1), m) + rng.uniform(-0.05, 0.05, m)
        basis = []
        if n % 2 == 1:
            lam = float(rng.uniform(0.2, 0.3))
            basis.append(call("exp", mul(Const(lam), T)))
        for w in omegas:
            basis.append(call("cos", mul(Const(float(w)), T)))
            basis.append(call("sin", mul(Const(float(w)), T)))
        a = np.eye(n) + 0.15 * rng.uniform(-1.0, 1.0, (n, n))
        comps = []
        for i in range(n):
            e = None
            for j in range(n):
                term = mul(Const(float(a[i, j])), basis[j])
                e = term if e is None else add(e, term)
            comps.append(e)
        path = PathDef(sig=sig, field=FieldTag.REAL, components=tuple(comps),
                       interval=interval, label=f"trig{seed}")
        if (is_strongly_regular(path, check_grid).passed
                and is_strongly_regular(derivative_path(path), check_grid).passed):
            return path
    raise AssertionError(f"trig_path factory failed for sig={sig}, seed={seed}")


def spiral_hyperbolic(seed: int, interval: Interval = FULL_LINE) -> PathDef:
    """x(t) = e^(rho(t)) (cosh t, sinh t) with rho = c + alpha tanh(beta t),
    |alpha beta| small: [x', x'] = e^(2 rho)(rho'^2 - 1) < 0 everywhere,
    det M(x) = e^(2 rho) > 0 and det M(x') < 0 everywhere, so the family
    is non-degenerate and strongly regular (as is its derivative path),
    while the generator invariants genuinely vary along the curve."""
    rng = np.random.default_rng(31_337 + seed)
    alpha = rng.uniform(0.08, 0.22)
    beta = rng.uniform(0.5, 0.9)
    c = rng.uniform(-0.3, 0.4)
    rho = add(Const(c), mul(Const(alpha), call("tanh", mul(Const(beta), T))))
    radial = call("exp", rho)
    comps = (mul(radial, call("cosh", T)), mul(radial, call("sinh", T)))
    path = PathDef(sig=Signature(2, 1), field=FieldTag.REAL, components=comps,
                   interval=interval, label=f"spiral{seed}")
    grid = sample_grid(interval, 16, margin=0.1)
    assert is_nondegenerate(path, grid).passed
    assert is_strongly_regular(path, grid).passed
    return path
