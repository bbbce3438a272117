"""Path-level group equivalence: criteria, witness recovery, sampling.

Two strongly regular paths x, y on a common interval are equivalent
under the full orthogonal/pseudo-orthogonal group exactly when their
Frenet-type matrices M^{-1}M' and their Gram matrices agree for all t;
the special groups additionally need det M(x) = det M(y).  The
semidirect (motion) families reduce to the same test on the derivative
paths x', y', with the translation recovered afterwards as the constant
difference y - g x.

The decision here is numeric: the identities are enforced on a finite
grid (Chebyshev-distributed by default) with a relative tolerance, and a
concrete witness (g, u) is reconstructed and cross-validated on the same
grid.  The verdict is positive only when both the identity checks and
the witness residuals pass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (DimensionMismatchError, IntervalMismatchError, SignatureError,
                     StrongRegularityError)
from .forms import FieldTag, GroupTag, e_p_matrix
from .invariants import (conditioning_score, det, frame_matrices, gram,
                         singular_tolerance)
from .pathexpr import (Const, PathDef, add, chebyshev_grid, derivative_path, eval_jet,
                       mul)

DEFAULT_GRID_COUNT = 33
DEFAULT_TOLERANCE = 1e-8


@dataclass(eq=False)
class GroupElement:
    """A concrete witness: linear part g, translation u (motion families only)."""

    g: np.ndarray
    u: np.ndarray | None = None

    def __post_init__(self):
        self.g = np.asarray(self.g)
        if self.u is not None:
            self.u = np.asarray(self.u)


def compose_elements(h1: GroupElement, h2: GroupElement) -> GroupElement:
    """Group law (u1, g1)(u2, g2) = (u1 + g1 u2, g1 g2)."""
    g = h1.g @ h2.g
    if h1.u is None and h2.u is None:
        return GroupElement(g=g)
    u1 = h1.u if h1.u is not None else np.zeros(h1.g.shape[0])
    u2 = h2.u if h2.u is not None else np.zeros(h2.g.shape[0])
    return GroupElement(g=g, u=u1 + h1.g @ u2)


def invert_element(h: GroupElement) -> GroupElement:
    """(u, g)^{-1} = (-g^{-1} u, g^{-1})."""
    ginv = np.linalg.inv(h.g)
    return GroupElement(g=ginv, u=None if h.u is None else -(ginv @ h.u))


@dataclass(frozen=True)
class Failure:
    """One violated identity: where, which, how badly."""

    t: float
    identity: str
    defect: float


@dataclass(eq=False)
class EquivalenceVerdict:
    equivalent: bool
    witness: GroupElement | None
    max_defect: float
    failures: tuple
    group: GroupTag
    tolerance: float

    def __bool__(self):
        return self.equivalent


def _entry_scale(*mats) -> float:
    return max(float(np.max(np.abs(np.asarray(m)))) for m in mats)


def _rel_defect(a, b) -> float:
    """max|a - b| / (1 + max participating entry magnitude)."""
    am, bm = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(am - bm))) / (1.0 + _entry_scale(am, bm))


def recover_linear(x: PathDef, y: PathDef, t0: float) -> np.ndarray:
    """The unique linear candidate g = M(y)(t0) M(x)(t0)^{-1}.

    Any g with y = g x satisfies M(y) = g M(x), so when M(x)(t0) is
    invertible this is the only possible witness.
    """
    n = x.sig.n
    if y.sig.n != n:
        raise DimensionMismatchError(f"paths live in different dimensions: {n} vs {y.sig.n}")
    mx = frame_matrices(eval_jet(x, t0, n)).m
    my = frame_matrices(eval_jet(y, t0, n)).m
    d = det(mx)
    tol = singular_tolerance(mx)
    if abs(d) <= tol:
        raise StrongRegularityError(
            f"M(x)({t0}) is singular (|det| = {abs(d):.3e}); cannot recover the linear part",
            t=t0, abs_det=abs(d))
    return my @ np.linalg.inv(mx)


def recover_translation(x: PathDef, y: PathDef, g, grid) -> tuple:
    """Mean of y(t) - g x(t) over the grid, and the max deviation from
    that mean (near zero exactly when the difference is constant)."""
    gm = np.asarray(g)
    diffs = []
    for t in grid:
        xv = eval_jet(x, t, 0).rows[0]
        yv = eval_jet(y, t, 0).rows[0]
        diffs.append(yv - gm @ xv)
    diffs = np.array(diffs)
    u = diffs.mean(axis=0)
    spread = float(np.max(np.abs(diffs - u))) if len(diffs) else 0.0
    return u, spread


def _check_regular(label: str, mat: np.ndarray, t: float, singular_tol=None):
    d = det(mat)
    tol = singular_tolerance(mat) if singular_tol is None else singular_tol
    if abs(d) <= tol:
        raise StrongRegularityError(
            f"path {label!r} is not strongly regular at t={t}: |det M| = {abs(d):.3e} <= {tol:.3e}",
            t=t, abs_det=abs(d))
    return d


def paths_equivalent(x: PathDef, y: PathDef, group: GroupTag, grid=None,
                     tol: float = DEFAULT_TOLERANCE, singular_tol=None) -> EquivalenceVerdict:
    """Decide group-equivalence of two paths on a common interval.

    Runs the identity criteria (Frenet equality, Gram equality, and the
    determinant equality for the special families; all on the derivative
    paths for the motion families), then reconstructs the witness at the
    best-conditioned grid point and validates y = g x (+ u) on the whole
    grid.  Both layers must pass.
    """
    if x.interval != y.interval:
        raise IntervalMismatchError(f"paths live on different intervals {x.interval} vs {y.interval}")
    n = group.sig.n
    if x.sig.n != n or y.sig.n != n:
        raise DimensionMismatchError(
            f"group acts on K^{n} but paths have n={x.sig.n}, n={y.sig.n}")
    if x.field is not y.field:
        raise SignatureError("paths are over different fields")
    if grid is None:
        grid = chebyshev_grid(x.interval, DEFAULT_GRID_COUNT)
    grid = list(grid)

    fam = group.family
    xb, yb = (derivative_path(x), derivative_path(y)) if fam.semidirect else (x, y)
    form = "euclidean" if group.sig.euclidean else "pseudo"

    failures = []
    max_defect = 0.0

    def record(t, name, defect):
        nonlocal max_defect
        max_defect = max(max_defect, defect)
        if defect > tol:
            failures.append(Failure(t=t, identity=name, defect=defect))

    best_t, best_score = None, -1.0
    frames_x = {}
    frames_y = {}
    for t in grid:
        jx = eval_jet(xb, t, n)
        jy = eval_jet(yb, t, n)
        fx = frame_matrices(jx)
        fy = frame_matrices(jy)
        dx = _check_regular(xb.label or "x", fx.m, t, singular_tol)
        dy = _check_regular(yb.label or "y", fy.m, t, singular_tol)
        frames_x[t] = fx
        frames_y[t] = fy
        score = conditioning_score(fx.m)
        if score > best_score:
            best_score, best_t = score, t

        record(t, "frenet", _rel_defect(np.linalg.solve(fx.m, fx.m_shift),
                                        np.linalg.solve(fy.m, fy.m_shift)))
        record(t, "gram", _rel_defect(gram(jx, group.sig, form), gram(jy, group.sig, form)))
        if fam.special:
            record(t, "det", abs(dx - dy) / (1.0 + max(abs(dx), abs(dy))))

    # witness reconstruction at the best-conditioned point
    g = frames_y[best_t].m @ np.linalg.inv(frames_x[best_t].m)
    e = e_p_matrix(group.sig)
    record(best_t, "membership",
           float(np.max(np.abs(g.T @ e @ g - e))) / (1.0 + _entry_scale(g.T @ e @ g, e)))
    if fam.special:
        dg = det(g)
        record(best_t, "membership-det", float(abs(dg - 1.0)) / (1.0 + max(abs(dg), 1.0)))

    u = None
    if fam.semidirect:
        u, _spread = recover_translation(x, y, g, grid)
    for t in grid:
        xv = eval_jet(x, t, 0).rows[0]
        yv = eval_jet(y, t, 0).rows[0]
        target = g @ xv + (u if u is not None else 0.0)
        record(t, "witness", float(np.max(np.abs(yv - target))) / (1.0 + _entry_scale(yv, target)))

    equivalent = not failures
    witness = GroupElement(g=g, u=u) if equivalent else None
    return EquivalenceVerdict(equivalent=equivalent, witness=witness,
                              max_defect=max_defect, failures=tuple(failures),
                              group=group, tolerance=tol)


# ---------------------------------------------------------------------------
# Sampling and acting


def _expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring on the Taylor series."""
    norm = float(np.max(np.abs(a)))
    squarings = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    m = a / (2.0 ** squarings)
    n = a.shape[0]
    eye = np.eye(n, dtype=a.dtype)
    term = eye.copy()
    total = eye.copy()
    for k in range(1, 40):
        term = term @ m / k
        total = total + term
        if float(np.max(np.abs(term))) < 1e-18 * (1.0 + float(np.max(np.abs(total)))):
            break
    for _ in range(squarings):
        total = total @ total
    return total


def sample_group_element(group: GroupTag, seed: int, scale: float = 1.0) -> GroupElement:
    """Deterministic pseudo-random element of the group.

    Builds A with A^T E_p = -E_p A and exponentiates; that lands in the
    identity component of SO(n,p,K).  The O-not-SO families compose with
    the fixed reflection diag(1,...,1,-1).  Motion families attach a
    translation drawn uniformly from [-scale, scale]^n.
    """
    rng = np.random.default_rng(seed)
    n = group.sig.n
    complex_field = group.field is FieldTag.COMPLEX
    b = rng.uniform(-1.0, 1.0, (n, n))
    if complex_field:
        b = b + 1j * rng.uniform(-1.0, 1.0, (n, n))
    e = e_p_matrix(group.sig)
    a = b - e @ b.T @ e
    strength = rng.uniform(0.2, 0.8)
    top = float(np.max(np.abs(a)))
    if top > 0:
        a = a * (strength / top)
    g = _expm(a.astype(complex) if complex_field else a)
    if not group.family.special:
        reflect = np.eye(n)
        reflect[n - 1, n - 1] = -1.0
        g = g @ reflect
    u = None
    if group.family.semidirect:
        u = rng.uniform(-scale, scale, n)
        if complex_field:
            u = u + 1j * rng.uniform(-scale, scale, n)
    return GroupElement(g=g, u=u)


def apply(h: GroupElement, path: PathDef) -> PathDef:
    """Act on a path: new components are the exact symbolic combinations
    sum_j g_ij x_j(t) + u_i; the interval is unchanged."""
    g = np.asarray(h.g)
    n = path.sig.n
    if g.shape != (n, n):
        raise DimensionMismatchError(f"element is {g.shape}, path lives in K^{n}")
    if path.field is FieldTag.REAL and (np.iscomplexobj(g) and np.max(np.abs(g.imag)) > 0):
        raise SignatureError("complex group element acting on a real-field path")
    if h.u is not None and np.asarray(h.u).shape != (n,):
        raise DimensionMismatchError(f"translation has shape {np.asarray(h.u).shape}, expected ({n},)")

    def scalar(v):
        return complex(v) if np.iscomplexobj(np.asarray(v)) else float(v)

    components = []
    for i in range(n):
        acc = Const(0.0)
        for j in range(n):
            acc = add(acc, mul(Const(scalar(g[i, j])), path.components[j]))
        if h.u is not None:
            acc = add(acc, Const(scalar(np.asarray(h.u)[i])))
        components.append(acc)
    label = f"h({path.label})" if path.label else "moved"
    return PathDef(sig=path.sig, field=path.field, components=tuple(components),
                   interval=path.interval, label=label)
