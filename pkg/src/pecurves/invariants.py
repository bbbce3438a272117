"""Frame matrices, Gram matrices, determinants and generator invariants.

For a path x the frame matrix M(x)(t) has columns x, x', ..., x^(n-1);
its shifted companion M'(x)(t) has columns x', ..., x^(n).  Everything a
group-equivalence criterion consumes is assembled here:

* the Frenet-type matrix M(x)^{-1} M'(x), invariant under every linear
  change x -> g x,
* the Gram matrices M^T M and M^T E_p M, invariant under the
  (pseudo-)orthogonal groups,
* the generator invariants per group: the diagonal Gram entries
  <x^(j-1), x^(j-1)> for j = 1..n for the full groups, or j = 1..n-1
  plus a determinant entry for the special groups (the determinant is
  multiplied by i^(n-p) over C with p < n); the semidirect families use
  the same functionals on the derivative path x'.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import JetOrderError, SignatureError, StrongRegularityError
from .forms import FieldTag, GroupFamily, GroupTag, Signature, e_p_matrix
from .pathexpr import Jet, PathDef, derivative_path, eval_jet


@dataclass(eq=False)
class FrameMatrices:
    """M(x)(t) and M'(x)(t) at one parameter value."""

    m: np.ndarray
    m_shift: np.ndarray
    t: float


@dataclass(frozen=True)
class GeneratorSignature:
    """Ordered generator-invariant values at one t (Gram diagonal in
    ascending derivative order; the determinant entry, if any, last)."""

    t: float
    values: tuple


@dataclass(frozen=True)
class PointwiseReport:
    """Grid report for a pointwise predicate |quantity| > threshold."""

    quantity: str
    passed: bool
    points: tuple
    values: tuple
    failures: tuple  # (t, value) pairs that violated the predicate

    @property
    def min_abs(self) -> float:
        return min(abs(v) for v in self.values)

    @property
    def max_abs(self) -> float:
        return max(abs(v) for v in self.values)


def frame_matrices(jet: Jet) -> FrameMatrices:
    """Assemble M and M' from a jet of order >= n."""
    n = jet.n
    if jet.order < n:
        raise JetOrderError(f"need jet order >= {n} for the frame pair, got {jet.order}")
    return FrameMatrices(m=jet.rows[:n].T.copy(), m_shift=jet.rows[1:n + 1].T.copy(), t=jet.t)


def _det_exact(m: np.ndarray):
    n = m.shape[0]
    if n == 2:
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if n == 3:
        return (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
                - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
                + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))
    # n == 4: expand along the first row over exact 3x3 cofactors
    total = 0.0
    for j in range(4):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total = total + (-1.0) ** j * m[0, j] * _det_exact(minor)
    return total


def det(m: np.ndarray):
    """Determinant: exact cofactor expansion up to 4x4 (bit-reproducible),
    pivoted elimination above."""
    n = m.shape[0]
    value = _det_exact(m) if n <= 4 else np.linalg.det(m)
    return complex(value) if np.iscomplexobj(m) else float(value)


def det_m(jet: Jet):
    """det M(x)(t) from a jet of order >= n-1."""
    n = jet.n
    if jet.order < n - 1:
        raise JetOrderError(f"need jet order >= {n - 1} for det M, got {jet.order}")
    return det(jet.rows[:n].T)


def gram(jet: Jet, sig: Signature, form: str = "euclidean") -> np.ndarray:
    """Gram matrix of the frame columns: M^T M (euclidean) or M^T E_p M
    (pseudo).  Entry (i, j) is the form of x^(i-1) with x^(j-1)."""
    n = jet.n
    if jet.order < n - 1:
        raise JetOrderError(f"need jet order >= {n - 1} for the Gram matrix, got {jet.order}")
    m = jet.rows[:n].T
    if form == "euclidean":
        return m.T @ m
    if form == "pseudo":
        sig.require_pseudo()
        return m.T @ e_p_matrix(sig) @ m
    raise SignatureError(f"form must be 'euclidean' or 'pseudo', got {form!r}")


def singular_tolerance(m: np.ndarray, base: float = 1e-9) -> float:
    """Scale-aware singularity threshold for |det|: base * (1 + max|entry|^n)."""
    n = m.shape[0]
    return base * (1.0 + float(np.max(np.abs(m))) ** n)


def conditioning_score(m: np.ndarray) -> float:
    """|det M| over the product of column norms (Hadamard ratio), in
    (0, 1]: how far the frame is from singular *relative to its own
    scale*.  The raw |det| can be large while the columns are huge and
    nearly parallel; inverting such frames amplifies error, so witness
    recovery picks the grid point maximizing this score instead."""
    cols = np.linalg.norm(m, axis=0)
    denom = float(np.prod(np.maximum(cols, 1e-300)))
    return float(abs(det(m))) / denom


def frenet_matrix(jet: Jet, singular_tol: float | None = None) -> np.ndarray:
    """M(x)^{-1} M'(x) at jet.t; raises StrongRegularityError when M is
    singular up to the (scale-aware) tolerance."""
    frames = frame_matrices(jet)
    d = det(frames.m)
    tol = singular_tolerance(frames.m) if singular_tol is None else singular_tol
    if abs(d) <= tol:
        raise StrongRegularityError(
            f"frame matrix singular at t={jet.t}: |det M| = {abs(d):.3e} <= {tol:.3e}",
            t=jet.t, abs_det=abs(d))
    return np.linalg.solve(frames.m, frames.m_shift)


def _det_entry(jet: Jet, sig: Signature, field: FieldTag):
    d = det_m(jet)
    if field is FieldTag.COMPLEX and not sig.euclidean:
        return (1j ** (sig.n - sig.p)) * d
    return d


def signature_from_jet(jet: Jet, group: GroupTag) -> GeneratorSignature:
    """Generator invariants from a jet of the path itself.

    The jet must already belong to the path the family acts on: for the
    semidirect families pass a jet of the derivative path (or use
    generator_signature, which does this for you).
    """
    sig = group.sig
    n = sig.n
    family = group.family.linear_part if group.family.semidirect else group.family
    form = "euclidean" if sig.euclidean else "pseudo"
    g = gram(jet, sig, form)
    diag = [g[j, j] for j in range(n)]
    if not np.iscomplexobj(g):
        diag = [float(v) for v in diag]
    else:
        diag = [complex(v) for v in diag]
    if family is GroupFamily.O:
        values = tuple(diag)
    else:
        values = tuple(diag[:n - 1]) + (_det_entry(jet, sig, group.field),)
    return GeneratorSignature(t=jet.t, values=values)


def required_jet_order(group: GroupTag) -> int:
    """Smallest jet order of the original path that determines the
    signature: n-1 for the linear families, n for the semidirect ones."""
    return group.sig.n if group.family.semidirect else group.sig.n - 1


def generator_signature(path: PathDef, group: GroupTag, t: float) -> GeneratorSignature:
    """Generator invariants of the path at t for the given group.

    Semidirect families are evaluated on the symbolically differentiated
    path, one code path for all four families.
    """
    if path.sig.n != group.sig.n:
        raise SignatureError(f"path dimension n={path.sig.n} vs group n={group.sig.n}")
    base = derivative_path(path) if group.family.semidirect else path
    jet = eval_jet(base, t, group.sig.n - 1)
    got = signature_from_jet(jet, GroupTag(group.family.linear_part, group.sig, group.field))
    return GeneratorSignature(t=t, values=got.values)


def is_strongly_regular(path: PathDef, grid, tol: float | None = None) -> PointwiseReport:
    """Check |det M(x)(t)| > tol over the grid.  tol defaults to the
    scale-aware singular tolerance computed per grid point."""
    n = path.sig.n
    values, failures = [], []
    for t in grid:
        jet = eval_jet(path, t, n - 1)
        d = det_m(jet)
        threshold = singular_tolerance(jet.rows[:n].T) if tol is None else tol
        values.append(d)
        if abs(d) <= threshold:
            failures.append((t, d))
    return PointwiseReport(quantity="det M", passed=not failures,
                           points=tuple(grid), values=tuple(values), failures=tuple(failures))


def signature_rows(path: PathDef, group: GroupTag, grid) -> list:
    """Generator signatures over a grid (the CSV/JSON dump payload)."""
    return [generator_signature(path, group, t) for t in grid]
