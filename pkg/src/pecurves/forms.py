"""Field/signature configuration, bilinear forms and group membership.

The two forms used everywhere are

    (x, y) = x1*y1 + ... + xn*yn                     (Euclidean)
    [x, y] = x1*y1 + ... + xp*yp - x(p+1)*y(p+1) - ... - xn*yn

Both are *bilinear over the base field, never sesquilinear*: over the
complex numbers there is no conjugation in either slot.  Numeric
libraries default to Hermitian products (``np.vdot``, ``a.conj() @ b``),
which are the wrong object here; everything in this module uses the
plain transpose and plain products.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, SignatureError


class FieldTag(enum.Enum):
    """Base field K: real or complex."""

    REAL = "real"
    COMPLEX = "complex"


class GroupFamily(enum.Enum):
    """The four group families.

    O/SO are the (special) orthogonal groups for p = n and the (special)
    pseudo-orthogonal groups for 1 <= p <= n-1.  EO/ESO are their
    semidirect products with the translation group K^n (the motion
    groups when K is real), acting by x -> g x + u.
    """

    O = "o"
    SO = "so"
    EO = "eo"
    ESO = "eso"

    @property
    def special(self) -> bool:
        return self in (GroupFamily.SO, GroupFamily.ESO)

    @property
    def semidirect(self) -> bool:
        return self in (GroupFamily.EO, GroupFamily.ESO)

    @property
    def linear_part(self) -> "GroupFamily":
        """The underlying linear family (EO -> O, ESO -> SO)."""
        return GroupFamily.SO if self.special else GroupFamily.O


@dataclass(frozen=True)
class Signature:
    """Ambient dimension n and form index p.

    p = n selects the Euclidean form (x, y); 1 <= p <= n-1 selects the
    indefinite form [x, y] with p plus signs.  p = 0 is representable
    but rejected by every form constructor.
    """

    n: int
    p: int

    def __post_init__(self):
        if not isinstance(self.n, int) or not isinstance(self.p, int):
            raise SignatureError(f"n and p must be integers, got n={self.n!r} p={self.p!r}")
        if self.n < 2:
            raise SignatureError(f"ambient dimension must be >= 2, got n={self.n}")
        if not 0 <= self.p <= self.n:
            raise SignatureError(f"index must satisfy 0 <= p <= n, got p={self.p} for n={self.n}")

    @property
    def euclidean(self) -> bool:
        return self.p == self.n

    def require_pseudo(self):
        if not 1 <= self.p <= self.n - 1:
            raise SignatureError(
                f"pseudo-orthogonal constructions need 1 <= p <= n-1, got p={self.p} for n={self.n}"
            )


def e_p_matrix(sig: Signature) -> np.ndarray:
    """Diagonal form matrix: +1 in the first p slots, -1 in the rest.

    p = n degenerates to the identity, unifying the Euclidean and
    pseudo-Euclidean code paths.
    """
    if sig.p == sig.n:
        return np.eye(sig.n)
    sig.require_pseudo()
    d = np.ones(sig.n)
    d[sig.p:] = -1.0
    return np.diag(d)


def _as_pair(x, y):
    xv = np.asarray(x)
    yv = np.asarray(y)
    if xv.ndim != 1 or yv.ndim != 1 or xv.shape != yv.shape:
        raise DimensionMismatchError(f"form arguments must be equal-length vectors, got shapes {xv.shape} and {yv.shape}")
    return xv, yv


def _as_scalar(v):
    # keep real results real: no silent promotion to complex
    if np.iscomplexobj(v):
        return complex(v)
    return float(v)


def euclidean_form(x, y):
    """(x, y) = sum x_i y_i.  Bilinear, no conjugation over C."""
    xv, yv = _as_pair(x, y)
    return _as_scalar(xv @ yv)


def pseudo_form(x, y, sig: Signature):
    """[x, y] = sum_{i<=p} x_i y_i - sum_{i>p} x_i y_i = x^T E_p y."""
    sig.require_pseudo()
    xv, yv = _as_pair(x, y)
    if xv.shape[0] != sig.n:
        raise DimensionMismatchError(f"vectors of length {xv.shape[0]} do not match n={sig.n}")
    p = sig.p
    return _as_scalar(xv[:p] @ yv[:p] - xv[p:] @ yv[p:])


def form_value(x, y, sig: Signature):
    """The signature's own form: Euclidean when p = n, pseudo otherwise."""
    if sig.euclidean:
        xv, yv = _as_pair(x, y)
        if xv.shape[0] != sig.n:
            raise DimensionMismatchError(f"vectors of length {xv.shape[0]} do not match n={sig.n}")
        return _as_scalar(xv @ yv)
    return pseudo_form(x, y, sig)


def h_matrix(sig: Signature, field: FieldTag = FieldTag.COMPLEX) -> np.ndarray:
    """diag(1,...,1, i,...,i) with p ones; H^T = H and H^2 = E_p.

    Conjugation by H carries the pseudo-orthogonal group over C onto the
    orthogonal group, which is why [v, v] = (Hv, Hv).  Only defined over
    the complex field.
    """
    if field is not FieldTag.COMPLEX:
        raise SignatureError("the H matrix exists only over the complex field")
    sig.require_pseudo()
    d = np.ones(sig.n, dtype=complex)
    d[sig.p:] = 1j
    return np.diag(d)


@dataclass(frozen=True)
class GroupTag:
    """One of the groups acting on K^n: family + signature + base field.

    p = n selects O(n,K)/SO(n,K); 1 <= p <= n-1 selects the
    pseudo-orthogonal O(n,p,K)/SO(n,p,K).  EO/ESO prepend translations.
    """

    family: GroupFamily
    sig: Signature
    field: FieldTag = FieldTag.REAL

    def __post_init__(self):
        if self.sig.p < 1:
            raise SignatureError(f"group signature needs p >= 1, got p={self.sig.p}")

    def membership_defect(self, g) -> float:
        return membership_defect(g, self.family, self.sig)

    def __str__(self):
        n, p = self.sig.n, self.sig.p
        k = "R" if self.field is FieldTag.REAL else "C"
        core = f"{'SO' if self.family.special else 'O'}({n},{k})" if p == n else \
            f"{'SO' if self.family.special else 'O'}({n},{p},{k})"
        return f"{k}^{n}x{core}" if self.family.semidirect else core


def membership_defect(g, family: GroupFamily, sig: Signature) -> float:
    """How far g is from the group: max-norm of g^T E_p g - E_p, plus
    |det g - 1| for the special families.  Zero (up to roundoff) exactly
    on members.  Translations are unconstrained, so EO/ESO measure the
    linear part only.
    """
    gm = np.asarray(g)
    if gm.shape != (sig.n, sig.n):
        raise DimensionMismatchError(f"expected a {sig.n}x{sig.n} matrix, got shape {gm.shape}")
    e = e_p_matrix(sig)
    defect = float(np.max(np.abs(gm.T @ e @ gm - e)))
    if family.special:
        defect += float(abs(np.linalg.det(gm) - 1.0))
    return defect
