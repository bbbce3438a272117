"""Pseudo-arc-length machinery: types L1-L4, invariant parametrization,
and equivalence of oriented curves.

A non-degenerate path ([x'(t), x'(t)] never zero) has a speed
|[x'(t), x'(t)]|^(1/2) whose integral l_x(c, d) always exists for
interior c < d.  The finiteness pattern of the two tail limits toward
the interval endpoints sorts every such path into one of four types:

    L1  both tails finite      invariant interval I(x) = (0, total length)
    L2  left finite only       I(x) = (0, +inf)
    L3  right finite only      I(x) = (-inf, 0)
    L4  both infinite          I(x) = (-inf, +inf)

The arc-length map p_x sends the parameter interval onto I(x) (anchored
at the left tail, the right tail, or a fixed base point a_I for L4); its
inverse q_x yields the invariant parametrization z(s) = x(q_x(s)), which
has unit speed and p_z(s) = s.  Oriented curves are compared by
reparametrizing both sides this way and testing the generator invariants
(plus a recovered witness), with an extra shift parameter s0 searched
for in the L4 case.
"""
from __future__ import annotations

import enum
import heapq
import math
import threading
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .equivalence import Failure, GroupElement
from .errors import (DegeneratePathError, DimensionMismatchError, EvalDomainError,
                     IndeterminateTailError, IntervalMismatchError, InversionError,
                     QuadratureError, SignatureError, StrongRegularityError)
from .forms import FieldTag, GroupTag, e_p_matrix
from .invariants import (PointwiseReport, conditioning_score, det,
                         signature_from_jet, singular_tolerance)
from .pathexpr import (Const, Expr, Interval, Jet, PathDef, T, add, call,
                       chebyshev_grid, conjugate_constants, differentiate,
                       eval_expr, eval_jet, interval_anchor, mul, neg, powc,
                       sample_grid, sub, substitute)

DEFAULT_QUAD_TOL = 1e-10
DIVERGENCE_CEILING = 1e6


class PathType(enum.Enum):
    L1 = "L1"
    L2 = "L2"
    L3 = "L3"
    L4 = "L4"


@dataclass(eq=False)
class TypedInterval:
    """Path type plus the invariant interval I(x) = (A, B).

    a_I is the L4 base point of the arc-length map (0 on the full line
    by convention); it is None for the other types.  Instances carry
    private quadrature anchors and are tied to the path they were
    classified from.
    """

    ptype: PathType
    a_inv: float
    b_inv: float
    a_I: float | None = None

    def __post_init__(self):
        self._anchor_t = 0.0
        self._anchor_p = 0.0
        self._qtol = DEFAULT_QUAD_TOL
        self._pairs = []  # (p, t) warm starts for inversion, sorted by p
        self._diag = {}
        self._lock = threading.Lock()

    @property
    def invariant_interval(self) -> Interval:
        return Interval(self.a_inv, self.b_inv)

    def tail_diagnostics(self) -> dict:
        return dict(self._diag)


@dataclass(eq=False)
class MonotoneReparam:
    """A strictly increasing smooth bijection of ``source`` onto itself,
    as an expression in t (an orientation-preserving reparametrization)."""

    phi: Expr
    source: Interval


# ---------------------------------------------------------------------------
# Gauss-Kronrod 15/7 adaptive quadrature

_GK_NODES = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813,
])
_GK_WEIGHTS_K = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529,
])
_GK_WEIGHTS_G = np.array([
    0.0, 0.129484966168870, 0.0, 0.279705391489277, 0.0,
    0.381830050505119, 0.0, 0.417959183673469, 0.0,
    0.381830050505119, 0.0, 0.279705391489277, 0.0,
    0.129484966168870, 0.0,
])


def _gk_panel(f, lo, hi):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    vals = np.array([f(mid + half * u) for u in _GK_NODES])
    k15 = half * float(vals @ _GK_WEIGHTS_K)
    g7 = half * float(vals @ _GK_WEIGHTS_G)
    return k15, abs(k15 - g7)


def adaptive_quadrature(f, lo: float, hi: float, tol: float, rel: float = 1e-13,
                        max_levels: int = 60, max_panels: int = 4096) -> float:
    """Adaptive Gauss-Kronrod integration of f over [lo, hi] by repeated
    bisection of the worst panel, to absolute tolerance tol with a small
    relative floor (evaluation noise in the integrand bounds what an
    absolute target can achieve)."""
    if lo == hi:
        return 0.0
    if lo > hi:
        raise SignatureError(f"quadrature interval reversed: ({lo}, {hi})")
    value, err = _gk_panel(f, lo, hi)
    heap = [(-err, lo, hi, value, err, 0)]
    total, total_err, panels = value, err, 1
    while total_err > max(tol, rel * abs(total)):
        neg_err, a, b, v, e, level = heapq.heappop(heap)
        if level >= max_levels or panels >= max_panels:
            raise QuadratureError(
                f"quadrature over ({lo}, {hi}) did not reach tol={tol:.1e}: "
                f"residual error {total_err:.3e} after {panels} panels")
        m = 0.5 * (a + b)
        v1, e1 = _gk_panel(f, a, m)
        v2, e2 = _gk_panel(f, m, b)
        total += v1 + v2 - v
        total_err += e1 + e2 - e
        heapq.heappush(heap, (-e1, a, m, v1, e1, level + 1))
        heapq.heappush(heap, (-e2, m, b, v2, e2, level + 1))
        panels += 1
    return total


# ---------------------------------------------------------------------------
# Speed


class _SpeedBundle:
    """Cached per-path machinery around w(t) = [x'(t), x'(t)]: compiled
    point evaluation, locked sign (real field), symbolic derivatives of
    the speed |w|^(1/2)."""

    def __init__(self, path: PathDef):
        self.path = path
        sig, p, n = path.sig, path.sig.p, path.sig.n
        terms = None
        plus = None
        for j in range(n):
            d = differentiate(path.components[j])
            if path.field is FieldTag.REAL:
                sq = powc(d, 2)
                mag = sq
            else:
                sq = powc(d, 2)
                mag = mul(d, conjugate_constants(d))
            term = sq if (j < p or sig.euclidean) else neg(sq)
            terms = term if terms is None else add(terms, term)
            plus = mag if plus is None else add(plus, mag)
        self.w_expr = terms
        self.scale_expr = plus    # sum |x_i'|^2: the cancellation scale of w
        self.sign = None          # +1/-1 once locked (real field only)
        self._speed_derivs = None
        self._lock = threading.Lock()

    def w_at(self, t: float):
        return eval_expr(self.w_expr, t, self.path.field)

    def speed_at(self, t: float) -> float:
        return math.sqrt(abs(self.w_at(t)))

    def scale_at(self, t: float) -> float:
        """sum |x_i'(t)|^2: the magnitude against which a small [x', x']
        value must be judged (its evaluation cancels terms of this size)."""
        return abs(eval_expr(self.scale_expr, t, self.path.field))

    def w_trustworthy(self, t: float) -> bool:
        """False when |w(t)| sits below the cancellation noise of its own
        evaluation (the squared terms dwarf their difference)."""
        try:
            return abs(self.w_at(t)) > 1e-13 * (1.0 + self.scale_at(t))
        except EvalDomainError:
            return False

    def lock_sign(self, w_values) -> None:
        if self.path.field is not FieldTag.REAL or self.sign is not None:
            return
        signs = {v > 0 for v in w_values}
        if len(signs) != 1:
            raise DegeneratePathError("[x', x'] changes sign; the path is degenerate somewhere")
        self.sign = 1.0 if signs.pop() else -1.0

    def _ensure_speed_expr(self):
        if self._speed_derivs is not None:
            return
        with self._lock:
            if self._speed_derivs is not None:
                return
            if self.path.field is FieldTag.REAL:
                if self.sign is None:
                    self.lock_sign([self.w_at(interval_anchor(self.path.interval))])
                spd = call("sqrt", mul(Const(self.sign), self.w_expr))
            else:
                # |w|^(1/2) = (w * conj(w))^(1/4); real-valued along real t
                spd = powc(mul(self.w_expr, conjugate_constants(self.w_expr)),
                           Fraction(1, 4))
            self._speed_derivs = [spd]

    def speed_derivative(self, order: int) -> Expr:
        """order-th symbolic derivative of the speed (order 0 = speed)."""
        self._ensure_speed_expr()
        if len(self._speed_derivs) <= order:
            with self._lock:
                while len(self._speed_derivs) <= order:
                    self._speed_derivs.append(differentiate(self._speed_derivs[-1]))
        return self._speed_derivs[order]

    def speed_deriv_at(self, t: float, order: int) -> float:
        v = eval_expr(self.speed_derivative(order), t, self.path.field)
        return v.real if isinstance(v, complex) else v


def _speed_bundle(path: PathDef) -> _SpeedBundle:
    bundle = path._cache.get("speed")
    if bundle is None:
        with path._lock:
            bundle = path._cache.get("speed")
            if bundle is None:
                bundle = _SpeedBundle(path)
                path._cache["speed"] = bundle
    return bundle


def speed(path: PathDef, t: float) -> float:
    """|[x'(t), x'(t)]|^(1/2); complex values go through the modulus."""
    if not path.interval.contains(t):
        raise EvalDomainError(f"t={t} outside the path interval {path.interval}")
    return _speed_bundle(path).speed_at(t)


def is_nondegenerate(path: PathDef, grid, floor: float | None = None) -> PointwiseReport:
    """Check |[x', x']| > floor on the grid; over the reals a sign change
    between neighbours also fails (a zero was crossed).

    The default floor is local: 1e-12 * (1 + sum |x_i'(t)|^2), the level
    below which the form is indistinguishable from zero at that point.
    """
    bundle = _speed_bundle(path)
    values = [bundle.w_at(t) for t in grid]
    failures = []
    for t, v in zip(grid, values):
        threshold = 1e-12 * (1.0 + bundle.scale_at(t)) if floor is None else floor
        if abs(v) <= threshold:
            failures.append((t, v))
    if path.field is FieldTag.REAL:
        for (t1, v1), (t2, v2) in zip(zip(grid, values), list(zip(grid, values))[1:]):
            if v1 * v2 < 0:
                failures.append((t1, v1))
                failures.append((t2, v2))
    failures = sorted(set(failures))
    return PointwiseReport(quantity="[x', x']", passed=not failures,
                           points=tuple(grid), values=tuple(values), failures=tuple(failures))


def arc_integral(path: PathDef, c: float, d: float, tol: float = DEFAULT_QUAD_TOL) -> float:
    """l_x(c, d): the arc-length integral of the speed over [c, d]."""
    if c == d:
        return 0.0
    if c > d:
        raise SignatureError(f"arc integral needs c <= d, got c={c}, d={d}")
    if not (path.interval.a < c and d < path.interval.b):
        raise EvalDomainError(f"[{c}, {d}] not inside the path interval {path.interval}")
    return adaptive_quadrature(_speed_bundle(path).speed_at, c, d, tol)


def _robust_arc(bundle: _SpeedBundle, lo: float, hi: float, tol: float) -> float:
    """Quadrature that falls back to the integrand's noise floor when
    cancellation in [x', x'] caps the reachable accuracy."""
    try:
        return adaptive_quadrature(bundle.speed_at, lo, hi, tol)
    except QuadratureError:
        return adaptive_quadrature(bundle.speed_at, lo, hi, tol, rel=3e-9, max_panels=8192)


def _signed_arc(bundle: _SpeedBundle, c: float, d: float, tol: float) -> float:
    if c == d:
        return 0.0
    if c < d:
        return _robust_arc(bundle, c, d, tol)
    return -_robust_arc(bundle, d, c, tol)


def _forgiving_arc(bundle: _SpeedBundle, c: float, d: float, tol: float) -> float:
    """Signed arc for coarse sweeps only: never raises on noise, degrades
    to a single Kronrod panel."""
    if c == d:
        return 0.0
    lo, hi = (c, d) if c < d else (d, c)
    sign = 1.0 if c < d else -1.0
    try:
        return sign * adaptive_quadrature(bundle.speed_at, lo, hi, tol, max_panels=512)
    except QuadratureError:
        try:
            return sign * adaptive_quadrature(bundle.speed_at, lo, hi, tol,
                                              rel=1e-4, max_panels=256)
        except QuadratureError:
            return sign * _gk_panel(bundle.speed_at, lo, hi)[0]


# ---------------------------------------------------------------------------
# Tail probing and classification


def _probe_tail(bundle: _SpeedBundle, t_from: float, endpoint: float, tol: float,
                ceiling: float = DIVERGENCE_CEILING, max_steps: int = 60):
    """Decide whether the improper integral of the speed from t_from
    toward endpoint is finite; returns (finite, value, diagnostics).

    Integrates over a geometric sequence of segments (gap quartering
    toward a finite endpoint, width doubling toward an infinite one) and
    watches the increments: a sustained decay lets the remainder be
    extrapolated geometrically, sustained non-decay or a running sum
    above the ceiling means divergence, anything else is declared
    indeterminate rather than guessed.
    """
    infinite = math.isinf(endpoint)
    direction = 1.0 if endpoint > t_from else -1.0
    seg_tol = tol / 128.0
    total = 0.0
    prev = None
    first_pos = None
    ratios = []
    segments = []
    frontier = t_from
    grow_streak = 0
    steps = 0
    all_reliable = True
    for k in range(max_steps):
        steps += 1
        if infinite:
            nxt = frontier + direction * (2.0 ** k) * 0.25
        else:
            nxt = endpoint - 0.25 * (endpoint - frontier)
        lo, hi = (frontier, nxt) if nxt > frontier else (nxt, frontier)
        if (not infinite and nxt == endpoint) or not bundle.w_trustworthy(nxt):
            # float resolution exhausted (the gap underflowed onto the
            # endpoint, or the velocity form collapsed into cancellation
            # noise); decide from the reliable prefix or give up honestly:
            # a tail with a finite remainder would be shedding mass by now
            if len(segments) >= 2 and segments[-1] >= 0.3 * sum(segments[:-1]):
                return False, math.inf, {"steps": steps, "sum": total,
                                         "verdict": "grew until the form lost precision"}
            raise IndeterminateTailError(
                f"tail toward {endpoint}: [x', x'] lost all precision near t={nxt:.6g} "
                f"before the tail could be classified")
        try:
            seg = adaptive_quadrature(bundle.speed_at, lo, hi, seg_tol, max_panels=512)
        except QuadratureError:
            # evaluation noise swamps the target (huge cancelling terms);
            # a coarse value still serves the growth and ceiling tests,
            # but a finite verdict based on it would be a guess
            try:
                seg = adaptive_quadrature(bundle.speed_at, lo, hi, seg_tol,
                                          rel=1e-4, max_panels=256)
            except QuadratureError:
                seg = _gk_panel(bundle.speed_at, lo, hi)[0]
            all_reliable = False
        frontier = nxt
        total += seg
        segments.append(seg)
        diag = {"steps": steps, "sum": total, "last_increment": seg}
        if total > ceiling:
            return False, math.inf, {**diag, "verdict": "sum exceeded divergence ceiling"}
        r = None
        if prev is not None:
            if prev > 0:
                r = seg / prev
            elif seg == 0.0:
                r = 0.0
        if r is not None:
            ratios.append(r)
            grow_streak = grow_streak + 1 if r >= 0.98 else 0
            if grow_streak >= 4:
                return False, math.inf, {**diag, "verdict": "increments not decaying"}
            if (first_pos is not None and seg > 4.0 * first_pos
                    and len(ratios) >= 2 and min(ratios[-2:]) >= 1.4):
                return False, math.inf, {**diag, "verdict": "increments growing fast"}
            if len(ratios) >= 3 and all(rr <= 0.9 for rr in ratios[-3:]):
                r_hat = max(ratios[-3:])
                remainder = seg * r_hat / (1.0 - r_hat)
                # the geometric extrapolation is exact for power-law and
                # smooth tails; its error is bounded by the ratio spread
                spread = max(ratios[-3:]) - min(ratios[-3:])
                rem_err = seg * spread / (1.0 - r_hat) ** 2
                if remainder <= 0.5 * tol or rem_err <= 0.5 * tol:
                    if not all_reliable:
                        raise IndeterminateTailError(
                            f"tail toward {endpoint} looks finite but its segments were "
                            f"too noisy to trust at tol={tol:.1e}")
                    return True, total + remainder, {**diag, "verdict": "converged",
                                                     "remainder": remainder}
        if first_pos is None and seg > 0.0:
            first_pos = seg
        prev = seg
    raise IndeterminateTailError(
        f"tail toward {endpoint} undecided after {max_steps} probes "
        f"(sum {total:.6g}, last increment {prev:.3e})")


def _default_base_point(interval: Interval) -> float:
    half_pi = 0.5 * math.pi
    ca = -half_pi if math.isinf(interval.a) else math.atan(interval.a)
    cb = half_pi if math.isinf(interval.b) else math.atan(interval.b)
    return math.tan(0.5 * (ca + cb))


def classify_type(path: PathDef, tol: float = DEFAULT_QUAD_TOL, a_I: float | None = None,
                  probe_count: int = 33) -> TypedInterval:
    """Classify the path as L1-L4 and build its invariant interval.

    Raises DegeneratePathError when the non-degeneracy probe fails and
    IndeterminateTailError when a tail cannot be decided within budget.
    """
    grid = sample_grid(path.interval, probe_count, margin=0.05)
    bundle = _speed_bundle(path)
    # assess non-degeneracy only where [x', x'] is numerically resolvable;
    # the compactified grid may reach magnitudes where it is pure noise
    trusted = [(t, bundle.w_at(t)) for t in grid if bundle.w_trustworthy(t)]
    if len(trusted) < max(8, probe_count // 4):
        raise DegeneratePathError(
            f"path {path.label or ''}: [x', x'] is below float resolution on most of "
            "the probe grid; cannot assess non-degeneracy")
    bad = []
    if path.field is FieldTag.REAL:
        for (t1, v1), (t2, v2) in zip(trusted, trusted[1:]):
            if v1 * v2 < 0:
                bad.append((t1, v1))
    if bad:
        where = ", ".join(f"t={t:.6g}" for t, _ in bad[:4])
        raise DegeneratePathError(f"path {path.label or ''} has lightlike velocity near {where}")
    bundle.lock_sign([v for _, v in trusted])

    t_ref = interval_anchor(path.interval)
    fin_left, val_left, diag_left = _probe_tail(bundle, t_ref, path.interval.a, tol)
    fin_right, val_right, diag_right = _probe_tail(bundle, t_ref, path.interval.b, tol)

    if fin_left and fin_right:
        typed = TypedInterval(PathType.L1, 0.0, val_left + val_right)
        typed._anchor_t, typed._anchor_p = t_ref, val_left
    elif fin_left:
        typed = TypedInterval(PathType.L2, 0.0, math.inf)
        typed._anchor_t, typed._anchor_p = t_ref, val_left
    elif fin_right:
        typed = TypedInterval(PathType.L3, -math.inf, 0.0)
        typed._anchor_t, typed._anchor_p = t_ref, -val_right
    else:
        base = _default_base_point(path.interval) if a_I is None else float(a_I)
        if not path.interval.contains(base):
            raise SignatureError(f"a_I={base} lies outside the interval {path.interval}")
        typed = TypedInterval(PathType.L4, -math.inf, math.inf, a_I=base)
        typed._anchor_t, typed._anchor_p = base, 0.0
    typed._qtol = tol
    typed._diag = {"left": diag_left, "right": diag_right}
    return typed


# ---------------------------------------------------------------------------
# The arc-length map and its inverse


def arc_param(path: PathDef, typed: TypedInterval, t: float) -> float:
    """p_x(t): the invariant parameter of t, per the path's type."""
    if not path.interval.contains(t):
        raise EvalDomainError(f"t={t} outside the path interval {path.interval}")
    bundle = _speed_bundle(path)
    return typed._anchor_p + _signed_arc(bundle, typed._anchor_t, t, typed._qtol)


def _remember_pair(typed: TypedInterval, p: float, t: float):
    with typed._lock:
        pairs = typed._pairs
        lo, hi = 0, len(pairs)
        while lo < hi:
            mid = (lo + hi) // 2
            if pairs[mid][0] < p:
                lo = mid + 1
            else:
                hi = mid
        pairs.insert(lo, (p, t))
        if len(pairs) > 512:
            del pairs[::2]


def _nearest_pair(typed: TypedInterval, s: float):
    best = (typed._anchor_p, typed._anchor_t)
    with typed._lock:
        snapshot = list(typed._pairs)
    for p, t in snapshot:
        if abs(p - s) < abs(best[0] - s):
            best = (p, t)
    return best


def invert_param(path: PathDef, typed: TypedInterval, s: float,
                 tol: float = 1e-9) -> float:
    """q_x(s): the unique t with p_x(t) = s, to |p_x(t) - s| <= tol.

    Monotonicity of p_x (its derivative is the positive speed) makes a
    bracket-plus-safeguarded-Newton iteration globally convergent.
    """
    if not (typed.a_inv < s < typed.b_inv):
        raise InversionError(
            f"s={s} outside the invariant interval ({typed.a_inv}, {typed.b_inv})")
    bundle = _speed_bundle(path)
    a, b = path.interval.a, path.interval.b
    p0, t0 = _nearest_pair(typed, s)

    # bracket expansion with crude incremental arc sums
    crude = max(1e-6, 0.01 * abs(s - p0))
    t_cur, p_cur = t0, p0
    if p_cur == s:
        return t_cur
    direction = 1.0 if s > p_cur else -1.0
    endpoint = b if direction > 0 else a
    step = abs(s - p_cur) / max(bundle.speed_at(t_cur), 1e-9)
    step = max(step, 1e-6)
    bracket = None
    for _ in range(120):
        if math.isinf(endpoint):
            t_trial = t_cur + direction * step
            step *= 2.0
        else:
            t_trial = t_cur + direction * min(step, 0.5 * abs(endpoint - t_cur))
            step *= 2.0
        try:
            p_trial = p_cur + _signed_arc(bundle, t_cur, t_trial, crude)
        except EvalDomainError:
            # overshot into overflow territory; back off and creep
            step = max(1e-9, step / 8.0)
            continue
        if (p_trial - s) * direction >= 0.0:
            bracket = (t_cur, p_cur, t_trial, p_trial) if direction > 0 else \
                      (t_trial, p_trial, t_cur, p_cur)
            break
        t_cur, p_cur = t_trial, p_trial
    if bracket is None:
        raise InversionError(
            f"could not bracket s={s}: reached t={t_cur} with p~{p_cur:.6g} "
            f"(interval {path.interval})")

    t_lo, p_lo, t_hi, p_hi = bracket

    def p_exact(t):
        return typed._anchor_p + _signed_arc(bundle, typed._anchor_t, t, typed._qtol)

    # linear interpolation start, then Newton safeguarded by the bracket
    if p_hi > p_lo:
        t = t_lo + (s - p_lo) * (t_hi - t_lo) / (p_hi - p_lo)
    else:
        t = 0.5 * (t_lo + t_hi)
    for _ in range(80):
        t = min(max(t, t_lo), t_hi)
        pt = p_exact(t)
        err = pt - s
        if abs(err) <= tol:
            _remember_pair(typed, pt, t)
            return t
        if err > 0:
            t_hi = t
        else:
            t_lo = t
        v = bundle.speed_at(t)
        t_next = t - err / v if v > 1e-14 else 0.5 * (t_lo + t_hi)
        if not t_lo < t_next < t_hi:
            t_next = 0.5 * (t_lo + t_hi)
        t = t_next
    raise InversionError(f"Newton did not reach |p - s| <= {tol} for s={s}")


# ---------------------------------------------------------------------------
# Jets of the reparametrized path


def _factorials(r: int):
    out = [1.0]
    for k in range(1, r + 1):
        out.append(out[-1] * k)
    return out


def _taylor_inverse(a: list) -> list:
    """Coefficients b of the compositional inverse of s = sum a_k d^k
    (k >= 1, a[0] = a_1 != 0), truncated to the same order."""
    r = len(a)
    b = [0.0] * r
    b[0] = 1.0 / a[0]
    for m in range(2, r + 1):
        # coefficient of eps^m in sum_{k=2..m} a_k * B(eps)^k, using b_1..b_{m-1}
        acc = 0.0
        series = [0.0] + b[:m - 1] + [0.0] * (r - m + 1)   # B truncated
        current = [0.0] * (r + 1)
        current[0] = 1.0
        for k in range(1, m + 1):
            nxt = [0.0] * (r + 1)
            for i in range(r + 1):
                if current[i] == 0.0:
                    continue
                for j in range(1, r + 1 - i):
                    nxt[i + j] += current[i] * series[j]
            current = nxt
            if 2 <= k <= len(a):
                acc += a[k - 1] * current[m]
        b[m - 1] = -acc * b[0]
    return b


def _poly_mul_trunc(f, g, r):
    out = [0.0] * (r + 1)
    for i, fi in enumerate(f):
        if fi == 0.0:
            continue
        for j, gj in enumerate(g):
            if i + j > r:
                break
            out[i + j] += fi * gj
    return out


def _compose_jet(path: PathDef, bundle: _SpeedBundle, typed: TypedInterval,
                 t_star: float, s: float, order: int) -> Jet:
    """Jet of z(s) = x(q(s)) at s, from the jet of x at t_star = q(s) and
    the Taylor inversion of the arc-length map."""
    xjet = eval_jet(path, t_star, order)
    if order == 0:
        return Jet(t=s, order=0, rows=xjet.rows.copy())
    v = bundle.speed_at(t_star)
    if v <= 1e-13:
        raise DegeneratePathError(
            f"speed ~ 0 at t={t_star}; inversion derivatives are undefined")
    fact = _factorials(order)
    a = [bundle.speed_deriv_at(t_star, k - 1) / fact[k] for k in range(1, order + 1)]
    b = _taylor_inverse(a)
    delta = [0.0] + b  # delta(eps) coefficients, index = power
    rows = np.zeros_like(xjet.rows)
    rows[0] = xjet.rows[0]
    current = [0.0] * (order + 1)
    current[0] = 1.0
    for m in range(1, order + 1):
        current = _poly_mul_trunc(current, delta, order)
        cm = xjet.rows[m] / fact[m]
        for k in range(m, order + 1):
            if current[k] != 0.0:
                rows[k] = rows[k] + cm * current[k]
    for k in range(1, order + 1):
        rows[k] = rows[k] * fact[k]
    return Jet(t=s, order=order, rows=rows)


def reparam_jet(path: PathDef, typed: TypedInterval, s: float, order: int) -> Jet:
    """Jet of the invariant parametrization z(s) = x(q_x(s)) at s."""
    n = path.sig.n
    if order > n + 1:
        raise SignatureError(f"reparametrized jets are capped at order n+1 = {n + 1}")
    t_star = invert_param(path, typed, s, tol=min(1e-11, typed._qtol))
    return _compose_jet(path, _speed_bundle(path), typed, t_star, s, order)


# ---------------------------------------------------------------------------
# Random monotone reparametrizations (test/experiment support)


def random_reparam(source: Interval, seed: int) -> MonotoneReparam:
    """A pseudo-random orientation-preserving smooth bijection of the
    interval onto itself, from a small parametric family; the derivative
    is verified positive on a dense grid."""
    rng = np.random.default_rng(seed)
    a, b = source.a, source.b
    if math.isinf(a) and math.isinf(b):
        slope = math.exp(rng.uniform(-0.7, 0.7))
        offset = rng.uniform(-1.0, 1.0)
        eps = rng.uniform(-0.8, 0.8)
        # slope*t + offset + slope*eps*sin(t): derivative slope*(1 + eps cos t) > 0
        phi = add(add(mul(Const(slope), T), Const(offset)),
                  mul(Const(slope * eps), call("sin", T)))
    elif math.isinf(b):
        alpha = rng.choice([0.5, 1.0, 1.5, 2.0])
        beta = math.exp(rng.uniform(-0.7, 0.7))
        phi = add(Const(a), mul(Const(beta), powc(sub(T, Const(a)), float(alpha))))
    elif math.isinf(a):
        alpha = rng.choice([0.5, 1.0, 1.5, 2.0])
        beta = math.exp(rng.uniform(-0.7, 0.7))
        phi = sub(Const(b), mul(Const(beta), powc(sub(Const(b), T), float(alpha))))
    else:
        eps = rng.uniform(-0.8, 0.8)
        width = b - a
        omega = 2.0 * math.pi / width
        amp = eps * width / (2.0 * math.pi)
        phi = add(T, mul(Const(amp), call("sin", mul(Const(omega), sub(T, Const(a))))))
    dphi = differentiate(phi)
    for t in sample_grid(source, 1000, margin=0.001):
        if eval_expr(dphi, t) <= 0.0:
            raise SignatureError(f"reparametrization family produced phi'({t}) <= 0")
    return MonotoneReparam(phi=phi, source=source)


def reparametrize(path: PathDef, reparam: MonotoneReparam) -> PathDef:
    """The composed path x(phi(t)) on the reparametrization's interval."""
    if reparam.source != path.interval:
        raise IntervalMismatchError(
            f"reparametrization domain {reparam.source} differs from path interval {path.interval}")
    comps = tuple(substitute(c, reparam.phi) for c in path.components)
    label = f"{path.label}@reparam" if path.label else "reparametrized"
    return PathDef(sig=path.sig, field=path.field, components=comps,
                   interval=reparam.source, label=label)


# ---------------------------------------------------------------------------
# Curve-level equivalence


@dataclass(eq=False)
class CurveVerdict:
    equivalent: bool
    witness: object
    max_defect: float
    failures: tuple
    group: GroupTag
    tolerance: float
    type_x: PathType | None = None
    type_y: PathType | None = None
    s0: float | None = None
    interval_x: tuple | None = None
    interval_y: tuple | None = None

    def __bool__(self):
        return self.equivalent


def _z_signature(jet: Jet, group: GroupTag):
    """Generator values from a jet of the reparametrized path (rows are
    shifted by one for the motion families: same functionals on z')."""
    if group.family.semidirect:
        shifted = Jet(t=jet.t, order=jet.order - 1, rows=jet.rows[1:])
        return signature_from_jet(
            shifted, GroupTag(group.family.linear_part, group.sig, group.field)).values
    return signature_from_jet(jet, group).values


def _frame_of(jet: Jet, semidirect: bool) -> np.ndarray:
    n = jet.n
    rows = jet.rows[1:n + 1] if semidirect else jet.rows[:n]
    return rows.T


def _check_z_regular(jet: Jet, s: float, which: str, semidirect: bool):
    m = _frame_of(jet, semidirect)
    d = det(m)
    tol = singular_tolerance(m)
    if abs(d) <= tol:
        raise StrongRegularityError(
            f"invariant parametrization of {which} is not strongly regular at s={s:.6g} "
            f"(|det M| = {abs(d):.3e})", t=s, abs_det=abs(d))
    return d


def _sig_table(path, typed, group, s_lo, s_hi, order, count=257):
    """Forward sweep for the coarse shift scan: signatures of the
    invariant parametrization sampled at s = p(t) over a dense t-grid (no
    inversions needed), widened until [s_lo, s_hi] is covered or the
    margin bottoms out.  Sweep values may sit at the integrand's noise
    floor far out; the scan only needs them for localization."""
    bundle = _speed_bundle(path)
    margin = 0.04
    for _ in range(12):
        ts = sample_grid(path.interval, count, margin=margin)
        ps = [_forgiving_arc(bundle, typed._anchor_t, ts[0], typed._qtol) + typed._anchor_p]
        for t_prev, t_cur in zip(ts, ts[1:]):
            ps.append(ps[-1] + _forgiving_arc(bundle, t_prev, t_cur, typed._qtol))
        if ps[0] <= s_lo and ps[-1] >= s_hi:
            break
        margin *= 0.4
    sigs = []
    for t, s in zip(ts, ps):
        jet = _compose_jet(path, bundle, typed, t, s, order)
        sigs.append(_z_signature(jet, group))
    return np.array(ps), np.array(sigs)


def _interp_sig(ps, sigs, queries):
    out = np.empty((len(queries), sigs.shape[1]), dtype=sigs.dtype)
    for k in range(sigs.shape[1]):
        col = sigs[:, k]
        if np.iscomplexobj(col):
            out[:, k] = np.interp(queries, ps, col.real) + 1j * np.interp(queries, ps, col.imag)
        else:
            out[:, k] = np.interp(queries, ps, col)
    return out


def _golden_minimize(fn, lo, hi, tol=1e-10, max_iter=120):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = fn(c), fn(d)
    it = 0
    while hi - lo > tol and it < max_iter:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = fn(d)
        it += 1
    return 0.5 * (lo + hi)


def _expand_then_minimize(fn, lo, hi, floor_lo, ceil_hi, tol=1e-10):
    """Golden minimization with bracket expansion: while the minimum sits
    at a bracket edge, widen toward that side (the coarse localization
    may be off by more than one scan step)."""
    for _ in range(8):
        mid = 0.5 * (lo + hi)
        f_lo, f_mid, f_hi = fn(lo), fn(mid), fn(hi)
        if f_mid <= f_lo and f_mid <= f_hi:
            break
        width = hi - lo
        if f_lo < f_hi:
            lo, hi = max(floor_lo, lo - width), mid
        else:
            lo, hi = mid, min(ceil_hi, hi + width)
        if lo == floor_lo and hi == ceil_hi:
            break
    return _golden_minimize(fn, lo, hi, tol=tol)


def _search_shift(x, typed_x, y, typed_y, group, grid, sig_x, jets_x, order, tol):
    """L4 only: locate the shift s0 with sig_y(s + s0) = sig_x(s).

    Coarse scan against an interpolated signature table of y localizes
    the shift; golden-section refinement then minimizes the witness
    residual (reconstruct g at the candidate shift, validate it across
    the grid), which is sharp where the signature discrepancy is shallow.
    When the signatures are constant along the curve (one-parameter
    homogeneous orbits) every shift matches; the refinement then
    minimizes the distance of the recovered linear part from the
    identity, pinning a canonical witness.
    """
    span = grid[-1] - grid[0]
    semidirect = group.family.semidirect
    sig_x_arr = np.array(sig_x)
    scale = float(np.max(np.abs(sig_x_arr))) if sig_x_arr.size else 1.0
    variation = float(np.max(np.abs(sig_x_arr - sig_x_arr.mean(axis=0))))

    scores = [conditioning_score(_frame_of(j, semidirect)) for j in jets_x]
    best_idx = int(np.argmax(scores))
    inv_m_x = np.linalg.inv(_frame_of(jets_x[best_idx], semidirect))

    def witness_distance(shift):
        jet_y = reparam_jet(y, typed_y, grid[best_idx] + shift, order)
        g = _frame_of(jet_y, semidirect) @ inv_m_x
        return float(np.sum(np.abs(g - np.eye(group.sig.n)) ** 2))

    if variation <= 50.0 * tol * (1.0 + scale):
        return _golden_minimize(witness_distance, -span, span, tol=1e-10)

    s_lo = grid[0] - span
    s_hi = grid[-1] + span
    ps, sigs = _sig_table(y, typed_y, group, s_lo, s_hi, order)

    def coarse(shift):
        queries = np.asarray(grid) + shift
        if queries[0] < ps[0] or queries[-1] > ps[-1]:
            return math.inf
        diff = _interp_sig(ps, sigs, queries) - sig_x_arr
        return float(np.sum(np.abs(diff) ** 2))

    shifts = np.linspace(-span, span, 256)
    values = np.array([coarse(sh) for sh in shifts])
    if not np.isfinite(values).any():
        return 0.0
    best = int(np.argmin(values))

    step = shifts[1] - shifts[0]
    lo = max(-span, shifts[best] - step)
    hi = min(span, shifts[best] + step)

    def witness_residual(shift):
        try:
            jets_y = [reparam_jet(y, typed_y, s + shift, order) for s in grid]
        except (InversionError, EvalDomainError):
            return math.inf
        g = _frame_of(jets_y[best_idx], semidirect) @ inv_m_x
        u = 0.0
        if semidirect:
            u = np.mean([jy.rows[0] - g @ jx.rows[0]
                         for jx, jy in zip(jets_x, jets_y)], axis=0)
        worst = 0.0
        for jx, jy in zip(jets_x, jets_y):
            target = g @ jx.rows[0] + u
            resid = float(np.max(np.abs(jy.rows[0] - target)))
            worst = max(worst, resid / (1.0 + float(np.max(np.abs(target)))))
        return worst

    return _expand_then_minimize(witness_residual, lo, hi, -span, span, tol=1e-10)


def curves_equivalent(x: PathDef, y: PathDef, group: GroupTag,
                      tol: float = 1e-8, qtol: float = DEFAULT_QUAD_TOL,
                      grid_count: int = 17, margin: float = 0.08) -> CurveVerdict:
    """Decide equivalence of the oriented curves generated by x and y.

    Both paths are classified (a type or invariant-interval mismatch is
    an immediate negative), reparametrized by pseudo-arc-length, and
    compared through the generator invariants of the group on a grid in
    the common invariant interval; for L4 the comparison shift s0 is
    searched for.  A witness is then reconstructed from the frames of the
    reparametrized paths and cross-validated, exactly as for paths.
    """
    n = group.sig.n
    if x.sig.n != n or y.sig.n != n:
        raise DimensionMismatchError(
            f"group acts on K^{n} but paths have n={x.sig.n}, n={y.sig.n}")
    if x.field is not y.field:
        raise SignatureError("paths are over different fields")

    typed_x = classify_type(x, qtol)
    typed_y = classify_type(y, qtol)
    base = dict(group=group, tolerance=tol,
                type_x=typed_x.ptype, type_y=typed_y.ptype,
                interval_x=(typed_x.a_inv, typed_x.b_inv),
                interval_y=(typed_y.a_inv, typed_y.b_inv))

    if typed_x.ptype is not typed_y.ptype:
        fail = Failure(t=math.nan, identity="type", defect=math.inf)
        return CurveVerdict(equivalent=False, witness=None, max_defect=math.inf,
                            failures=(fail,), s0=None, **base)
    if typed_x.ptype is PathType.L1:
        gap = abs(typed_x.b_inv - typed_y.b_inv)
        if gap > 10.0 * qtol:
            fail = Failure(t=math.nan, identity="invariant-interval", defect=gap)
            return CurveVerdict(equivalent=False, witness=None, max_defect=gap,
                                failures=(fail,), s0=None, **base)

    b_common = min(typed_x.b_inv, typed_y.b_inv)
    cmp_interval = Interval(typed_x.a_inv, b_common)
    grid = chebyshev_grid(cmp_interval, grid_count, margin=margin)
    order = n  # enough for signatures, frames and shifted frames alike

    jets_x = [reparam_jet(x, typed_x, s, order) for s in grid]
    for s, jet in zip(grid, jets_x):
        _check_z_regular(jet, s, x.label or "x", group.family.semidirect)
    sig_x = [_z_signature(jet, group) for jet in jets_x]

    s0 = 0.0
    if typed_x.ptype is PathType.L4:
        s0 = _search_shift(x, typed_x, y, typed_y, group, grid, sig_x, jets_x, order, tol)

    jets_y = [reparam_jet(y, typed_y, s + s0, order) for s in grid]
    for s, jet in zip(grid, jets_y):
        _check_z_regular(jet, s + s0, y.label or "y", group.family.semidirect)
    sig_y = [_z_signature(jet, group) for jet in jets_y]

    failures = []
    max_defect = 0.0

    def record(t, name, defect):
        nonlocal max_defect
        max_defect = max(max_defect, defect)
        if defect > tol:
            failures.append(Failure(t=t, identity=name, defect=defect))

    for s, vx, vy in zip(grid, sig_x, sig_y):
        scale = max(max(abs(v) for v in vx), max(abs(v) for v in vy))
        defect = max(abs(a - b) for a, b in zip(vx, vy)) / (1.0 + scale)
        record(s, "generators", defect)

    semidirect = group.family.semidirect
    scores = [conditioning_score(_frame_of(j, semidirect)) for j in jets_x]
    best = int(np.argmax(scores))
    m_x = _frame_of(jets_x[best], semidirect)
    m_y = _frame_of(jets_y[best], semidirect)
    g = m_y @ np.linalg.inv(m_x)

    e = e_p_matrix(group.sig)
    gram_defect = float(np.max(np.abs(g.T @ e @ g - e)))
    record(grid[best], "membership",
           gram_defect / (1.0 + float(np.max(np.abs(g))) ** 2))
    if group.family.special:
        dg = det(g)
        record(grid[best], "membership-det", float(abs(dg - 1.0)) / (1.0 + max(abs(dg), 1.0)))

    u = None
    if semidirect:
        diffs = np.array([jy.rows[0] - g @ jx.rows[0] for jx, jy in zip(jets_x, jets_y)])
        u = diffs.mean(axis=0)
    for s, jx, jy in zip(grid, jets_x, jets_y):
        target = g @ jx.rows[0] + (u if u is not None else 0.0)
        scale = max(float(np.max(np.abs(jy.rows[0]))), float(np.max(np.abs(target))))
        record(s, "witness", float(np.max(np.abs(jy.rows[0] - target))) / (1.0 + scale))

    equivalent = not failures
    witness = GroupElement(g=g, u=u) if equivalent else None
    return CurveVerdict(equivalent=equivalent, witness=witness, max_defect=max_defect,
                        failures=tuple(failures), s0=(s0 if typed_x.ptype is PathType.L4 else None),
                        **base)
