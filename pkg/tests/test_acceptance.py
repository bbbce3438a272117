"""Acceptance suite: one test per criterion, each printing a PASS/FAIL
line (run with ``pytest tests/test_acceptance.py -v -s``).

Everything here runs at desk scale (n <= 4, grids <= 65 points) with the
tolerances stated inline; seeds are fixed, so the suite is reproducible.
"""
import math
from contextlib import contextmanager

import numpy as np

from pecurves.arclength import (PathType, arc_param, classify_type, curves_equivalent,
                                invert_param, random_reparam, reparam_jet,
                                reparametrize, _signed_arc, _speed_bundle,
                                adaptive_quadrature)
from pecurves.equivalence import apply, paths_equivalent, sample_group_element
from pecurves.forms import (GroupFamily, GroupTag, Signature, euclidean_form,
                            h_matrix, pseudo_form)
from pecurves.invariants import det_m, generator_signature
from pecurves.pathexpr import (Const, Interval, Jet, PathDef, T, add, differentiate,
                               eval_expr, mul, parse_expression, parse_path,
                               sample_grid)

from conftest import FULL_LINE, HYPERBOLA_DOC, exp_path, spiral_hyperbolic


@contextmanager
def criterion(num, description):
    try:
        yield
    except BaseException:
        print(f"[criterion {num}] FAIL: {description}")
        raise
    print(f"[criterion {num}] PASS: {description}")


SIG_PAIRS = [(2, 1), (3, 1), (3, 2), (4, 2)]


def group_tags(n, p):
    """The eight families for one (n, p): Euclidean and pseudo variants."""
    out = []
    for family in GroupFamily:
        out.append(GroupTag(family, Signature(n, n)))
        out.append(GroupTag(family, Signature(n, p)))
    return out


def rel_gap(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / (1.0 + np.abs(a))))


def test_criterion_1_group_invariance():
    with criterion(1, "generator signatures invariant under all eight families, "
                      "(n,p) in {(2,1),(3,1),(3,2),(4,2)}, 20 pairs, 1e-8"):
        for n, p in SIG_PAIRS:
            paths = {trial: exp_path(Signature(n, n), seed=1000 * n + trial)
                     for trial in range(20)}
            grid = sample_grid(FULL_LINE, 16, margin=0.12)
            for tag in group_tags(n, p):
                for trial in range(20):
                    x = paths[trial]
                    fam_idx = list(GroupFamily).index(tag.family)
                    h = sample_group_element(
                        tag, seed=7_000_000 + 40_000 * fam_idx + 800 * tag.sig.p + trial)
                    y = apply(h, x)
                    for t in grid:
                        vx = np.array(generator_signature(x, tag, t).values)
                        vy = np.array(generator_signature(y, tag, t).values)
                        assert rel_gap(vx, vy) <= 1e-8, (tag, trial, t)


def test_criterion_2_witness_recovery_and_perturbation():
    with criterion(2, "witness recovery to 1e-6 in all trials; +1e-3*t perturbation "
                      "breaks equivalence in 50/50 trials"):
        # recovery across the same family/signature sweep
        for n, p in SIG_PAIRS:
            for tag in group_tags(n, p):
                for trial in range(20):
                    x = exp_path(tag.sig, seed=1000 * n + trial)
                    fam_idx = list(GroupFamily).index(tag.family)
                    h = sample_group_element(
                        tag, seed=8_000_000 + 40_000 * fam_idx + 800 * tag.sig.p + trial,
                        scale=1.0)
                    y = apply(h, x)
                    verdict = paths_equivalent(x, y, tag)
                    assert verdict.equivalent, (tag, trial, verdict.failures[:2])
                    assert np.max(np.abs(verdict.witness.g - h.g)) <= 1e-6
                    if tag.family.semidirect:
                        assert np.max(np.abs(verdict.witness.u - h.u)) <= 1e-6
        # perturbation sweep
        broken = 0
        for trial in range(50):
            n, p = SIG_PAIRS[trial % 4]
            tag = GroupTag(list(GroupFamily)[trial % 4], Signature(n, p))
            x = exp_path(tag.sig, seed=3000 + trial)
            h = sample_group_element(tag, seed=9_000_000 + trial)
            y = apply(h, x)
            comps = list(y.components)
            comps[0] = add(comps[0], mul(Const(1e-3), T))
            y_bad = PathDef(sig=y.sig, field=y.field, components=tuple(comps),
                            interval=y.interval, label="perturbed")
            if not paths_equivalent(x, y_bad, tag).equivalent:
                broken += 1
        assert broken == 50


def test_criterion_3_hand_verified_discriminations():
    with criterion(3, "hyperbola vs reflected: O yes / SO no; vs double-speed: "
                      "path-inequivalent everywhere yet curve-equivalent under O(2,1)"):
        hyperbola = parse_path(HYPERBOLA_DOC)
        reflected = parse_path("n: 2\np: 1\ninterval: (-inf, inf)\n"
                               "x1 = cosh(t)\nx2 = -sinh(t)\n")
        o21 = GroupTag(GroupFamily.O, Signature(2, 1))
        so21 = GroupTag(GroupFamily.SO, Signature(2, 1))

        v_o = paths_equivalent(hyperbola, reflected, o21)
        assert v_o.equivalent
        assert np.max(np.abs(v_o.witness.g - np.diag([1.0, -1.0]))) < 1e-9
        v_so = paths_equivalent(hyperbola, reflected, so21)
        assert not v_so.equivalent
        assert any(f.identity == "det" for f in v_so.failures)

        fast = parse_path("n: 2\np: 1\ninterval: (-inf, inf)\n"
                          "x1 = cosh(2*t)\nx2 = sinh(2*t)\n")
        for family in GroupFamily:
            tag = GroupTag(family, Signature(2, 1))
            assert not paths_equivalent(hyperbola, fast, tag).equivalent
        v_curve = curves_equivalent(hyperbola, fast, o21)
        assert v_curve.equivalent
        assert abs(v_curve.s0) <= 1e-6
        assert np.max(np.abs(v_curve.witness.g - np.eye(2))) <= 1e-6


def _ten_typed_paths():
    """Ten admissible paths covering L1 through L4."""
    return [
        (spiral_hyperbolic(101, Interval(0.0, 1.5)), PathType.L1),
        (spiral_hyperbolic(102, Interval(-1.0, 0.5)), PathType.L1),
        (exp_path(Signature(2, 2), seed=103, interval=Interval(-1.0, 1.0)), PathType.L1),
        (spiral_hyperbolic(104, Interval(0.0, math.inf)), PathType.L2),
        (exp_path(Signature(2, 2), seed=105, interval=Interval(0.0, math.inf),
                  kind="pos"), PathType.L2),
        (spiral_hyperbolic(106, Interval(-math.inf, 1.0)), PathType.L3),
        (exp_path(Signature(2, 2), seed=107, interval=Interval(-math.inf, 0.0),
                  kind="neg"), PathType.L3),
        (spiral_hyperbolic(108), PathType.L4),
        (spiral_hyperbolic(109), PathType.L4),
        (exp_path(Signature(2, 2), seed=110), PathType.L4),
    ]


def _z_speed(path, typed):
    def f(s):
        jet = reparam_jet(path, typed, s, 1)
        w = (euclidean_form(jet.rows[1], jet.rows[1])
             if path.sig.euclidean else pseudo_form(jet.rows[1], jet.rows[1], path.sig))
        return math.sqrt(abs(w))
    return f


def test_criterion_4_reparametrization_fixed_point():
    with criterion(4, "invariant parametrization has unit speed and p_z(s) = s "
                      "to 1e-8 across L1-L4 (10 paths, 16 points each)"):
        rng = np.random.default_rng(404)
        for path, expected_type in _ten_typed_paths():
            typed = classify_type(path)
            assert typed.ptype is expected_type
            lo = typed.a_inv if math.isfinite(typed.a_inv) else -2.5
            hi = typed.b_inv if math.isfinite(typed.b_inv) else 2.5
            span = hi - lo
            samples = rng.uniform(lo + 0.06 * span, hi - 0.06 * span, 16)
            for s in samples:
                jet = reparam_jet(path, typed, s, 1)
                w = (euclidean_form(jet.rows[1], jet.rows[1])
                     if path.sig.euclidean else pseudo_form(jet.rows[1], jet.rows[1], path.sig))
                assert abs(abs(w) - 1.0) <= 1e-8
                # p_z(s) = s, checked through the inverse round trip
                t_star = invert_param(path, typed, s, tol=1e-11)
                assert abs(arc_param(path, typed, t_star) - s) <= 1e-8
            # and through the arc integral of z itself: l_z(s1, s2) = s2 - s1
            pairs = rng.uniform(lo + 0.08 * span, hi - 0.08 * span, (2, 2))
            for s1, s2 in pairs:
                s1, s2 = min(s1, s2), max(s1, s2)
                length = adaptive_quadrature(_z_speed(path, typed), s1, s2, 1e-10)
                assert abs(length - (s2 - s1)) <= 1e-8


def test_criterion_5_type_and_interval_invariance():
    with criterion(5, "type and I(x) preserved under 50 reparametrizations and "
                      "50 motions; p_{hx} = p_x to 1e-9"):
        base_paths = _ten_typed_paths()
        # 50 random monotone reparametrizations
        for trial in range(50):
            path, expected_type = base_paths[trial % len(base_paths)]
            typed = classify_type(path)
            rep = random_reparam(path.interval, seed=5000 + trial)
            composed = reparametrize(path, rep)
            typed_c = classify_type(composed)
            assert typed_c.ptype is typed.ptype
            assert typed_c.a_inv == typed.a_inv or math.isinf(typed.a_inv)
            if typed.ptype is PathType.L1:
                assert abs(typed_c.b_inv - typed.b_inv) <= 1e-8
        # 50 random motions
        rng = np.random.default_rng(505)
        for trial in range(50):
            path, expected_type = base_paths[trial % len(base_paths)]
            typed = classify_type(path)
            family = list(GroupFamily)[trial % 4]
            tag = GroupTag(family, path.sig)
            h = sample_group_element(tag, seed=6000 + trial, scale=1.5)
            moved = apply(h, path)
            typed_m = classify_type(moved)
            assert typed_m.ptype is typed.ptype
            if typed.ptype is PathType.L1:
                assert abs(typed_m.b_inv - typed.b_inv) <= 1e-8
            a, b = path.interval.a, path.interval.b
            lo = a if math.isfinite(a) else -2.0
            hi = b if math.isfinite(b) else 2.0
            for t in rng.uniform(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo), 4):
                assert abs(arc_param(moved, typed_m, t) - arc_param(path, typed, t)) <= 1e-9


def _curve_trial_configs():
    """20 (path, group) combinations across types, families and fields."""
    configs = []
    fams = list(GroupFamily)
    for k in range(8):  # L4 pseudo spirals, all families twice
        configs.append((spiral_hyperbolic(200 + k), GroupTag(fams[k % 4], Signature(2, 1))))
    for k in range(4):  # L1 pseudo
        configs.append((spiral_hyperbolic(300 + k, Interval(0.0, 1.5)),
                        GroupTag(fams[k], Signature(2, 1))))
    for k in range(4):  # L4 Euclidean
        configs.append((exp_path(Signature(2, 2), seed=400 + k),
                        GroupTag(fams[k], Signature(2, 2))))
    configs.append((spiral_hyperbolic(500, Interval(0.0, math.inf)),
                    GroupTag(GroupFamily.SO, Signature(2, 1))))  # L2
    configs.append((spiral_hyperbolic(501, Interval(-math.inf, 0.5)),
                    GroupTag(GroupFamily.O, Signature(2, 1))))   # L3
    configs.append((exp_path(Signature(3, 3), seed=502),
                    GroupTag(GroupFamily.EO, Signature(3, 3))))  # n=3 L4
    configs.append((exp_path(Signature(3, 3), seed=503, interval=Interval(0.0, math.inf),
                             kind="pos"),
                    GroupTag(GroupFamily.SO, Signature(3, 3))))  # n=3 L2
    return configs


def test_criterion_6_curve_equivalence_end_to_end():
    with criterion(6, "20 motion+reparametrization trials: curves_equivalent holds, "
                      "g to 1e-6, L4 shift matches l_x(phi(a_J), a_I) to 1e-6"):
        configs = _curve_trial_configs()
        assert len(configs) == 20
        for k, (path, tag) in enumerate(configs):
            h = sample_group_element(tag, seed=7000 + k, scale=1.0)
            rep = random_reparam(path.interval, seed=7500 + k)
            moved = apply(h, reparametrize(path, rep))
            verdict = curves_equivalent(path, moved, tag)
            assert verdict.equivalent, (k, tag, verdict.failures[:2])
            assert np.max(np.abs(verdict.witness.g - h.g)) <= 1e-6, (k, tag)
            if tag.family.semidirect:
                assert np.max(np.abs(verdict.witness.u - h.u)) <= 1e-6
            typed = classify_type(path)
            if typed.ptype is PathType.L4:
                typed_moved = classify_type(moved)
                phi_a = eval_expr(rep.phi, typed_moved.a_I)
                expected = _signed_arc(_speed_bundle(path), phi_a, typed.a_I, 1e-12)
                assert abs(verdict.s0 - expected) <= 1e-6, (k, tag)
            else:
                assert verdict.s0 is None


def test_criterion_7_h_conjugation_identities():
    with criterion(7, "complex H-identities: [v,v] = (Hv,Hv) and "
                      "det M(Hx) = i^(n-p) det M(x) to 1e-12, 100 jets"):
        rng = np.random.default_rng(707)
        for sig in (Signature(2, 1), Signature(3, 2)):
            h = h_matrix(sig)
            for _ in range(100):
                rows = rng.normal(size=(sig.n, sig.n)) + 1j * rng.normal(size=(sig.n, sig.n))
                for row in rows:
                    lhs = pseudo_form(row, row, sig)
                    rhs = euclidean_form(h @ row, h @ row)
                    assert abs(lhs - rhs) <= 1e-12 * (1.0 + abs(lhs))
                jet = Jet(t=0.0, order=sig.n - 1, rows=rows)
                hjet = Jet(t=0.0, order=sig.n - 1, rows=rows @ h.T)
                want = (1j ** (sig.n - sig.p)) * det_m(jet)
                assert abs(det_m(hjet) - want) <= 1e-12 * (1.0 + abs(want))


NODE_WITNESSES = [
    ("constant", "3.5", (-1.0, 1.0)),
    ("variable", "t", (-1.0, 1.0)),
    ("negation", "-(t^2 + 1.0)", (-1.0, 1.0)),
    ("addition", "sin(t) + t^2", (-1.0, 1.0)),
    ("subtraction", "cosh(t) - t^3", (-1.0, 1.0)),
    ("multiplication", "t*exp(0.5*t)", (-1.0, 1.0)),
    ("division", "sin(t)/(t^2 + 2.0)", (-1.0, 1.0)),
    ("integer power", "t^4", (0.5, 2.0)),
    ("rational power", "t^(3/2)", (0.5, 2.5)),
    ("exp", "exp(0.8*t)", (-1.0, 1.0)),
    ("log", "log(t + 3.0)", (-1.0, 1.0)),
    ("sin", "sin(1.1*t)", (-2.0, 2.0)),
    ("cos", "cos(0.7*t)", (-2.0, 2.0)),
    ("tan", "tan(0.4*t)", (-1.0, 1.0)),
    ("sinh", "sinh(0.9*t)", (-1.5, 1.5)),
    ("cosh", "cosh(0.6*t)", (-1.5, 1.5)),
    ("tanh", "tanh(1.2*t)", (-1.5, 1.5)),
    ("sqrt", "sqrt(t + 4.0)", (-1.0, 1.0)),
]


def test_criterion_8_symbolic_derivative_oracle():
    with criterion(8, "all expression nodes, derivative orders 1-6, match central "
                      "finite differences to 1e-6 relative at 10 points"):
        for name, text, (lo, hi) in NODE_WITNESSES:
            rng = np.random.default_rng(sum(name.encode()))
            chain = [parse_expression(text)]
            for _ in range(6):
                chain.append(differentiate(chain[-1]))
            for order in range(1, 7):
                f_prev, f_now = chain[order - 1], chain[order]
                for t in rng.uniform(lo, hi, 10):
                    h = 1e-6 * max(1.0, abs(t))
                    fd = (eval_expr(f_prev, t + h) - eval_expr(f_prev, t - h)) / (2 * h)
                    sym = eval_expr(f_now, t)
                    assert abs(sym - fd) <= 1e-6 * max(1.0, abs(sym)), (name, order, t)
