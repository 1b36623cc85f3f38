import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest

from commonhc.constructions import (Certificate, ConstructionBundle, Query, Refusal, build_holo_hyperbolic,
                                    build_lp_hyperbolic, build_lp_parabolic, build_shift_vector, certify,
                                    dilation_intervals, dumps_bundle, loads_bundle, mu_tail)
from commonhc.errors import ConstructionError, DomainError
from commonhc.funcspaces import L2Vector, PiecewiseFunction, WeightedMeasure, backward_shift, dense_family


def _closed_power2(a, b):
    """int_a^b dt / (1 + t^2)^2."""
    F = lambda t: 0.5 * (t / (1 + t * t) + math.atan(t))
    return F(b) - F(a)


# --------------------------------------------------------------------------
# shift


def test_shift_single_entries(mult10):
    e1 = L2Vector.basis(1)
    bundle = build_shift_vector(mult10, [e1, e1, e1], 5)
    f = bundle.obj
    support = [n for n in range(1, len(f) + 1) if f[n] != 0]
    expected = [int(mult10.M[mult10.index(int(k))]) + 1 for k in bundle.ledger["scheduled"]]
    assert support == sorted(expected)
    for k in map(int, bundle.ledger["scheduled"]):
        assert f[int(mult10.M[mult10.index(k)]) + 1] == pytest.approx(bundle.ledger["d"][str(k)], rel=1e-15)


def test_shift_norm_decay(shift_bundle, mult10):
    for c in shift_bundle.find("norm-decay"):
        assert c.passed
        direct = backward_shift(shift_bundle.obj, 1.0, int(mult10.M[mult10.index(c.stage)])).norm()
        assert direct == c.achieved
        # the y_m have disjoint supports, so the norm is the l^2 sum of the d_m
        d = [shift_bundle.ledger["d"][k] for k in shift_bundle.ledger["scheduled"] if int(k) >= c.stage]
        assert direct == pytest.approx(math.sqrt(math.fsum(x * x for x in d)), rel=1e-12)
        assert direct <= c.details["sum_d"] * (1 + 1e-15) <= math.exp(mult10.logr[mult10.index(c.stage)])


def test_shift_ledger_certificates(shift_bundle, mult10):
    orbit = shift_bundle.find("orbit")
    assert orbit and all(c.passed for c in orbit)
    for c in orbit:
        _, _, eps = mult10.ledger(c.stage)
        assert c.bound == 3 * eps


def test_shift_empty_targets(mult10):
    bundle = build_shift_vector(mult10, [], 5)
    assert bundle.obj == L2Vector()
    assert all(c.achieved == 0 for c in bundle.certificates)


def test_shift_norm_mismatch(mult10):
    with pytest.raises(DomainError):
        build_shift_vector(mult10, [L2Vector((2.0,))], 5)


def test_shift_refusals(shift_bundle, mult10):
    # stage 3 schedules target 1
    l, lam, eps = mult10.ledger(3)
    out = certify(shift_bundle, Query(target=0, params={"lam": lam}, stage=3, eps=eps))
    assert isinstance(out, Refusal) and "choice mismatch" in out.reasons
    out = certify(shift_bundle, Query(target=l, params={"lam": 1.0}, stage=3))
    assert isinstance(out, Refusal)


def test_certify_is_deterministic(shift_bundle, mult10):
    l, lam, eps = mult10.ledger(4)
    q = Query(target=l, params={"lam": lam}, stage=4, eps=eps)
    a, b = certify(shift_bundle, q), certify(shift_bundle, q)
    assert isinstance(a, Certificate)
    assert a.to_dict() == b.to_dict()
    assert shift_bundle.certificates.count(a) == 1


# --------------------------------------------------------------------------
# holomorphic


def test_holo_fit_certificates(holo_par):
    fits = holo_par.find("fit-a") + holo_par.find("fit-b")
    assert len(fits) == 8
    assert all(c.passed and c.bound == 2.0**-c.stage for c in fits)
    assert holo_par.ledger["truncation"] == 2.0 ** (1 - holo_par.obj.last)


def _ledger_a(s, k):
    i = s.index(k)
    return float(s.X[i]) / int(s.M[i])


def test_holo_parabolic_constant_target(holo_par, add8):
    out = certify(holo_par, Query(target=0, params={"a": _ledger_a(add8, 2)}, stage=2, eps=0.25))
    assert isinstance(out, Certificate)
    assert out.bound == 3 * 0.25 + 2.0 ** (1 - holo_par.obj.last)


def test_holo_parabolic_identity_target(holo_par, add8):
    out = certify(holo_par, Query(target=1, params={"a": _ledger_a(add8, 3)}, stage=3, eps=0.25))
    assert isinstance(out, Certificate) and out.passed


def test_holo_parabolic_region_miss(holo_par, add8):
    q = Query(target=0, params={"a": _ledger_a(add8, 2)}, stage=2, eps=0.25, compact=(0.5, 5.0, -0.5, 0.5))
    out = certify(holo_par, q)
    assert isinstance(out, Refusal)
    assert any("region miss" in r for r in out.reasons)


def test_holo_parabolic_choice_mismatch(holo_par, add8):
    out = certify(holo_par, Query(target=2, params={"a": _ledger_a(add8, 2)}, stage=2, eps=0.25))
    assert isinstance(out, Refusal) and "choice mismatch" in out.reasons


def test_holo_hyperbolic_constant(holo_hyp, mult10):
    _, lam, _ = mult10.ledger(2)
    q = Query(target=0, params={"lam": lam, "b": 0.0, "mu": 1.0}, stage=2, eps=0.25,
              compact=(0.99, 1.01, -0.01, 0.01), eta=0.005)
    out = certify(holo_hyp, q)
    assert isinstance(out, Certificate)
    assert out.details["lam_M_r"] == pytest.approx(1.0, abs=1e-12)


def test_holo_hyperbolic_no_mu(mult10):
    _, lam, _ = mult10.ledger(2)
    bundle = build_holo_hyperbolic(mult10, [[1.0]], 1, mu_list=[],
                                   queries=[Query(target=0, params={"lam": lam}, stage=2, eps=0.25)])
    assert bundle.find("orbit") == []


# --------------------------------------------------------------------------
# L^p parabolic


def test_lp_parabolic_single_stage(add8):
    X = np.array([10.0, 40.0, 100.0, 250.0, 600.0, 1500.0, 4000.0, 9000.0])
    s = dataclasses.replace(add8, X=X)
    bundle = build_lp_parabolic(s, [PiecewiseFunction.indicator(-1, 1)], 1)
    assert bundle.obj == PiecewiseFunction.indicator(9, 11)
    norm = bundle.find("norm")[0]
    assert norm.details["norm_p"] == pytest.approx(_closed_power2(9, 11), rel=1e-10)


def test_lp_parabolic_zero_targets(add8):
    zero = PiecewiseFunction()
    bundle = build_lp_parabolic(add8, [zero, zero, zero], 5)
    assert bundle.obj == PiecewiseFunction()


def test_lp_parabolic_exact_translation(lp_par, add8):
    for k in range(2, 6):
        i = add8.index(k)
        l = int(add8.j[i])
        a = Fraction(float(add8.X[i])) / int(add8.M[i])
        out = certify(lp_par, Query(target=l, params={"a": a}, stage=k, eps=0.1))
        assert isinstance(out, Certificate), out
        assert out.name == "term-1" and out.achieved == 0
        assert all(c.passed for c in lp_par.find("term-2", k) + lp_par.find("term-3", k))


def test_lp_parabolic_eps_too_small(lp_par, add8):
    i = add8.index(3)
    a = Fraction(float(add8.X[i])) / int(add8.M[i])
    out = certify(lp_par, Query(target=int(add8.j[i]), params={"a": a}, stage=3, eps=1e-30))
    assert isinstance(out, Refusal)
    assert out.achieved is not None and out.achieved > 1e-30


def test_lp_parabolic_disjoint(lp_par):
    assert lp_par.find("disjoint-supports")[0].passed
    assert lp_par.find("norm")[0].passed


def test_lp_parabolic_unfit_support(add8):
    wide = PiecewiseFunction.indicator(-10**6, 10**6, Fraction(1, 2))
    with pytest.raises(ConstructionError):
        build_lp_parabolic(add8, [wide], 5, queries=[Query(target=0, params={"a": 1.0})])


def test_mu_tail_bounds_mass():
    m = WeightedMeasure(p=1, alpha=2)
    for x in (1.0, 3.0, 40.0):
        exact = math.pi / 4 - _closed_power2(0, x)  # mu([x, inf))
        assert exact <= mu_tail(x, m)
    assert mu_tail(0.0, m) == pytest.approx(math.pi / 2, rel=1e-12)


# --------------------------------------------------------------------------
# L^p hyperbolic


def test_lp_hyperbolic_intervals(mult10):
    logs = dilation_intervals(mult10, 6)
    ks = sorted(logs)
    for a, b in zip(ks, ks[1:]):
        assert logs[a][1] == logs[b][0]
    i = mult10.index(3)
    assert logs[3][1] == pytest.approx(-0.5 * (mult10.logr[i] + mult10.logr[i + 1]), rel=0, abs=0)


def test_lp_hyperbolic_single_stage(mult10):
    logr = np.log([1.0, 0.1, 1e-4, 1e-9, 1e-16, 1e-25, 1e-36, 1e-49, 1e-64, 1e-81])
    s = dataclasses.replace(mult10, logr=logr)
    bundle = build_lp_hyperbolic(s, [PiecewiseFunction.indicator(1, 2)], 2, b_test=[])
    lo, hi = bundle.obj.support
    assert float(lo) == pytest.approx(10, rel=1e-14) and float(hi) == pytest.approx(20, rel=1e-14)
    xs = np.array([10.5, 15.0, 19.9, 25.0, -15.0])
    assert np.array_equal(bundle.obj(xs), [1, 1, 1, 0, 0])


def test_lp_hyperbolic_support_rule(mult10):
    with pytest.raises(DomainError):
        build_lp_hyperbolic(mult10, [PiecewiseFunction.indicator(0, 1)], 4)


def test_lp_hyperbolic_s2_vanishes(lp_hyp, mult10):
    for k in (2, 3):
        l, lam, _ = mult10.ledger(k)
        out = certify(lp_hyp, Query(target=l, params={"lam": lam, "b": 0.0}, stage=k, eps=0.25))
        assert isinstance(out, Certificate), out
        assert out.name == "S2"
        assert out.achieved <= 1e-12


def test_lp_hyperbolic_certificates_pass(lp_hyp):
    assert lp_hyp.find("disjoint-intervals")[0].passed
    assert lp_hyp.find("norm")[0].passed


# --------------------------------------------------------------------------
# serialization


@pytest.mark.parametrize("name", ["shift_bundle", "holo_par", "lp_par", "lp_hyp"])
def test_bundle_round_trip(name, request):
    bundle: ConstructionBundle = request.getfixturevalue(name)
    text = dumps_bundle(bundle)
    again = loads_bundle(text)
    assert dumps_bundle(again) == text
    assert again.kind == bundle.kind


def test_bundle_bad_header():
    with pytest.raises(ConstructionError):
        loads_bundle("not a bundle\n{}")


def test_loaded_bundle_recertifies(shift_bundle, mult10):
    again = loads_bundle(dumps_bundle(shift_bundle))
    l, lam, eps = mult10.ledger(4)
    q = Query(target=l, params={"lam": lam}, stage=4, eps=eps)
    assert certify(again, q).to_dict() == certify(shift_bundle, q).to_dict()


def test_dense_family_in_lp_par(lp_par):
    assert lp_par.extra["targets_pw"] == dense_family(3)
