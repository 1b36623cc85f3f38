import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from commonhc.errors import DomainError, FitError
from commonhc.halfplane import Rect, parabolic_regions
from commonhc.polyapprox import (Chain, Poly, TargetSet, arnoldi_fit, build_chain, chain_eval, chain_extend,
                                 chain_init, degree_ladder, sample_region, stage_errors, telescoping_check,
                                 two_set_fit)

UNIT = Rect(0, 1, 0, 1)
UP = UNIT.shift(6j)


def test_reproduces_common_polynomial():
    f = lambda z: z**2 + 1
    poly, cert = two_set_fit(TargetSet(UNIT, f), TargetSet(UP, f), 1e-10)
    assert cert.error < 1e-10
    z = sample_region(UP, 200, np.random.default_rng(3))
    assert np.max(np.abs(poly(z) - f(z))) < 1e-10


def test_one_zero_fit():
    one = lambda z: np.ones(np.shape(z), dtype=complex)
    zero = lambda z: np.zeros(np.shape(z), dtype=complex)
    poly, cert = two_set_fit(TargetSet(UNIT, one), TargetSet(UP, zero), 0.1)
    assert cert.passed and cert.degree <= 60
    assert cert.n_validation == 4 * cert.n_fit


def test_overlap_rejected():
    f = lambda z: z
    with pytest.raises(DomainError):
        two_set_fit(TargetSet(UNIT, f), TargetSet(Rect(0.5, 2, 0.5, 2), f), 0.1)


def test_cap_failure_reports_best():
    # |z| is not holomorphic; no polynomial meets 1e-12 on both sets
    f = lambda z: np.abs(z).astype(complex)
    with pytest.raises(FitError) as info:
        two_set_fit(TargetSet(UNIT, f), TargetSet(UP, f), 1e-12, degree_cap=12)
    assert info.value.best_error > 1e-12


@settings(max_examples=25)
@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=1,
                max_size=8))
def test_reproduction_property(coeffs):
    P = np.polynomial.Polynomial(np.array(coeffs, dtype=complex))
    scale = max(1.0, float(np.sum(np.abs(coeffs))) * 7.0 ** len(coeffs))
    poly, cert = two_set_fit(TargetSet(UNIT, P), TargetSet(UP, P), 1e-10 * scale)
    assert cert.error <= 1e-10 * scale


def test_degree_ladder():
    assert degree_ladder(40) == [8, 12, 18, 27, 40]
    assert degree_ladder(5) == [5]


def test_poly_round_trip():
    rng = np.random.default_rng(0)
    z = sample_region(UNIT, 100, rng)
    p = arnoldi_fit(z, np.exp(z), 10, UNIT.center, 0.5)
    q = Poly.from_dict(p.to_dict())
    assert np.array_equal(p(z), q(z))


def test_chain_starts_at_one(add8):
    chain = chain_init("parabolic", parabolic_regions(add8), [[1.0]], 2)
    z = np.array([1.0, 2 + 3j, 100j])
    assert np.all(chain.partial(chain.k0, z) == 1)


def test_first_stage_with_zero_target(add8):
    regions = parabolic_regions(add8)
    chain = chain_extend(chain_init("parabolic", regions, [[0.0]], 1), add8)
    k = chain.last
    rng = np.random.default_rng(11)
    zd = sample_region(regions[k].D, 300, rng)
    assert np.max(np.abs(chain.partial(k, zd))) <= 2.0**-k
    assert abs(chain.partial(k, 1.0) - 1) <= 2.0**-k


def test_extend_order(add8):
    chain = chain_init("parabolic", parabolic_regions(add8), [[1.0]], 2)
    with pytest.raises(DomainError):
        chain_extend(chain, add8, k=chain.k0 + 2)


def test_built_chain_certificates(holo_par):
    chain = holo_par.obj
    for st_ in chain.stages[1:]:
        assert st_.cert.passed
        ea, eb = stage_errors(chain, holo_par.schedule, st_.k)
        assert ea <= st_.budget and eb <= st_.budget


def test_telescoping(holo_par):
    for k, sup, budget in telescoping_check(holo_par.obj):
        assert sup <= budget, k


def test_chain_eval_bounds(holo_par):
    chain = holo_par.obj
    K = chain.last
    value, bound = chain_eval(chain, 1.0)
    assert bound == 2.0 ** (1 - K)
    assert value == chain(1.0)
    far = chain.gamma(K).x_hi + 10.0
    with pytest.raises(DomainError):
        chain_eval(chain, complex(far, 0))


def test_chain_eval_consistency(holo_par):
    chain = holo_par.obj
    K = chain.last
    for k in range(chain.k0 + 1, K):
        z = sample_region(chain.gamma(k), 100, np.random.default_rng(k))
        value, _ = chain_eval(chain, z)
        slack = sum(2.0**-m for m in range(k + 1, K + 1))
        assert np.max(np.abs(value - chain.partial(k, z))) <= slack


def test_chain_round_trip(holo_par):
    chain = holo_par.obj
    again = Chain.from_dict(chain.to_dict())
    z = np.array([1.0, 1 + 0.5j])
    assert np.array_equal(again(z), chain(z))


def test_build_chain_deterministic(add8):
    regions = parabolic_regions(add8)
    a = build_chain("parabolic", add8, regions, [[1.0], [0.0, 1.0]], 2, seed=3)
    b = build_chain("parabolic", add8, regions, [[1.0], [0.0, 1.0]], 2, seed=3)
    assert a.to_dict() == b.to_dict()
