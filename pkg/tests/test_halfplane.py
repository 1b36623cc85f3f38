import cmath
import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from commonhc.errors import DomainError, GeometryError
from commonhc.halfplane import (AutomorphismParams, Disk, Rect, RegionSchedule, cayley, certify_regions,
                                classify_automorphism, disk_coefficients, distance, find_containing_stage,
                                hyperbolic_radius, hyperbolic_regions, inv_cayley, parabolic_radius,
                                parabolic_regions, php_disk_to_euclidean, php_ratio)


def test_cayley_values():
    assert cayley(0) == 1
    assert cayley(0.5) == 3
    assert abs(inv_cayley(cayley(0.3 + 0.4j)) - (0.3 + 0.4j)) < 1e-12


def test_cayley_round_trip_cloud():
    rng = np.random.default_rng(7)
    r = np.sqrt(rng.uniform(0, 0.99, 1000))
    z = r * np.exp(2j * np.pi * rng.uniform(size=1000))
    assert np.max(np.abs(inv_cayley(cayley(z)) - z)) < 1e-12
    assert np.all(cayley(z).real > 0)


@pytest.mark.parametrize("z", [1.0, 1j, 2.0])
def test_cayley_domain(z):
    with pytest.raises(DomainError):
        cayley(z)


def test_inv_cayley_domain():
    with pytest.raises(DomainError):
        inv_cayley(-1 + 1j)


@pytest.mark.parametrize("params", [AutomorphismParams.parabolic(1.0), AutomorphismParams.hyperbolic(2.0, 0.0),
                                    AutomorphismParams.hyperbolic(3.0, 0.7), AutomorphismParams.parabolic(-0.4)])
def test_normal_forms_round_trip(params):
    theta, a = disk_coefficients(params)
    got = classify_automorphism(theta, a)
    assert got.kind == params.kind
    if params.kind == "parabolic":
        assert got.shift == pytest.approx(params.shift, abs=1e-9)
    else:
        assert got.lam == pytest.approx(params.lam, rel=1e-9)
        assert got.b == pytest.approx(params.b, abs=1e-9)


def test_disk_form_conjugates_psi():
    # sigma o phi o sigma^{-1} acts as psi on a few points
    for params in (AutomorphismParams.parabolic(1.0), AutomorphismParams.hyperbolic(2.0, 0.5)):
        theta, a = disk_coefficients(params)
        for z in (0.1, -0.3 + 0.2j, 0.5j):
            phi = cmath.exp(1j * theta) * (z - a) / (1 - a.conjugate() * z)
            assert abs(cayley(phi) - params.psi(cayley(z))) < 1e-10


def test_elliptic_rotation():
    got = classify_automorphism(math.pi / 3, 0j)
    assert got.kind == "elliptic"
    assert abs(got.attractive) < 1e-12
    with pytest.raises(DomainError):
        got.psi(1.0)


def test_near_degenerate_raises():
    theta = 0.8
    a = math.sqrt(math.sin(theta / 2) ** 2 + 1e-10)
    with pytest.raises(DomainError, match="near-degenerate"):
        classify_automorphism(theta, a)


def test_classify_rejects_outside_disk():
    with pytest.raises(DomainError):
        classify_automorphism(0.0, 1.0)


def test_family_parameter_domain():
    with pytest.raises(DomainError):
        AutomorphismParams.hyperbolic(1.0)
    with pytest.raises(DomainError):
        AutomorphismParams.parabolic(0.0)


def test_php_disk():
    d = php_disk_to_euclidean(1 / 3)
    assert d.center.real == pytest.approx(1.25, abs=1e-15)
    assert d.radius == pytest.approx(0.75, abs=1e-15)
    assert php_ratio(2.0) == pytest.approx(1 / 3, abs=1e-15)
    tiny = php_disk_to_euclidean(1e-6)
    assert tiny.center.real - 1 < 3e-12
    for R in (0.0, 1.0, -0.2):
        with pytest.raises(DomainError):
            php_disk_to_euclidean(R)


@given(st.floats(min_value=1e-3, max_value=0.99), st.floats(min_value=0, max_value=2 * math.pi))
def test_php_disk_boundary(R, t):
    d = php_disk_to_euclidean(R)
    z = d.center + d.radius * cmath.exp(1j * t)
    assert php_ratio(z) == pytest.approx(R, rel=1e-9)


def test_radii_formulas():
    assert parabolic_radius(2, 6, 12) == 2
    assert hyperbolic_radius(math.log(4), math.log(4), 0.5) == pytest.approx(1 / 6, abs=1e-15)


def test_parabolic_regions_invariants(add8):
    reg = parabolic_regions(add8)
    assert certify_regions(reg) == []
    ks = sorted(reg.stages)
    assert ks == [2, 3, 4, 5, 6]
    for k in ks:
        st_ = reg[k]
        assert st_.C.center == pytest.approx(complex(st_.R / 2, 0))
        assert st_.C.x_hi - st_.C.x_lo == pytest.approx(st_.R - st_.delta)
    for k1, k2 in zip(ks, ks[1:]):
        assert distance(reg[k1].D, reg[k2].D) > 0


def test_parabolic_find_stage(add8):
    reg = parabolic_regions(add8)
    box = Rect(0.1, 1.0, -1.0, 1.0)
    # oracle: the square [d/2, R - d/2] x [-(R-d)/2, (R-d)/2] contains the box
    expected = None
    for k in sorted(reg.stages):
        R, d = reg[k].R, reg[k].delta
        if d / 2 < 0.1 and (R - d) / 2 > 1:
            expected = k
            break
    assert find_containing_stage(reg, box) == expected == 3
    assert find_containing_stage(reg, Rect(0.1, 1000.0, 0, 1)) is None
    with pytest.raises(DomainError):
        find_containing_stage(reg, Rect(-1, 1, 0, 1))


def test_hyperbolic_ratio_four(mult10):
    logr = -np.log(4.0) * np.arange(1, 11)
    s = dataclasses.replace(mult10, logr=logr)
    reg = hyperbolic_regions(s, delta=0.5, stages=[2, 3, 4])
    assert certify_regions(reg) == []
    assert reg[3].R == pytest.approx(1 / 6, abs=1e-15)
    assert all(isinstance(reg[k].D, Disk) for k in reg.stages)


def test_hyperbolic_delta_scaling(mult10):
    big = hyperbolic_regions(mult10, delta=0.5)
    small = hyperbolic_regions(mult10, delta=1e-6)
    for k in big.stages:
        assert small[k].R == pytest.approx(big[k].R * 2e-6, rel=1e-12)


def test_regions_round_trip(add8, mult10):
    for reg in (parabolic_regions(add8), hyperbolic_regions(mult10)):
        again = RegionSchedule.from_dict(reg.to_dict())
        assert again == reg


def test_regions_wrong_schedule(add8, mult10):
    with pytest.raises(GeometryError):
        parabolic_regions(mult10)
    with pytest.raises(GeometryError):
        hyperbolic_regions(add8)
    with pytest.raises(GeometryError):
        parabolic_regions(add8, delta=1.5)
