"""Acceptance suite.  One test per criterion; a PASS/FAIL line per criterion is
printed in the "acceptance criteria" section of the terminal summary."""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from commonhc import config as cfgmod
from commonhc import harness
from commonhc.constructions import (Certificate, Query, build_holo_hyperbolic, build_holo_parabolic,
                                    build_lp_hyperbolic, build_lp_parabolic, build_shift_vector, certify,
                                    dilation_intervals)
from commonhc.funcspaces import (L2Vector, PiecewiseFunction, WeightedMeasure, backward_shift, dense_family,
                                 forward_shift, lp_norm)
from commonhc.polyapprox import sample_region
from commonhc.halfplane import Rect
from commonhc.salas import (WeightSpec, homothety_admissible, homothety_criterion, pair_grid,
                            translation_admissible, translation_criterion)
from commonhc.schedules import (DENSITY, DESK, build_aux_sequence, check_invariants, density_witness,
                                fiber_checkpoints, gen_add_schedule, gen_mult_schedule)

criterion = pytest.mark.criterion


def _power2(a, b):
    """int_a^b dt / (1 + t^2)^2 in closed form."""
    F = lambda t: 0.5 * (t / (1 + t * t) + math.atan(t))
    return F(b) - F(a)


# --------------------------------------------------------------------------


@criterion(1, "schedule density on 50000 stages")
def test_c01_density():
    t0 = time.perf_counter()
    mult = gen_mult_schedule([1.0, 1.0, 1.0], 50000, DENSITY)
    add = gen_add_schedule(50000, DENSITY, 3)
    missing = []
    for lam in (1.1, 1.5, 2.0, 2.718):
        for l in range(3):
            if density_witness(mult, lam, l, 0.05, 1000) is None:
                missing.append(("lam", lam, l))
    for a in (0.5, 1.0, math.pi):
        for l in range(3):
            if density_witness(add, a, l, 0.05, 1000) is None:
                missing.append(("a", a, l))
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    assert missing == [], f"no witness for {missing}"


@criterion(2, "schedule invariants and fiber checkpoints")
def test_c02_invariants():
    schedules = [gen_mult_schedule([1.0] * 6, 20000, DENSITY), gen_add_schedule(20000, DENSITY, 6),
                 gen_mult_schedule([1.0, 2.0, 0.5, 1.0, 3.0, 1.0], 400, DESK), gen_add_schedule(30, DESK, 6)]
    for s in schedules:
        assert check_invariants(s) == []
        M = [int(x) for x in s.M]
        assert all(b - a >= s.k0 + i for i, (a, b) in enumerate(zip(M, M[1:])))
        if s.kind == "mult":
            assert all(b < a for a, b in zip(s.logr, s.logr[1:]))
    for s in schedules[:2]:
        cps = fiber_checkpoints(s, 5, [10**2, 10**3, 10**4])
        assert len(cps) == 18
        for (l, K0), k in cps.items():
            assert k is not None and k > K0 and int(s.j[s.index(k)]) == l
            # nothing in (K0, k) is assigned l
            assert not any(int(s.j[s.index(m)]) == l for m in range(K0 + 1, k))


@criterion(3, "auxiliary sequence for v_k = k")
def test_c03_aux():
    N = 10**4
    aux = build_aux_sequence(lambda k: float(k), N)
    ks = np.arange(2, N + 1)
    assert np.array_equal(aux.u[1:], ks // 2)
    assert aux.u[0] == 1
    # independent estimate of the full series: u_1 = 1, then 10^6 terms of
    # floor(k/2)/k^3, then the remainder, at most sum_{k>n} 1/(2k^2) <= 1/(2n)
    n = 10**6
    k = np.arange(2, n + 1, dtype=float)
    full = 1.0 + math.fsum((np.floor(k / 2) / k**3).tolist()) + 1 / (2 * n)
    assert aux.partial <= full
    assert aux.bound - full > 0


@criterion(4, "shift construction replay")
def test_c04_shift():
    t0 = time.perf_counter()
    s = gen_mult_schedule([1.0, 1.0, 1.0], 10)
    targets = [L2Vector((1.0,)), L2Vector((0.0, 1.0)), L2Vector((0.6, 0.0, 0.8))]
    bundle = build_shift_vector(s, targets, 5)
    f = bundle.obj
    decay = bundle.find("norm-decay")
    assert decay and all(c.achieved <= c.bound for c in decay)
    orbit = bundle.find("orbit")
    assert orbit
    for c in orbit:
        _, lam, eps = s.ledger(c.stage)
        assert eps <= 0.25 and c.achieved <= 3 * eps == c.bound

    # brute force over every n <= M_5, straight from the coordinates of f
    M5 = int(s.M[s.index(5)])
    coef = np.array([f[i] for i in range(1, len(f) + 1)], dtype=float)
    rep = harness.verify_orbit(bundle, "ledger", n_schedule=list(range(1, M5 + 1)))
    assert rep.coherent and len(rep.rows) == len(orbit)
    for row in rep.rows:
        lam = float(row.params["lam"])
        v = np.array([targets[row.target][i] for i in range(1, len(targets[row.target]) + 1)], dtype=float)
        best = math.inf
        for n in range(1, M5 + 1):
            tail = lam**n * coef[n:]
            width = max(len(tail), len(v))
            diff = np.zeros(width)
            diff[:len(tail)] += tail
            diff[:len(v)] -= v
            best = min(best, math.sqrt(math.fsum(diff**2)))
        assert row.best_distance == pytest.approx(best, rel=1e-12, abs=1e-15)
        assert row.best_distance <= row.bound
    assert time.perf_counter() - t0 < 5.0


@criterion(5, "holomorphic parabolic replay")
def test_c05_holo_parabolic():
    t0 = time.perf_counter()
    s = gen_add_schedule(8)
    bundle = build_holo_parabolic(s, [[1.0], [0.0, 1.0], [0.0, 0.0, 1.0]], 4)
    chain = bundle.obj
    fits = bundle.find("fit-a") + bundle.find("fit-b")
    assert len(fits) == 8 and all(c.achieved <= 2.0**-c.stage for c in fits)
    compact = (0.5, 1.5, -0.5, 0.5)
    done = 0
    for k in range(chain.k0 + 1, chain.last + 1):
        i = s.index(k)
        l = int(s.j[i])
        a = float(s.X[i]) / int(s.M[i])
        out = certify(bundle, Query(target=l, params={"a": a}, stage=k, eps=0.25, compact=compact))
        if not isinstance(out, Certificate):
            continue
        done += 1
        assert out.bound == 0.75 + 2.0 ** (1 - chain.last)
        # fresh sample of the compact, evaluated directly
        z = sample_region(Rect(*compact), 400, np.random.default_rng(100 + k))
        P = np.polynomial.Polynomial([1.0] if l == 0 else [0.0] * l + [1.0])
        err = np.max(np.abs(chain(z + 1j * a * int(s.M[s.index(out.stage)])) - P(z)))
        assert err <= out.bound
    assert done >= 3
    assert time.perf_counter() - t0 < 60.0


@criterion(6, "holomorphic hyperbolic replay")
def test_c06_holo_hyperbolic():
    t0 = time.perf_counter()
    s = gen_mult_schedule([1.0, 1.0, 1.0], 10)
    bundle = build_holo_hyperbolic(s, [[1.0], [0.0, 1.0], [0.0, 0.0, 1.0]], 4, mu_list=[1.0])
    chain = bundle.obj
    fits = bundle.find("fit-a") + bundle.find("fit-b")
    assert fits and all(c.achieved <= 2.0**-c.stage for c in fits)
    for b in (0.0, 0.5):
        compact = (0.99, 1.01, b - 0.01, b + 0.01)
        done = 0
        for k in range(chain.k0 + 1, chain.last + 1):
            l, lam, _ = s.ledger(k)
            out = certify(bundle, Query(target=l, params={"lam": lam, "b": b, "mu": 1.0}, stage=k, eps=0.25,
                                        compact=compact, eta=0.005))
            if isinstance(out, Certificate):
                done += 1
                assert out.achieved <= out.bound == 0.75 + 2.0 ** (1 - chain.last)
        assert done >= 2, b
    assert time.perf_counter() - t0 < 60.0


@criterion(7, "weighted L^1 parabolic replay")
def test_c07_lp_parabolic():
    s = gen_add_schedule(8)
    bundle = build_lp_parabolic(s, dense_family(3), 5, measure=WeightedMeasure(p=1.0, alpha=2.0))
    norm = bundle.find("norm")[0]
    assert norm.passed and math.isfinite(norm.bound)
    certified = 0
    for k in range(2, 6):
        i = s.index(k)
        a = Fraction(float(s.X[i])) / int(s.M[i])
        out = certify(bundle, Query(target=int(s.j[i]), params={"a": a}, stage=k, eps=0.1))
        assert isinstance(out, Certificate), out
        terms = {n: bundle.find(n, k) for n in ("term-1", "term-2", "term-3")}
        assert all(ts and all(t.achieved <= 0.1 for t in ts) for ts in terms.values())
        assert out.name == "term-1" and out.achieved == 0
        certified += 1
    assert certified == 4
    # quadrature against closed forms
    m1, m2 = WeightedMeasure(p=1, alpha=1), WeightedMeasure(p=1, alpha=2)
    for lo, hi in ((-3, 1), (0, 1), (9, 11), (-50, 40)):
        F = PiecewiseFunction.indicator(lo, hi)
        assert abs(lp_norm(F, m1).value - (math.atan(hi) - math.atan(lo))) <= 1e-8
        assert abs(lp_norm(F, m2).value - _power2(lo, hi)) <= 1e-8


@criterion(8, "weighted L^1 hyperbolic replay")
def test_c08_lp_hyperbolic():
    s = gen_mult_schedule([1.0, 1.0, 1.0], 10)
    targets = [PiecewiseFunction.indicator(1, 2), PiecewiseFunction.tent(Fraction(3, 2), Fraction(1, 2)),
               PiecewiseFunction.indicator(-2, -1)]
    bundle = build_lp_hyperbolic(s, targets, 6, b_test=[0.0, 1.0],
                                 measure=WeightedMeasure(p=1.0, alpha=2.0))
    names = ("S1", "S2", "S3", "S1'", "S2'", "S3'")
    for b in (0.0, 1.0):
        certified = []
        for k in range(2, 7):
            l, lam, _ = s.ledger(k)
            out = certify(bundle, Query(target=l, params={"lam": lam, "b": b}, stage=k, eps=0.1))
            if isinstance(out, Certificate):
                certified.append(k)
                for n in names:
                    cs = [c for c in bundle.find(n, k) if c.params["b"] == b]
                    assert cs and all(c.achieved <= 0.1 for c in cs), (b, k, n)
        assert certified, b
    logs = dilation_intervals(s, 6)
    ks = sorted(logs)
    for k in ks:
        assert logs[k][0] < logs[k][1]
    for a, c in zip(ks, ks[1:]):
        assert logs[a][1] == logs[c][0]
    assert bundle.find("disjoint-intervals")[0].passed


@criterion(9, "admissible-weight example")
def test_c09_salas():
    t0 = time.perf_counter()
    w = WeightSpec("reciprocal-linear")
    tr = translation_criterion(w, [1.0], 4000, 1e-3)
    assert tr.verdict == "witness-found" and tr.witness <= 2100
    n = tr.witness
    assert abs(tr.values[n - 1] - math.log((n + 2) / n)) <= 1e-6
    ho = homothety_criterion(w, [(1.0, 2.0)], 60, 1e-3)
    assert ho.verdict == "fails-on-horizon"
    trailing = ho.values[int(0.75 * len(ho.values)):]
    assert all(abs(v - math.log(2)) <= 1e-4 for v in trailing)
    grid = np.round(np.arange(-100, 100 + 1e-9, 0.05), 10)
    assert 1.70 <= translation_admissible(w, grid).sup_ratio <= 1.80
    assert homothety_admissible(w, pair_grid(np.linspace(0, 200, 81))).sup_ratio <= 1 + 1e-10
    assert time.perf_counter() - t0 < 5.0


@criterion(10, "quadrature and shift oracles")
def test_c10_oracles():
    r = lp_norm(PiecewiseFunction.indicator(0, 1), WeightedMeasure(p=1, alpha=2))
    assert abs(r.value - (0.25 + math.pi / 8)) <= 1e-8
    rng = np.random.default_rng(2024)
    for _ in range(100):
        x = L2Vector(tuple(rng.standard_normal(int(rng.integers(0, 30))).tolist()))
        y = forward_shift(x)
        assert y.norm() == x.norm()
        assert backward_shift(y) == x


@criterion(11, "demo determinism")
def test_c11_determinism(tmp_path):
    for name in cfgmod.demo_names():
        a, b = tmp_path / name / "a", tmp_path / name / "b"
        assert harness.run_experiment(text=cfgmod.demo_text(name), out_dir=a, seed=7) == harness.EXIT_OK, name
        assert harness.run_experiment(text=cfgmod.demo_text(name), out_dir=b, seed=7) == harness.EXIT_OK, name
        files = sorted(p.name for p in a.iterdir())
        assert files == sorted(p.name for p in b.iterdir())
        for fn in files:
            assert (a / fn).read_bytes() == (b / fn).read_bytes(), (name, fn)
