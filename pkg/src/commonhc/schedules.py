"""Stage schedules: exponents M_k paired with log-radii or offsets.

Two schedule families are produced here.

* A *multiplicative* schedule carries integers ``M_k`` and radii ``r_k``
  (stored only as ``log r_k``) such that, for every target index ``l`` and
  every ``lam > 1``, some late stage has ``j(k) = l`` and
  ``lam**M_k * r_k`` close to ``alpha_l``.
* An *additive* schedule carries ``M_k`` and offsets ``X_k`` with
  ``M_k * a`` close to ``X_k`` for every ``a > 0``.

Both are produced by the same task scheme.  A task is a pair ``(l, m)``: target
index ``l`` and window ``m >= 2`` covering ``lam in [1 + 1/m, m]`` (resp.
``a in [1/m, m]``) at tolerance ``eps_m = 2**-m``.  Each task sweeps a grid
across its window, one stage per grid point, with spacing chosen after
``M_k`` is fixed so that the stage covers ``[g, g + step]`` to within
``eps_m``.  Tasks are activated along diagonals ``l + m - 2 = round`` and
served round by round in increasing grid order, each for a block of
``block_base**round`` stages.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DomainError, ScheduleError

AlphaSpec = Union[Sequence[float], Callable[[int], float]]

_M_LIMIT = 2**62


@dataclass(frozen=True)
class Profile:
    """Growth parameters shared by both schedule kinds.

    ``gap(k) = k + gap0`` bounds ``M_{k+1} - M_k`` (and ``X_{k+1} - X_k``)
    from below; ``c_k = max(k, 2)`` bounds ``r_k / r_{k+1}`` from below.
    ``x_growth`` additionally forces ``X_{k+1} >= x_growth * X_k``; geometric
    offsets keep successive half-plane regions well separated relative to
    their size, which is what polynomial fitting needs.
    """

    name: str = "desk"
    k0: int = 1
    gap0: int = 0
    block_base: int = 1
    m_start: int = 1
    x_growth: float = 1.0

    def gap(self, k: int) -> int:
        return k + self.gap0

    def x_gap(self, k: int, x: float) -> float:
        return max(float(self.gap(k)), (self.x_growth - 1.0) * x)

    def ratio_floor(self, k: int) -> float:
        return float(max(k, 2))


DESK = Profile(name="desk", k0=1, gap0=4, block_base=1, m_start=2, x_growth=3.0)
DENSITY = Profile(name="density", k0=1, gap0=0, block_base=2, m_start=1)
PROFILES = {"desk": DESK, "density": DENSITY}


def window_eps(m: int) -> float:
    return 2.0 ** (-m)


@dataclass(frozen=True)
class MultSchedule:
    """Multiplicative schedule; arrays are indexed by ``k - k0``.

    ``lam[i]`` and ``eps[i]`` together with ``j[i]`` form the task ledger of
    stage ``k0 + i``: the generator guarantees
    ``logr[i] == log(alpha_{j[i]}) - M[i] * log(lam[i])``.
    """

    k0: int
    profile: Profile
    alphas: dict
    j: np.ndarray
    M: np.ndarray
    logr: np.ndarray
    lam: np.ndarray
    eps: np.ndarray
    window: np.ndarray
    kind: str = field(default="mult", init=False)

    @property
    def horizon(self) -> int:
        return len(self.M)

    @property
    def stages(self) -> range:
        return range(self.k0, self.k0 + self.horizon)

    def index(self, k: int) -> int:
        i = k - self.k0
        if not 0 <= i < self.horizon:
            raise IndexError(f"stage {k} outside schedule [{self.k0}, {self.k0 + self.horizon - 1}]")
        return i

    def ledger(self, k: int) -> tuple[int, float, float]:
        i = self.index(k)
        return int(self.j[i]), float(self.lam[i]), float(self.eps[i])

    def alpha(self, l: int) -> float:
        return self.alphas[int(l)]


@dataclass(frozen=True)
class AddSchedule:
    """Additive schedule; ``X[i] == M[i] * lam[i]`` exactly (``lam`` holds ``a_k``)."""

    k0: int
    profile: Profile
    j: np.ndarray
    M: np.ndarray
    X: np.ndarray
    lam: np.ndarray
    eps: np.ndarray
    window: np.ndarray
    kind: str = field(default="add", init=False)

    @property
    def horizon(self) -> int:
        return len(self.M)

    @property
    def stages(self) -> range:
        return range(self.k0, self.k0 + self.horizon)

    def index(self, k: int) -> int:
        i = k - self.k0
        if not 0 <= i < self.horizon:
            raise IndexError(f"stage {k} outside schedule [{self.k0}, {self.k0 + self.horizon - 1}]")
        return i

    def ledger(self, k: int) -> tuple[int, float, float]:
        i = self.index(k)
        return int(self.j[i]), float(self.lam[i]), float(self.eps[i])


# --------------------------------------------------------------------------
# generation


def _alpha_lookup(alphas: AlphaSpec):
    if callable(alphas):
        n_targets = None

        def get(l):
            value = float(alphas(l))
            if not value > 0:
                raise DomainError(f"alpha_{l} = {value!r} must be positive")
            return value
    else:
        values = [float(a) for a in alphas]
        if not values:
            raise DomainError("at least one target weight alpha_l is required")
        for l, value in enumerate(values):
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"alpha_{l} = {value!r} must be positive and finite")
        n_targets = len(values)

        def get(l):
            return values[l]

    return get, n_targets


def _task_order(horizon: int, n_targets, block_base: int, lo, hi, step, emit):
    """Drive the round-robin task scheme; ``emit(l, m, g)`` returns the stage's M."""
    grid: dict[tuple[int, int], float] = {}
    done: set[tuple[int, int]] = set()
    emitted = 0
    rnd = 0
    while emitted < horizon:
        for l in range(rnd + 1):
            if n_targets is not None and l >= n_targets:
                break
            m = rnd - l + 2
            grid[(l, m)] = lo(m)
        active = sorted(
            (g, l, m) for (l, m), g in grid.items() if (l, m) not in done
        )
        if not active:
            rnd += 1
            continue
        block = block_base**rnd
        for _, l, m in active:
            for _ in range(block):
                if emitted >= horizon:
                    return
                g = grid[(l, m)]
                M = emit(l, m, g)
                emitted += 1
                g_next = g + step(l, m, M)
                grid[(l, m)] = g_next
                if g_next > hi(m):
                    done.add((l, m))
                    break
        rnd += 1


def gen_mult_schedule(alphas: AlphaSpec, horizon: int, profile: Profile = DESK) -> MultSchedule:
    """Generate a multiplicative schedule of ``horizon`` stages.

    Parameters
    ----------
    alphas : sequence or callable
        Positive target weights ``alpha_l``.  A finite sequence restricts the
        choice function to ``l < len(alphas)``.
    horizon : int
        Number of stages to emit.
    profile : Profile
        Growth parameters.

    Returns
    -------
    MultSchedule
    """
    if horizon < 1:
        raise ScheduleError(f"horizon must be >= 1, got {horizon}")
    alpha, n_targets = _alpha_lookup(alphas)
    k0 = profile.k0
    js, Ms, logrs, lams, epss, wins = [], [], [], [], [], []
    used_alphas: dict[int, float] = {}

    def emit(l, m, g):
        a = alpha(l)
        used_alphas[l] = a
        log_a = math.log(a)
        log_g = math.log(g)
        k = k0 + len(Ms)
        if not Ms:
            M = profile.m_start
        else:
            prev_M, prev_logr = Ms[-1], logrs[-1]
            prev_k = k - 1
            prev_eps, prev_alpha = epss[-1], used_alphas[js[-1]]
            drop = max(
                math.log(profile.ratio_floor(prev_k)),
                math.log((prev_eps + prev_alpha) / prev_eps),
            )
            need = (log_a - prev_logr + drop) / log_g
            M = max(prev_M + profile.gap(prev_k), math.ceil(need))
            while log_a - M * log_g > prev_logr - drop:
                M += 1
        if M >= _M_LIMIT:
            raise ScheduleError(f"stage {k}: exponent M exceeds {_M_LIMIT}")
        js.append(l)
        Ms.append(M)
        logrs.append(log_a - M * log_g)
        lams.append(g)
        epss.append(window_eps(m))
        wins.append(m)
        return M

    def step(l, m, M):
        lam_low = 1.0 + 1.0 / m
        return window_eps(m) * lam_low / (2.0 * M * max(1.0, alpha(l)))

    _task_order(
        horizon, n_targets, profile.block_base,
        lo=lambda m: 1.0 + 1.0 / m, hi=lambda m: float(m), step=step, emit=emit,
    )
    return MultSchedule(
        k0=k0,
        profile=profile,
        alphas=dict(sorted(used_alphas.items())),
        j=np.array(js, dtype=np.int64),
        M=np.array(Ms, dtype=np.int64),
        logr=np.array(logrs, dtype=float),
        lam=np.array(lams, dtype=float),
        eps=np.array(epss, dtype=float),
        window=np.array(wins, dtype=np.int64),
    )


def gen_add_schedule(horizon: int, profile: Profile = DESK, n_targets: int | None = None) -> AddSchedule:
    """Generate an additive schedule of ``horizon`` stages.

    Offsets satisfy ``X_k >= k`` and ``X_{k+1} - X_k >= max(gap(k), (x_growth - 1) X_k)``.
    """
    if horizon < 1:
        raise ScheduleError(f"horizon must be >= 1, got {horizon}")
    if n_targets is not None and n_targets < 1:
        raise ScheduleError("n_targets must be positive")
    k0 = profile.k0
    js, Ms, Xs, lams, epss, wins = [], [], [], [], [], []

    def emit(l, m, g):
        k = k0 + len(Ms)
        if not Ms:
            M = max(profile.m_start, math.ceil(k / g))
            while M * g < k:
                M += 1
        else:
            prev_k = k - 1
            gap_x = profile.x_gap(prev_k, Xs[-1])
            M = max(Ms[-1] + profile.gap(prev_k), math.ceil((Xs[-1] + gap_x) / g))
            while M * g - Xs[-1] < gap_x:
                M += 1
        if M >= _M_LIMIT:
            raise ScheduleError(f"stage {k}: exponent M exceeds {_M_LIMIT}")
        js.append(l)
        Ms.append(M)
        Xs.append(M * g)
        lams.append(g)
        epss.append(window_eps(m))
        wins.append(m)
        return M

    def step(l, m, M):
        return window_eps(m) / (2.0 * M)

    _task_order(
        horizon, n_targets, profile.block_base,
        lo=lambda m: 1.0 / m, hi=lambda m: float(m), step=step, emit=emit,
    )
    return AddSchedule(
        k0=k0,
        profile=profile,
        j=np.array(js, dtype=np.int64),
        M=np.array(Ms, dtype=np.int64),
        X=np.array(Xs, dtype=float),
        lam=np.array(lams, dtype=float),
        eps=np.array(epss, dtype=float),
        window=np.array(wins, dtype=np.int64),
    )


# --------------------------------------------------------------------------
# queries and validation


def density_witness(schedule, param: float, l: int, eps: float, K: int) -> int | None:
    """Least stage ``k > K`` with ``j(k) = l`` whose orbit value is within ``eps``.

    For a multiplicative schedule ``param`` is ``lam > 1`` and the test is
    ``|lam**M_k * r_k - alpha_l| < eps``; for an additive schedule ``param``
    is ``a > 0`` and the test is ``|M_k * a - X_k| < eps``.

    ``None`` means no witness exists up to the schedule's horizon; it says
    nothing about later stages.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")
    last = schedule.k0 + schedule.horizon - 1
    if K >= last:
        # nothing to scan, but still a well-defined absence verdict
        if K > last:
            raise DomainError(f"K = {K} is beyond the schedule horizon (last stage {last})")
        return None
    start = max(0, K + 1 - schedule.k0)
    j = schedule.j[start:]
    M = schedule.M[start:].astype(float)
    if schedule.kind == "mult":
        if not param > 1:
            raise DomainError(f"lambda must be > 1, got {param}")
        if l not in schedule.alphas:
            return None
        alpha = schedule.alphas[l]
        # M*log(lam) + log r_k, rearranged through the ledger identity
        # log r_k = log(alpha_l) - M*log(lam_k) to avoid cancellation
        expo = M * (math.log(param) - np.log(schedule.lam[start:])) + math.log(alpha)
        value = np.exp(np.minimum(expo, 700.0))
        hit = (j == l) & (np.abs(value - alpha) < eps)
    else:
        if not param > 0:
            raise DomainError(f"a must be > 0, got {param}")
        hit = (j == l) & (np.abs(M * param - schedule.X[start:]) < eps)
    idx = np.flatnonzero(hit)
    if idx.size == 0:
        return None
    return int(schedule.k0 + start + idx[0])


def fiber_checkpoints(schedule, l_max: int, checkpoints: Sequence[int]) -> dict:
    """For each ``(l, K0)`` report the first stage after ``K0`` with ``j = l`` (or None)."""
    out = {}
    stages = np.arange(schedule.k0, schedule.k0 + schedule.horizon)
    for K0 in checkpoints:
        after = stages > K0
        for l in range(l_max + 1):
            idx = np.flatnonzero(after & (schedule.j == l))
            out[(l, K0)] = int(stages[idx[0]]) if idx.size else None
    return out


def check_invariants(schedule) -> list[str]:
    """Return the list of violated invariants (empty when the schedule is valid).

    All checks are exact: integer arithmetic for ``M``, float comparisons
    with zero tolerance for ``log r_k`` and ``X_k``.
    """
    problems = []
    prof = schedule.profile
    M = [int(x) for x in schedule.M]
    for i in range(1, len(M)):
        k = schedule.k0 + i - 1
        if M[i] - M[i - 1] < prof.gap(k):
            problems.append(f"M gap at stage {k}: {M[i] - M[i - 1]} < {prof.gap(k)}")
    if schedule.kind == "mult":
        logr = schedule.logr
        for i in range(1, len(M)):
            k = schedule.k0 + i - 1
            if not logr[i - 1] - logr[i] >= math.log(prof.ratio_floor(k)):
                problems.append(f"log r drop at stage {k} below log c_k")
            if not logr[i] < logr[i - 1]:
                problems.append(f"log r not strictly decreasing at stage {k}")
        for i in range(len(M)):
            alpha = schedule.alphas[int(schedule.j[i])]
            if logr[i] != math.log(alpha) - M[i] * math.log(schedule.lam[i]):
                problems.append(f"ledger identity broken at stage {schedule.k0 + i}")
    else:
        X = schedule.X
        for i in range(1, len(M)):
            k = schedule.k0 + i - 1
            if not X[i] - X[i - 1] >= prof.x_gap(k, X[i - 1]):
                problems.append(f"X gap at stage {k} below its floor")
        for i in range(len(M)):
            if X[i] != M[i] * schedule.lam[i]:
                problems.append(f"ledger identity X = M*a broken at stage {schedule.k0 + i}")
            if X[i] < schedule.k0 + i:
                problems.append(f"X_k < k at stage {schedule.k0 + i}")
    return problems


# --------------------------------------------------------------------------
# auxiliary sequences


@dataclass(frozen=True)
class AuxSequence:
    """Nondecreasing sequence ``u_1..u_N`` (stored 0-based) with a summability ledger.

    ``partial`` is ``sum_{k<=N} u_k / k**3`` and ``tail`` a certified upper
    bound on the remainder ``sum_{k>N} u_k / k**3``.
    """

    u: np.ndarray
    provenance: str
    partial: float
    tail: float
    certificate: dict = field(default_factory=dict)

    def __getitem__(self, k: int) -> float:
        if k < 1:
            raise IndexError("aux sequences are 1-based")
        return float(self.u[k - 1])

    def __len__(self):
        return len(self.u)

    @property
    def bound(self) -> float:
        return self.partial + self.tail


def _as_values(v, n):
    if callable(v):
        return np.array([float(v(k)) for k in range(1, n + 1)])
    values = np.asarray(v, dtype=float)
    if len(values) < n:
        raise DomainError(f"sequence v has {len(values)} terms, {n} needed")
    return values[:n]


def build_aux_sequence(v, horizon: int, pad: int = 0) -> AuxSequence:
    """Slowly growing majorant-dominated sequence used by the weighted L^p builds.

    ``u'_k = min(k, v_{floor(k/2)}, ..., v_k)`` and ``u_k = min_{k<=l<=N} u'_l``
    with ``N = horizon + pad``.  ``v`` is 1-based: a callable ``k -> v_k`` or a
    sequence whose first element is ``v_1``.
    """
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    n = horizon + pad
    v_vals = _as_values(v, n)
    if np.any(v_vals <= 0):
        raise DomainError("v must be positive")
    if np.any(np.diff(v_vals) < 0):
        bad = int(np.flatnonzero(np.diff(v_vals) < 0)[0]) + 1
        raise DomainError(f"v must be nondecreasing (v_{bad} > v_{bad + 1})")
    u_prime = np.empty(n)
    for k in range(1, n + 1):
        lo = max(1, k // 2)
        u_prime[k - 1] = min(float(k), float(np.min(v_vals[lo - 1:k])))
    u = np.minimum.accumulate(u_prime[::-1])[::-1][:horizon]
    ks = np.arange(1, horizon + 1, dtype=float)
    partial = float(math.fsum(u / ks**3))
    # u_k <= k, so the remainder is at most sum_{k>N} 1/k^2 <= 1/N
    tail = 1.0 / horizon
    return AuxSequence(u=u, provenance=f"min-window lemma, horizon={horizon}, pad={pad}",
                       partial=partial, tail=tail)


def build_aux_sequence_hyperbolic(schedule: MultSchedule, b_test: Sequence[float], horizon: int | None = None,
                                  tol: float = 1e-3, certify: bool = True) -> AuxSequence:
    """Auxiliary sequence for the dilation construction.

    ``u'_k = min(sqrt(k), (r_{k-1}/r_k)**(1/4))`` for ``k > k0`` and
    ``u'_{k0} = 1``; ``u`` is the suffix minimum, hence nondecreasing.

    The certificate records, at the tested horizon:

    a) ``sum u_k/k^3`` with the tail bound ``(2/3) N**-1.5`` (from ``u_k <= sqrt(k)``);
    b) ``max u_k * sqrt(r_k/r_{k-1})`` over the trailing quarter, compared to ``tol``;
    c) for each ``b``, ``sum_{m>k} u_m / (r_k/sqrt(r_m r_{m-1}) - r_k b + b)**3``
       at ``k`` = start of the trailing quarter, compared to ``tol``.  The
       literal weaker form with ``2**(m-k) sqrt(r_k/r_{k-1})`` in place of
       ``r_k/sqrt(r_m r_{m-1})`` is reported alongside as ``c_literal``.

    With ``certify=True`` any failing condition raises ``ScheduleError``.
    """
    N = schedule.horizon if horizon is None else horizon
    if N < 1 or N > schedule.horizon:
        raise DomainError(f"horizon must be in [1, {schedule.horizon}]")
    logr = schedule.logr[:N]
    k0 = schedule.k0
    ks = np.arange(k0, k0 + N, dtype=float)
    log_ratio = np.empty(N)  # log(r_{k-1}/r_k)
    log_ratio[0] = np.nan
    log_ratio[1:] = logr[:-1] - logr[1:]
    u_prime = np.empty(N)
    u_prime[0] = 1.0
    u_prime[1:] = np.minimum(np.sqrt(ks[1:]), np.exp(np.minimum(log_ratio[1:] / 4.0, 700.0)))
    u = np.minimum.accumulate(u_prime[::-1])[::-1]
    partial = float(math.fsum(u / ks**3))
    tail = (2.0 / 3.0) * float(ks[-1]) ** -1.5

    cert: dict = {"tol": tol, "a": {"partial": partial, "tail": tail, "ok": True}}
    start = max(1, (3 * N) // 4)
    if N >= 2:
        b_vals = u[start:] * np.exp(-log_ratio[start:] / 2.0)
        b_max = float(np.max(b_vals))
    else:
        b_max = 0.0
    cert["b"] = {"max_trailing": b_max, "ok": b_max <= tol}
    c_results = {}
    i = start
    for b in b_test:
        sharp, literal, positive = 0.0, 0.0, True
        rk = math.exp(logr[i])
        shift = b - rk * b
        for mi in range(i + 1, N):
            log_sharp = logr[i] - 0.5 * (logr[mi] + logr[mi - 1])
            den = (math.exp(log_sharp) if log_sharp < 700 else math.inf) + shift
            log_lit = (mi - i) * math.log(2.0) - 0.5 * log_ratio[i]
            den_lit = (math.exp(log_lit) if log_lit < 700 else math.inf) + shift
            if den <= 0:
                positive = False
                break
            sharp += u[mi] / den**3
            literal += u[mi] / den_lit**3 if den_lit > 0 else math.inf
        c_results[float(b)] = {
            "value": sharp, "c_literal": literal, "ok": positive and sharp <= tol,
        }
    cert["c"] = c_results
    cert["ok"] = cert["b"]["ok"] and all(r["ok"] for r in c_results.values())
    if certify and not cert["ok"]:
        failing = "b" if not cert["b"]["ok"] else "c"
        raise ScheduleError(f"conditions not met at horizon {N}: condition {failing} fails ({cert[failing]})")
    return AuxSequence(u=u, provenance=f"dilation variant on mult schedule, horizon={N}",
                       partial=partial, tail=tail, certificate=cert)


# --------------------------------------------------------------------------
# text serialization

_HEADER = "# commonhc schedule v1"


def dumps_schedule(schedule) -> str:
    """Line-oriented text form; floats are written with ``repr`` so parsing is bit-exact."""
    lines = [
        _HEADER,
        f"kind {schedule.kind}",
        f"k0 {schedule.k0}",
        f"horizon {schedule.horizon}",
        f"profile {json.dumps(asdict(schedule.profile), sort_keys=True)}",
    ]
    if schedule.kind == "mult":
        lines.append("alphas " + " ".join(f"{l}:{a!r}" for l, a in schedule.alphas.items()))
        lines.append("columns k j M logr lam eps window")
        values = schedule.logr
    else:
        lines.append("columns k j M X a eps window")
        values = schedule.X
    for i in range(schedule.horizon):
        lines.append(" ".join([
            str(schedule.k0 + i), str(int(schedule.j[i])), str(int(schedule.M[i])),
            repr(float(values[i])), repr(float(schedule.lam[i])), repr(float(schedule.eps[i])),
            str(int(schedule.window[i])),
        ]))
    return "\n".join(lines) + "\n"


def loads_schedule(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _HEADER:
        raise ScheduleError("not a schedule file (bad header)")
    meta = {}
    body_start = None
    for n, ln in enumerate(lines[1:], start=1):
        key, _, rest = ln.partition(" ")
        meta[key] = rest
        if key == "columns":
            body_start = n + 1
            break
    if body_start is None:
        raise ScheduleError("schedule file has no column line")
    kind = meta["kind"]
    k0 = int(meta["k0"])
    horizon = int(meta["horizon"])
    profile = Profile(**json.loads(meta["profile"]))
    rows = [ln.split() for ln in lines[body_start:]]
    if len(rows) != horizon:
        raise ScheduleError(f"expected {horizon} records, found {len(rows)}")
    for i, row in enumerate(rows):
        if int(row[0]) != k0 + i:
            raise ScheduleError(f"record {i} has stage {row[0]}, expected {k0 + i}")
    j = np.array([int(r[1]) for r in rows], dtype=np.int64)
    M = np.array([int(r[2]) for r in rows], dtype=np.int64)
    vals = np.array([float(r[3]) for r in rows])
    lam = np.array([float(r[4]) for r in rows])
    eps = np.array([float(r[5]) for r in rows])
    window = np.array([int(r[6]) for r in rows], dtype=np.int64)
    if kind == "mult":
        alphas = {}
        for item in meta.get("alphas", "").split():
            l, _, a = item.partition(":")
            alphas[int(l)] = float(a)
        return MultSchedule(k0=k0, profile=profile, alphas=alphas, j=j, M=M, logr=vals,
                            lam=lam, eps=eps, window=window)
    if kind == "add":
        return AddSchedule(k0=k0, profile=profile, j=j, M=M, X=vals, lam=lam, eps=eps, window=window)
    raise ScheduleError(f"unknown schedule kind {kind!r}")


def schedules_equal(a, b) -> bool:
    """Bitwise equality of two schedules (used for round-trip checks)."""
    if a.kind != b.kind or a.k0 != b.k0 or a.profile != b.profile:
        return False
    names = ["j", "M", "lam", "eps", "window", "logr" if a.kind == "mult" else "X"]
    for name in names:
        x, y = getattr(a, name), getattr(b, name)
        if x.shape != y.shape or x.tobytes() != y.tobytes():
            return False
    if a.kind == "mult" and a.alphas != b.alphas:
        return False
    return True
