"""Simulation of self-stabilizing processes and their constant-index relatives.

Every simulator follows the same recipe: draw a Poisson sample on a
truncated strip ``(t0, t1) x ((-N, -K] u [K, N))``, run the sequential jump
pass over it, and read the resulting cadlag path off a grid. The truncation
level ``N`` comes from a :class:`TruncationPlan`, which records the
certified bound on ``E ||Z_N - Z||`` when one is available.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .alpha_model import AlphaModel
from .errors import DomainError, Infeasible, RangeViolation
from .point_process import PointSet, StripSpec, generate_poisson_strip
from .rng import PRNG_NAME, derive_seed, substream
from .solver import JumpFunction, solve_sequential, solve_weighted

_MAX_N = float(2 ** 62)


@dataclass(frozen=True)
class TruncationPlan:
    """Cutoffs ``K < N`` for the strip plus the bound they certify.

    ``epsilon`` is ``None`` for plans given by explicit cutoffs. ``bound`` is
    the certified bound on ``E ||Z_N - Z||_inf`` (``inf`` when none applies).
    """

    K: float
    N: float
    bound: float
    epsilon: float | None = None
    T: float | None = None
    b: float | None = None
    M: float | None = None
    source: str = "explicit"

    def __post_init__(self):
        if self.K < 0 or not self.N > self.K:
            raise DomainError(f"plan needs 0 <= K < N, got K={self.K}, N={self.N}")

    @classmethod
    def explicit(cls, K, N, T=None, alpha=None):
        """Plan with given cutoffs; the bound is filled in when ``T`` and ``alpha`` are known."""
        K, N = float(K), float(N)
        bound = math.inf
        b = M = None
        if T is not None and alpha is not None:
            b, M = alpha.b, alpha.M
            bound = expectation_bound(N, T, alpha, K)
        return cls(K, N, bound, None, T, b, M, "explicit")

    def to_dict(self):
        """Plain mapping; an infinite (absent) bound becomes ``None`` so the JSON stays standard."""
        d = asdict(self)
        if math.isinf(d["bound"]):
            d["bound"] = None
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


@dataclass
class SampledPath:
    """Grid evaluation of a simulated path plus its provenance."""

    grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def value_at(self, t):
        """Right-continuous lookup of the path at ``t`` (grid times include every jump time)."""
        idx = np.searchsorted(self.grid, np.asarray(t, dtype=float), side="right") - 1
        if np.any(idx < 0):
            raise DomainError("time before the start of the grid")
        out = self.values[idx]
        return float(out) if np.ndim(out) == 0 else out

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("t,value\n")
            for t, v in zip(self.grid, self.values):
                fh.write(f"{t:.17g},{v:.17g}\n")


# truncation planning


def tail_weight_integral(K, a, b):
    """``int_K^inf |y|^(-1/(a,b)) dy`` in closed form (``inf`` for ``K = 0``)."""
    if K <= 0:
        return math.inf

    def upper(p, lo):
        # int_lo^inf y^-p (1 + log y) dy for lo >= 1, p > 1
        q = p - 1.0
        return lo ** (-q) * (1.0 / q + math.log(lo) / q + 1.0 / q ** 2)

    if K >= 1:
        return upper(1.0 / b, K)
    p = 1.0 / a
    q = p - 1.0
    # int_K^1 y^-p (1 - log y) dy, the 1/a branch dominates below 1
    lower = (K ** (-q) - 1.0) / q + (1.0 - K ** (-q)) / q ** 2 - K ** (-q) * math.log(K) / q
    return lower + upper(1.0 / b, 1.0)


def expectation_bound(n, T, alpha, K):
    """Bound on ``E ||Z_n - Z||_inf`` for the process driven by points with ``|y| >= K``::

        2bT/(1-b) * exp(2MT int_K^inf |y|^(-1/(a,b)) dy) * n^(-(1-b)/b)
    """
    a, b, M = alpha.a, alpha.b, alpha.M
    expo = 0.0 if M == 0 else 2.0 * M * T * tail_weight_integral(K, a, b)
    if expo > 700:
        return math.inf
    return 2.0 * b * T / (1.0 - b) * math.exp(expo) * n ** (-(1.0 - b) / b)


def planning_bound(n, T, b, M, K):
    """Closed-form planning bound (valid for ``K >= 1``)::

        2bT/(1-b) * exp(2TM (b/(1-b) log K + (b/(1-b))^2 K^(-(1-b)/b))) * n^(-(1-b)/b)
    """
    r = b / (1.0 - b)
    expo = 2.0 * T * M * (r * math.log(K) + r * r * K ** (-(1.0 - b) / b))
    return 2.0 * b * T / (1.0 - b) * math.exp(expo) * n ** (-(1.0 - b) / b)


def truncation_level(epsilon, T, alpha, K=1.0):
    """Smallest integer ``N`` whose planning bound is below ``epsilon**2``.

    By Markov's inequality the resulting ``Z_N`` then satisfies
    ``P(||Z_N - Z|| >= epsilon) < epsilon``.
    """
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    if K < 1:
        raise DomainError(f"the planning bound needs K >= 1, got {K}")
    if T <= 0:
        raise DomainError("T must be positive")
    b, M = alpha.b, alpha.M
    p = (1.0 - b) / b
    target = epsilon * epsilon
    try:
        constant = planning_bound(1.0, T, b, M, K)
        log_n = (math.log(constant) - math.log(target)) / p
    except OverflowError:
        raise Infeasible("planning bound overflows") from None
    if log_n > math.log(_MAX_N):
        raise Infeasible(f"required N exceeds {_MAX_N:.3g} (log N = {log_n:.1f})")
    N = max(math.ceil(math.exp(log_n)), 1)
    while planning_bound(N, T, b, M, K) >= target:
        N += 1
    while N > 1 and planning_bound(N - 1, T, b, M, K) < target:
        N -= 1
    if N <= K:
        N = math.floor(K) + 1
    return TruncationPlan(float(K), float(N), planning_bound(N, T, b, M, K), float(epsilon),
                          float(T), b, M, "planning-bound")


def small_jump_cutoff(epsilon, T):
    """``K`` with ``P(no point with |y| <= K) = 1 - epsilon`` on a strip of length ``T``."""
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    return -math.log1p(-epsilon) / (2.0 * T)


# path simulation


def grid_for(ps, grid_len):
    """Uniform grid on ``[t0, t1]``, with every jump time inserted when the step is not below the smallest gap."""
    return _grid(ps.t0, ps.t1, ps.x, grid_len)


def _grid(t0, t1, times, grid_len):
    if grid_len < 2:
        raise DomainError("grid_len must be at least 2")
    grid = np.linspace(t0, t1, int(grid_len))
    distinct = np.unique(times)
    if distinct.size == 1 or (distinct.size >= 2 and grid[1] - grid[0] >= np.min(np.diff(distinct))):
        grid = np.union1d(grid, distinct)
    return grid


def sample_path(f, grid, meta):
    inside = grid < f.t1
    values = np.empty(grid.size)
    values[inside] = f.eval(grid[inside])
    values[~inside] = f.final_value
    return SampledPath(grid, values, meta)


def _meta(variant, alpha, a0, ps, seed, K, N, **extra):
    meta = {
        "variant": variant,
        "seed": int(seed),
        "K": float(K),
        "N": float(N),
        "a0": float(a0),
        "interval": [ps.t0, ps.t1],
        "alpha_model": alpha.to_config() if isinstance(alpha, AlphaModel) else alpha,
        "n_points": len(ps),
        "point_set_sha256": ps.digest(),
        "prng": PRNG_NAME,
    }
    meta.update(extra)
    return meta


def simulate_points(interval, plan, seed):
    t0, t1 = interval
    return generate_poisson_strip(StripSpec(float(t0), float(t1), plan.K, plan.N, int(seed)))


def simulate_jump_function(alpha, a0, interval, plan, seed, weight=None):
    """Point set and exact jump function ``Z_N`` for one seed."""
    ps = simulate_points(interval, plan, seed)
    f = solve_sequential(ps, alpha, a0) if weight is None else solve_weighted(ps, alpha, weight, a0)
    return ps, f


def simulate_path(alpha, a0, interval, plan, seed, grid_len, *, variant="selfstab", weight=None):
    """One path of the self-stabilizing process truncated at ``plan.N``, sampled on a grid."""
    ps, f = simulate_jump_function(alpha, a0, interval, plan, seed, weight)
    extra = {"plan": plan.to_dict()}
    if weight is not None:
        extra["weight"] = weight if isinstance(weight, (str, int, float)) else getattr(weight, "__name__", "callable")
    return sample_path(f, grid_for(ps, grid_len), _meta(variant, alpha, a0, ps, seed, plan.K, plan.N, **extra))


def simulate_weighted(alpha, w, a0, interval, plan, seed, grid_len):
    """As :func:`simulate_path` with jumps scaled by ``w(alpha(Z(x-)))``."""
    return simulate_path(alpha, a0, interval, plan, seed, grid_len, variant="weighted", weight=w)


def simulate_stable_motion(alpha_const, interval, K, N, seed, grid_len):
    """Non-normalized symmetric stable motion: the constant-index case started at 0."""
    model = AlphaModel.constant(alpha_const)
    plan = TruncationPlan.explicit(K, N, interval[1] - interval[0], model)
    return simulate_path(model, 0.0, interval, plan, seed, grid_len, variant="stable")


def subordinator_points(ps):
    return PointSet(ps.t0, ps.t1, ps.x, np.abs(ps.y))


def simulate_subordinator(alpha_const, interval, K, N, seed, grid_len):
    """Stable subordinator: jumps ``|y|**(-1/alpha)``, started at 0."""
    model = AlphaModel.constant(alpha_const)
    plan = TruncationPlan.explicit(K, N)
    ps = subordinator_points(simulate_points(interval, plan, seed))
    f = solve_sequential(ps, model, 0.0)
    meta = _meta("subordinator", model, 0.0, ps, seed, K, N)
    return sample_path(f, grid_for(ps, grid_len), meta)


# tempered variant


@dataclass(frozen=True)
class TemperedTerms:
    """Random ingredients of the tempered series, sorted by jump time ``x``."""

    horizon: float
    x: np.ndarray
    gamma: np.ndarray
    eta: np.ndarray
    e: np.ndarray
    u: np.ndarray


def tempered_terms(horizon, n_terms, seed):
    """Draw the first ``n_terms`` terms: unit-rate arrivals, uniform times, fair signs, Exp(1) and U[0,1] marks."""
    if n_terms < 1:
        raise DomainError("n_terms must be at least 1")
    gamma = np.cumsum(substream(seed, 0).standard_exponential(n_terms))
    x = substream(seed, 1).uniform(0.0, horizon, n_terms)
    x[x <= 0] = np.nextafter(0.0, 1.0)
    eta = np.where(substream(seed, 2).random(n_terms) < 0.5, -1.0, 1.0)
    e = substream(seed, 3).standard_exponential(n_terms)
    u = substream(seed, 4).random(n_terms)
    order = np.argsort(x, kind="stable")
    return TemperedTerms(float(horizon), x[order], gamma[order], eta[order], e[order], u[order])


def solve_tempered(terms, alpha, a0=0.0):
    """Sequential pass of the tempered series; returns the jump function and the jump of every term."""
    a0 = float(a0)
    T = terms.horizon
    if alpha.is_builtin:
        p = tuple(alpha.params) + (0.0,) * (3 - len(alpha.params))
        breaks, values, jumps, status, bad = _kernels.tempered_pass(
            terms.x, terms.gamma, terms.eta, terms.e, terms.u, a0, T,
            _kernels.KIND_CODES[alpha.kind], p[0], p[1], p[2], alpha.a, alpha.b,
        )
        if status:
            alpha(bad)
            raise RangeViolation(f"alpha({bad!r}) left [{alpha.a}, {alpha.b}]")
    else:
        breaks, values, jumps = _tempered_python(terms, alpha, a0)
    return JumpFunction(0.0, T, a0, np.array(breaks), np.array(values)), np.array(jumps)


def _tempered_python(terms, alpha, a0):
    n = terms.x.size
    breaks, values, jumps = [], [a0], np.empty(n)
    s = a0
    two_sum = _kernels._two_sum.py_func
    i = 0
    while i < n:
        xi = terms.x[i]
        al = alpha(s)
        js = jc = 0.0
        while i < n and terms.x[i] == xi:
            stable_part = (al * terms.gamma[i] / terms.horizon) ** (-1.0 / al)
            tempered_part = terms.e[i] * terms.u[i] ** (1.0 / al)
            jumps[i] = terms.eta[i] * min(stable_part, tempered_part)
            js, jc = two_sum(js, jc, jumps[i])
            i += 1
        s = s + (js + jc)
        breaks.append(xi)
        values.append(s)
    return breaks, values, jumps


def tempered_envelope(gamma, horizon, a, b):
    """Range bound ``max((a G/T)^(-1/a), (a G/T)^(-1/b))`` on the stable part of a tempered jump."""
    v = a * np.asarray(gamma) / horizon
    return np.maximum(v ** (-1.0 / a), v ** (-1.0 / b))


def simulate_tempered(alpha, horizon, n_terms, seed, grid_len, a0=0.0):
    """Tempered self-stabilizing path on ``[0, horizon]`` from the first ``n_terms`` series terms.

    No certified truncation bound exists here; ``meta["residual_envelope"]``
    reports the envelope magnitude of the last included term as a heuristic.
    """
    terms = tempered_terms(horizon, n_terms, seed)
    f, _ = solve_tempered(terms, alpha, a0)
    meta = {
        "variant": "tempered",
        "seed": int(seed),
        "a0": float(a0),
        "interval": [0.0, float(horizon)],
        "alpha_model": alpha.to_config(),
        "n_terms": int(n_terms),
        "residual_envelope": float(tempered_envelope(terms.gamma.max(), horizon, alpha.a, alpha.b)),
        "prng": PRNG_NAME,
    }
    return sample_path(f, _grid(0.0, horizon, terms.x, grid_len), meta)


# batches


def simulate_batch(simulate_one, seed, n_paths, workers=None):
    """Run ``simulate_one(path_seed)`` for ``n_paths`` derived seeds, in path-index order.

    Path ``i`` uses seed ``derive_seed(seed, i)``; results do not depend on
    ``workers``.
    """
    seeds = [derive_seed(seed, i) for i in range(n_paths)]
    if workers is None or workers <= 1:
        return [simulate_one(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(simulate_one, seeds))
