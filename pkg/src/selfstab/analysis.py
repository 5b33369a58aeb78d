"""Empirical checks of local structure: right-localizability and Hölder growth."""

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import AllIncrementsZero, DomainError, EmptySample, InsufficientScales
from .point_process import PointSet, StripSpec, generate_poisson_strip
from .rng import derive_seed
from .simulate import TruncationPlan
from .solver import solve_sequential
from .stable import cms_stable_sample, poisson_sum_scale

# standard deviation of the Kolmogorov distribution (limit law of sqrt(n) * D_n)
KOLMOGOROV_SD = 0.26033

# seed keys: (0, i) unit-frame strip of path i, (1,) reference sample
_PATH_KEY, _REFERENCE_KEY = 0, 1


def ks_distance(samples_a, samples_b):
    """Two-sample Kolmogorov-Smirnov statistic ``sup_x |F_a(x) - F_b(x)|``."""
    a = np.sort(np.asarray(samples_a, dtype=float).ravel())
    b = np.sort(np.asarray(samples_b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise EmptySample("both samples must be non-empty")
    pooled = np.concatenate((a, b))
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_standard_error(n, m):
    return KOLMOGOROV_SD * math.sqrt(1.0 / n + 1.0 / m)


@dataclass
class LocalizationReport:
    z0: float
    alpha_at_z0: float
    r_values: list
    u: float
    ks_stats: list
    sample_count: list
    reference_scale: float
    reference_count: int
    plan: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if not len(self.ks_stats) == len(self.r_values) == len(self.sample_count):
            raise DomainError("ks_stats, sample_count and r_values must align")
        if any(n < 100 for n in self.sample_count):
            raise DomainError("each scale needs at least 100 samples")

    def standard_errors(self):
        return [ks_standard_error(n, self.reference_count) for n in self.sample_count]

    def inversions(self, n_se=2.0):
        """Pairs of successive scales (r decreasing) where the KS distance went up.

        Returns ``(index, increase, within_tolerance)`` tuples, tolerance being
        ``n_se`` standard errors of the difference.
        """
        order = np.argsort(self.r_values)[::-1]
        ks = np.asarray(self.ks_stats)[order]
        se = np.asarray(self.standard_errors())[order]
        out = []
        for i in range(len(ks) - 1):
            rise = ks[i + 1] - ks[i]
            if rise > 0:
                tol = n_se * math.hypot(se[i], se[i + 1])
                out.append((int(order[i + 1]), float(rise), bool(rise <= tol)))
        return out

    def to_json(self):
        return json.dumps(asdict(self), indent=2)

    def save(self, json_path=None, csv_path=None):
        if json_path:
            with open(json_path, "w") as fh:
                fh.write(self.to_json())
        if csv_path:
            with open(csv_path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["r", "ks", "n"])
                for r, ks, n in zip(self.r_values, self.ks_stats, self.sample_count):
                    writer.writerow([repr(float(r)), repr(float(ks)), n])


def scaled_increments(alpha, z0, r_values, u, plan, path_seed):
    """``(Z(ru) - z0) / r^(1/alpha(z0))`` for one restart, at every ``r``.

    The strip is drawn once in the unit frame ``(0, u) x ((-N, -K] u [K, N))``
    and mapped to ``(0, ru)`` by ``(x, y) -> (r x, y / r)``, which preserves the
    Lebesgue mean measure. Every ``r`` therefore sees the same underlying
    points (common random numbers), and the truncation is the same once
    rescaled.
    """
    unit = generate_poisson_strip(StripSpec(0.0, u, plan.K, plan.N, path_seed))
    expo = 1.0 / alpha(z0)
    out = np.empty(len(r_values))
    for j, r in enumerate(r_values):
        x = r * unit.x
        # r * x can round up onto the right end
        x = np.minimum(x, np.nextafter(r * u, 0.0))
        ps = PointSet(0.0, r * u, x, unit.y / r, presorted=True)
        f = solve_sequential(ps, alpha, z0)
        out[j] = (f.final_value - z0) / r ** expo
    return out


def localization_experiment(alpha, z0, r_values, u=1.0, n_paths=4000, plan=None, seed=0,
                            n_reference=100_000, workers=None):
    """Compare scaled increments after a restart at ``z0`` with the local stable law.

    By the Markov property, conditioning on the past at a time where the path
    equals ``z0`` amounts to restarting the solver at ``z0``. For each ``r`` the
    scaled increment over ``[0, ru]`` is compared, by two-sample KS distance,
    with a large sample of the constant-index stable motion at index
    ``alpha(z0)`` evaluated at time ``u``. ``plan`` gives the strip cutoffs in
    the rescaled unit frame (default ``K = 0``, ``N = 1e4``).
    """
    r_values = [float(r) for r in r_values]
    if not r_values or any(r <= 0 for r in r_values):
        raise DomainError("r values must be positive")
    if not 0 < u <= 1:
        raise DomainError("u must lie in (0, 1]")
    if plan is None:
        plan = TruncationPlan.explicit(0.0, 1e4)
    alpha0 = float(alpha(z0))
    scale = poisson_sum_scale(alpha0, u)
    reference = cms_stable_sample(alpha0, scale, n_reference, derive_seed(seed, _REFERENCE_KEY))

    def one(i):
        return scaled_increments(alpha, z0, r_values, u, plan, derive_seed(seed, _PATH_KEY, i))

    if workers is None or workers <= 1:
        rows = [one(i) for i in range(n_paths)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(n_paths)))
    samples = np.array(rows).reshape(n_paths, len(r_values))
    ks = [ks_distance(samples[:, j], reference) for j in range(len(r_values))]
    return LocalizationReport(
        z0=float(z0), alpha_at_z0=alpha0, r_values=r_values, u=float(u), ks_stats=ks,
        sample_count=[n_paths] * len(r_values), reference_scale=scale,
        reference_count=n_reference, plan=plan.to_dict(), seed=int(seed),
    )


# Hölder regularity


@dataclass
class HolderFit:
    slope: float
    intercept: float
    residuals: list
    h_used: list

    def to_json(self):
        return json.dumps(asdict(self), indent=2)


def holder_fit(path, t, h_values):
    """Least-squares fit of ``log|Z(t+h) - Z(t)|`` against ``log h``; zero increments are dropped."""
    h = np.asarray(h_values, dtype=float)
    if h.size < 3:
        raise InsufficientScales("need at least 3 scales")
    if np.any(h <= 0):
        raise DomainError("scales must be positive")
    if t + h.max() >= path.grid[-1]:
        raise DomainError("t + max(h) must stay inside the path interval")
    incr = np.abs(path.value_at(t + h) - path.value_at(t))
    keep = incr > 0
    if not np.any(keep):
        raise AllIncrementsZero(f"no movement on any scale after t={t}")
    if keep.sum() < 2:
        raise InsufficientScales("fewer than 2 non-zero increments")
    lx, ly = np.log(h[keep]), np.log(incr[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return HolderFit(float(slope), float(intercept), resid.tolist(), h[keep].tolist())


def holder_estimate(path, t, h_values):
    """Log-log slope of the increments after ``t``: an estimate of the local growth exponent."""
    return holder_fit(path, t, h_values).slope


def holder_constant(path, t, exponent):
    """Smallest ``C`` with ``|Z(t+h) - Z(t)| <= C h^exponent`` at every grid time after ``t``."""
    later = path.grid[path.grid > t]
    if later.size == 0:
        raise DomainError("no grid times after t")
    incr = np.abs(path.value_at(later) - path.value_at(t))
    return float(np.max(incr / (later - t) ** exponent))
