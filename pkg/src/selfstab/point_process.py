"""Finite plane point sets and Poisson samples on truncated strips."""

import csv
import hashlib
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvariantViolation, ParseError, TooFewPoints
from .rng import substream

log = logging.getLogger(__name__)

# substream keys: (half, role); half 0 is y > 0, half 1 is y < 0
_GAPS, _TIMES = 0, 1


class PointSet:
    """Finite configuration of points ``(x, y)`` in ``(t0, t1) x (R minus {0})``.

    Points are kept sorted by ``x`` and, within equal ``x``, by ``|y|``.
    Several points may share the same ``x``; the solvers treat them as one
    combined jump.
    """

    __slots__ = ("t0", "t1", "x", "y")

    def __init__(self, t0, t1, x=(), y=(), *, presorted=False):
        t0, t1 = float(t0), float(t1)
        if not t0 < t1:
            raise InvariantViolation(f"interval must satisfy t0 < t1, got ({t0}, {t1})")
        x = np.array(x, dtype=float).reshape(-1)
        y = np.array(y, dtype=float).reshape(-1)
        if x.shape != y.shape:
            raise InvariantViolation("x and y must have the same length")
        if x.size:
            if np.any(y == 0) or not np.all(np.isfinite(y)):
                raise InvariantViolation("every point needs a finite y != 0")
            if np.any(~(x > t0) | ~(x < t1)):
                raise InvariantViolation(f"every x must lie strictly inside ({t0}, {t1})")
            if not presorted:
                order = np.lexsort((np.abs(y), x))
                x, y = x[order], y[order]
        x.flags.writeable = False
        y.flags.writeable = False
        self.t0, self.t1, self.x, self.y = t0, t1, x, y

    def __len__(self):
        return self.x.size

    def __repr__(self):
        return f"PointSet(({self.t0}, {self.t1}), {len(self)} points)"

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return (self.t0 == other.t0 and self.t1 == other.t1
                and np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y))

    @property
    def interval(self):
        return (self.t0, self.t1)

    def is_sorted(self):
        if self.x.size < 2:
            return True
        dx = np.diff(self.x)
        return bool(np.all((dx > 0) | ((dx == 0) & (np.diff(np.abs(self.y)) >= 0))))

    def truncate(self, n):
        """Sub-point-set ``{|y| <= n}``."""
        keep = np.abs(self.y) <= n
        return PointSet(self.t0, self.t1, self.x[keep], self.y[keep], presorted=True)

    def restrict(self, lo, hi):
        """Points with ``lo < x < hi``, on the interval ``(lo, hi)``."""
        keep = (self.x > lo) & (self.x < hi)
        return PointSet(lo, hi, self.x[keep], self.y[keep], presorted=True)

    def negated(self):
        return PointSet(self.t0, self.t1, self.x, -self.y, presorted=True)

    def digest(self):
        """SHA-256 over the interval and the raw coordinates."""
        h = hashlib.sha256()
        h.update(np.array([self.t0, self.t1], dtype="<f8").tobytes())
        h.update(self.x.astype("<f8").tobytes())
        h.update(self.y.astype("<f8").tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class StripSpec:
    """Strip ``(t0, t1) x ((-N, -K] u [K, N))`` and the seed of its Poisson sample."""

    t0: float
    t1: float
    K: float
    N: float
    seed: int

    def __post_init__(self):
        if not self.t0 < self.t1:
            raise DomainError(f"strip needs t0 < t1, got ({self.t0}, {self.t1})")
        if self.K < 0:
            raise DomainError(f"K must be non-negative, got {self.K}")
        if self.N < self.K:
            raise DomainError(f"N must not be below K, got K={self.K}, N={self.N}")

    @classmethod
    def from_config(cls, cfg):
        return cls(float(cfg["t0"]), float(cfg["t1"]), float(cfg["K"]), float(cfg["N"]), int(cfg["seed"]))

    def to_config(self):
        return {"t0": self.t0, "t1": self.t1, "K": self.K, "N": self.N, "seed": self.seed}


def _half_strip_levels(rng, K, N, rate):
    """Successive levels ``K + cumulative Exp(rate)`` gaps, stopping before the first level past ``N``."""
    mean = rate * (N - K)
    chunk = int(mean + 6.0 * math.sqrt(mean) + 64)
    start = K
    pieces = []
    while True:
        levels = start + np.cumsum(rng.exponential(1.0 / rate, size=chunk))
        over = np.searchsorted(levels, N, side="left")
        if over < chunk:
            pieces.append(levels[:over])
            break
        pieces.append(levels)
        start = levels[-1]
    out = np.concatenate(pieces)
    # a zero gap from K = 0 would put a point on y = 0, a null event
    return out[out > 0]


def generate_poisson_strip(spec):
    """Poisson sample with Lebesgue mean measure on the strip of ``spec``.

    On each half-strip the ``|y|`` levels start at ``K`` and grow by independent
    exponential gaps of rate ``T = t1 - t0`` until they pass ``N``; that
    overshooting level is discarded. Each retained level gets an independent
    uniform time on ``(t0, t1)``. The two halves, and the gaps and times within
    each half, use separate substreams of ``spec.seed``.
    """
    T = spec.t1 - spec.t0
    xs, ys = [], []
    if spec.N > spec.K:
        for half, sign in ((0, 1.0), (1, -1.0)):
            levels = _half_strip_levels(substream(spec.seed, half, _GAPS), spec.K, spec.N, T)
            times = substream(spec.seed, half, _TIMES).uniform(spec.t0, spec.t1, size=levels.size)
            # uniform() can return t0 itself
            times[times <= spec.t0] = np.nextafter(spec.t0, spec.t1)
            xs.append(times)
            ys.append(sign * levels)
    if not xs:
        return PointSet(spec.t0, spec.t1)
    return PointSet(spec.t0, spec.t1, np.concatenate(xs), np.concatenate(ys))


def min_x_gap(ps):
    """Smallest positive gap between consecutive distinct ``x`` values."""
    distinct = np.unique(ps.x)
    if distinct.size < 2:
        raise TooFewPoints(f"need at least two distinct x values, got {distinct.size}")
    return float(np.min(np.diff(distinct)))


def save_points(ps, path):
    """Write ``ps`` as CSV with header ``x,y`` and 17 significant digits."""
    with open(path, "w", newline="") as fh:
        fh.write("x,y\n")
        for x, y in zip(ps.x, ps.y):
            fh.write(f"{x:.17g},{y:.17g}\n")


def load_points(path, interval):
    """Read a CSV with header ``x,y`` into a :class:`PointSet` on ``interval``.

    Unsorted rows are accepted and sorted, with a warning. A blank file
    yields the empty point set.
    """
    t0, t1 = map(float, interval)
    xs, ys = [], []
    header_seen = False
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if not header_seen:
                if [c.strip() for c in row] != ["x", "y"]:
                    raise ParseError(f"expected header 'x,y', got {','.join(row)!r}", lineno)
                header_seen = True
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 columns, got {len(row)}", lineno)
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                raise ParseError(f"non-numeric row {','.join(row)!r}", lineno) from None
            if y == 0:
                raise InvariantViolation(f"line {lineno}: y = 0 is not allowed")
            if not t0 < x < t1:
                raise InvariantViolation(f"line {lineno}: x = {x!r} outside ({t0}, {t1})")
            xs.append(x)
            ys.append(y)
    if not header_seen:
        # a blank file is an empty point set
        return PointSet(t0, t1)
    ps = PointSet(t0, t1, xs, ys, presorted=True)
    if not ps.is_sorted():
        log.warning("points in %s were not sorted; sorting by x then |y|", path)
        ps = PointSet(t0, t1, xs, ys)
    return ps
