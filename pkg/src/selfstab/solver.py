"""Jump functions driven by a finite point set.

Given a point set ``{(x, y)}``, an index function ``alpha`` and a start value
``a0``, the solvers return the unique cadlag ``f`` on ``[t0, t1)`` with

    f(t) = a0 + sum_{x <= t} y**<-1/alpha(f(x-))>.

:func:`solve_sequential` is the workhorse: a single left-to-right pass, exact
for finite sets. :func:`solve_picard` iterates the fixed-point map instead and
serves as an independent check. Both treat points sharing an ``x`` as one
combined jump evaluated at the common pre-jump value.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .alpha_model import RANGE_SLACK, AlphaModel, signed_power, stable_norm_constant_closed, y_weight_ab
from .errors import DomainError, NoConvergence, NotContractive, OutOfInterval, RangeViolation


@dataclass(frozen=True, eq=False)
class JumpFunction:
    """Piecewise-constant cadlag function on ``[t0, t1)``.

    ``values[0]`` is the value on ``[t0, breakpoints[0])`` and ``values[k]``
    the value on ``[breakpoints[k-1], breakpoints[k])``.
    """

    t0: float
    t1: float
    a0: float
    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.values.size != self.breakpoints.size + 1:
            raise ValueError("need exactly one more value than breakpoints")
        self.breakpoints.flags.writeable = False
        self.values.flags.writeable = False

    def __len__(self):
        return self.breakpoints.size

    def __call__(self, t):
        return self.eval(t)

    @property
    def final_value(self):
        """``f(t1-)``."""
        return float(self.values[-1])

    def eval(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any((t_arr < self.t0) | (t_arr >= self.t1)):
            raise OutOfInterval(f"eval needs t in [{self.t0}, {self.t1})")
        out = self.values[np.searchsorted(self.breakpoints, t_arr, side="right")]
        return float(out) if out.ndim == 0 else out

    def left_limit(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any((t_arr <= self.t0) | (t_arr > self.t1)):
            raise OutOfInterval(f"left_limit needs t in ({self.t0}, {self.t1}]")
        out = self.values[np.searchsorted(self.breakpoints, t_arr, side="left")]
        return float(out) if out.ndim == 0 else out

    def sup_distance(self, other):
        """``sup_t |f(t) - g(t)|`` over the common interval."""
        if (self.t0, self.t1) != (other.t0, other.t1):
            raise DomainError("functions live on different intervals")
        # both are constant between the union of breakpoints
        knots = np.union1d(self.breakpoints, other.breakpoints)
        probe = np.concatenate(([self.t0], knots))
        return float(np.max(np.abs(self.eval(probe) - other.eval(probe))))

    def rows(self):
        """``(t, value)`` rows: start, every breakpoint, and the left limit at ``t1``."""
        ts = np.concatenate(([self.t0], self.breakpoints, [self.t1]))
        vs = np.concatenate((self.values, [self.values[-1]]))
        return ts, vs

    def save_csv(self, path):
        ts, vs = self.rows()
        with open(path, "w", newline="") as fh:
            fh.write("t,value\n")
            for t, v in zip(ts, vs):
                fh.write(f"{t:.17g},{v:.17g}\n")


def eval(f, t):  # noqa: A001 - mirrors the documented operation name
    return f.eval(t)


def left_limit(f, t):
    return f.left_limit(t)


def write_metadata(path, f, alpha, ps, **extra):
    """JSON sidecar for an exported jump function."""
    meta = {
        "a0": f.a0,
        "interval": [f.t0, f.t1],
        "alpha_model": alpha.to_config() if isinstance(alpha, AlphaModel) else str(alpha),
        "point_set_sha256": ps.digest(),
        "n_points": len(ps),
        "n_breakpoints": len(f),
    }
    meta.update(extra)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2)
    return meta


# sequential pass


def _weight_mode(w):
    """Map a weight spec to a kernel mode, or ``None`` if only the Python pass can handle it."""
    if w is None:
        return 0, 1.0
    if isinstance(w, str):
        if w.lower() in ("c", "c_alpha", "normalized", "normalised"):
            return 2, 1.0
        raise DomainError(f"unknown weight {w!r}")
    if isinstance(w, (int, float)):
        return 1, float(w)
    return None


def _weight_callable(w):
    mode, const = _weight_mode(w) or (None, None)
    if mode == 0:
        return None
    if mode == 1:
        return lambda al: const
    if mode == 2:
        return stable_norm_constant_closed
    return w


def _python_pass(x, y, a0, exponent_at, weight=None):
    """Reference pass in plain Python; ``exponent_at(x, v)`` returns the index used at jump time ``x``."""
    n = x.size
    breaks, values = [], [a0]
    s = a0
    i = 0
    while i < n:
        xi = x[i]
        al = exponent_at(xi, s)
        w = 1.0 if weight is None else float(weight(al))
        expo = -1.0 / al
        js = jc = 0.0
        while i < n and x[i] == xi:
            yi = float(y[i])
            term = yi ** expo if yi > 0 else -((-yi) ** expo)
            js, jc = _kernels._two_sum.py_func(js, jc, w * term)
            i += 1
        s = s + (js + jc)
        breaks.append(xi)
        values.append(s)
    return np.array(breaks, dtype=float), np.array(values, dtype=float)


def _run_pass(ps, alpha, a0, w=None):
    a0 = float(a0)
    mode = _weight_mode(w)
    if alpha.is_builtin and mode is not None:
        p = tuple(alpha.params) + (0.0,) * (3 - len(alpha.params))
        breaks, values, status, bad = _kernels.sequential_pass(
            ps.x, ps.y, a0, _kernels.KIND_CODES[alpha.kind], p[0], p[1], p[2],
            alpha.a, alpha.b, mode[0], mode[1],
        )
        if status:
            alpha(bad)  # raises RangeViolation with the model's message
            raise RangeViolation(f"alpha({bad!r}) left [{alpha.a}, {alpha.b}]")
    else:
        breaks, values = _python_pass(ps.x, ps.y, a0, lambda _x, v: alpha(v), _weight_callable(w))
    return JumpFunction(ps.t0, ps.t1, a0, np.array(breaks), np.array(values))


def solve_sequential(ps, alpha, a0=0.0):
    """Exact solution for a finite point set by one left-to-right pass.

    At each distinct jump time the contributions of all points there are
    summed (with compensation) using the exponent ``-1/alpha`` at the value
    just before, and the total is added to that value.
    """
    return _run_pass(ps, alpha, a0)


def solve_truncated(ps, alpha, a0, n):
    """Solution driven only by the points with ``|y| <= n``."""
    return solve_sequential(ps.truncate(n), alpha, a0)


def solve_weighted(ps, alpha, w, a0=0.0):
    """Sequential pass with jumps ``w(alpha(f(x-))) * y**<-1/alpha(f(x-))>``.

    ``w`` may be ``None`` (no weight), a number, the string ``"C"`` for the
    stable normalising constant, or any callable on ``[a, b]``.
    """
    return _run_pass(ps, alpha, a0, w)


def solve_nonautonomous(ps, alpha3, g, a0=0.0, bounds=(0.0, 1.0)):
    """Sequential pass where the index at a jump at ``x`` is ``alpha3(x, f(x-), g(x))``.

    The index is frozen at the jump time, which keeps ``f`` piecewise
    constant. Reading the time argument as the evaluation time instead would
    make ``f`` vary between jumps and is not supported. Values of ``alpha3``
    outside ``bounds`` (open at 0 and 1 by default) raise :class:`RangeViolation`.
    """
    lo, hi = bounds

    def exponent_at(x, v):
        al = float(alpha3(x, v, g(x)))
        closed_ok = lo - RANGE_SLACK <= al <= hi + RANGE_SLACK
        if not closed_ok or not 0.0 < al < 1.0:
            raise RangeViolation(f"alpha3({x!r}, {v!r}, g) = {al!r} outside [{lo}, {hi}]")
        return al

    breaks, values = _python_pass(ps.x, ps.y, float(a0), exponent_at)
    return JumpFunction(ps.t0, ps.t1, float(a0), breaks, values)


# fixed-point iteration and bounds


def contraction_sum(ps, alpha):
    """``M * sum |y|^(-1/(a,b))`` over all points; below 1 the fixed-point map contracts."""
    M = alpha.M
    if M == 0 or len(ps) == 0:
        return 0.0
    return M * math.fsum(y_weight_ab(ps.y, alpha.a, alpha.b))


def _apply_operator(ps, alpha, a0, pre, starts):
    """One application of the fixed-point map, given pre-jump values at each distinct x."""
    exps = -1.0 / alpha(pre)
    counts = np.diff(np.append(starts, len(ps)))
    terms = signed_power(ps.y, np.repeat(exps, counts))
    jumps = np.add.reduceat(terms, starts) if len(ps) else np.empty(0)
    return np.concatenate(([a0], a0 + np.cumsum(jumps)))


def solve_picard(ps, alpha, a0=0.0, tol=1e-13, max_iter=500, full_output=False):
    """Fixed point of ``f -> a0 + sum y**<-1/alpha(f(x-))>`` by Picard iteration from ``f = a0``.

    Requires ``contraction_sum(ps, alpha) < 1``. Stops at the first ``k >= 1``
    with ``||f_{k+1} - f_k|| < tol`` and returns ``f_{k+1}``; with
    ``full_output`` also returns ``k``.
    """
    a0 = float(a0)
    k_sum = contraction_sum(ps, alpha)
    if not k_sum < 1:
        raise NotContractive(f"contraction sum {k_sum:.4g} >= 1; use solve_sequential")
    breaks, starts = np.unique(ps.x, return_index=True)
    values = np.full(breaks.size + 1, a0)
    values = _apply_operator(ps, alpha, a0, values[:-1], starts)
    for k in range(1, max_iter + 1):
        new = _apply_operator(ps, alpha, a0, values[:-1], starts)
        change = float(np.max(np.abs(new - values)))
        values = new
        if change < tol:
            f = JumpFunction(ps.t0, ps.t1, a0, breaks.astype(float), values)
            return (f, k) if full_output else f
    raise NoConvergence(f"no convergence to {tol} in {max_iter} iterations (last change {change:.3e})")


def _tail_weight(y, a, b):
    ay = np.abs(y)
    # |y|^(-1/alpha) <= |y|^(-1/b) for |y| >= 1 and <= |y|^(-1/a) below 1
    return np.maximum(ay ** (-1.0 / a), ay ** (-1.0 / b))


def truncation_error_bound(ps, alpha, n, form="product", m=None):
    """Certified bound on ``sup |f_n - f|``.

    ``product``:     prod_{|y|<=n} (1 + M |y|^(-1/(a,b))) * sum_{|y|>n} |y|^(-1/b)
    ``exponential``: exp(M sum_{|y|<=n} |y|^(-1/(a,b)))   * sum_{|y|>n} |y|^(-1/b)

    With ``m`` the tail runs over ``n < |y| <= m`` only, which bounds
    ``sup |f_m - f_n|``. Tail points with ``|y| < 1`` contribute ``|y|^(-1/a)``.
    """
    ay = np.abs(ps.y)
    head = ay <= n
    tail = ~head if m is None else (~head & (ay <= m))
    if not np.any(tail):
        return 0.0
    tail_sum = math.fsum(_tail_weight(ps.y[tail], alpha.a, alpha.b))
    M = alpha.M
    if M == 0 or not np.any(head):
        return tail_sum
    weights = M * y_weight_ab(ps.y[head], alpha.a, alpha.b)
    if form == "product":
        log_factor = math.fsum(np.log1p(weights))
    elif form == "exponential":
        log_factor = math.fsum(weights)
    else:
        raise DomainError(f"unknown bound form {form!r}")
    if log_factor > 700:
        return math.inf
    return math.exp(log_factor) * tail_sum
