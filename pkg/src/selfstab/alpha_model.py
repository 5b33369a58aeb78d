"""Stability-index functions and the scalar estimates built from them.

An :class:`AlphaModel` maps the current value ``z`` of a path to a local
stability index ``alpha(z)`` in ``[a, b]``, a subinterval of ``(0, 1)``. Besides the range
bounds, the solvers need the derivative-ratio bound

    M = sup_z |alpha'(z)| / alpha(z)**2,

which controls how much a jump ``y**<-1/alpha(z)>`` can move when ``z`` moves.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError, MissingBound, QuadratureFailure, RangeViolation
from .expr import compile_expression

RANGE_SLACK = 1e-12

_GRID_POINTS = 1_000_000
_USER_CHECK_GRID = np.linspace(-100.0, 100.0, 20001)


def signed_power(r, s):
    """``sign(r) * |r|**s``, elementwise.

    ``signed_power(0, s)`` is 0 for ``s > 0`` and a :class:`DomainError` for ``s <= 0``.
    """
    r_arr = np.asarray(r, dtype=float)
    s_arr = np.asarray(s, dtype=float)
    if np.any((r_arr == 0) & (s_arr <= 0)):
        raise DomainError("signed_power(0, s) is undefined for s <= 0")
    with np.errstate(divide="ignore"):
        out = np.sign(r_arr) * np.abs(r_arr) ** s_arr
    if out.ndim == 0:
        return float(out)
    return out


def y_weight_ab(y, a, b):
    """Combined weight ``max(|y|^(-1/a), |y|^(-1/b)) * (1 + |log|y||)``.

    Dominates ``|y|^(-1/alpha) * |log|y||`` for every ``alpha`` in ``[a, b]``.
    """
    y_arr = np.abs(np.asarray(y, dtype=float))
    if np.any(y_arr == 0):
        raise DomainError("y_weight_ab is undefined at y = 0")
    log_term = 1.0 + np.abs(np.log(y_arr))
    out = np.maximum(y_arr ** (-1.0 / a), y_arr ** (-1.0 / b)) * log_term
    if out.ndim == 0:
        return float(out)
    return out


def sine_moment(alpha):
    """``int_0^inf u^(-alpha) sin(u) du`` by quadrature.

    The head ``[0, 1]`` is integrated directly; the oscillating tail is handed
    to QUADPACK's Fourier-integral routine (QAWF), which extrapolates the
    alternating cycle sums.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    head, head_err = integrate.quad(
        lambda u: u ** (-alpha) * math.sin(u), 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200
    )
    tail, tail_err = integrate.quad(
        lambda u: u ** (-alpha), 1.0, np.inf, weight="sin", wvar=1.0, epsabs=1e-12, limlst=200
    )
    total = head + tail
    if not np.isfinite(total) or head_err + tail_err > 1e-10 * abs(total):
        raise QuadratureFailure(
            f"sine moment for alpha={alpha}: error estimate {head_err + tail_err:.3e} too large"
        )
    return total


def stable_norm_constant(alpha):
    """Normalising constant ``C_alpha = (int_0^inf u^-alpha sin u du)^(-1/alpha)``, by quadrature."""
    return sine_moment(alpha) ** (-1.0 / alpha)


def stable_norm_constant_closed(alpha):
    """Closed form ``(Gamma(1-alpha) cos(pi alpha / 2))^(-1/alpha)``."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return (special.gamma(1.0 - alpha) * math.cos(math.pi * alpha / 2.0)) ** (-1.0 / alpha)


@dataclass(frozen=True)
class AlphaModel:
    """Index function ``alpha: R -> [a, b]`` with ``0 < a <= b < 1``.

    Build instances through the classmethods; the raw constructor does not
    validate. ``params`` holds the family coefficients for the built-in kinds
    (``constant``, ``cosine``, ``rational``); ``user`` models carry an
    evaluator and the declared bounds.
    """

    kind: str
    params: tuple
    a: float
    b: float
    declared_M: float | None = None
    expression: str | None = None
    _fn: object = field(default=None, repr=False, compare=False)

    # construction

    @classmethod
    def constant(cls, value):
        value = float(value)
        if not 0 < value < 1:
            raise DomainError(f"constant index must lie in (0, 1), got {value}")
        return cls("constant", (value,), value, value, 0.0)

    @classmethod
    def cosine(cls, c0, c1):
        """``c0 + c1 cos(z)``."""
        c0, c1 = float(c0), float(c1)
        if c1 == 0:
            raise DomainError("c1 = 0 is the constant family; use AlphaModel.constant")
        a, b = c0 - abs(c1), c0 + abs(c1)
        _check_range(a, b)
        model = cls("cosine", (c0, c1), a, b)
        return _with_bound(model)

    @classmethod
    def rational(cls, c0, c1, c2):
        """``c0 + c1 / (1 + c2 z^2)`` with ``c2 > 0``."""
        c0, c1, c2 = float(c0), float(c1), float(c2)
        if c1 == 0:
            raise DomainError("c1 = 0 is the constant family; use AlphaModel.constant")
        if c2 <= 0:
            raise DomainError(f"c2 must be positive, got {c2}")
        a, b = min(c0, c0 + c1), max(c0, c0 + c1)
        _check_range(a, b)
        model = cls("rational", (c0, c1, c2), a, b)
        return _with_bound(model)

    @classmethod
    def from_expression(cls, text, a, b, M=None):
        """User model from an expression in ``z``; ``a`` and ``b`` are checked on a grid, ``M`` is trusted."""
        fn = compile_expression(text)
        return cls._user(fn, a, b, M, expression=text)

    @classmethod
    def from_callable(cls, fn, a, b, M=None, name="callable"):
        return cls._user(lambda z: np.asarray(fn(np.asarray(z, dtype=float)), dtype=float),
                         a, b, M, expression=name)

    @classmethod
    def _user(cls, fn, a, b, M, expression):
        a, b = float(a), float(b)
        _check_range(a, b)
        if M is not None:
            M = float(M)
            if M < 0:
                raise DomainError("declared M must be non-negative")
        model = cls("user", (), a, b, M, expression, fn)
        values = np.asarray(fn(_USER_CHECK_GRID), dtype=float)
        _check_values(model, values, _USER_CHECK_GRID)
        return model

    @classmethod
    def from_config(cls, cfg):
        """Build from a JSON-style mapping such as ``{"kind": "cosine", "c0": 0.57, "c1": 0.4}``."""
        kind = cfg.get("kind")
        try:
            if kind == "constant":
                return cls.constant(cfg["value"])
            if kind == "cosine":
                return cls.cosine(cfg["c0"], cfg["c1"])
            if kind == "rational":
                return cls.rational(cfg["c0"], cfg["c1"], cfg["c2"])
            if kind in ("user", "expr", "expression"):
                return cls.from_expression(cfg["expr"], cfg["a"], cfg["b"], cfg.get("M"))
        except KeyError as exc:
            raise DomainError(f"alpha model of kind {kind!r} is missing field {exc.args[0]!r}") from None
        raise DomainError(f"unknown alpha model kind {kind!r}")

    def to_config(self):
        if self.kind == "constant":
            return {"kind": "constant", "value": self.params[0]}
        if self.kind == "cosine":
            return {"kind": "cosine", "c0": self.params[0], "c1": self.params[1]}
        if self.kind == "rational":
            c0, c1, c2 = self.params
            return {"kind": "rational", "c0": c0, "c1": c1, "c2": c2}
        cfg = {"kind": "user", "expr": self.expression, "a": self.a, "b": self.b}
        if self.declared_M is not None:
            cfg["M"] = self.declared_M
        return cfg

    # evaluation

    @property
    def M(self):
        return derivative_ratio_bound(self)

    @property
    def is_builtin(self):
        return self.kind in ("constant", "cosine", "rational")

    @property
    def label(self):
        if self.kind == "constant":
            return f"alpha(z) = {self.params[0]:g}"
        if self.kind == "cosine":
            c0, c1 = self.params
            return f"alpha(z) = {c0:g} + {c1:g} cos(z)"
        if self.kind == "rational":
            c0, c1, c2 = self.params
            return f"alpha(z) = {c0:g} + {c1:g}/(1 + {c2:g} z^2)"
        return f"alpha(z) = {self.expression}"

    def raw(self, z):
        """Evaluate without the range check."""
        z = np.asarray(z, dtype=float)
        if self.kind == "constant":
            return np.full(z.shape, self.params[0])
        if self.kind == "cosine":
            c0, c1 = self.params
            return c0 + c1 * np.cos(z)
        if self.kind == "rational":
            c0, c1, c2 = self.params
            return c0 + c1 / (1.0 + c2 * z * z)
        return np.asarray(self._fn(z), dtype=float)

    def __call__(self, z):
        values = self.raw(z)
        _check_values(self, values, z)
        if values.ndim == 0:
            return float(values)
        return values

    def derivative(self, z):
        """Closed-form ``alpha'(z)``; built-in kinds only."""
        z = np.asarray(z, dtype=float)
        if self.kind == "constant":
            return np.zeros(z.shape)
        if self.kind == "cosine":
            return -self.params[1] * np.sin(z)
        if self.kind == "rational":
            _, c1, c2 = self.params
            return -2.0 * c1 * c2 * z / (1.0 + c2 * z * z) ** 2
        raise MissingBound("user models provide no closed-form derivative")

    def ratio(self, z):
        """``|alpha'(z)| / alpha(z)^2``."""
        return np.abs(self.derivative(z)) / self.raw(z) ** 2


def _check_range(a, b):
    if not (0 < a <= b < 1):
        raise DomainError(f"index range [{a}, {b}] must lie inside (0, 1)")


def _check_values(model, values, z):
    bad = (values < model.a - RANGE_SLACK) | (values > model.b + RANGE_SLACK) | ~np.isfinite(values)
    if np.any(bad):
        idx = np.flatnonzero(np.ravel(bad))[0]
        zz = np.ravel(np.broadcast_to(np.asarray(z, dtype=float), np.shape(values)))[idx]
        vv = np.ravel(values)[idx]
        raise RangeViolation(f"alpha({zz!r}) = {vv!r} outside [{model.a}, {model.b}]")


def _with_bound(model):
    lo, hi = _search_window(model)
    m = _grid_sup(model.ratio, lo, hi)
    return AlphaModel(model.kind, model.params, model.a, model.b, m)


def _search_window(model):
    if model.kind == "cosine":
        return 0.0, 2.0 * math.pi
    # even function; the ratio decays like |z|^-3 beyond a few multiples of 1/sqrt(c2)
    c2 = model.params[2]
    return 0.0, 25.0 / math.sqrt(c2)


def _grid_sup(func, lo, hi, n=_GRID_POINTS):
    """Supremum of ``func`` on ``[lo, hi]``: dense grid, then bounded scalar refinement."""
    grid = np.linspace(lo, hi, n)
    values = func(grid)
    i = int(np.argmax(values))
    best = float(values[i])
    left, right = grid[max(i - 1, 0)], grid[min(i + 1, n - 1)]
    if right > left:
        res = optimize.minimize_scalar(
            lambda t: -float(func(np.asarray(t))), bounds=(left, right), method="bounded",
            options={"xatol": 1e-14 * max(1.0, abs(grid[i]))},
        )
        best = max(best, -float(res.fun))
    return best


def eval_alpha(model, z):
    """``alpha(z)``; raises :class:`RangeViolation` if the value leaves ``[a, b]``."""
    return model(z)


def derivative_ratio_bound(model, restrict=None):
    """``M = sup |alpha'| / alpha^2``.

    With ``restrict=(lo, hi)`` the supremum is taken over that window only. The
    restricted value is reported for information; only the global ``M``
    certifies the truncation bounds. For user models the global bound is the
    declared one, and a restricted value is a finite-difference estimate.
    """
    if restrict is None:
        if model.kind == "constant":
            return 0.0
        if model.declared_M is None:
            raise MissingBound(f"model {model.label!r} declares no derivative-ratio bound")
        return model.declared_M
    lo, hi = map(float, restrict)
    if not lo < hi:
        raise DomainError("restriction window must satisfy lo < hi")
    if model.kind == "constant":
        return 0.0
    if model.is_builtin:
        return _grid_sup(model.ratio, lo, hi, n=200_001)
    h = 1e-5 * max(1.0, hi - lo)

    def ratio(z):
        deriv = (model.raw(z + h) - model.raw(z - h)) / (2.0 * h)
        return np.abs(deriv) / model.raw(z) ** 2

    return _grid_sup(ratio, lo, hi, n=200_001)


FIGURE1_MODEL = {"kind": "cosine", "c0": 0.57, "c1": 0.4}
FIGURE2_MODEL = {"kind": "rational", "c0": 0.15, "c1": 0.8, "c2": 5.0}


def figure_model(which):
    """The index functions used for the two sample-path figures (1 or 2)."""
    cfg = {1: FIGURE1_MODEL, 2: FIGURE2_MODEL}[int(which)]
    return AlphaModel.from_config(cfg)
