"""Reference samplers for symmetric stable laws."""

import math

import numpy as np

from .alpha_model import stable_norm_constant_closed
from .errors import DomainError
from .rng import substream


def cms_stable_sample(alpha, scale, count, seed):
    """I.i.d. draws from the symmetric stable law ``S_alpha(scale, 0, 0)``.

    Chambers-Mallows-Stuck transform of a uniform angle ``V`` on
    ``(-pi/2, pi/2)`` and a unit exponential ``W``; the characteristic
    function is ``exp(-|scale * theta|**alpha)``.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if scale <= 0:
        raise DomainError("scale must be positive")
    rng = substream(seed, 0)
    v = rng.uniform(-math.pi / 2, math.pi / 2, size=count)
    w = rng.standard_exponential(size=count)
    x = (np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha)
         * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha))
    return scale * x


def poisson_sum_scale(alpha, u=1.0):
    """Scale of ``sum_{0 < x <= u} y**<-1/alpha>`` over a unit-intensity plane Poisson set.

    The characteristic exponent is ``2 u Gamma(1-alpha) cos(pi alpha/2) |theta|**alpha``,
    so the sum is ``S_alpha((2u)**(1/alpha) / C_alpha, 0, 0)``: both half-lines
    of ``y`` carry intensity one.
    """
    return (2.0 * u) ** (1.0 / alpha) / stable_norm_constant_closed(alpha)


def normalized_motion_scale(alpha, u=1.0):
    """Scale ``u**(1/alpha) / C_alpha`` that the plain normalising-constant identity assigns to the same sum."""
    return u ** (1.0 / alpha) / stable_norm_constant_closed(alpha)
