"""Compiled inner loops for the left-to-right jump passes.

The pass is inherently sequential (every jump exponent depends on the value
reached just before it), so it runs under numba. Index functions are passed as
a family code plus coefficients: 0 constant, 1 cosine, 2 rational. Weight
modes: 0 none, 1 constant factor, 2 constant factor times ``C_alpha``.

Status codes: 0 ok, 1 index value out of range (``bad`` holds the state).

The running value is a plain double updated as ``fl(value + jump)``, so the
pass depends on the past only through the current value and a restart from
any stored value reproduces the rest bitwise. Points sharing a jump time are
summed with Neumaier compensation before the jump is applied.
"""

import math

import numpy as np
from numba import njit

KIND_CODES = {"constant": 0, "cosine": 1, "rational": 2}
SLACK = 1e-12


@njit(cache=True, nogil=True)
def alpha_value(kind, p0, p1, p2, z):
    if kind == 0:
        return p0
    if kind == 1:
        return p0 + p1 * math.cos(z)
    return p0 + p1 / (1.0 + p2 * z * z)


@njit(cache=True, nogil=True)
def _two_sum(s, c, v):
    # Neumaier compensated accumulation
    t = s + v
    if abs(s) >= abs(v):
        c += (s - t) + v
    else:
        c += (v - t) + s
    return t, c


@njit(cache=True, nogil=True)
def sequential_pass(x, y, a0, kind, p0, p1, p2, lo, hi, wmode, wconst):
    n = x.size
    breaks = np.empty(n)
    values = np.empty(n + 1)
    values[0] = a0
    s = a0
    g = 0
    i = 0
    while i < n:
        xi = x[i]
        v = s
        al = alpha_value(kind, p0, p1, p2, v)
        if not (al >= lo - SLACK and al <= hi + SLACK):
            return breaks[:g], values[:g + 1], 1, v
        expo = -1.0 / al
        w = 1.0
        if wmode == 1:
            w = wconst
        elif wmode == 2:
            w = wconst * (math.gamma(1.0 - al) * math.cos(math.pi * al / 2.0)) ** expo
        js = 0.0
        jc = 0.0
        while i < n and x[i] == xi:
            yi = y[i]
            if yi > 0:
                term = yi ** expo
            else:
                term = -((-yi) ** expo)
            js, jc = _two_sum(js, jc, w * term)
            i += 1
        s = s + (js + jc)
        breaks[g] = xi
        values[g + 1] = s
        g += 1
    return breaks[:g], values[:g + 1], 0, 0.0


@njit(cache=True, nogil=True)
def tempered_pass(x, gam, eta, e, u, a0, horizon, kind, p0, p1, p2, lo, hi):
    n = x.size
    breaks = np.empty(n)
    values = np.empty(n + 1)
    jumps = np.empty(n)
    values[0] = a0
    s = a0
    g = 0
    i = 0
    while i < n:
        xi = x[i]
        v = s
        al = alpha_value(kind, p0, p1, p2, v)
        if not (al >= lo - SLACK and al <= hi + SLACK):
            return breaks[:g], values[:g + 1], jumps[:i], 1, v
        js = 0.0
        jc = 0.0
        while i < n and x[i] == xi:
            stable_part = (al * gam[i] / horizon) ** (-1.0 / al)
            tempered_part = e[i] * u[i] ** (1.0 / al)
            jump = eta[i] * min(stable_part, tempered_part)
            jumps[i] = jump
            js, jc = _two_sum(js, jc, jump)
            i += 1
        s = s + (js + jc)
        breaks[g] = xi
        values[g + 1] = s
        g += 1
    return breaks[:g], values[:g + 1], jumps, 0, 0.0
