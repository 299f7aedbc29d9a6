"""Compiled Euler-Maruyama stepping for scalar polynomial models."""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def _ipow(b, n):
    r = 1.0
    for _ in range(n):
        r *= b
    return r


@njit(nogil=True, cache=True)
def _power(b, p):
    # multiplication beats pow() for the small exponents polynomial models use
    n = int(p)
    if n == p and n <= 8:
        return _ipow(b, n)
    if n + 0.5 == p and n <= 8:
        return _ipow(b, n) * math.sqrt(b)
    return b ** p


@njit(nogil=True, cache=True)
def _poly(x, i, coef, power, absolute):
    s = 0.0
    for j in range(coef.shape[1]):
        c = coef[i, j]
        if c != 0.0:
            b = abs(x) if absolute[i, j] else x
            s += c * _power(b, power[i, j])
    return s


@njit(nogil=True, cache=True)
def advance_scalar(k0, n_steps, modes, z, fstate, istate, ring_x, ring_m,
                   dt, sqdt, s, s0, controlled, alpha, x0, i0,
                   dc, dp, da, gc, gp, ga, stride, threshold,
                   rec_x, rec_u, rec_m):
    """Process grid points ``k0 .. k0 + len(modes) - 1``.

    ``fstate = [x, held_x, sum z, sum z^2]``, ``istate = [held_mode, status]``
    where ``status`` is -1 while running and the index of the first bad grid
    point after a blowup.  Point ``n_steps`` is recorded but not advanced.
    """
    depth = ring_x.shape[0]
    x = fstate[0]
    hx = fstate[1]
    zs = fstate[2]
    zq = fstate[3]
    hm = istate[0]
    for b in range(modes.shape[0]):
        k = k0 + b
        i = modes[b]
        ring_x[k % depth] = x
        ring_m[k % depth] = i
        u = 0.0
        if controlled:
            if k % s == 0:
                j = k - s0
                if j < 0:
                    hx = x0
                    hm = i0
                else:
                    hx = ring_x[j % depth]
                    hm = ring_m[j % depth]
            u = 0.0 - alpha[hm] * hx
        if k % stride == 0:
            r = k // stride
            rec_x[r] = x
            rec_u[r] = u
            rec_m[r] = i
        if k == n_steps:
            break
        zk = z[b]
        zs += zk
        zq += zk * zk
        f = _poly(x, i, dc, dp, da)
        g = _poly(x, i, gc, gp, ga)
        x = x + (f + u) * dt + g * (sqdt * zk)
        if not (abs(x) <= threshold):
            istate[1] = k + 1
            break
    fstate[0] = x
    fstate[1] = hx
    fstate[2] = zs
    fstate[3] = zq
    istate[0] = hm


def warm_up() -> None:
    """Trigger compilation once (cheap when the on-disk cache is warm)."""
    one = np.zeros((1, 1))
    flag = np.zeros((1, 1), dtype=np.bool_)
    advance_scalar(0, 1, np.zeros(2, dtype=np.int64), np.zeros(1), np.zeros(4),
                   np.array([0, -1], dtype=np.int64), np.zeros(2), np.zeros(2, dtype=np.int64),
                   1e-3, math.sqrt(1e-3), 1, 0, True, np.zeros(1), 0.0, 0,
                   one, one, flag, one, one, flag, 1, 1e12,
                   np.zeros(2), np.zeros(2), np.zeros(2, dtype=np.int64))
