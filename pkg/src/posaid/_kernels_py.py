"""Pure-numpy versions of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable, or when
``POSAID_PURE_PYTHON=1`` is set. Both implementations must agree to
round-off; ``tests/test_backend.py`` checks this.
"""
import math

import numpy as np

# Hankel amplitude/phase rational fits (Cephes j0.c), valid for x > 5.
_PP = (7.96936729297347051624e-4, 8.28352392107440799803e-2,
       1.23953371646414299388e0, 5.44725003058768775090e0,
       8.74716500199817011941e0, 5.30324038235394892183e0,
       9.99999999999999997821e-1)
_PQ = (9.24408810558863637013e-4, 8.56288474354474431428e-2,
       1.25352743901058953537e0, 5.47097740330417105182e0,
       8.76190883237069594232e0, 5.30605288235394617618e0,
       1.00000000000000000218e0)
_QP = (-1.13663838898469149931e-2, -1.28252718670509318512e0,
       -1.95539544257735972385e1, -9.32060152123768231369e1,
       -1.77681167980488050595e2, -1.47077505154951170175e2,
       -5.14105326766599330220e1, -6.05014350600728481186e0)
# leading coefficient 1 implied
_QQ = (6.43178256118178023184e1, 8.56430025976980587198e2,
       3.88240183605401609683e3, 7.24046774195652478189e3,
       5.93072701187316984827e3, 2.06209331660327847417e3,
       2.42005740240291393179e2)

SERIES_LIMIT = 8.0
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_SQRT_HALF = math.sqrt(0.5)
# (x/2)^(2k)/(k!)^2 at x=8 drops below 1e-17 * 1 by k=30
_SERIES_TERMS = 32
_INV_SQUARES = [0.0] + [1.0 / (k * k) for k in range(1, _SERIES_TERMS + 1)]


def _polevl(x, coef):
    out = np.full_like(x, coef[0])
    for c in coef[1:]:
        out = out * x + c
    return out


def _p1evl(x, coef):
    out = x + coef[0]
    for c in coef[1:]:
        out = out * x + c
    return out


def _j0_series(x):
    t = -0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, _SERIES_TERMS + 1):
        term = term * t * _INV_SQUARES[k]
        total = total + term
    return total


def _j0_asymptotic(x):
    w = 5.0 / x
    q = 25.0 / (x * x)
    p = _polevl(q, _PP) / _polevl(q, _PQ)
    qq = _polevl(q, _QP) / _p1evl(q, _QQ)
    c = np.cos(x)
    s = np.sin(x)
    # cos(x - pi/4), sin(x - pi/4) without forming x - pi/4
    cx = (c + s) * _SQRT_HALF
    sx = (s - c) * _SQRT_HALF
    return (p * cx - w * qq * sx) * _SQRT_2_OVER_PI / np.sqrt(x)


def j0_array(x):
    x = np.abs(np.asarray(x, dtype=np.float64))
    out = np.empty_like(x)
    small = x < SERIES_LIMIT
    if small.any():
        out[small] = _j0_series(x[small])
    big = ~small
    if big.any():
        out[big] = _j0_asymptotic(x[big])
    return out


def kernel_matrix(za, zb, lambda0):
    za = np.asarray(za, dtype=np.float64)
    zb = np.asarray(zb, dtype=np.float64)
    arg = (2.0 * math.pi / lambda0) * np.abs(za[:, None] - zb[None, :])
    return j0_array(arg)


def omega_objective(fractions, spacing_over_lambda):
    """Smaller root of the Gamma=1 quadratic at each fractional position.

    Returns ``(values, valid)``; ``valid`` is False where the discriminant
    is negative (no real root, value set to NaN).
    """
    f = np.asarray(fractions, dtype=np.float64)
    two_pi_d = 2.0 * math.pi * spacing_over_lambda
    eta1 = float(j0_array(np.array([two_pi_d]))[0])
    eta_p = j0_array(two_pi_d * (1.0 - f))
    eta_pp = j0_array(two_pi_d * f)
    return _omega_from_etas(eta1, eta_p, eta_pp)


def _omega_from_etas(eta1, eta_p, eta_pp):
    b = 2.0 * eta1 * eta_p * eta_pp
    disc = b * b - 4.0 * eta1 * eta1 * (eta_p * eta_p + eta_pp * eta_pp - 1.0)
    valid = disc >= 0.0
    root = np.sqrt(np.where(valid, disc, 0.0))
    values = np.where(valid, (b - root) / (2.0 * eta1 * eta1), np.nan)
    return values, valid
