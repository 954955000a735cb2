"""Closed-form moments of the perturbed quantities.

``k = x**2 + y**2`` of a Gaussian-perturbed anchor position is a scaled
non-central chi-squared variable with two degrees of freedom. The squared
RSSI distance estimate is log-normal. Callers pass plug-in values (observed
positions, RSSI distances) or true values explicitly.

All functions broadcast over numpy arrays.
"""

from __future__ import annotations

import numpy as np

from rssiloc.model import LN10


def u_const(eta):
    """``ln 10 / (5 * sqrt(2) * eta)``: scale of the RSSI noise in ``d**2 = d_true**2 * exp(sqrt(2) * u * n)``."""
    return LN10 / (5.0 * np.sqrt(2.0) * np.asarray(eta, dtype=float))


def sigma_d(eta, sigma_p):
    """Std of ``ln(d_estimate)`` for RSSI noise ``sigma_p`` dB."""
    return LN10 / (10.0 * np.asarray(eta, dtype=float)) * np.asarray(sigma_p, dtype=float)


def mean_k(x, y, sigma_a):
    """E[x~**2 + y~**2] = x**2 + y**2 + 2 sigma_a**2."""
    return np.square(x) + np.square(y) + 2.0 * np.square(sigma_a)


def var_k(x, y, sigma_a):
    """Var[x~**2 + y~**2] = 4 sigma_a**2 (sigma_a**2 + x**2 + y**2)."""
    s2 = np.square(np.asarray(sigma_a, dtype=float))
    return 4.0 * s2 * (s2 + np.square(x) + np.square(y))


def var_d2(distance, eta, sigma_p):
    """Variance of the squared log-normal distance estimate.

    ``d**4 * (exp(8 sd**2) - exp(4 sd**2))`` with ``sd = sigma_d(eta, sigma_p)``.
    Written with ``expm1`` so the result scales exactly as ``d**4``.
    """
    sd2 = np.square(sigma_d(eta, sigma_p))
    d4 = np.power(np.asarray(distance, dtype=float), 4)
    return d4 * np.exp(4.0 * sd2) * np.expm1(4.0 * sd2)


def d2_inflation_exact(eta, sigma_p):
    """E[d~**2] / d**2 - 1 = exp(u**2 sigma_p**2) - 1."""
    return np.expm1(np.square(u_const(eta) * sigma_p))


def d2_inflation_taylor(eta, sigma_p):
    """Second-order Taylor form of :func:`d2_inflation_exact`: ``t + t**2 / 2``, ``t = u**2 sigma_p**2``."""
    t = np.square(u_const(eta) * np.asarray(sigma_p, dtype=float))
    return t + 0.5 * np.square(t)


def mean_d2_exact(distance, eta, sigma_p):
    return np.square(distance) * np.exp(np.square(u_const(eta) * sigma_p))


def mean_d2_taylor(distance, eta, sigma_p):
    return np.square(distance) * (1.0 + d2_inflation_taylor(eta, sigma_p))
