"""Independent reference implementations used to check the package.

Everything in here is deliberately written the slow, obvious way (plain
loops, textbook quadrature, dense broadcasting) so that agreement with the
library is evidence rather than tautology.
"""

import math

import numpy as np


def adaptive_simpson(f, a, b, tol=1e-12, max_depth=40):
    """Adaptive Simpson quadrature of f over [a, b]."""

    def simpson(lo, hi, flo, fmid, fhi):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(lo, hi, flo, fmid, fhi, whole, eps, depth):
        mid = 0.5 * (lo + hi)
        fl = f(0.5 * (lo + mid))
        fr = f(0.5 * (mid + hi))
        left = simpson(lo, mid, flo, fl, fmid)
        right = simpson(mid, hi, fmid, fr, fhi)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return (recurse(lo, mid, flo, fl, fmid, left, eps / 2.0, depth - 1)
                + recurse(mid, hi, fmid, fr, fhi, right, eps / 2.0, depth - 1))

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, tol, max_depth)


def second_derivative_richardson(f, x, t1=1e-3):
    """Richardson-extrapolated central second difference of a scalar f.

    Combines the O(t^2) estimates at steps t1 and t1/2 into an O(t^4) one:
    (4 D2(t/2) - D2(t)) / 3.
    """
    def d2(t):
        return (f(x + t) - 2.0 * f(x) + f(x - t)) / (t * t)

    return (4.0 * d2(t1 / 2.0) - d2(t1)) / 3.0


def ratio_second_difference(log_density, x, y, direction, step):
    """phi(x+td) - 2 phi(x) + phi(x-td) with phi(x) = log f(x+y) - log f(x).

    Pure-Python reference for one probe cell, point by point.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = np.atleast_1d(np.asarray(direction, dtype=float))

    def phi(point):
        return log_density(point + y) - log_density(point)

    offset = step * d
    return phi(x + offset) - 2.0 * phi(x) + phi(x - offset)


def brute_force_h_margin(log_density, kind, x, y, direction, step):
    """Margin of one probe cell on h itself, in the probe's scaled arithmetic.

    kind is "convex", "concave", or "quasi-convex"; the returned value is
    h(x) times the relative second difference (or midpoint excess).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = np.atleast_1d(np.asarray(direction, dtype=float))

    def phi(point):
        return log_density(point + y) - log_density(point)

    offset = step * d
    center = phi(x)
    plus = phi(x + offset)
    minus = phi(x - offset)
    if kind == "quasi-convex":
        relative = -math.expm1(max(plus, minus) - center)
    else:
        relative = math.expm1(plus - center) + math.expm1(minus - center)
    return math.exp(center) * relative


def kde_log_density_naive(points, data, bandwidths):
    """Dense Gaussian product-kernel KDE, stabilised only by logaddexp.

    points : (N, n), data : (m, n), bandwidths : (n,).  Returns (N,).
    """
    points = np.asarray(points, dtype=float)
    data = np.asarray(data, dtype=float)
    bandwidths = np.asarray(bandwidths, dtype=float)
    m, n = data.shape
    scaled = (points[:, None, :] - data[None, :, :]) / bandwidths
    log_terms = -0.5 * np.sum(scaled * scaled, axis=2)
    log_norm = -(math.log(m) + float(np.log(bandwidths).sum())
                 + 0.5 * n * math.log(2.0 * math.pi))
    return np.logaddexp.reduce(log_terms, axis=1) + log_norm


def splitmix64_reference(state):
    """Textbook SplitMix64 finalizer of a 64-bit state."""
    mask = (1 << 64) - 1
    z = state & mask
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & mask
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & mask
    return z ^ (z >> 31)


def quadratic_fit_1d(xs, values):
    """np.polyfit-based quadratic fit of scalar data.

    Returns (coefficients a2, a1, a0, max abs residual) for
    values ~ a2 x^2 + a1 x + a0.
    """
    xs = np.asarray(xs, dtype=float)
    values = np.asarray(values, dtype=float)
    coeffs = np.polyfit(xs, values, 2)
    residuals = np.polyval(coeffs, xs) - values
    return coeffs, float(np.max(np.abs(residuals)))
