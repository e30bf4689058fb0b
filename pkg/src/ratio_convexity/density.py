"""Density models with log-space evaluation.

Everything downstream (ratio analysis, grid probes, the fitter, the KDE
test) works through the small interface defined here: a model knows its
dimension and can evaluate its log-density at one point or at a batch of
points.  All built-in models keep exact log-space formulas so that ratios of
far-apart evaluations never overflow.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import integrate

from ._jacobi import jacobi_eigh
from .errors import ModelContractError, UsageError

__all__ = [
    "Custom",
    "DensityModel",
    "Gaussian",
    "GaussianParams",
    "Laplace1D",
    "LogQuadraticForm",
    "Quartic1D",
    "log_density",
    "log_density_many",
    "quartic_norm_constant",
]

_LOG_2PI = math.log(2.0 * math.pi)


def as_point(x, dimension=None):
    """Validate and return a point as a 1-D float array."""
    point = np.atleast_1d(np.asarray(x, dtype=float))
    if point.ndim != 1:
        raise UsageError(f"a point must be one-dimensional, got shape {point.shape}")
    if not np.all(np.isfinite(point)):
        raise UsageError("point has a non-finite coordinate")
    if dimension is not None and point.shape[0] != dimension:
        raise UsageError(
            f"point has dimension {point.shape[0]}, model expects {dimension}"
        )
    return point


def _as_points(x, dimension):
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1) if dimension == 1 else pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != dimension:
        raise UsageError(
            f"expected an (N, {dimension}) array of points, got shape {pts.shape}"
        )
    if not np.all(np.isfinite(pts)):
        raise UsageError("points array has a non-finite entry")
    return pts


class GaussianParams:
    """Mean vector plus positive-definite covariance, with spectral extras.

    The covariance is symmetrized on entry and diagonalized once by the
    cyclic Jacobi routine; the precision matrix, log-determinant, and the
    symmetric square roots reuse that decomposition.
    """

    def __init__(self, mean, covariance):
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        if mean.ndim != 1:
            raise UsageError("mean must be a vector")
        cov = np.asarray(covariance, dtype=float)
        if cov.ndim == 0:
            cov = cov.reshape(1, 1)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise UsageError("covariance must be a square matrix")
        if cov.shape[0] != mean.shape[0]:
            raise UsageError("mean and covariance dimensions disagree")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise UsageError("Gaussian parameters must be finite")
        cov = 0.5 * (cov + cov.T)

        eigenvalues, basis = jacobi_eigh(cov)
        floor = 1e-12 * max(1.0, float(eigenvalues[0]))
        if eigenvalues[-1] <= floor:
            raise UsageError("covariance is not positive definite")

        self.mean = mean
        self.covariance = cov
        self.eigenvalues = eigenvalues
        self.eigenvectors = basis
        self.precision = basis @ np.diag(1.0 / eigenvalues) @ basis.T
        self.log_det_covariance = float(np.log(eigenvalues).sum())
        for arr in (self.mean, self.covariance, self.eigenvalues,
                    self.eigenvectors, self.precision):
            arr.setflags(write=False)

    @property
    def dimension(self):
        return self.mean.shape[0]

    def covariance_sqrt(self):
        """Symmetric square root of the covariance."""
        return self.eigenvectors @ np.diag(np.sqrt(self.eigenvalues)) @ self.eigenvectors.T

    def whitening_matrix(self):
        """Symmetric inverse square root of the covariance."""
        return self.eigenvectors @ np.diag(1.0 / np.sqrt(self.eigenvalues)) @ self.eigenvectors.T

    def __repr__(self):
        return f"GaussianParams(mean={self.mean.tolist()}, covariance={self.covariance.tolist()})"


class LogQuadraticForm:
    """Quadratic exponent with coefficients (A, b, c).

    Evaluation convention: the stored triple describes a density exponent,

        log f(x) = -(x' A x) / 2 - b' x - c .

    The reciprocal convention ``g = 1/f = exp(+x'Ax/2 + b'x + c)`` uses the
    same triple with the opposite sign, available as :meth:`log_reciprocal_at`.
    """

    def __init__(self, A, b, c):
        A = np.asarray(A, dtype=float)
        if A.ndim == 0:
            A = A.reshape(1, 1)
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1] or b.shape[0] != A.shape[0]:
            raise UsageError("quadratic form needs square A and matching b")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and math.isfinite(c)):
            raise UsageError("quadratic form coefficients must be finite")
        self.A = 0.5 * (A + A.T)
        self.b = b.copy()
        self.c = float(c)
        self.A.setflags(write=False)
        self.b.setflags(write=False)

    @property
    def dimension(self):
        return self.b.shape[0]

    def _quadratic(self, x):
        x = as_point(x, self.dimension)
        return 0.5 * float(x @ self.A @ x) + float(self.b @ x) + self.c

    def log_density_at(self, x):
        return -self._quadratic(x)

    def log_reciprocal_at(self, x):
        return self._quadratic(x)

    def __repr__(self):
        return (f"LogQuadraticForm(A={self.A.tolist()}, "
                f"b={self.b.tolist()}, c={self.c})")


class DensityModel:
    """Base class: a positive density evaluated in log space."""

    dimension: int = 1
    #: closed-form models earn a tighter default probe tolerance
    closed_form: bool = True
    label: str = "density"

    def _log_density_one(self, point):
        raise NotImplementedError

    def _log_density_many(self, points):
        return np.array([self._log_density_one(p) for p in points])

    def log_density(self, x):
        """Log-density at a single point (validated)."""
        return self._log_density_one(as_point(x, self.dimension))

    def log_density_many(self, x):
        """Log-density at an (N, n) batch of points (validated)."""
        return self._log_density_many(_as_points(x, self.dimension))

    def __repr__(self):
        return f"{type(self).__name__}()"


class Gaussian(DensityModel):
    """Multivariate Gaussian backed by :class:`GaussianParams`."""

    def __init__(self, params):
        if not isinstance(params, GaussianParams):
            raise UsageError("Gaussian expects a GaussianParams instance")
        self.params = params
        self.dimension = params.dimension
        self.label = "gaussian"
        self._log_norm = -0.5 * (self.dimension * _LOG_2PI + params.log_det_covariance)

    def _log_density_one(self, point):
        return float(self._log_density_many(point.reshape(1, -1))[0])

    def _log_density_many(self, points):
        centered = points - self.params.mean
        rotated = centered @ self.params.eigenvectors
        quad = (rotated * rotated / self.params.eigenvalues).sum(axis=1)
        return self._log_norm - 0.5 * quad

    def __repr__(self):
        return f"Gaussian({self.params!r})"


class Laplace1D(DensityModel):
    """Standard Laplace density exp(-|x|)/2 on the line."""

    dimension = 1
    label = "laplace"

    def _log_density_one(self, point):
        return -abs(float(point[0])) - math.log(2.0)

    def _log_density_many(self, points):
        return -np.abs(points[:, 0]) - math.log(2.0)


@lru_cache(maxsize=1)
def quartic_norm_constant():
    """Normalizing constant c with c * integral(exp(-x^4)) = 1.

    Computed once by adaptive quadrature; the integrand is below 1e-300
    outside [-12, 12], so the finite window loses nothing at double
    precision.
    """
    integral, _ = integrate.quad(lambda t: math.exp(-t ** 4), -12.0, 12.0,
                                 epsabs=1e-14, epsrel=1e-13, limit=200)
    return 1.0 / integral


class Quartic1D(DensityModel):
    """Quartic-tailed density c * exp(-x^4) on the line."""

    dimension = 1
    label = "quartic"

    def __init__(self):
        self._log_c = math.log(quartic_norm_constant())

    def _log_density_one(self, point):
        x = float(point[0])
        return self._log_c - x ** 4

    def _log_density_many(self, points):
        x = points[:, 0]
        return self._log_c - x ** 4


class Custom(DensityModel):
    """User-supplied log-density evaluator, optionally with a batch form.

    Outputs are checked: a NaN or +/-inf from the evaluator raises
    :class:`ModelContractError` rather than silently corrupting a probe.
    """

    closed_form = False

    def __init__(self, dimension, evaluator, batch_evaluator=None, label="custom"):
        dimension = int(dimension)
        if dimension < 1:
            raise UsageError("dimension must be a positive integer")
        if not callable(evaluator):
            raise UsageError("evaluator must be callable")
        self.dimension = dimension
        self.label = label
        self._evaluator = evaluator
        self._batch_evaluator = batch_evaluator

    def _log_density_one(self, point):
        value = float(self._evaluator(point))
        if not math.isfinite(value):
            raise ModelContractError(
                f"evaluator returned {value!r} at {point.tolist()}"
            )
        return value

    def _log_density_many(self, points):
        if self._batch_evaluator is None:
            return super()._log_density_many(points)
        values = np.asarray(self._batch_evaluator(points), dtype=float)
        if values.shape != (points.shape[0],):
            raise ModelContractError(
                f"batch evaluator returned shape {values.shape}, "
                f"expected ({points.shape[0]},)"
            )
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise ModelContractError(
                f"batch evaluator returned a non-finite value at {points[bad].tolist()}"
            )
        return values

    def __repr__(self):
        return f"Custom(dimension={self.dimension}, label={self.label!r})"


def log_density(model, x):
    """Log-density of ``model`` at point ``x``."""
    return model.log_density(x)


def log_density_many(model, x):
    """Log-density of ``model`` at each row of ``x``."""
    return model.log_density_many(x)
