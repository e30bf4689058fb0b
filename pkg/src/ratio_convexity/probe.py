"""Grid probes for convexity-type properties of translation ratios.

For a model f and shift y, let phi be either h(., y) = f(. + y)/f(.) or its
logarithm.  A probe sweeps a finite grid of (x, y, direction, step) triples,
forms the collinear second difference

    phi(x + t d) - 2 phi(x) + phi(x - t d),

and reports violations of the requested property as replayable witnesses.
Ratios of a Gaussian survive every probe of Convex / LogConvex / LogConcave;
any strict violation certifies non-Gaussianity on its own.

Tolerances are scale-aware: a second-difference violation must clear
``tol * max(1, |phi(x)|)`` so that huge log-ratio magnitudes cannot
manufacture spurious witnesses.  Probes of h itself are evaluated in a
scaled form (``expm1`` of log differences) so that the test stays exact even
where h over- or underflows; violations whose *margin* is not representable
as a finite double are counted but not materialized as witnesses.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .density import as_point
from .errors import InconclusiveScanError, UsageError

__all__ = [
    "DEFAULT_STEPS",
    "DEFAULT_Y_MAGNITUDES",
    "PropertyKind",
    "ProbeGrid",
    "Verdict",
    "Witness",
    "concavity_impossibility_scan",
    "default_tolerance",
    "probe_property",
    "replay_witness",
    "second_difference",
]

DEFAULT_Y_MAGNITUDES = (0.25, 0.5, 1.0, 2.0, 4.0)
DEFAULT_STEPS = (0.1, 0.5, 1.0)
#: default x points per axis; dense on the line, thinned per axis for tensor
#: grids so that default probes stay interactive
DEFAULT_POINTS_PER_AXIS = {1: 201, 2: 21, 3: 7}
#: seed of the named generator that supplies extra probe directions in n > 1
DIRECTION_SEED = 424242
_EXTRA_DIRECTIONS = 8

_PRUNE_LIMIT = 8192


class PropertyKind(enum.Enum):
    """Which shape property of the translation ratio a probe tests."""

    CONVEX = "convex"
    LOG_CONVEX = "log-convex"
    LOG_CONCAVE = "log-concave"
    QUASI_CONVEX = "quasi-convex"
    CONCAVE = "concave"

    @property
    def on_log(self):
        return self in (PropertyKind.LOG_CONVEX, PropertyKind.LOG_CONCAVE)


@dataclass(frozen=True, eq=False)
class ProbeGrid:
    """Finite probe lattice: x ranges per axis, shifts, directions, steps."""

    x_range: tuple
    y_set: tuple
    directions: tuple
    steps: tuple

    def __post_init__(self):
        if len(self.x_range) == 0:
            raise UsageError("x_range must cover at least one axis")
        ranges = []
        for axis in self.x_range:
            lo, hi, count = float(axis[0]), float(axis[1]), int(axis[2])
            if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
                raise UsageError(f"bad x_range axis ({lo}, {hi})")
            if count < 3:
                raise UsageError("each axis needs at least 3 points")
            ranges.append((lo, hi, count))
        n = len(ranges)

        if len(self.y_set) == 0:
            raise UsageError("y_set must be nonempty")
        shifts = []
        for y in self.y_set:
            y = as_point(y, n)
            y = y.copy()
            y.setflags(write=False)
            shifts.append(y)

        if len(self.directions) == 0:
            raise UsageError("directions must be nonempty")
        dirs = []
        for d in self.directions:
            d = as_point(d, n)
            norm = float(np.linalg.norm(d))
            if abs(norm - 1.0) > 1e-12:
                raise UsageError(f"direction {d.tolist()} is not unit length")
            d = d.copy()
            d.setflags(write=False)
            dirs.append(d)

        if len(self.steps) == 0:
            raise UsageError("steps must be nonempty")
        steps = []
        for t in self.steps:
            t = float(t)
            if not np.isfinite(t) or t <= 0.0:
                raise UsageError("steps must be positive and finite")
            steps.append(t)

        object.__setattr__(self, "x_range", tuple(ranges))
        object.__setattr__(self, "y_set", tuple(shifts))
        object.__setattr__(self, "directions", tuple(dirs))
        object.__setattr__(self, "steps", tuple(steps))

    @classmethod
    def for_dimension(cls, dimension, *, x_min=-5.0, x_max=5.0, points=None,
                      y_magnitudes=DEFAULT_Y_MAGNITUDES, steps=DEFAULT_STEPS):
        """Default grid for a model of the given dimension."""
        dimension = int(dimension)
        if dimension < 1:
            raise UsageError("dimension must be >= 1")
        if points is None:
            points = DEFAULT_POINTS_PER_AXIS.get(dimension, 5)
        x_range = tuple((float(x_min), float(x_max), int(points)) for _ in range(dimension))

        shifts = []
        for magnitude in y_magnitudes:
            for axis in range(dimension):
                for sign in (1.0, -1.0):
                    y = np.zeros(dimension)
                    y[axis] = sign * float(magnitude)
                    shifts.append(y)

        if dimension == 1:
            dirs = [np.ones(1)]
        else:
            dirs = [np.eye(dimension)[axis] for axis in range(dimension)]
            rng = np.random.default_rng(DIRECTION_SEED)
            while len(dirs) < dimension + _EXTRA_DIRECTIONS:
                raw = rng.standard_normal(dimension)
                norm = np.linalg.norm(raw)
                if norm > 1e-6:
                    dirs.append(raw / norm)

        return cls(x_range=x_range, y_set=tuple(shifts),
                   directions=tuple(dirs), steps=tuple(steps))

    @property
    def dimension(self):
        return len(self.x_range)

    @property
    def point_count(self):
        total = 1
        for _, _, count in self.x_range:
            total *= count
        return total

    def axis_values(self):
        return tuple(np.linspace(lo, hi, count) for lo, hi, count in self.x_range)

    def base_points(self):
        """All grid centers as an (K, n) array in row-major axis order."""
        axes = self.axis_values()
        if len(axes) == 1:
            return axes[0].reshape(-1, 1)
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, len(axes))

    def spacing(self):
        return tuple((hi - lo) / (count - 1) for lo, hi, count in self.x_range)

    def scaled(self, factor):
        """Same lattice shape with x extents and shifts scaled by ``factor``."""
        factor = float(factor)
        x_range = tuple((lo * factor, hi * factor, count) for lo, hi, count in self.x_range)
        y_set = tuple(y * factor for y in self.y_set)
        return ProbeGrid(x_range=x_range, y_set=y_set,
                         directions=self.directions, steps=self.steps)


@dataclass(frozen=True, eq=False)
class Witness:
    """One replayable violation of a probed property.

    ``triple`` holds the three collinear evaluation points
    (x - t d, x, x + t d); ``values`` holds phi at those points, where phi is
    h(., y) for the Convex / Concave / QuasiConvex probes and log h(., y) for
    the Log probes.  ``margin`` is the signed violation size (the second
    difference, or the midpoint excess for QuasiConvex) and always exceeds
    ``tolerance_used`` in absolute value.
    """

    kind: PropertyKind
    y: np.ndarray
    x: np.ndarray
    direction: np.ndarray
    step: float
    triple: tuple
    values: tuple
    margin: float
    tolerance_used: float
    position: tuple

    def __str__(self):
        return (f"{self.kind.value} violation at x={self.x.tolist()}, "
                f"y={self.y.tolist()}, t={self.step}: margin={self.margin:.6g}")


@dataclass(frozen=True, eq=False)
class Verdict:
    """Outcome of one probe: counts plus the worst violations found."""

    kind: PropertyKind
    points_checked: int
    violation_count: int
    tolerance: float
    witnesses: tuple

    @property
    def found(self):
        return self.violation_count > 0

    @property
    def worst(self):
        return self.witnesses[0] if self.witnesses else None

    def __str__(self):
        if not self.found:
            return (f"{self.kind.value}: no violation found on the probed grid "
                    f"({self.points_checked} points)")
        return (f"{self.kind.value}: {self.violation_count} violations on "
                f"{self.points_checked} points; worst {self.worst}")


def default_tolerance(model):
    """1e-9 for closed-form models, 1e-7 for user-supplied evaluators."""
    return 1e-9 if getattr(model, "closed_form", False) else 1e-7


def second_difference(phi, x, direction, step):
    """phi(x + t d) - 2 phi(x) + phi(x - t d) for a scalar-valued phi."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    direction = np.atleast_1d(np.asarray(direction, dtype=float))
    step = float(step)
    if step <= 0.0 or not np.isfinite(step):
        raise UsageError("step must be positive and finite")
    if x.shape != direction.shape:
        raise UsageError("x and direction must have the same shape")
    offset = step * direction
    plus = float(np.asarray(phi(x + offset)).reshape(()))
    center = float(np.asarray(phi(x)).reshape(()))
    minus = float(np.asarray(phi(x - offset)).reshape(()))
    return plus - 2.0 * center + minus


def _margins(kind, phi_minus, phi_center, phi_plus, tol):
    """Vectorized margins, recorded tolerances, and violation mask."""
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        if kind.on_log:
            margin = phi_plus - 2.0 * phi_center + phi_minus
            tol_used = tol * np.maximum(1.0, np.abs(phi_center))
            if kind is PropertyKind.LOG_CONVEX:
                mask = margin < -tol_used
            else:
                mask = margin > tol_used
            return margin, tol_used, mask, (phi_minus, phi_center, phi_plus)

        h_center = np.exp(phi_center)
        scale = np.maximum(np.exp(-phi_center), 1.0)
        tol_used = tol * np.maximum(1.0, h_center)
        if kind is PropertyKind.QUASI_CONVEX:
            ridge = np.maximum(phi_plus, phi_minus)
            relative = -np.expm1(ridge - phi_center)
            mask = relative > tol * scale
            margin = h_center * relative
        else:
            relative = np.expm1(phi_plus - phi_center) + np.expm1(phi_minus - phi_center)
            if kind is PropertyKind.CONVEX:
                mask = relative < -tol * scale
            else:
                mask = relative > tol * scale
            margin = h_center * relative
        values = (np.exp(phi_minus), h_center, np.exp(phi_plus))
        return margin, tol_used, mask, values


def probe_property(model, kind, grid=None, *, tolerance=None, witness_cap=64):
    """Probe one property of the translation ratios of ``model`` over a grid.

    Returns a :class:`Verdict`.  Witnesses are sorted by decreasing
    ``|margin|`` (ties broken by grid position) and capped at
    ``witness_cap``; ``violation_count`` still counts everything.
    """
    kind = PropertyKind(kind)
    if grid is None:
        grid = ProbeGrid.for_dimension(model.dimension)
    if grid.dimension != model.dimension:
        raise UsageError(
            f"grid dimension {grid.dimension} does not match model dimension "
            f"{model.dimension}")
    tol = default_tolerance(model) if tolerance is None else float(tolerance)
    if tol < 0.0 or not np.isfinite(tol):
        raise UsageError("tolerance must be a nonnegative finite real")
    witness_cap = int(witness_cap)
    if witness_cap < 1:
        raise UsageError("witness_cap must be at least 1")

    base = grid.base_points()
    k = base.shape[0]
    offsets = [(di, ti, step * direction)
               for di, direction in enumerate(grid.directions)
               for ti, step in enumerate(grid.steps)]

    candidates = []
    points_checked = 0
    violation_count = 0
    sort_key = lambda entry: (-abs(entry[0]), entry[1])

    for yi, y in enumerate(grid.y_set):
        stack = [base, base + y]
        for _, _, offset in offsets:
            stack.extend((base - offset, base + offset,
                          base + y - offset, base + y + offset))
        values = model.log_density_many(np.vstack(stack))
        phi_center = values[k:2 * k] - values[:k]

        for block, (di, ti, _) in enumerate(offsets):
            at = (2 + 4 * block) * k
            log_minus = values[at:at + k]
            log_plus = values[at + k:at + 2 * k]
            phi_minus = values[at + 2 * k:at + 3 * k] - log_minus
            phi_plus = values[at + 3 * k:at + 4 * k] - log_plus

            margin, tol_used, mask, triple_values = _margins(
                kind, phi_minus, phi_center, phi_plus, tol)
            points_checked += k
            hits = np.flatnonzero(mask)
            if hits.size == 0:
                continue
            violation_count += int(hits.size)
            for xi in hits:
                m = float(margin[xi])
                if not np.isfinite(m):
                    continue  # beyond double range: counted, not materialized
                candidates.append((
                    m, (yi, int(xi), di, ti), float(tol_used[xi]),
                    (float(triple_values[0][xi]), float(triple_values[1][xi]),
                     float(triple_values[2][xi])),
                ))
            if len(candidates) > _PRUNE_LIMIT:
                candidates.sort(key=sort_key)
                del candidates[witness_cap:]

    candidates.sort(key=sort_key)
    witnesses = []
    for m, position, tol_used, triple_values in candidates[:witness_cap]:
        yi, xi, di, ti = position
        y = grid.y_set[yi]
        x = base[xi]
        direction = grid.directions[di]
        step = grid.steps[ti]
        offset = step * direction
        witnesses.append(Witness(
            kind=kind, y=y, x=x, direction=direction, step=step,
            triple=(x - offset, x.copy(), x + offset),
            values=triple_values, margin=m, tolerance_used=tol_used,
            position=position))

    return Verdict(kind=kind, points_checked=points_checked,
                   violation_count=violation_count, tolerance=tol,
                   witnesses=tuple(witnesses))


def replay_witness(model, witness):
    """Recompute a witness margin from its stored evaluation points.

    Uses the same arithmetic as the probe, so a sound witness reproduces its
    recorded margin to within 1e-12 (typically bit-for-bit).
    """
    y = witness.y
    phi = [model.log_density(point + y) - model.log_density(point)
           for point in witness.triple]
    phi_minus, phi_center, phi_plus = (float(v) for v in phi)
    kind = witness.kind
    if kind.on_log:
        return phi_plus - 2.0 * phi_center + phi_minus
    h_center = float(np.exp(phi_center))
    if kind is PropertyKind.QUASI_CONVEX:
        ridge = max(phi_plus, phi_minus)
        return h_center * float(-np.expm1(ridge - phi_center))
    relative = float(np.expm1(phi_plus - phi_center)) + float(np.expm1(phi_minus - phi_center))
    return h_center * relative


def concavity_impossibility_scan(model, grid=None, *, tolerance=None,
                                 max_expansions=6, witness_cap=64):
    """Find a witness against concavity of some translation ratio.

    No positive density has h(., y) concave for every y, so a violation
    always exists; the scan retries on grids with doubled extents and shifts
    (up to ``max_expansions`` times) before giving up with
    :class:`InconclusiveScanError`.
    """
    if grid is None:
        grid = ProbeGrid.for_dimension(model.dimension)
    rounds = int(max_expansions) + 1
    for attempt in range(rounds):
        verdict = probe_property(model, PropertyKind.CONCAVE, grid,
                                 tolerance=tolerance, witness_cap=witness_cap)
        if verdict.found and verdict.worst is not None:
            return verdict.worst
        if attempt + 1 < rounds:
            grid = grid.scaled(2.0)
    raise InconclusiveScanError(
        f"no concavity violation found after {rounds} grid expansions; "
        "widen the grid or add shifts")
