"""Spatial domains, outward normals, boundary-flattening charts and the mirror map."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

BOUNDARY_TOL = 1e-9
_FD_STEP = 1e-6


class NotOnBoundaryError(ValueError):
    def __init__(self, distance):
        super().__init__(f"point is {distance:.3e} away from the boundary (tolerance {BOUNDARY_TOL})")
        self.distance = distance


class OutOfChartError(ValueError):
    pass


class InverseNotConvergedError(ArithmeticError):
    def __init__(self, residual):
        super().__init__(f"chart inverse did not converge, residual {residual:.3e}")
        self.residual = residual


def _derivative(fn, h=_FD_STEP):
    def d(y):
        y = np.asarray(y, dtype=float)
        return (fn(y + h) - fn(y - h)) / (2.0 * h)

    return d


@dataclass(frozen=True)
class DomainGeometry:
    """Bounded spatial domain.

    ``kind`` is ``"interval"`` (0, length), ``"disk"`` of radius ``radius``
    centered at the origin, or ``"epigraph"``: the region below the graph
    x_2 = psi(x_1), |x_1| < half_width, whose outward normal points up.
    """

    kind: str
    length: float = 1.0
    radius: float = 1.0
    psi: Optional[Callable] = None
    dpsi: Optional[Callable] = None
    half_width: float = 1.0

    def __post_init__(self):
        if self.kind not in ("interval", "disk", "epigraph"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "interval" and not self.length > 0:
            raise ValueError("interval length must be positive")
        if self.kind == "disk" and not self.radius > 0:
            raise ValueError("disk radius must be positive")
        if self.kind == "epigraph":
            if self.psi is None:
                raise ValueError("epigraph domain needs psi")
            if self.dpsi is None:
                object.__setattr__(self, "dpsi", _derivative(self.psi))

    @property
    def dim(self):
        return 1 if self.kind == "interval" else 2

    @classmethod
    def interval(cls, length=1.0):
        return cls("interval", length=float(length))

    @classmethod
    def disk(cls, radius=1.0):
        return cls("disk", radius=float(radius))

    @classmethod
    def epigraph(cls, psi, dpsi=None, half_width=1.0):
        return cls("epigraph", psi=psi, dpsi=dpsi, half_width=float(half_width))

    def boundary_distance(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind == "interval":
            return float(min(abs(x[0]), abs(x[0] - self.length)))
        if self.kind == "disk":
            return float(abs(np.hypot(x[0], x[1]) - self.radius))
        return float(abs(x[1] - self.psi(x[0])))

    def normal_at(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        dist = self.boundary_distance(x)
        if dist > BOUNDARY_TOL:
            raise NotOnBoundaryError(dist)
        if self.kind == "interval":
            left = abs(x[0]) <= abs(x[0] - self.length)
            return np.array([-1.0 if left else 1.0])
        if self.kind == "disk":
            return x[:2] / np.hypot(x[0], x[1])
        g = float(self.dpsi(x[0]))
        return np.array([-g, 1.0]) / np.hypot(g, 1.0)

    def contains(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind == "interval":
            return bool(0.0 < x[0] < self.length)
        if self.kind == "disk":
            return bool(np.hypot(x[0], x[1]) < self.radius)
        return bool(abs(x[0]) < self.half_width and x[1] < self.psi(x[0]))


def normal_at(geom: DomainGeometry, x):
    return geom.normal_at(x)


@dataclass(frozen=True)
class FlatteningChart:
    """Local chart P(y1, y2) = m(y1) + y2 n(y1) straightening the graph x2 = psi(x1).

    m(y1) = (y1, psi(y1)) and n is the upward unit normal of the graph. The
    chart domain is (-R, R)^2 and y2 < 0 corresponds to the domain side.
    ``kappa`` bounds det P' from both sides and is checked on construction.
    """

    psi: Callable
    R: float
    kappa: float = 2.0
    dpsi: Optional[Callable] = None
    d2psi: Optional[Callable] = None
    check_points: int = 41
    _checked: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("chart half-width must be positive")
        if not self.kappa > 1:
            raise ValueError("kappa must exceed 1")
        if self.dpsi is None:
            object.__setattr__(self, "dpsi", _derivative(self.psi))
        if self.d2psi is None:
            object.__setattr__(self, "d2psi", _derivative(self.dpsi))
        lo, hi = self.det_range()
        self._checked.update(det_min=lo, det_max=hi)
        if lo < 1.0 / self.kappa or hi > self.kappa:
            raise ValueError(
                f"det P' in [{lo:.4g}, {hi:.4g}] violates kappa={self.kappa}; shrink R"
            )

    @classmethod
    def flat(cls, R=1.0, kappa=2.0):
        return cls(
            psi=lambda y: np.zeros_like(np.asarray(y, dtype=float)),
            dpsi=lambda y: np.zeros_like(np.asarray(y, dtype=float)),
            d2psi=lambda y: np.zeros_like(np.asarray(y, dtype=float)),
            R=R,
            kappa=kappa,
        )

    @classmethod
    def parabola(cls, curvature=1.0, R=0.25, kappa=2.0):
        k = float(curvature)
        return cls(
            psi=lambda y: k * np.asarray(y, dtype=float) ** 2,
            dpsi=lambda y: 2.0 * k * np.asarray(y, dtype=float),
            d2psi=lambda y: np.full_like(np.asarray(y, dtype=float), 2.0 * k),
            R=R,
            kappa=kappa,
        )

    @classmethod
    def disk_top(cls, radius=1.0, R=None, kappa=2.0):
        """Chart around (0, radius) of the disk, boundary written as a graph."""
        r0 = float(radius)
        R = 0.5 * r0 if R is None else R
        if R >= r0:
            raise ValueError("chart half-width must be below the disk radius")
        return cls(
            psi=lambda y: np.sqrt(r0**2 - np.asarray(y, dtype=float) ** 2),
            dpsi=lambda y: -np.asarray(y) / np.sqrt(r0**2 - np.asarray(y, dtype=float) ** 2),
            d2psi=lambda y: -(r0**2) / (r0**2 - np.asarray(y, dtype=float) ** 2) ** 1.5,
            R=R,
            kappa=kappa,
        )

    def in_domain(self, y):
        y = np.asarray(y, dtype=float)
        return np.all(np.abs(y) < self.R, axis=-1)

    def graph_point(self, y1):
        y1 = np.asarray(y1, dtype=float)
        return np.stack([y1, self.psi(y1)], axis=-1)

    def normal(self, y1):
        g = np.asarray(self.dpsi(y1), dtype=float)
        s = np.hypot(g, 1.0)
        return np.stack([-g / s, 1.0 / s], axis=-1)

    def tangent(self, y1):
        """Column of Dm: d m / d y1 = (1, psi')."""
        g = np.asarray(self.dpsi(y1), dtype=float)
        return np.stack([np.ones_like(g), g], axis=-1)

    def _map(self, y):
        y = np.asarray(y, dtype=float)
        return self.graph_point(y[..., 0]) + y[..., 1:2] * self.normal(y[..., 0])

    def jacobian(self, y):
        y = np.asarray(y, dtype=float)
        y1, y2 = y[..., 0], y[..., 1]
        g = np.asarray(self.dpsi(y1), dtype=float)
        gg = np.asarray(self.d2psi(y1), dtype=float)
        s = np.hypot(g, 1.0)
        n = self.normal(y1)
        dn = np.stack([-gg / s**3, -g * gg / s**3], axis=-1)
        col1 = self.tangent(y1) + y2[..., None] * dn
        return np.stack([col1, n], axis=-1)

    def jacobian_det(self, y):
        # det P' = |(Dpsi, 1)| - y2 psi'' / |(Dpsi, 1)|^2
        y = np.asarray(y, dtype=float)
        g = np.asarray(self.dpsi(y[..., 0]), dtype=float)
        s = np.hypot(g, 1.0)
        return s - y[..., 1] * np.asarray(self.d2psi(y[..., 0])) / s**2

    def det_range(self):
        k = self.check_points
        a = np.linspace(-self.R, self.R, k)[1:-1]
        Y = np.stack(np.meshgrid(a, a, indexing="ij"), axis=-1)
        det = self.jacobian_det(Y)
        return float(det.min()), float(det.max())

    def flatten(self, y):
        y = np.asarray(y, dtype=float)
        if not np.all(self.in_domain(y)):
            raise OutOfChartError("chart coordinates outside (-R, R)^2")
        det = self.jacobian_det(y)
        if np.any(det < 1.0 / self.kappa) or np.any(det > self.kappa):
            raise ValueError("det P' outside the kappa bounds")
        return self._map(y)

    def unflatten(self, x, tol=1e-14, max_iter=50):
        """Newton inverse of ``flatten`` started from (x1, x2 - psi(x1))."""
        x = np.asarray(x, dtype=float)
        y = np.stack([x[..., 0], x[..., 1] - self.psi(x[..., 0])], axis=-1)
        scale = 1.0 + np.max(np.abs(x))
        res = np.inf
        for _ in range(max_iter):
            r = self._map(y) - x
            res = float(np.max(np.abs(r)))
            if res <= tol * scale:
                break
            J = self.jacobian(y)
            y = y - np.linalg.solve(J, r[..., None])[..., 0]
        else:
            raise InverseNotConvergedError(res)
        if not np.all(self.in_domain(y)):
            raise OutOfChartError("point lies outside the chart image")
        return y


@dataclass(frozen=True)
class EndpointChart:
    """One-dimensional chart at an interval endpoint: x = endpoint + y * n."""

    endpoint: float
    outward: float
    R: float = 1.0

    def flatten(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(np.abs(y) >= self.R):
            raise OutOfChartError("chart coordinates outside (-R, R)")
        return self.endpoint + y * self.outward

    def unflatten(self, x):
        y = (np.asarray(x, dtype=float) - self.endpoint) * self.outward
        if np.any(np.abs(y) >= self.R):
            raise OutOfChartError("point lies outside the chart image")
        return y

    def jacobian_det(self, y):
        return np.ones_like(np.asarray(y, dtype=float))


def endpoint_chart(geom: DomainGeometry, left=True, R=None):
    if geom.kind != "interval":
        raise ValueError("endpoint charts exist for intervals only")
    R = 0.5 * geom.length if R is None else R
    if left:
        return EndpointChart(0.0, -1.0, R)
    return EndpointChart(geom.length, 1.0, R)


def mirror_reflect(t, y, w):
    """(t, y', y_d, w', w_d) -> (t, y', -y_d, w', -w_d); the last axis is the normal one."""
    y = np.array(y, dtype=float, copy=True)
    w = np.array(w, dtype=float, copy=True)
    if y.ndim == 0:
        return t, -y, -w
    y[..., -1] = -y[..., -1]
    w[..., -1] = -w[..., -1]
    return t, y, w
