"""Phase-boundary classification and the inflow, diffuse and specular closures.

On a spatial boundary point with outward normal n, velocities with n.v > 0
leave the domain (outgoing), those with n.v < 0 enter it (incoming) and
n.v = 0 is grazing. Every closure maps outgoing traces at time t to
incoming traces at the same time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple, Optional, Union

import numpy as np

OUTGOING = "outgoing"
INCOMING = "incoming"
GRAZING = "grazing"


class BoundaryClass(NamedTuple):
    tag: str
    speed: float


def _dot(n, v):
    n = np.asarray(n, dtype=float)
    v = np.asarray(v, dtype=float)
    if n.ndim == 0 or n.size == 1:
        return np.asarray(n).reshape(()) * (v if v.ndim == 0 or v.shape[-1:] != (1,) else v[..., 0])
    return v @ n


def classify(n, v, tol=0.0):
    """Tag a (normal, velocity) pair as outgoing, incoming or grazing."""
    speed = float(_dot(n, v))
    if abs(speed) <= tol:
        return BoundaryClass(GRAZING, speed)
    return BoundaryClass(OUTGOING if speed > 0 else INCOMING, speed)


def classify_grid(n, v, tol=0.0):
    """Vectorized sign of n.v: +1 outgoing, -1 incoming, 0 grazing."""
    speed = _dot(n, v)
    out = np.sign(speed).astype(int)
    out[np.abs(speed) <= tol] = 0
    return out


def specular(n, v):
    """v - 2 (n.v) n."""
    n = np.asarray(n, dtype=float)
    v = np.asarray(v, dtype=float)
    if n.ndim == 0 or n.size == 1:
        return -v
    return v - 2.0 * (v @ n)[..., None] * n


class Maxwellian:
    """Wall Maxwellian (2 pi)^(-(d-1)/2) Theta^(-(d+1)/2) exp(-|v|^2 / (2 Theta)).

    ``theta`` is a positive number or a callable of (t, x). The profile has
    unit incoming flux for every unit normal.
    """

    def __init__(self, theta=1.0, dim=1):
        if dim not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        if not callable(theta) and not theta > 0:
            raise ValueError("wall temperature must be positive")
        self.theta = theta
        self.dim = dim

    def _theta(self, t, x):
        th = self.theta(t, x) if callable(self.theta) else self.theta
        if np.any(np.asarray(th) <= 0):
            raise ValueError("wall temperature must be positive")
        return th

    def __call__(self, v, t=0.0, x=0.0):
        v = np.asarray(v, dtype=float)
        th = self._theta(t, x)
        d = self.dim
        sq = v**2 if d == 1 else np.sum(v**2, axis=-1)
        norm = (2.0 * math.pi) ** (-(d - 1) / 2.0) * th ** (-(d + 1) / 2.0)
        return norm * np.exp(-sq / (2.0 * th))


def boundary_maxwellian(theta, d=1):
    return Maxwellian(theta, d)


# boundary specifications ----------------------------------------------------


@dataclass(frozen=True)
class Inflow:
    """Prescribed incoming data g(t, x, v); a mapping face name -> g is also accepted."""

    g: Union[Callable, Mapping[str, Callable], None] = None

    def data(self, face, t, v):
        g = self.g
        if g is None:
            return np.zeros_like(np.asarray(v, dtype=float))
        if isinstance(g, Mapping):
            if face.name not in g:
                raise KeyError(f"inflow data not defined on face {face.name!r}")
            g = g[face.name]
        out = np.broadcast_to(np.asarray(g(t, face.x, v), dtype=float), np.shape(v)).copy()
        if np.any(~np.isfinite(out[face.incoming(v)])):
            raise ValueError(f"inflow data not finite on face {face.name!r}")
        return out


@dataclass(frozen=True)
class Diffuse:
    """Re-emission of the outgoing flux with profile ``weight(v, t, x)``.

    With ``renormalize`` the discrete profile is rescaled to unit discrete
    incoming flux on the velocity grid, which makes the closure conserve mass
    exactly instead of up to quadrature error.
    """

    weight: Callable = field(default_factory=lambda: Maxwellian(1.0, 1))
    renormalize: bool = True

    def weight_report(self, v, qs=(0.0, 2.0, 4.0)):
        """sup <v>^q M on the grid for each q and a Hölder quotient of M in v."""
        v = np.asarray(v, dtype=float)
        m = self.weight(v, 0.0, 0.0)
        bracket = np.sqrt(1.0 + v**2)
        sups = {float(q): float(np.max(bracket**q * m)) for q in qs}
        diffs = np.abs(np.diff(m)) / np.diff(v)
        return {"sup_weighted": sups, "lipschitz_v": float(diffs.max())}


@dataclass(frozen=True)
class Specular:
    pass


@dataclass(frozen=True)
class DampedSpecular:
    a: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise ValueError("damping must lie in [0, 1]")


BoundarySpec = Union[Inflow, Diffuse, Specular, DampedSpecular]


@dataclass(frozen=True)
class BoundaryFace:
    """A spatial boundary point of a one-dimensional domain."""

    name: str
    x: float
    normal: float

    def speed(self, v):
        return self.normal * np.asarray(v, dtype=float)

    def outgoing(self, v):
        return self.speed(v) > 0

    def incoming(self, v):
        return self.speed(v) < 0


def macroscopic_flux(face: BoundaryFace, trace, v, weights):
    """Quadrature of f (n.v)_+ over the velocity grid."""
    if trace is None:
        raise ValueError(f"no outgoing trace on face {face.name!r}")
    trace = np.asarray(trace, dtype=float)
    return float(np.sum(trace * np.maximum(face.speed(v), 0.0) * weights))


def boundary_measure(face: BoundaryFace, v, weights):
    """|n.v| dv on the velocity grid; exactly zero on the grazing node."""
    return np.abs(face.speed(v)) * weights


def diffuse_profile(spec: Diffuse, face: BoundaryFace, v, weights, t=0.0):
    prof = np.asarray(spec.weight(v, t, face.x), dtype=float)
    prof = np.where(face.incoming(v), prof, 0.0)
    if spec.renormalize:
        flux = float(np.sum(prof * np.abs(face.speed(v)) * weights))
        prof = prof / flux
    return prof


def apply_boundary(spec: BoundarySpec, face: BoundaryFace, outgoing, v, weights, t=0.0):
    """Incoming trace on ``face`` from the outgoing trace (values on the full v grid).

    The velocity grid must be symmetric about 0 so the mirror image of a
    node is a node.
    """
    v = np.asarray(v, dtype=float)
    inc = face.incoming(v)
    if isinstance(spec, Inflow):
        return np.where(inc, spec.data(face, t, v), 0.0)
    if outgoing is None:
        raise ValueError(f"no outgoing trace on face {face.name!r}")
    out = np.where(face.outgoing(v), np.asarray(outgoing, dtype=float), 0.0)
    if isinstance(spec, Diffuse):
        flux = macroscopic_flux(face, out, v, weights)
        return flux * diffuse_profile(spec, face, v, weights, t)
    if isinstance(spec, (Specular, DampedSpecular)):
        a = spec.a if isinstance(spec, DampedSpecular) else 1.0
        # v -> -v on a symmetric grid is a reversal
        return a * np.where(inc, out[::-1], 0.0)
    raise TypeError(f"unknown boundary specification {spec!r}")


def interval_faces(length):
    return (BoundaryFace("left", 0.0, -1.0), BoundaryFace("right", float(length), 1.0))
