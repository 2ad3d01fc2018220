"""Source terms and the registered catalog of analytic fields.

``SourceSpec`` holds pointwise-evaluable space-time fields for the body
force and the fluid source, together with their analytic time derivatives.
The reduced formulations differentiate the data, so the derivatives must be
supplied analytically (see ``MissingTimeDerivative``); numerical
differentiation is deliberately not offered.

The catalog maps plain dictionaries (as they appear in scenario config
files) to deterministic closures: cosine/sine modes, polynomial bubbles,
and seeded random broadband superpositions.  Time profiles are constant,
exponential, or polynomial, all with closed-form derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, MissingTimeDerivative
from .fem import OperatorBundle


@dataclass(frozen=True)
class SourceSpec:
    """Body force F and fluid source S with optional analytic derivatives.

    In 1D the fields are called as f(x, t); in 2D as f(x, y, t).  The body
    force returns a scalar (1D) or an (fx, fy) pair (2D).
    """

    F: Callable | None = None
    S: Callable | None = None
    F_t: Callable | None = None
    S_t: Callable | None = None

    def require_F_t(self):
        if self.F is not None and self.F_t is None:
            raise MissingTimeDerivative(
                "reduced formulations need the analytic time derivative F_t; "
                "pass an explicit zero for a time-constant load"
            )

    def require_S_t(self):
        if self.S is not None and self.S_t is None:
            raise MissingTimeDerivative(
                "this formulation needs the analytic time derivative S_t; "
                "pass an explicit zero for a time-constant source"
            )


ZERO_SOURCES = SourceSpec()


def pressure_source_vector(bundle: OperatorBundle, S: Callable | None,
                           t: float) -> np.ndarray:
    """Consistent P1 load (S, psi_i) from nodal sampling of S(., t)."""
    n = bundle.n_pressure
    if S is None:
        return np.zeros(n)
    vals = np.array([S(*xy, t) for xy in bundle.mesh.nodes], dtype=float)
    return bundle.Mp @ vals


def displacement_load_vector(bundle: OperatorBundle, F: Callable | None,
                             t: float) -> np.ndarray:
    """Consistent P1 load (F, phi_i) restricted to interior dofs."""
    if F is None:
        return np.zeros(bundle.n_displacement)
    mesh = bundle.mesh
    interior = mesh.interior_nodes
    if mesh.dim == 1:
        vals = np.array([F(*xy, t) for xy in mesh.nodes], dtype=float)
        return np.asarray(bundle.Mp @ vals)[interior]
    sampled = np.array([F(*xy, t) for xy in mesh.nodes], dtype=float)
    fx = np.asarray(bundle.Mp @ sampled[:, 0])[interior]
    fy = np.asarray(bundle.Mp @ sampled[:, 1])[interior]
    return np.concatenate([fx, fy])


# ---------------------------------------------------------------------------
# Analytic field catalog
# ---------------------------------------------------------------------------

def _space_field(spec: dict, dim: int, kind: str) -> Callable:
    name = spec.get("name")
    amp = float(spec.get("amplitude", 1.0))
    if name == "zero":
        if kind == "displacement" and dim == 2:
            return lambda x, y: (0.0, 0.0)
        return (lambda x: 0.0) if dim == 1 else (lambda x, y: 0.0)
    if name == "cosine" and kind == "pressure":
        if dim == 1:
            k = int(spec["k"])
            return lambda x: amp * np.sqrt(2.0) * np.cos(k * np.pi * x)
        kx, ky = int(spec.get("kx", 1)), int(spec.get("ky", 0))
        cx = np.sqrt(2.0) if kx > 0 else 1.0
        cy = np.sqrt(2.0) if ky > 0 else 1.0
        return lambda x, y: amp * cx * cy * np.cos(kx * np.pi * x) * np.cos(ky * np.pi * y)
    if name == "sine" and kind == "displacement":
        if dim == 1:
            k = int(spec["k"])
            return lambda x: amp * np.sqrt(2.0) * np.sin(k * np.pi * x)
        kx, ky = int(spec.get("kx", 1)), int(spec.get("ky", 1))

        def bubble(x, y):
            v = amp * np.sin(kx * np.pi * x) * np.sin(ky * np.pi * y)
            return (v, v)

        return bubble
    if name == "broadband" and kind == "pressure":
        kmax = int(spec.get("kmax", 32))
        decay = float(spec.get("decay", 0.5))
        seed = int(spec.get("seed", 0))
        if dim != 1:
            raise ConfigError("broadband fields are one-dimensional")
        amps = broadband_amplitudes(kmax, decay, seed)

        def broadband(x):
            ks = np.arange(1, kmax + 1)
            return amp * float(amps @ (np.sqrt(2.0) * np.cos(ks * np.pi * x)))

        return broadband
    raise ConfigError(f"unknown {kind} field {name!r} (dim={dim})")


def broadband_amplitudes(kmax: int, decay: float, seed: int) -> np.ndarray:
    """Seeded random-sign modal amplitudes k**(-decay), k = 1..kmax."""
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=kmax)
    ks = np.arange(1, kmax + 1, dtype=float)
    return signs * ks ** (-decay)


def _time_profile(spec: dict | None) -> tuple[Callable, Callable]:
    """Return (g, g') for a named time profile."""
    if spec is None:
        return (lambda t: 1.0), (lambda t: 0.0)
    kind = spec.get("kind", "const")
    if kind == "const":
        value = float(spec.get("value", 1.0))
        return (lambda t: value), (lambda t: 0.0)
    if kind == "exp":
        rate = float(spec.get("rate", -1.0))
        scale = float(spec.get("scale", 1.0))
        return (lambda t: scale * np.exp(rate * t)), (
            lambda t: scale * rate * np.exp(rate * t))
    if kind == "poly":
        coeffs = [float(c) for c in spec.get("coeffs", [1.0])]
        poly = np.polynomial.Polynomial(coeffs)
        dpoly = poly.deriv()
        return (lambda t: float(poly(t))), (lambda t: float(dpoly(t)))
    raise ConfigError(f"unknown time profile {kind!r}")


def make_field(spec: dict | None, dim: int, kind: str) -> Callable | None:
    """Spatial field from a catalog entry; None stays None."""
    if spec is None:
        return None
    return _space_field(spec, dim, kind)


def make_source_pair(spec: dict | None, dim: int,
                     kind: str) -> tuple[Callable | None, Callable | None]:
    """Separable space-time source (f, f_t) from a catalog entry.

    Entry shape: {"space": {...}, "time": {...}}; a bare field dict means a
    time-constant source.
    """
    if spec is None:
        return None, None
    space_spec = spec.get("space", spec)
    g, gdot = _time_profile(spec.get("time"))
    phi = _space_field(space_spec, dim, kind)
    if kind == "displacement" and dim == 2:

        def f(x, y, t):
            vx, vy = phi(x, y)
            gt = g(t)
            return (vx * gt, vy * gt)

        def f_t(x, y, t):
            vx, vy = phi(x, y)
            gt = gdot(t)
            return (vx * gt, vy * gt)

        return f, f_t
    if dim == 1:
        return (lambda x, t: phi(x) * g(t)), (lambda x, t: phi(x) * gdot(t))
    return (lambda x, y, t: phi(x, y) * g(t)), (
        lambda x, y, t: phi(x, y) * gdot(t))
