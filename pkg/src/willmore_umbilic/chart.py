"""Closed-form conformal charts, ambient conformal models and grid sampling.

Pole and orientation conventions (they decide whether the Hopf function comes
out as itself or as its conjugate):

* ``sphere_stereo`` projects from the north pole ``(0, 0, r)``; the chart
  origin lands on the south pole ``(0, 0, -r)``. With the coordinate-order
  normal ``f_x x f_y`` the normal points into the ball.
* ``clifford_stereo`` maps ``(a, b)`` to ``(cos a, sin a, cos b, sin b)/sqrt(2)``
  on the unit 3-sphere and projects from ``(0, 0, 0, 1)``.
* Normals are always ``f_x x f_y`` normalised, i.e. fixed by coordinate order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .fields import Field, align, d1, grid_field

CATALOG_VERSION = "1"
ISOTHERMAL_TOL = 1e-4
INVERSION_GUARD = 1e-9
HYPERBOLIC_GUARD = 1e-12


class IsothermalityError(ValueError):
    """A conformal-only operation received a chart that is not isothermal."""


@dataclass(frozen=True)
class ChartDomain:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    periodic_x: bool = False
    periodic_y: bool = False

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("empty chart domain")

    @property
    def periodic(self) -> tuple[bool, bool]:
        return (self.periodic_x, self.periodic_y)


@dataclass(frozen=True)
class AmbientSpace:
    """Constant-curvature space modelled as ``rho(x)^2 g_euc`` on (part of) R^3."""

    kind: str = "euclidean"

    def __post_init__(self):
        if self.kind not in ("euclidean", "sphere", "hyperbolic"):
            raise ValueError(f"unknown ambient {self.kind!r}")

    def check(self, p: np.ndarray) -> None:
        if self.kind == "hyperbolic":
            r2 = np.sum(p * p, axis=-1)
            if np.any(r2 >= (1.0 - HYPERBOLIC_GUARD) ** 2):
                raise ValueError("surface leaves the hyperbolic ball |x| < 1")

    def rho(self, p: np.ndarray) -> np.ndarray:
        r2 = np.sum(p * p, axis=-1)
        if self.kind == "euclidean":
            return np.ones_like(r2)
        if self.kind == "sphere":
            return 2.0 / (1.0 + r2)
        return 2.0 / (1.0 - r2)

    def grad_log_rho(self, p: np.ndarray) -> np.ndarray:
        r2 = np.sum(p * p, axis=-1, keepdims=True)
        if self.kind == "euclidean":
            return np.zeros_like(p)
        if self.kind == "sphere":
            return -2.0 * p / (1.0 + r2)
        return 2.0 * p / (1.0 - r2)


EUCLIDEAN = AmbientSpace("euclidean")


@dataclass(frozen=True, eq=False)
class ConformalChart:
    name: str
    params: dict
    domain: ChartDomain
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    ambient: AmbientSpace = EUCLIDEAN
    isothermal: bool = True
    willmore: bool = True
    minimal_in: frozenset = frozenset()

    def __call__(self, x, y) -> np.ndarray:
        return self.evaluator(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def with_ambient(self, ambient: AmbientSpace | str) -> ConformalChart:
        if isinstance(ambient, str):
            ambient = AmbientSpace(ambient)
        return replace(self, ambient=ambient)


@dataclass(frozen=True, eq=False)
class SampledChart:
    positions: np.ndarray  # (nx, ny, 3)
    x: np.ndarray
    y: np.ndarray
    spacing: tuple[float, float]
    periodic: tuple[bool, bool]
    chart: ConformalChart | None = None
    margin: int = 0

    @property
    def n(self) -> int:
        return max(self.positions.shape[:2])

    def field(self) -> Field:
        return Field(self.positions, self.x, self.y, self.spacing, self.margin, self.periodic)

    def with_positions(self, positions: np.ndarray) -> SampledChart:
        return replace(self, positions=positions)


# catalog -------------------------------------------------------------------
def _sphere_stereo(r: float):
    def f(x, y):
        q = x * x + y * y
        d = r * r + q
        return np.stack([2 * r * r * x / d, 2 * r * r * y / d, r * (q - r * r) / d], axis=-1)

    return f


def _catenoid(c: float):
    def f(u, v):
        return np.stack([c * np.cosh(v) * np.cos(u), c * np.cosh(v) * np.sin(u), c * v], axis=-1)

    return f


def _enneper(s: float):
    def f(u, v):
        return s * np.stack([u - u**3 / 3 + u * v * v, v - v**3 / 3 + u * u * v, u * u - v * v], axis=-1)

    return f


def _clifford_stereo():
    c = 1.0 / np.sqrt(2.0)

    def f(a, b):
        x4 = c * np.sin(b)
        d = 1.0 - x4
        return np.stack([c * np.cos(a) / d, c * np.sin(a) / d, c * np.cos(b) / d], axis=-1)

    return f


def _graph_bump(A: float, sigma: float):
    def f(x, y):
        return np.stack([x, y, A * np.exp(-(x * x + y * y) / sigma**2)], axis=-1)

    return f


def _perturbed_sphere(r: float, amplitude: float, width: float, cx: float, cy: float):
    base = _sphere_stereo(r)

    def f(x, y):
        p = base(x, y)
        bump = amplitude * r * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / width**2)
        return p - bump[..., None] * p / r  # inward normal of the sphere is -p/r

    return f


CATALOG = {
    "sphere_stereo": {
        "params": {"r": 1.0},
        "domain": (-1.0, 1.0, -1.0, 1.0, False, False),
        "isothermal": True,
        "willmore": True,
        "minimal_in": (),
        "description": "inverse stereographic projection onto the sphere of radius r from (0,0,r)",
    },
    "catenoid": {
        "params": {"c": 1.0},
        "domain": (0.0, 2 * np.pi, -1.0, 1.0, True, False),
        "isothermal": True,
        "willmore": True,
        "minimal_in": ("euclidean",),
        "description": "c (cosh v cos u, cosh v sin u, v)",
    },
    "enneper": {
        "params": {"scale": 1.0},
        "domain": (-1.0, 1.0, -1.0, 1.0, False, False),
        "isothermal": True,
        "willmore": True,
        "minimal_in": ("euclidean",),
        "description": "(u - u^3/3 + u v^2, v - v^3/3 + u^2 v, u^2 - v^2)",
    },
    "clifford_stereo": {
        "params": {},
        "domain": (0.0, 2 * np.pi, 0.0, 2 * np.pi, True, True),
        "isothermal": True,
        "willmore": True,
        "minimal_in": ("sphere",),
        "description": "Clifford torus in S^3 projected stereographically from (0,0,0,1)",
    },
    "graph_bump": {
        "params": {"A": 0.5, "sigma": 1.0},
        "domain": (-2.0, 2.0, -2.0, 2.0, False, False),
        "isothermal": False,
        "willmore": False,
        "minimal_in": (),
        "description": "graph z = A exp(-(x^2+y^2)/sigma^2); non-isothermal, non-Willmore control",
    },
    "inverted_catenoid": {
        "params": {"c": 1.0, "center": [0.0, 0.0, 3.0]},
        "domain": (0.0, 2 * np.pi, -1.0, 1.0, True, False),
        "isothermal": True,
        "willmore": True,
        "minimal_in": (),
        "description": "catenoid composed with the inversion about `center`",
    },
    "perturbed_sphere": {
        "params": {"r": 1.0, "amplitude": 0.01, "width": 0.15, "cx": 0.0, "cy": 0.0},
        "domain": (-1.0, 1.0, -1.0, 1.0, False, False),
        "isothermal": False,
        "willmore": False,
        "minimal_in": (),
        "description": "sphere_stereo pushed inward along the normal by a Gaussian bump",
    },
}


def catalog_chart(name: str, params: dict | None = None, ambient: AmbientSpace | str = EUCLIDEAN) -> ConformalChart:
    if name not in CATALOG:
        raise ValueError(f"unknown catalog surface {name!r}; known: {sorted(CATALOG)}")
    entry = CATALOG[name]
    unknown = set(params or {}) - set(entry["params"])
    if unknown:
        raise ValueError(f"unknown parameters for {name}: {sorted(unknown)}")
    p = {**entry["params"], **(params or {})}

    if name == "sphere_stereo":
        if p["r"] <= 0:
            raise ValueError("radius must be positive")
        ev = _sphere_stereo(float(p["r"]))
    elif name in ("catenoid", "inverted_catenoid"):
        if p["c"] <= 0:
            raise ValueError("catenoid scale must be positive")
        ev = _catenoid(float(p["c"]))
    elif name == "enneper":
        if p["scale"] <= 0:
            raise ValueError("scale must be positive")
        ev = _enneper(float(p["scale"]))
    elif name == "clifford_stereo":
        ev = _clifford_stereo()
    elif name == "graph_bump":
        if p["sigma"] <= 0:
            raise ValueError("sigma must be positive")
        ev = _graph_bump(float(p["A"]), float(p["sigma"]))
    else:
        if p["r"] <= 0 or p["width"] <= 0:
            raise ValueError("radius and width must be positive")
        ev = _perturbed_sphere(*(float(p[k]) for k in ("r", "amplitude", "width", "cx", "cy")))

    if isinstance(ambient, str):
        ambient = AmbientSpace(ambient)
    chart = ConformalChart(
        name=name,
        params=p,
        domain=ChartDomain(*entry["domain"]),
        evaluator=ev,
        ambient=ambient,
        isothermal=entry["isothermal"],
        willmore=entry["willmore"],
        minimal_in=frozenset(entry["minimal_in"]),
    )
    if name == "inverted_catenoid":
        chart = replace(invert(chart, p["center"]), name=name, params=p)
    return chart


def invert(chart: ConformalChart, center) -> ConformalChart:
    """Compose with the sphere inversion ``c + (f - c)/|f - c|^2``."""
    c = np.asarray(center, dtype=float)
    base = chart.evaluator

    def f(x, y):
        d = base(x, y) - c
        r2 = np.sum(d * d, axis=-1, keepdims=True)
        if np.any(r2 < INVERSION_GUARD**2):
            raise ValueError("chart image hits the inversion center")
        return c + d / r2

    return replace(
        chart,
        name=f"inverted_{chart.name}",
        params={**chart.params, "center": c.tolist()},
        evaluator=f,
        minimal_in=frozenset(),
    )


def swap_axes(chart: ConformalChart) -> ConformalChart:
    """Same surface with chart coordinates exchanged (orientation reversed)."""
    base = chart.evaluator
    d = chart.domain
    return replace(
        chart,
        name=f"swapped_{chart.name}",
        domain=ChartDomain(d.y_min, d.y_max, d.x_min, d.x_max, d.periodic_y, d.periodic_x),
        evaluator=lambda x, y: base(y, x),
    )


def _axis(lo: float, hi: float, n: int, periodic: bool) -> np.ndarray:
    if periodic:
        return lo + (hi - lo) * np.arange(n) / n
    return np.linspace(lo, hi, n)


def sample(chart: ConformalChart, n: int) -> SampledChart:
    if n < 16:
        raise ValueError("grid resolution must be at least 16")
    d = chart.domain
    x = _axis(d.x_min, d.x_max, n, d.periodic_x)
    y = _axis(d.y_min, d.y_max, n, d.periodic_y)
    X, Y = np.meshgrid(x, y, indexing="ij")
    p = chart(X, Y)
    if not np.all(np.isfinite(p)):
        raise ValueError(f"{chart.name}: evaluator produced non-finite positions")
    chart.ambient.check(p)
    spacing = (float(x[1] - x[0]), float(y[1] - y[0]))
    return SampledChart(p, x, y, spacing, d.periodic, chart)


def metric_from_positions(sampled: SampledChart, order: int = 2):
    """Induced Euclidean metric entries and the first derivatives they came from."""
    pos = sampled.field()
    fx, fy = d1(pos, 0, order), d1(pos, 1, order)
    fx, fy = align(fx, fy)
    g11 = fx.with_values(np.einsum("ijk,ijk->ij", fx.values, fx.values))
    g12 = fx.with_values(np.einsum("ijk,ijk->ij", fx.values, fy.values))
    g22 = fx.with_values(np.einsum("ijk,ijk->ij", fy.values, fy.values))
    return (g11, g12, g22), (fx, fy)


def isothermal_deviation(sampled: SampledChart, order: int = 8) -> float:
    """max over the interior of ``(|g11 - g22| + 2|g12|) / (g11 + g22)``.

    Uses a high-order stencil by default so that the number reflects the chart,
    not the difference scheme.
    """
    (g11, g12, g22), _ = metric_from_positions(sampled, order)
    dev = (np.abs(g11.values - g22.values) + 2 * np.abs(g12.values)) / (g11.values + g22.values)
    return float(np.max(dev))


def require_isothermal(sampled: SampledChart, tol: float = ISOTHERMAL_TOL) -> float:
    dev = isothermal_deviation(sampled)
    if dev > tol:
        name = sampled.chart.name if sampled.chart is not None else "chart"
        raise IsothermalityError(f"{name}: isothermal_deviation = {dev:.3e} exceeds {tol:.0e}")
    return dev


def positions_field(sampled: SampledChart) -> Field:
    return grid_field(sampled.positions, sampled.x, sampled.y, sampled.periodic)
