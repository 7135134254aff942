"""Residual fields for the Willmore equation and the Hopf-function CR system.

Every residual is normalised by an explicit, reported scale. Each scale is the
sum (or max) of the magnitudes of the terms being balanced plus a reference
term built from ``|A|_g``, the full second fundamental form, so that identities
whose two sides are both exactly zero (catenoid, round sphere) still have a
meaningful, non-degenerate denominator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .chart import ConformalChart, catalog_chart, sample
from .fields import Field, align, wirtinger_dz, wirtinger_dzbar
from .geometry import (
    GeneralBundle,
    GeometryBundle,
    codazzi_residual as _codazzi_fields,
    general_bundle,
    geometry_bundle,
    laplace_beltrami,
    laplace_beltrami_general,
)

EPS = np.finfo(float).eps
FLOOR_FACTOR = 10.0
# derivative levels of the positions stacked by each identity; rounding noise
# in the residual grows like eps * h^-levels
LEVELS = {
    "willmore_residual": 4,
    "cr_residual": 3,
    "holomorphy_check": 3,
    "codazzi_residual": 3,
    "coupled_residual.row2": 4,
}
MINIMALITY_TOL = 1e-4


@dataclass(frozen=True, eq=False)
class ResidualReport:
    operation: str
    residual: Field
    sup_raw: float
    sup_normalized: float
    l2_normalized: float
    scale: float
    chart: str
    ambient: str
    n: int
    stencil_order: int
    floor_limited: bool
    flags: dict = field(default_factory=dict)

    def record(self) -> dict:
        return {
            "operation": self.operation,
            "chart": self.chart,
            "ambient": self.ambient,
            "n": int(self.n),
            "stencil_order": int(self.stencil_order),
            "sup_raw": float(self.sup_raw),
            "sup_normalized": float(self.sup_normalized),
            "l2_normalized": float(self.l2_normalized),
            "floor_limited": bool(self.floor_limited),
        }


@dataclass(frozen=True, eq=False)
class CoupledReport:
    row1: ResidualReport
    row2: ResidualReport

    @property
    def rows(self) -> tuple[ResidualReport, ResidualReport]:
        return (self.row1, self.row2)


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Entries of the 2x2 matrix coupling ``(phi, dz H)``; diagonal is zero."""

    m12: Field
    m21: Field

    def matrix(self) -> np.ndarray:
        a, b = align(self.m12, self.m21)
        z = np.zeros_like(b.values)
        return np.stack([np.stack([z, a.values + 0j], -1), np.stack([b.values, z], -1)], -2)


def _measure(bundle) -> Field:
    return bundle.e2u if isinstance(bundle, GeometryBundle) else bundle.area_factor


def _make_report(op: str, bundle, residual: Field, scale: float, order: int, **flags) -> ResidualReport:
    if not scale > 0:
        raise ValueError("normalization scale must be positive")
    mu, r = align(_measure(bundle), residual)
    absr = np.abs(r.values)
    if absr.ndim > 2:
        absr = np.sqrt(np.sum(absr**2, axis=tuple(range(2, absr.ndim))))
    sup = float(np.max(absr))
    l2 = float(np.sqrt(np.sum(absr**2 * mu.values) / np.sum(mu.values)))
    ambient = bundle.ambient.kind if isinstance(bundle, GeometryBundle) else "euclidean"
    h = min(bundle.sampled.spacing)
    noise = FLOOR_FACTOR * EPS * h ** -LEVELS[op] * scale
    return ResidualReport(
        operation=op,
        residual=residual,
        sup_raw=sup,
        sup_normalized=sup / scale,
        l2_normalized=l2 / scale,
        scale=scale,
        chart=bundle.name,
        ambient=ambient,
        n=bundle.sampled.n,
        stencil_order=order,
        floor_limited=bool(sup < noise),
        flags=flags,
    )


def _sup(f: Field) -> float:
    return f.sup()


def willmore_residual(bundle: GeometryBundle | GeneralBundle, order: int | None = None) -> ResidualReport:
    """``Delta_g H + |A0|_g^2 H`` normalised by ``max(sup|H|^3, sup|Delta_g H|, sup|A|^3)``.

    Conformal bundles use ``|A0|^2 = 2 e^{-4u} |phi|^2``; general bundles fall
    back to the full-metric Laplace-Beltrami operator.
    """
    o = order or bundle.order
    if isinstance(bundle, GeometryBundle):
        lap = laplace_beltrami(bundle.H, bundle.u, "A", o)
        A0_sq = 2.0 * bundle.phi.abs() ** 2 / bundle.e2u**2
    else:
        if o != bundle.order:
            raise ValueError("general bundles use their own stencil order")
        lap = laplace_beltrami_general(bundle.H, bundle)
        A0_sq = bundle.A0_sq
    res = lap + A0_sq * bundle.H
    A_sq = bundle.A_sq
    scale = max(_sup(bundle.H) ** 3, _sup(lap), _sup(A_sq) ** 1.5)
    return _make_report("willmore_residual", bundle, res, scale, o)


def _cr_terms(bundle: GeometryBundle, o: int):
    lhs = wirtinger_dzbar(bundle.phi, o)
    dzH = wirtinger_dz(bundle.H, o)
    rhs = 0.5 * bundle.e2u * dzH
    return lhs, rhs, dzH


def _cr_guard(bundle: GeometryBundle) -> float:
    # size of (e^{2u}/2) dz H when |grad_g H| ~ |A|^2
    return 0.5 * float(np.max(bundle.e2u.values**1.5 * bundle.A_sq.values))


def cr_residual(bundle: GeometryBundle, order: int | None = None) -> ResidualReport:
    """``dzbar phi - (e^{2u}/2) dz H``."""
    o = order or bundle.order
    lhs, rhs, _ = _cr_terms(bundle, o)
    res = lhs - rhs
    scale = _sup(lhs) + _sup(rhs) + _cr_guard(bundle)
    return _make_report("cr_residual", bundle, res, scale, o)


def holomorphy_check(bundle: GeometryBundle, order: int | None = None) -> ResidualReport:
    """``dzbar phi`` for surfaces that are minimal in their ambient.

    ``flags["not_minimal"]`` is set when ``sup|H|`` exceeds ``1e-4 sup|A|_g``.
    """
    o = order or bundle.order
    res = wirtinger_dzbar(bundle.phi, o)
    scale = _sup(res) + _cr_guard(bundle)
    not_minimal = _sup(bundle.H) > MINIMALITY_TOL * math.sqrt(_sup(bundle.A_sq))
    return _make_report("holomorphy_check", bundle, res, scale, o, not_minimal=bool(not_minimal))


def coupling_matrix(bundle: GeometryBundle) -> CouplingMatrix:
    """``M12 = e^{2u}/2`` and ``M21 = -e^{-2u} H conj(phi) / 2``."""
    m12 = 0.5 * bundle.e2u
    m21 = -0.5 * bundle.H * bundle.phi.conj() / bundle.e2u
    return CouplingMatrix(m12, m21)


def coupled_residual(bundle: GeometryBundle, order: int | None = None) -> CoupledReport:
    o = order or bundle.order
    row1 = cr_residual(bundle, o)
    M = coupling_matrix(bundle)
    _, _, dzH = _cr_terms(bundle, o)
    lhs = wirtinger_dzbar(dzH, o)
    rhs = M.m21 * bundle.phi
    res = lhs - rhs
    guard = 0.25 * float(np.max(bundle.e2u.values * bundle.A_sq.values**1.5))
    scale = _sup(lhs) + _sup(rhs) + guard
    row2 = _make_report("coupled_residual.row2", bundle, res, scale, o)
    row1 = replace(row1, operation="coupled_residual.row1")
    return CoupledReport(row1, row2)


def codazzi_residual(bundle: GeometryBundle, order: int | None = None) -> ResidualReport:
    """``g^{kl} nabla_k h0_lm - dH_m / 2`` with covariant derivatives."""
    o = order or bundle.order
    res, simplified = _codazzi_fields(bundle.h0, bundle.H, bundle.u, o)
    guard = float(np.max(np.sqrt(bundle.e2u.values) * bundle.A_sq.values))
    half_dH = simplified - res
    scale = _sup(half_dH) + _sup(simplified) + guard
    return _make_report("codazzi_residual", bundle, res, scale, o)


OPERATIONS: dict[str, Callable] = {
    "willmore_residual": willmore_residual,
    "cr_residual": cr_residual,
    "holomorphy_check": holomorphy_check,
    "codazzi_residual": codazzi_residual,
    "coupled_residual.row1": lambda b, o=None: coupled_residual(b, o).row1,
    "coupled_residual.row2": lambda b, o=None: coupled_residual(b, o).row2,
}


def build_bundle(chart: ConformalChart, n: int, order: int = 2, ambient=None):
    """Conformal bundle for isothermal charts, general bundle otherwise."""
    s = sample(chart, n)
    if chart.isothermal:
        return geometry_bundle(s, ambient, order)
    if ambient is not None and getattr(ambient, "kind", ambient) != "euclidean":
        raise ValueError("general-chart geometry supports the Euclidean ambient only")
    return general_bundle(s, order)


@dataclass(frozen=True)
class OrderEstimate:
    n_coarse: int
    n_fine: int
    sup_coarse: float
    sup_fine: float
    order: float | None
    floor_limited: bool


def convergence_order(
    operation: str,
    chart: ConformalChart | str,
    resolutions,
    order: int = 2,
    ambient=None,
) -> list[OrderEstimate]:
    """``log2(sup_n / sup_2n)`` for consecutive resolutions.

    Pairs where either run sits at the rounding floor report ``order=None``.
    """
    if isinstance(chart, str):
        chart = catalog_chart(chart)
    resolutions = list(resolutions)
    if len(resolutions) < 2:
        raise ValueError("need at least two resolutions")
    op = OPERATIONS[operation]
    reports = [op(build_bundle(chart, n, order, ambient), order) for n in resolutions]
    out = []
    for (n0, r0), (n1, r1) in zip(zip(resolutions, reports), zip(resolutions[1:], reports[1:])):
        floor = r0.floor_limited or r1.floor_limited
        est = None if floor else math.log(r0.sup_normalized / r1.sup_normalized) / math.log(n1 / n0)
        out.append(OrderEstimate(n0, n1, r0.sup_normalized, r1.sup_normalized, est, floor))
    return out
