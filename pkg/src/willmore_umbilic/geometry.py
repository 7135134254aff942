"""First and second order surface invariants on sampled charts.

Two bundles are provided. :func:`geometry_bundle` is the conformal path: it
refuses non-isothermal charts and produces the Hopf function. The general path
(:func:`general_bundle`) works with the full induced metric and is what the
flow uses once a deformation has destroyed isothermality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chart import EUCLIDEAN, AmbientSpace, SampledChart, require_isothermal
from .fields import (
    Field,
    SymTensorField,
    align,
    d1,
    d2,
    dxy,
    stencil_radius,
    wirtinger_dz,
    wirtinger_dzbar,
)


def _dot(a: Field, b: Field) -> Field:
    a, b = align(a, b)
    return a.with_values(np.einsum("ijk,ijk->ij", a.values, b.values))


def _symmetric_dxy(field: Field, order: int) -> Field:
    # Averaging both application orders makes the stencil exactly symmetric
    # under a swap of chart coordinates.
    t = Field(field.values.swapaxes(0, 1), field.y, field.x, field.spacing[::-1], field.margin, field.periodic[::-1])
    b = dxy(t, order)
    b = Field(b.values.swapaxes(0, 1), b.y, b.x, b.spacing[::-1], b.margin, b.periodic[::-1])
    return 0.5 * (dxy(field, order) + b)


def position_derivatives(sampled: SampledChart, order: int = 2):
    """``(f_x, f_y, f_xx, f_xy, f_yy)`` all at margin ``r``."""
    pos = sampled.field()
    return align(
        d1(pos, 0, order),
        d1(pos, 1, order),
        d2(pos, 0, order),
        _symmetric_dxy(pos, order),
        d2(pos, 1, order),
    )


def _positions_at(sampled: SampledChart, margin: int) -> np.ndarray:
    return sampled.field().crop(margin).values


def first_fundamental(sampled: SampledChart, ambient: AmbientSpace | None = None, order: int = 2, check: bool = True):
    """Induced Euclidean metric ``g``, conformal factor ``e^{2u}`` and ``u``.

    For curved ambients the factor is the pull-back of ``rho^2 g_euc``.
    """
    if check:
        require_isothermal(sampled)
    ambient = ambient or _ambient_of(sampled)
    fx, fy = align(d1(sampled.field(), 0, order), d1(sampled.field(), 1, order))
    g = SymTensorField(_dot(fx, fx), _dot(fx, fy), _dot(fy, fy))
    e2u_euc = 0.5 * (g.t11 + g.t22)
    rho = ambient.rho(_positions_at(sampled, e2u_euc.margin))
    e2u = e2u_euc * rho**2
    if np.any(e2u.values <= 0):
        raise ValueError("nonpositive metric factor")
    u = e2u.with_values(0.5 * np.log(e2u.values))
    return g, e2u, u


def _ambient_of(sampled: SampledChart) -> AmbientSpace:
    return sampled.chart.ambient if sampled.chart is not None else EUCLIDEAN


def _normal_from(fx: Field, fy: Field) -> Field:
    c = np.cross(fx.values, fy.values)
    norm = np.linalg.norm(c, axis=-1, keepdims=True)
    if np.any(norm < 1e-14):
        raise ValueError("degenerate tangent plane (|f_x x f_y| < 1e-14)")
    return fx.with_values(c / norm)


def unit_normal(sampled: SampledChart, order: int = 2) -> Field:
    """Euclidean unit normal ``f_x x f_y / |f_x x f_y|``."""
    fx, fy = align(d1(sampled.field(), 0, order), d1(sampled.field(), 1, order))
    return _normal_from(fx, fy)


def second_fundamental(sampled: SampledChart, ambient: AmbientSpace | None = None, order: int = 2) -> SymTensorField:
    """Scalar second fundamental form in the ambient metric.

    Euclidean: ``h_ij = <f_ij, nu>``. For ``rho^2 g_euc`` the form becomes
    ``rho (h_ij - g_ij <nu, grad log rho>)`` with ``g`` the Euclidean induced
    metric and ``nu`` the Euclidean normal.
    """
    ambient = ambient or _ambient_of(sampled)
    fx, fy, fxx, fxy, fyy = position_derivatives(sampled, order)
    nu = _normal_from(fx, fy)
    h11, h12, h22 = _dot(fxx, nu), _dot(fxy, nu), _dot(fyy, nu)
    if ambient.kind == "euclidean":
        return SymTensorField(h11, h12, h22)
    p = _positions_at(sampled, nu.margin)
    rho = ambient.rho(p)
    s = np.einsum("ijk,ijk->ij", nu.values, ambient.grad_log_rho(p))
    g11, g12, g22 = _dot(fx, fx), _dot(fx, fy), _dot(fy, fy)
    return SymTensorField(
        h11.with_values(rho * (h11.values - g11.values * s)),
        h12.with_values(rho * (h12.values - g12.values * s)),
        h22.with_values(rho * (h22.values - g22.values * s)),
    )


def mean_curvature(h: SymTensorField, e2u: Field) -> Field:
    """``H = e^{-2u} (h11 + h22)``: the sum of principal curvatures."""
    return (h.t11 + h.t22) / e2u


def tracefree(h: SymTensorField, e2u: Field, H: Field) -> SymTensorField:
    """``h0 = h - H g / 2`` with the conformal metric ``g = e^{2u} delta``."""
    half = 0.5 * H * e2u
    return SymTensorField(h.t11 - half, h.t12, h.t22 - half)


def hopf_phi(h0: SymTensorField) -> Field:
    """``phi = h0_11 - i h0_12``.

    Evaluated as ``(h0_11 - h0_22)/2 - i h0_12`` (equal for tracefree ``h0``) so
    that exchanging the chart axes conjugates ``phi`` bit for bit.
    """
    return 0.5 * (h0.t11 - h0.t22) - 1j * h0.t12


def tracefree_norm_sq(h0: SymTensorField, e2u: Field) -> Field:
    """``|A0|_g^2 = e^{-4u} sum_ij (h0_ij)^2``."""
    s = h0.t11**2 + 2.0 * h0.t12**2 + h0.t22**2
    return s / e2u**2


def christoffel(u: Field, order: int = 2) -> dict[tuple[int, int, int], Field]:
    """Christoffel symbols of ``e^{2u} g_euc`` keyed ``(r, k, l)`` (0-based, k <= l).

    ``Gamma^r_kl = delta^r_l u_k + delta^r_k u_l - g_kl g^{rs} u_s``; for a
    conformal metric ``g_kl g^{rs} = delta_kl delta^{rs}``.
    """
    du = align(d1(u, 0, order), d1(u, 1, order))
    gam = {}
    for r in range(2):
        for k in range(2):
            for l in range(k, 2):
                term = 0.0 * du[0]
                if r == l:
                    term = term + du[k]
                if r == k:
                    term = term + du[l]
                if k == l:
                    term = term - du[r]
                gam[(r, k, l)] = term
    return gam


def _gam(gam, r, k, l):
    return gam[(r, min(k, l), max(k, l))]


def christoffel_trace(gam: dict, e2u: Field) -> tuple[Field, Field]:
    """``g^{kl} Gamma^r_kl`` for ``r = 1, 2``; identically zero for conformal metrics."""
    return tuple((_gam(gam, r, 0, 0) + _gam(gam, r, 1, 1)) / e2u for r in range(2))


def christoffel_contraction(gam: dict, h0: SymTensorField, e2u: Field) -> tuple[Field, Field]:
    """``g^{kl} Gamma^r_km h0_lr`` for ``m = 1, 2``; vanishes when ``h0`` is tracefree."""
    out = []
    for m in range(2):
        acc = None
        for k in range(2):
            for r in range(2):
                t = _gam(gam, r, k, m) * h0.entry(k, r)
                acc = t if acc is None else acc + t
        out.append(acc / e2u)
    return tuple(out)


def laplace_beltrami(H: Field, u: Field, route: str = "A", order: int = 2) -> Field:
    """Laplace-Beltrami of ``H`` for ``g = e^{2u} g_euc``.

    Route ``"A"``: ``g^{kl} d_k d_l H - g^{kl} Gamma^m_kl d_m H``.
    Route ``"B"``: ``4 e^{-2u} dzbar dz H``.
    """
    e2u = (2.0 * u).with_values(np.exp(2.0 * u.values))
    if route == "A":
        gam = christoffel(u, order)
        hx, hy = d1(H, 0, order), d1(H, 1, order)
        lap = d2(H, 0, order) + d2(H, 1, order)
        tr = christoffel_trace(gam, e2u)
        return lap / e2u - (tr[0] * hx + tr[1] * hy)
    if route == "B":
        return 4.0 * wirtinger_dzbar(wirtinger_dz(H, order), order).real / e2u
    raise ValueError(f"unknown route {route!r}")


def codazzi_residual(h0: SymTensorField, H: Field, u: Field, order: int = 2):
    """Residual of ``g^{kl} nabla_k h0_lm = dH_m / 2`` via covariant derivatives.

    Returns ``(residual, simplified)`` where ``residual`` has a trailing axis of
    length 2 (m = 1, 2) and ``simplified`` is ``g^{kl} d_k h0_lm`` computed
    without Christoffel terms.
    """
    e2u = u.with_values(np.exp(2.0 * u.values))
    gam = christoffel(u, order)
    dh = {(k, l, m): d1(h0.entry(l, m), k, order) for k in range(2) for l in range(2) for m in range(2)}
    dH = (d1(H, 0, order), d1(H, 1, order))
    res, simp = [], []
    for m in range(2):
        cov = None
        plain = None
        for k in range(2):
            c = dh[(k, k, m)]
            for r in range(2):
                c = c - _gam(gam, r, k, k) * h0.entry(r, m) - _gam(gam, r, k, m) * h0.entry(k, r)
            cov = c if cov is None else cov + c
            plain = dh[(k, k, m)] if plain is None else plain + dh[(k, k, m)]
        res.append(cov / e2u - 0.5 * dH[m])
        simp.append(plain / e2u)
    res = align(*res, *simp)
    stack = lambda fs: fs[0].with_values(np.stack([f.values for f in fs], axis=-1))
    return stack(res[:2]), stack(res[2:])


@dataclass(frozen=True, eq=False)
class GeometryBundle:
    """Co-registered invariants of a conformal chart (ambient-corrected)."""

    sampled: SampledChart
    ambient: AmbientSpace
    order: int
    g_euc: SymTensorField
    e2u: Field
    u: Field
    normal: Field
    h: SymTensorField
    H: Field
    h0: SymTensorField
    phi: Field
    A0_sq: Field

    @property
    def margin(self) -> int:
        return self.phi.margin

    @property
    def A_sq(self) -> Field:
        """``|A|_g^2 = |A0|_g^2 + H^2 / 2``."""
        return self.A0_sq + 0.5 * self.H**2

    @property
    def name(self) -> str:
        return self.sampled.chart.name if self.sampled.chart is not None else "chart"


def geometry_bundle(
    sampled: SampledChart, ambient: AmbientSpace | str | None = None, order: int = 2, check: bool = True
) -> GeometryBundle:
    if isinstance(ambient, str):
        ambient = AmbientSpace(ambient)
    ambient = ambient or _ambient_of(sampled)
    ambient.check(sampled.positions)
    g, e2u, u = first_fundamental(sampled, ambient, order, check)
    nu = unit_normal(sampled, order)
    h = second_fundamental(sampled, ambient, order)
    e2u, u, nu = align(e2u, u, nu)
    h = h.crop(e2u.margin)
    H = mean_curvature(h, e2u)
    h0 = tracefree(h, e2u, H)
    phi = hopf_phi(h0)
    return GeometryBundle(
        sampled=sampled,
        ambient=ambient,
        order=order,
        g_euc=g,
        e2u=e2u,
        u=u,
        normal=nu,
        h=h,
        H=H,
        h0=h0,
        phi=phi,
        A0_sq=tracefree_norm_sq(h0, e2u),
    )


# general (non-isothermal) charts -----------------------------------------------
@dataclass(frozen=True, eq=False)
class GeneralBundle:
    """Invariants with the full induced metric; Euclidean ambient only."""

    sampled: SampledChart
    order: int
    metric: np.ndarray  # (nx, ny, 2, 2)
    metric_inv: np.ndarray
    area_factor: Field  # sqrt(det g)
    normal: Field
    h: SymTensorField
    H: Field
    A0_sq: Field
    A_sq: Field
    christoffel: np.ndarray  # Gamma^k_ij as (nx, ny, k, i, j)

    @property
    def margin(self) -> int:
        return self.H.margin

    @property
    def name(self) -> str:
        return self.sampled.chart.name if self.sampled.chart is not None else "chart"


def general_bundle(sampled: SampledChart, order: int = 2) -> GeneralBundle:
    fx, fy, fxx, fxy, fyy = position_derivatives(sampled, order)
    nu = _normal_from(fx, fy)
    tang = np.stack([fx.values, fy.values], axis=-2)  # (.., 2, 3)
    G = np.einsum("...ik,...jk->...ij", tang, tang)
    det = G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] ** 2
    if np.any(det <= 0):
        raise ValueError("nonpositive metric determinant")
    Ginv = np.stack(
        [np.stack([G[..., 1, 1], -G[..., 0, 1]], -1), np.stack([-G[..., 1, 0], G[..., 0, 0]], -1)], -2
    ) / det[..., None, None]
    second = np.stack([np.stack([fxx.values, fxy.values], -2), np.stack([fxy.values, fyy.values], -2)], -3)
    hmat = np.einsum("...ijk,...k->...ij", second, nu.values)
    S = np.einsum("...ik,...kj->...ij", Ginv, hmat)  # shape operator
    H = np.trace(S, axis1=-2, axis2=-1)
    A_sq = np.einsum("...ij,...ji->...", S, S)
    first_kind = np.einsum("...ijk,...lk->...ijl", second, tang)  # Gamma_{ij,l}
    gamma = np.einsum("...kl,...ijl->...kij", Ginv, first_kind)
    Hf = fx.with_values(H)
    return GeneralBundle(
        sampled=sampled,
        order=order,
        metric=G,
        metric_inv=Ginv,
        area_factor=fx.with_values(np.sqrt(det)),
        normal=nu,
        h=SymTensorField(fx.with_values(hmat[..., 0, 0]), fx.with_values(hmat[..., 0, 1]), fx.with_values(hmat[..., 1, 1])),
        H=Hf,
        A0_sq=fx.with_values(A_sq - 0.5 * H**2),
        A_sq=fx.with_values(A_sq),
        christoffel=gamma,
    )


def _crop_array(arr: np.ndarray, periodic, have: int, want: int) -> np.ndarray:
    e = want - have
    if e == 0:
        return arr
    if not periodic[0]:
        arr = arr[e:-e]
    if not periodic[1]:
        arr = arr[:, e:-e]
    return arr


def laplace_beltrami_general(F: Field, bundle: GeneralBundle) -> Field:
    """``g^{ij} (d_i d_j F - Gamma^k_ij d_k F)`` with the bundle's full metric."""
    o = bundle.order
    Fx, Fy, Fxx, Fxy, Fyy = align(d1(F, 0, o), d1(F, 1, o), d2(F, 0, o), _symmetric_dxy(F, o), d2(F, 1, o))
    m = Fx.margin
    per = F.periodic
    Ginv = _crop_array(bundle.metric_inv, per, bundle.margin, m)
    gam = _crop_array(bundle.christoffel, per, bundle.margin, m)
    hess = np.stack([np.stack([Fxx.values, Fxy.values], -1), np.stack([Fxy.values, Fyy.values], -1)], -2)
    grad = np.stack([Fx.values, Fy.values], -1)
    corrected = hess - np.einsum("...kij,...k->...ij", gam, grad)
    return Fx.with_values(np.einsum("...ij,...ij->...", Ginv, corrected))


def conformal_wirtinger_pair(bundle: GeometryBundle, order: int | None = None):
    """``(dzbar phi, (e^{2u}/2) dz H)``, the two sides of the Hopf identity."""
    o = order or bundle.order
    lhs = wirtinger_dzbar(bundle.phi, o)
    rhs = 0.5 * bundle.e2u * wirtinger_dz(bundle.H, o)
    return align(lhs, rhs)

