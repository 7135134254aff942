"""Extraction and classification of the umbilic set ``[phi = 0]``.

The zero set is approximated by sublevel sets ``|phi| <= eps`` and each
connected component is sorted into one of three kinds:

* ``isolated``: a point zero with a vanishing order read off as a winding number,
* ``curve``: a one-dimensional piece of zero set, certified by a nonvanishing
  derivative of ``phi`` along its skeleton,
* ``unresolved``: anything the resolution cannot settle; never dropped.

Curves and points are told apart by shrinking the threshold: a curve keeps its
length while its width halves, a point zero shrinks in every direction.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from skimage.morphology import skeletonize

from .fields import Field, align, grid_field, wirtinger_dz, wirtinger_dzbar


class UmbilicError(ValueError):
    pass


class LoopError(UmbilicError):
    """A winding loop touched the zero set or was too coarse to follow."""


class NoAdmissibleLoop(UmbilicError):
    """No loop around the candidate avoids the zero set at this resolution."""


@dataclass(frozen=True)
class ClassifyConfig:
    eps_rel: float = 0.02
    shrink_factor: float = 2.0
    tau: float = 0.1
    umbilic_floor: float = 1e-3
    totally_umbilic_fraction: float = 0.99
    isolated_diameter_cells: float = 6.0
    elongation: float = 4.0
    curve_length_ratio: float = 0.85
    curve_width_ratio: float = 0.75
    max_upsample: int = 32

    def __post_init__(self):
        if not 0 < self.eps_rel < 1:
            raise ValueError("eps_rel must lie in (0, 1)")
        if self.shrink_factor <= 1:
            raise ValueError("shrink_factor must exceed 1")


@dataclass(frozen=True, eq=False)
class CellComponent:
    cells: np.ndarray  # (k, 2) integer grid indices into the field
    truncated: bool


@dataclass(eq=False)
class UmbilicComponent:
    kind: str
    bbox: tuple[float, float, float, float]
    cells: int
    truncated: bool = False
    point: tuple[float, float] | None = None
    order: int | None = None
    winding: int | None = None
    vertices: np.ndarray | None = None
    closed: bool = False
    width: float | None = None
    reason: str = ""
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "bbox": [float(v) for v in self.bbox],
            "cells": int(self.cells),
            "truncated": bool(self.truncated),
        }
        if self.kind == "isolated":
            d["point"] = [float(v) for v in self.point]
            d["order"] = int(self.order)
            d["winding"] = int(self.winding)
        elif self.kind == "curve":
            d["vertices"] = [[float(a), float(b)] for a, b in self.vertices]
            d["closed"] = bool(self.closed)
            d["width"] = float(self.width)
        else:
            d["reason"] = self.reason
        if self.diagnostics:
            d["diagnostics"] = {k: _jsonable(v) for k, v in self.diagnostics.items()}
        return d


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass(eq=False)
class UmbilicReport:
    components: list
    eps: float
    eps_rel: float
    n: int
    flagged_fraction: float
    totally_umbilic: bool

    def of_kind(self, kind: str) -> list:
        return [c for c in self.components if c.kind == kind]

    def to_dict(self) -> dict:
        return {
            "eps": float(self.eps),
            "eps_rel": float(self.eps_rel),
            "n": int(self.n),
            "flagged_fraction": float(self.flagged_fraction),
            "totally_umbilic": bool(self.totally_umbilic),
            "components": [c.to_dict() for c in self.components],
        }


# sampling helpers ---------------------------------------------------------
def _coords_to_index(f: Field, pts: np.ndarray) -> np.ndarray:
    ix = (pts[:, 0] - f.x[0]) / f.spacing[0]
    iy = (pts[:, 1] - f.y[0]) / f.spacing[1]
    return np.stack([ix, iy])


def _inside(f: Field, pts: np.ndarray) -> bool:
    idx = _coords_to_index(f, pts)
    tol = 1e-9
    return bool(
        np.all(idx[0] >= -tol) and np.all(idx[0] <= len(f.x) - 1 + tol)
        and np.all(idx[1] >= -tol) and np.all(idx[1] <= len(f.y) - 1 + tol)
    )


def interpolate(f: Field, pts: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a scalar (real or complex) field at chart points."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if not _inside(f, pts):
        raise UmbilicError("sample points leave the field's valid interior")
    idx = _coords_to_index(f, pts)
    re = ndimage.map_coordinates(np.real(f.values), idx, order=1, mode="nearest")
    if not f.is_complex:
        return re
    im = ndimage.map_coordinates(np.imag(f.values), idx, order=1, mode="nearest")
    return re + 1j * im


def _h(f: Field) -> float:
    return max(f.spacing)


def sublevel_threshold(phi: Field, eps_rel: float) -> float:
    """``eps_rel * RMS|phi|`` over the valid interior."""
    return eps_rel * phi.rms()


def sublevel_components(phi: Field, eps_rel: float = 0.02, eps: float | None = None, floor=None) -> list[CellComponent]:
    """4-connected components of ``{|phi| <= eps}``.

    ``floor`` optionally supplies a pointwise absolute threshold (same grid as
    ``phi``) that is used where it exceeds ``eps``.
    """
    if not 0 < eps_rel < 1:
        raise ValueError("eps_rel must lie in (0, 1)")
    if eps is None:
        eps = sublevel_threshold(phi, eps_rel)
    mask = _flag_mask(phi, eps, floor)
    return _label(mask, phi.periodic)


def _flag_mask(phi: Field, eps: float, floor) -> np.ndarray:
    thr = eps if floor is None else np.maximum(eps, floor)
    return np.abs(phi.values) <= thr


def _sign_change_mask(phi: Field) -> np.ndarray:
    """Corners of grid cells on which both Re and Im change sign.

    Catches zeros that sit between nodes where ``|phi|`` never drops below eps.
    """
    out = np.zeros(phi.shape, bool)
    if phi.shape[0] < 2 or phi.shape[1] < 2:
        return out
    both = None
    for part in (np.real(phi.values), np.imag(phi.values)):
        corners = np.stack([part[:-1, :-1], part[1:, :-1], part[:-1, 1:], part[1:, 1:]])
        cross = (corners.min(0) <= 0) & (corners.max(0) >= 0)
        both = cross if both is None else both & cross
    for di in (0, 1):
        for dj in (0, 1):
            out[di : di + both.shape[0], dj : dj + both.shape[1]] |= both
    return out


def _label(mask: np.ndarray, periodic) -> list[CellComponent]:
    labels, count = ndimage.label(mask)
    nx, ny = mask.shape
    out = []
    for obj in range(1, count + 1):
        cells = np.argwhere(labels == obj)
        trunc = (not periodic[0] and (cells[:, 0].min() == 0 or cells[:, 0].max() == nx - 1)) or (
            not periodic[1] and (cells[:, 1].min() == 0 or cells[:, 1].max() == ny - 1)
        )
        out.append(CellComponent(cells, bool(trunc)))
    return out


# winding numbers -------------------------------------------------------------
def winding_number(phi: Field, center, radius: float, eps: float | None = None, eps_rel: float = 0.02) -> int:
    """Total turning of ``arg phi`` along a circle, in units of ``2 pi``."""
    if eps is None:
        eps = sublevel_threshold(phi, eps_rel)
    cx, cy = center
    k = max(64, int(math.ceil(8 * 2 * math.pi * radius / min(phi.spacing))))
    t = 2 * math.pi * np.arange(k) / k
    pts = np.stack([cx + radius * np.cos(t), cy + radius * np.sin(t)], axis=1)
    if not _inside(phi, pts):
        raise LoopError("loop leaves the field's valid interior")
    vals = interpolate(phi, pts)
    if np.min(np.abs(vals)) <= 3 * eps:
        raise LoopError("loop touches the zero set")
    inc = np.angle(np.roll(vals, -1) / vals)
    if np.max(np.abs(inc)) > math.pi / 2:
        raise LoopError("loop under-resolved")
    return int(round(float(np.sum(inc)) / (2 * math.pi)))


def loop_radii(phi: Field, center) -> list[float]:
    """``4h * sqrt(2)^k`` up to the largest circle that fits in the field."""
    h = _h(phi)
    cx, cy = center
    room = min(cx - phi.x[0], phi.x[-1] - cx, cy - phi.y[0], phi.y[-1] - cy)
    radii = []
    r = 4 * h
    while r <= room - 1e-12:
        radii.append(r)
        r *= math.sqrt(2.0)
    return radii


def vanishing_order(phi: Field, point, eps: float | None = None, eps_rel: float = 0.02) -> int:
    """Signed winding number of ``phi`` about ``point``.

    Uses the smallest pair of consecutive admissible radii that agree. The
    vanishing order is the absolute value.
    """
    if eps is None:
        eps = sublevel_threshold(phi, eps_rel)
    prev = None
    for r in loop_radii(phi, point):
        try:
            w = winding_number(phi, point, r, eps)
        except LoopError:
            prev = None
            continue
        if prev is not None and prev == w:
            return w
        prev = w
    raise NoAdmissibleLoop(f"no admissible loop pair around {tuple(float(v) for v in point)}")


# desingularisation -------------------------------------------------------------
def factor_out(phi: Field, point, m: int, window: int = 16) -> Field:
    """``psi = phi / (z - z0)^m`` on a window of ``window`` cells around ``point``.

    Raises :class:`UmbilicError` when ``|psi|`` still tends to 0 or infinity
    toward the centre, i.e. ``m`` does not match the zero.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    i0 = int(round((point[0] - phi.x[0]) / phi.spacing[0]))
    j0 = int(round((point[1] - phi.y[0]) / phi.spacing[1]))
    ia, ib = max(0, i0 - window), min(len(phi.x), i0 + window + 1)
    ja, jb = max(0, j0 - window), min(len(phi.y), j0 + window + 1)
    x, y = phi.x[ia:ib], phi.y[ja:jb]
    X, Y = np.meshgrid(x, y, indexing="ij")
    dz = (X - point[0]) + 1j * (Y - point[1])
    h = _h(phi)
    near = np.abs(dz) < h
    with np.errstate(divide="ignore", invalid="ignore"):
        psi = phi.values[ia:ib, ja:jb] / dz**m
    psi[near] = np.nan
    filled = psi.copy()
    for i, j in np.argwhere(near):
        nb = psi[max(0, i - 1) : i + 2, max(0, j - 1) : j + 2]
        nb = nb[~np.isnan(nb)]
        filled[i, j] = nb.mean() if nb.size else 0.0
    dist = np.abs(dz)
    inner = np.abs(filled[(dist >= 2 * h) & (dist <= 3 * h)])
    outer_r = min(window, i0 - ia, ib - 1 - i0, j0 - ja, jb - 1 - j0) * h
    outer = np.abs(filled[(dist >= outer_r - h) & (dist <= outer_r)])
    if inner.size and outer.size:
        ratio = inner.mean() / outer.mean()
        if not 0.5 <= ratio <= 2.0:
            raise UmbilicError(f"order m={m} inconsistent: |psi| inner/outer ratio {ratio:.3g}")
    return Field(filled, x, y, phi.spacing, phi.margin, (False, False))


# transversality -------------------------------------------------------------
def _gradients(f: Field) -> tuple[Field, Field, Field, Field]:
    hx, hy = f.spacing
    re, im = np.real(f.values), np.imag(f.values)
    return tuple(
        f.with_values(g)
        for g in (
            np.gradient(re, hx, axis=0),
            np.gradient(re, hy, axis=1),
            np.gradient(im, hx, axis=0),
            np.gradient(im, hy, axis=1),
        )
    )


def transversality_check(psi: Field, along: np.ndarray, tau: float = 0.1, rms: float | None = None, scale: float | None = None) -> np.ndarray:
    """Per-vertex test ``max(|grad Re psi|, |grad Im psi|) > tau * RMS|psi| / scale``.

    ``scale`` defaults to the larger side of ``psi``'s domain.
    """
    along = np.atleast_2d(np.asarray(along, dtype=float))
    if not _inside(psi, along):
        raise UmbilicError("polyline leaves psi's valid window")
    rms = psi.rms() if rms is None else rms
    if scale is None:
        scale = max(psi.x[-1] - psi.x[0], psi.y[-1] - psi.y[0])
    rx, ry, ix, iy = (interpolate(g, along) for g in _gradients(psi))
    strength = np.maximum(np.hypot(rx, ry), np.hypot(ix, iy))
    return strength > tau * rms / scale


# skeleton -------------------------------------------------------------------
_NEIGHBOURS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def _skeleton_path(mask: np.ndarray) -> tuple[list[tuple[int, int]], bool]:
    skel = skeletonize(mask)
    pix = {tuple(p) for p in np.argwhere(skel)}
    if not pix:
        pix = {tuple(p) for p in np.argwhere(mask)}

    def nbrs(p):
        return [(p[0] + a, p[1] + b) for a, b in _NEIGHBOURS if (p[0] + a, p[1] + b) in pix]

    def bfs(src):
        prev = {src: None}
        q = deque([src])
        last = src
        while q:
            last = q.popleft()
            for nb in nbrs(last):
                if nb not in prev:
                    prev[nb] = last
                    q.append(nb)
        return last, prev

    start = min(pix)
    ends = [p for p in sorted(pix) if len(nbrs(p)) == 1]
    if not ends and len(pix) > 2:
        # closed loop: walk it once
        path, seen = [start], {start}
        while True:
            nxt = [q for q in nbrs(path[-1]) if q not in seen]
            if not nxt:
                break
            path.append(min(nxt))
            seen.add(path[-1])
        return path, True
    a, _ = bfs(ends[0] if ends else start)
    b, prev = bfs(a)
    path = [b]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path, False


def _newton_to_zero(phi: Field, pts: np.ndarray) -> np.ndarray:
    """One minimal-norm Newton step of ``phi`` per point, capped at one cell."""
    rx, ry, ix, iy = _gradients(phi)
    h = _h(phi)
    out = pts.copy()
    vals = interpolate(phi, pts)
    J = np.stack(
        [np.stack([interpolate(rx, pts), interpolate(ry, pts)], -1), np.stack([interpolate(ix, pts), interpolate(iy, pts)], -1)],
        -2,
    )
    for k in range(len(pts)):
        step = -np.linalg.pinv(J[k], rcond=1e-6) @ np.array([vals[k].real, vals[k].imag])
        if np.linalg.norm(step) <= h:
            # clip into the domain so edge vertices still get their normal correction
            cand = pts[k] + step
            cand = np.array([np.clip(cand[0], phi.x[0], phi.x[-1]), np.clip(cand[1], phi.y[0], phi.y[-1])])
            if abs(interpolate(phi, cand[None])[0]) <= abs(vals[k]):
                out[k] = cand
    return out


# shape measures -------------------------------------------------------------
def _extent(points: np.ndarray, cell: float) -> tuple[float, float]:
    """Length along the principal axis and mean width (area / length)."""
    if len(points) == 0:
        return 0.0, 0.0
    if len(points) == 1:
        return cell, cell
    c = points - points.mean(axis=0)
    _, vecs = np.linalg.eigh(c.T @ c)
    proj = c @ vecs[:, -1]
    length = float(np.ptp(proj)) + cell
    width = len(points) * cell * cell / length
    return length, width


def _two_scale(phi: Field, comp: CellComponent, eps: float, cfg: ClassifyConfig, floor) -> dict:
    """Length/width of the component at ``eps`` and ``eps / shrink`` on a refined window."""
    nx, ny = phi.shape
    h = _h(phi)
    i, j = comp.cells[:, 0], comp.cells[:, 1]
    ia, ib = max(0, i.min() - 2), min(nx - 1, i.max() + 2)
    ja, jb = max(0, j.min() - 2), min(ny - 1, j.max() + 2)

    sub = phi.values[ia : ib + 1, ja : jb + 1]
    gx = np.gradient(sub, phi.spacing[0], axis=0) if sub.shape[0] > 1 else np.zeros_like(sub)
    gy = np.gradient(sub, phi.spacing[1], axis=1) if sub.shape[1] > 1 else np.zeros_like(sub)
    grad = np.sqrt(np.abs(gx) ** 2 + np.abs(gy) ** 2)[i - ia, j - ja]
    grad = float(np.median(grad)) if grad.size else 0.0
    width_est = 2 * eps / grad if grad > 0 else h
    k = int(np.clip(math.ceil(8 * h / max(width_est, 1e-300)), 4, cfg.max_upsample))
    while k > 2 and ((ib - ia) * k + 1) * ((jb - ja) * k + 1) > 4_000_000:
        k //= 2

    fx = np.linspace(phi.x[ia], phi.x[ib], (ib - ia) * k + 1)
    fy = np.linspace(phi.y[ja], phi.y[jb], (jb - ja) * k + 1)
    FX, FY = np.meshgrid(fx, fy, indexing="ij")
    pts = np.stack([FX.ravel(), FY.ravel()], 1)
    fine = np.abs(interpolate(phi, pts)).reshape(FX.shape)
    if floor is not None:
        fl = interpolate(floor, pts).reshape(FX.shape)
    else:
        fl = 0.0

    own = np.zeros((nx, ny), bool)
    own[i, j] = True
    own = ndimage.binary_dilation(own, iterations=1)
    ci = np.clip(np.rint((FX - phi.x[0]) / phi.spacing[0]).astype(int), 0, nx - 1)
    cj = np.clip(np.rint((FY - phi.y[0]) / phi.spacing[1]).astype(int), 0, ny - 1)
    own_fine = own[ci, cj]

    hf = h / k
    out = {"upsample": k}
    for tag, e in (("full", eps), ("half", eps / cfg.shrink_factor)):
        m = (fine <= np.maximum(e, fl / (1.0 if tag == "full" else cfg.shrink_factor))) & own_fine
        L, W = _extent(np.stack([FX[m], FY[m]], 1), hf)
        out[f"length_{tag}"], out[f"width_{tag}"] = L, W
    Lf, Wf = out["length_full"], out["width_full"]
    out["aspect"] = Lf / Wf if Wf > 0 else math.inf
    out["length_ratio"] = out["length_half"] / Lf if Lf > 0 else 0.0
    out["width_ratio"] = out["width_half"] / Wf if Wf > 0 else 0.0
    return out


# classification -------------------------------------------------------------
def _bbox(phi: Field, cells: np.ndarray) -> tuple[float, float, float, float]:
    xs, ys = phi.x[cells[:, 0]], phi.y[cells[:, 1]]
    return (float(xs.min()), float(ys.min()), float(xs.max()), float(ys.max()))


def _try_isolated(phi, comp, base, eps, cfg) -> UmbilicComponent | None:
    vals = np.abs(phi.values[comp.cells[:, 0], comp.cells[:, 1]])
    ci, cj = comp.cells[int(np.argmin(vals))]
    p = np.array([phi.x[ci], phi.y[cj]])
    try:
        w = vanishing_order(phi, p, eps)
    except NoAdmissibleLoop:
        return None
    if w == 0:
        return UmbilicComponent(kind="unresolved", reason="no zero enclosed (winding 0)", **base)
    if abs(w) == 1:
        p = _newton_to_zero(phi, p[None])[0]
    return UmbilicComponent(kind="isolated", point=(float(p[0]), float(p[1])), order=abs(w), winding=w, **base)


def _try_curve(phi, comp, base, shape, cfg, coupling) -> UmbilicComponent:
    nx, ny = phi.shape
    mask = np.zeros((nx, ny), bool)
    mask[comp.cells[:, 0], comp.cells[:, 1]] = True
    path, closed = _skeleton_path(mask)
    idx = np.array(path)
    verts = np.stack([phi.x[idx[:, 0]], phi.y[idx[:, 1]]], 1)
    verts = _newton_to_zero(phi, verts)
    scale = max(phi.x[-1] - phi.x[0], phi.y[-1] - phi.y[0])
    rms = phi.rms()
    ok = transversality_check(phi, verts, cfg.tau, rms, scale)
    diag = dict(shape)
    diag["transversal_fraction"] = float(np.mean(ok))
    if coupling is not None:
        dzbar_phi, rhs = coupling
        a = interpolate(dzbar_phi, verts) if _inside(dzbar_phi, verts) else None
        b = interpolate(rhs, verts) if _inside(rhs, verts) else None
        if a is not None and b is not None:
            diag["coupling_mismatch"] = float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
            diag["coupling_min_abs"] = float(np.min(np.abs(b)))
            # a nonzero (e^{2u}/2) dz H forces a nonzero derivative of phi
            ok = ok | (np.abs(b) > cfg.tau * rms / scale)
    if not np.all(ok):
        return UmbilicComponent(
            kind="unresolved",
            reason=f"transversality fails at {int(np.sum(~ok))} of {len(ok)} skeleton vertices",
            diagnostics=diag,
            **{k: v for k, v in base.items() if k != "diagnostics"},
        )
    return UmbilicComponent(
        kind="curve",
        vertices=verts,
        closed=closed,
        width=shape["width_full"],
        diagnostics=diag,
        **{k: v for k, v in base.items() if k != "diagnostics"},
    )


def _classify_component(phi, comp, eps, cfg, floor, coupling) -> UmbilicComponent:
    cells = comp.cells
    ext = np.array([np.ptp(phi.x[cells[:, 0]]), np.ptp(phi.y[cells[:, 1]])])
    base = dict(bbox=_bbox(phi, cells), cells=len(cells), truncated=comp.truncated)
    if float(np.hypot(*ext)) <= cfg.isolated_diameter_cells * _h(phi):
        res = _try_isolated(phi, comp, base, eps, cfg)
        return res or UmbilicComponent(kind="unresolved", reason="small component without admissible loop", **base)
    shape = _two_scale(phi, comp, eps, cfg, floor)
    elongated = shape["aspect"] >= cfg.elongation
    curve_like = shape["length_ratio"] >= cfg.curve_length_ratio and shape["width_ratio"] <= cfg.curve_width_ratio
    if elongated and curve_like:
        return _try_curve(phi, comp, {**base, "diagnostics": shape}, shape, cfg, coupling)
    res = _try_isolated(phi, comp, base, eps, cfg)
    if res is not None:
        res.diagnostics.update(shape)
        return res
    return UmbilicComponent(
        kind="unresolved",
        reason="neither a shrinking point nor a persistent curve at this resolution",
        diagnostics=shape,
        **base,
    )


def classify(source, config: ClassifyConfig | None = None, dzH: Field | None = None, e2u: Field | None = None) -> UmbilicReport:
    """Decompose the near-zero set of ``phi`` into curves and isolated points.

    ``source`` is either a :class:`~willmore_umbilic.geometry.GeometryBundle`
    or a complex :class:`Field`. For bundles, ``dz H`` and ``e^{2u}`` are taken
    from the bundle and used to cross-check curve points; a pointwise
    umbilicity floor ``umbilic_floor * e^{2u} |A|_g / sqrt(2)`` (relative
    tracefree curvature) is added to the threshold.
    """
    cfg = config or ClassifyConfig()
    floor = None
    coupling = None
    if isinstance(source, Field):
        phi = source
        n = max(phi.shape) + 2 * phi.margin
        if dzH is not None and e2u is not None:
            rhs = 0.5 * e2u * dzH
            coupling = align(wirtinger_dzbar(phi), rhs)
    else:
        bundle = source
        dzH_f = wirtinger_dz(bundle.H, bundle.order)
        rhs = 0.5 * bundle.e2u * dzH_f
        dzbar_phi = wirtinger_dzbar(bundle.phi, bundle.order)
        coupling = align(dzbar_phi, rhs)
        phi = bundle.phi
        ref = bundle.e2u * bundle.A_sq.with_values(np.sqrt(bundle.A_sq.values)) / math.sqrt(2.0)
        floor = cfg.umbilic_floor * ref.crop(phi.margin)
        n = bundle.sampled.n

    eps = sublevel_threshold(phi, cfg.eps_rel)
    floor_vals = None if floor is None else floor.values
    mask = _flag_mask(phi, eps, floor_vals)
    fraction = float(np.mean(mask))
    if eps == 0.0 or fraction > cfg.totally_umbilic_fraction:
        return UmbilicReport([], eps, cfg.eps_rel, n, fraction if eps > 0 else 1.0, True)

    comps = _label(mask | _sign_change_mask(phi), phi.periodic)
    out = []
    for comp in comps:
        res = _classify_component(phi, comp, eps, cfg, floor, coupling)
        # sign-change-only candidates must certify themselves or are discarded
        candidate_only = not np.any(mask[comp.cells[:, 0], comp.cells[:, 1]])
        if candidate_only and res.kind == "unresolved":
            continue
        out.append(res)
    out.sort(key=lambda c: c.bbox)
    return UmbilicReport(out, eps, cfg.eps_rel, n, fraction, False)


def classify_bundle(bundle, config: ClassifyConfig | None = None) -> UmbilicReport:
    return classify(bundle, config)
