"""Willmore energy and an explicit gradient-descent flow on sampled charts.

The flow works on the general (full-metric) bundle because a deformed chart is
no longer isothermal. A ring of ``RING`` grid layers on each non-periodic side
is held fixed.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .chart import ConformalChart, SampledChart, catalog_chart, sample
from .fields import Field, align
from .geometry import GeneralBundle, GeometryBundle, general_bundle, laplace_beltrami_general
from .residual import willmore_residual

RING = 2
TAPER = 8  # cells over which the velocity is blended to zero next to the ring
# dE/dt along a normal variation w*nu equals GRADIENT_CONSTANT * <-V, w>_{L2(dmu)}
GRADIENT_CONSTANT = 0.5


class FlowError(RuntimeError):
    pass


# energy ---------------------------------------------------------------------
@dataclass(frozen=True)
class Disk:
    """Chart-coordinate disk used to restrict the energy integral."""

    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")


@dataclass(frozen=True)
class EnergyResult:
    value: float
    excluded_fraction: float


def _density(bundle) -> Field:
    mu = bundle.e2u if isinstance(bundle, GeometryBundle) else bundle.area_factor
    H, mu = align(bundle.H, mu)
    return 0.25 * H**2 * mu


def willmore_energy(bundle: GeometryBundle | GeneralBundle, region: Disk | None = None, quad_points: int | None = None) -> EnergyResult:
    """``1/4 int H^2 dmu`` over the valid interior or over a chart disk.

    Without a region the node sum ``sum H^2 mu hx hy`` is used; on periodic axes
    this is the spectrally accurate periodic trapezoid rule. With a
    :class:`Disk`, the density is spline-interpolated onto polar Gauss nodes
    so the curved boundary carries no staircase error.
    """
    dens = _density(bundle)
    if dens.values.size == 0:
        raise FlowError("empty interior")
    s = bundle.sampled
    full_x = s.x[-1] - s.x[0] + (s.spacing[0] if s.periodic[0] else 0.0)
    full_y = s.y[-1] - s.y[0] + (s.spacing[1] if s.periodic[1] else 0.0)
    if region is None:
        nx, ny = dens.shape
        covered_x = nx * s.spacing[0] if s.periodic[0] else (nx - 1) * s.spacing[0]
        covered_y = ny * s.spacing[1] if s.periodic[1] else (ny - 1) * s.spacing[1]
        w = np.ones(dens.shape)
        # trapezoid end weights on open axes
        if not s.periodic[0]:
            w[[0, -1], :] *= 0.5
        if not s.periodic[1]:
            w[:, [0, -1]] *= 0.5
        value = float(np.sum(dens.values * w) * dens.cell_area)
        excluded = 1.0 - covered_x * covered_y / (full_x * full_y)
        return EnergyResult(value, max(0.0, excluded))

    cx, cy = region.center
    R = region.radius
    if (cx - R < dens.x[0] or cx + R > dens.x[-1] or cy - R < dens.y[0] or cy + R > dens.y[-1]):
        raise FlowError("disk leaves the valid interior")
    nq = quad_points or 2 * max(dens.shape)
    r_nodes, r_w = np.polynomial.legendre.leggauss(nq)
    r = 0.5 * R * (r_nodes + 1)
    r_w = 0.5 * R * r_w
    nt = 2 * nq
    t = 2 * math.pi * np.arange(nt) / nt
    RR, TT = np.meshgrid(r, t, indexing="ij")
    ix = (cx + RR * np.cos(TT) - dens.x[0]) / dens.spacing[0]
    iy = (cy + RR * np.sin(TT) - dens.y[0]) / dens.spacing[1]
    vals = ndimage.map_coordinates(dens.values, [ix.ravel(), iy.ravel()], order=3, mode="nearest").reshape(RR.shape)
    value = float(np.sum(vals * RR * r_w[:, None]) * (2 * math.pi / nt))
    return EnergyResult(value, 0.0)


def energy_of_positions(sampled: SampledChart, order: int = 2) -> float:
    return willmore_energy(general_bundle(sampled, order)).value


# velocity -------------------------------------------------------------------
def normal_velocity(bundle: GeneralBundle) -> Field:
    """``V = -(Delta_g H + |A0|_g^2 H)``, valid at margin ``2r``."""
    lap = laplace_beltrami_general(bundle.H, bundle)
    return -(lap + bundle.A0_sq * bundle.H)


def _min_physical_spacing(bundle: GeneralBundle) -> float:
    lam = np.linalg.eigvalsh(bundle.metric)[..., 0]
    return float(min(bundle.sampled.spacing) * np.sqrt(np.min(lam)))


def stable_step(bundle: GeneralBundle) -> float:
    """Explicit-Euler limit ``h^4 / 32`` for a fourth-order operator."""
    return _min_physical_spacing(bundle) ** 4 / 32.0


# flow -----------------------------------------------------------------------
@dataclass(frozen=True)
class FlowConfig:
    initial_step: float | None = None  # None: stable_step of the initial surface
    backtrack: float = 0.5
    max_backtracks: int = 30
    growth: float = 1.0
    stop_tol: float = 0.0
    residual_tol: float = 1e-2
    max_steps: int = 200
    order: int = 2

    def __post_init__(self):
        if self.initial_step is not None and not self.initial_step > 0:
            raise ValueError("step size must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.growth < 1:
            raise ValueError("growth factor must be at least 1")
        if self.max_backtracks < 0 or self.max_steps < 0:
            raise ValueError("counts must be nonnegative")


@dataclass(frozen=True, eq=False)
class FlowState:
    sampled: SampledChart
    ring: np.ndarray  # boolean mask of fixed nodes
    step: int
    energy: float
    residual: float
    tau: float

    @property
    def positions(self) -> np.ndarray:
        return self.sampled.positions


@dataclass(frozen=True)
class TraceRecord:
    step: int
    energy: float
    residual_sup: float
    step_size: float


@dataclass
class EnergyTrace:
    records: list = field(default_factory=list)
    status: str = "running"  # running | converged | stalled | max_steps

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual_sup for r in self.records])

    def is_monotone(self) -> bool:
        e = self.energies
        return bool(np.all(np.diff(e) <= 0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "energy", "residual_sup", "step_size"])
        for r in self.records:
            w.writerow([r.step, repr(r.energy), repr(r.residual_sup), repr(r.step_size)])
        return buf.getvalue()


def ring_mask(sampled: SampledChart, layers: int = RING) -> np.ndarray:
    nx, ny = sampled.positions.shape[:2]
    m = np.zeros((nx, ny), bool)
    if not sampled.periodic[0]:
        m[:layers] = m[-layers:] = True
    if not sampled.periodic[1]:
        m[:, :layers] = m[:, -layers:] = True
    return m


def _evaluate(sampled: SampledChart, order: int):
    b = general_bundle(sampled, order)
    return b, willmore_energy(b).value, willmore_residual(b).sup_normalized


def _embed(sampled: SampledChart, f: Field) -> np.ndarray:
    """Place an interior field back on the full grid, zero elsewhere."""
    nx, ny = sampled.positions.shape[:2]
    out = np.zeros((nx, ny) + f.values.shape[2:])
    m = f.margin
    sx = slice(None) if sampled.periodic[0] else slice(m, nx - m)
    sy = slice(None) if sampled.periodic[1] else slice(m, ny - m)
    out[sx, sy] = f.values
    return out


def taper_weights(sampled: SampledChart, layers: int = RING, taper: int = TAPER) -> np.ndarray:
    """0 on the ring, smoothstep up to 1 over ``taper`` further cells.

    Without it the velocity jumps to zero at the ring and the boundary term of
    the first variation can outweigh the interior descent.
    """
    nx, ny = sampled.positions.shape[:2]
    w = np.ones((nx, ny))
    for axis, (m, per) in enumerate(zip((nx, ny), sampled.periodic)):
        if per:
            continue
        i = np.arange(m, dtype=float)
        d = np.minimum(i, m - 1 - i) - (layers - 1)
        t = np.clip(d / (taper + 1), 0, 1)
        s = t**3 * (10 - 15 * t + 6 * t * t)
        w *= s[:, None] if axis == 0 else s[None, :]
    return w


def local_mobility(bundle: GeneralBundle) -> Field:
    """``(h_local / h_min)^4``: scales the step up to each node's own stability limit.

    A positive diagonal weight, so ``mobility * V`` stays a descent direction.
    """
    lam = np.linalg.eigvalsh(bundle.metric)[..., 0]
    h = np.sqrt(lam)
    return bundle.area_factor.with_values((h / np.min(h)) ** 4)


def displacement_field(sampled: SampledChart, order: int = 2) -> tuple[np.ndarray, GeneralBundle]:
    """Tapered ``mobility * V nu`` on the full grid, zero on the fixed ring."""
    b = general_bundle(sampled, order)
    V = normal_velocity(b)
    mob, nu = align(local_mobility(b), b.normal)
    mob, nu = mob.crop(V.margin), nu.crop(V.margin)
    disp = _embed(sampled, V.with_values((mob.values * V.values)[..., None] * nu.values))
    disp *= taper_weights(sampled, max(RING, V.margin))[..., None]
    return disp, b


def init_state(sampled: SampledChart, config: FlowConfig | None = None) -> FlowState:
    cfg = config or FlowConfig()
    b, E, res = _evaluate(sampled, cfg.order)
    if not math.isfinite(E):
        raise FlowError("initial energy is not finite")
    tau = cfg.initial_step if cfg.initial_step is not None else stable_step(b)
    return FlowState(sampled, ring_mask(sampled), 0, E, res, tau)


def flow_step(state: FlowState, config: FlowConfig | None = None, tau: float | None = None) -> tuple[FlowState, TraceRecord | None]:
    """One explicit descent step with backtracking.

    Returns ``(new_state, record)``; ``record`` is ``None`` when no trial step
    lowered the energy (stall). ``tau`` overrides the trial step; ``tau = 0``
    returns the state unchanged.
    """
    cfg = config or FlowConfig()
    if tau is not None and tau == 0.0:
        return state, TraceRecord(state.step, state.energy, state.residual, 0.0)
    disp, _ = displacement_field(state.sampled, cfg.order)
    trial = state.tau * cfg.growth if tau is None else tau
    for _ in range(cfg.max_backtracks + 1):
        pos = state.positions + trial * disp
        pos[state.ring] = state.positions[state.ring]
        cand = state.sampled.with_positions(pos)
        try:
            _, E, res = _evaluate(cand, cfg.order)
        except ValueError:  # degenerate metric
            E = math.inf
        if math.isfinite(E) and E < state.energy:
            new = FlowState(cand, state.ring, state.step + 1, E, res, trial)
            return new, TraceRecord(new.step, E, res, trial)
        trial *= cfg.backtrack
    return state, None


def run_flow(chart: ConformalChart | SampledChart | str, config: FlowConfig | None = None, n: int = 48) -> tuple[EnergyTrace, FlowState]:
    cfg = config or FlowConfig()
    if isinstance(chart, str):
        chart = catalog_chart(chart)
    sampled = chart if isinstance(chart, SampledChart) else sample(chart, n)
    state = init_state(sampled, cfg)
    trace = EnergyTrace([TraceRecord(0, state.energy, state.residual, 0.0)])
    if state.residual <= cfg.residual_tol:
        trace.status = "converged"
        return trace, state
    for _ in range(cfg.max_steps):
        new, rec = flow_step(state, cfg)
        if rec is None:
            trace.status = "stalled"
            return trace, state
        trace.records.append(rec)
        rel_drop = (state.energy - new.energy) / max(abs(state.energy), 1e-300)
        state = new
        if state.residual <= cfg.residual_tol or rel_drop < cfg.stop_tol:
            trace.status = "converged"
            return trace, state
    trace.status = "max_steps"
    return trace, state


# gradient calibration -------------------------------------------------------------
def smooth_perturbation(sampled: SampledChart, seed: int, modes: int = 3, inset: float = 0.2) -> np.ndarray:
    """Random low-frequency scalar field vanishing within ``inset`` of each open edge."""
    rng = np.random.default_rng(seed)
    X, Y = np.meshgrid(sampled.x, sampled.y, indexing="ij")
    sx = (X - sampled.x[0]) / (sampled.x[-1] - sampled.x[0])
    sy = (Y - sampled.y[0]) / (sampled.y[-1] - sampled.y[0])
    w = np.zeros_like(X)
    for a in range(1, modes + 1):
        for b in range(1, modes + 1):
            w += rng.standard_normal() * np.sin(a * math.pi * sx) * np.sin(b * math.pi * sy) / (a * b)
    window = np.ones_like(X)
    for s, per in ((sx, sampled.periodic[0]), (sy, sampled.periodic[1])):
        if not per:
            t = np.clip((np.minimum(s, 1 - s) - inset) / inset, 0, 1)
            window *= t**3 * (10 - 15 * t + 6 * t * t)  # smoothstep
    return w * window


@dataclass(frozen=True)
class GradientCheck:
    seed: int
    finite_difference: float
    predicted: float

    @property
    def relative_error(self) -> float:
        return abs(self.finite_difference - self.predicted) / abs(self.predicted)


def gradient_consistency(sampled: SampledChart, w: np.ndarray, t: float = 1e-6, order: int = 2, seed: int = -1) -> GradientCheck:
    """Compare ``(E(f + t w nu) - E(f)) / t`` with ``GRADIENT_CONSTANT <-V, w>``."""
    b = general_bundle(sampled, order)
    E0 = willmore_energy(b).value
    nu = _embed(sampled, b.normal)
    moved = sampled.with_positions(sampled.positions + t * w[..., None] * nu)
    E1 = energy_of_positions(moved, order)
    V = normal_velocity(b)
    mu, Vc = align(b.area_factor, V)
    wf = Field(w, sampled.x, sampled.y, sampled.spacing, 0, sampled.periodic).crop(Vc.margin)
    inner = float(np.sum(-Vc.values * wf.values * mu.values) * Vc.cell_area)
    return GradientCheck(seed, (E1 - E0) / t, GRADIENT_CONSTANT * inner)
