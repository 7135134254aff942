"""Grid fields with margin bookkeeping and central-difference stencils.

A :class:`Field` only stores values on its *valid interior*. Every derivative
shrinks the array by the stencil radius on each non-periodic axis and bumps
``margin`` by the same amount, so values that a stencil could not legitimately
produce never exist.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

# Central-difference weights for offsets -r..r.
FIRST_DERIVATIVE = {
    2: np.array([-1 / 2, 0.0, 1 / 2]),
    4: np.array([1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12]),
    6: np.array([-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60]),
    8: np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280]),
}
SECOND_DERIVATIVE = {
    2: np.array([1.0, -2.0, 1.0]),
    4: np.array([-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12]),
    6: np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90]),
    8: np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560]),
}


class MarginError(ValueError):
    """Raised when a stencil would consume the whole remaining interior."""


def stencil_radius(order: int) -> int:
    if order not in FIRST_DERIVATIVE:
        raise ValueError(f"unsupported stencil order {order}; use one of {sorted(FIRST_DERIVATIVE)}")
    return order // 2


@dataclass(frozen=True, eq=False)
class Field:
    """Values on the valid interior of a uniform grid.

    ``values`` has shape ``(len(x), len(y), *components)`` with ``values[i, j]``
    located at ``(x[i], y[j])``.
    """

    values: np.ndarray
    x: np.ndarray
    y: np.ndarray
    spacing: tuple[float, float]
    margin: int = 0
    periodic: tuple[bool, bool] = (False, False)

    def __post_init__(self):
        if self.values.shape[:2] != (len(self.x), len(self.y)):
            raise ValueError("values shape does not match coordinates")
        if self.margin < 0:
            raise ValueError("margin must be nonnegative")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[:2]

    @property
    def cell_area(self) -> float:
        return self.spacing[0] * self.spacing[1]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def with_values(self, values) -> Field:
        values = np.asarray(values)
        return replace(self, values=values)

    def crop(self, margin: int) -> Field:
        """Drop boundary layers until this field sits at ``margin``."""
        extra = margin - self.margin
        if extra < 0:
            raise MarginError(f"cannot un-crop a field from margin {self.margin} to {margin}")
        if extra == 0:
            return self
        values, x, y = self.values, self.x, self.y
        if not self.periodic[0]:
            if 2 * extra >= len(x):
                raise MarginError("field too small to crop")
            values, x = values[extra:-extra], x[extra:-extra]
        if not self.periodic[1]:
            if 2 * extra >= len(y):
                raise MarginError("field too small to crop")
            values, y = values[:, extra:-extra], y[extra:-extra]
        return Field(values, x, y, self.spacing, margin, self.periodic)

    # arithmetic -----------------------------------------------------------
    def _binary(self, other, op):
        if isinstance(other, Field):
            a, b = align(self, other)
            return a.with_values(op(*_broadcast(a.values, b.values)))
        return self.with_values(op(self.values, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return self.with_values(other - self.values)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, np.divide)

    def __rtruediv__(self, other):
        return self.with_values(other / self.values)

    def __neg__(self):
        return self.with_values(-self.values)

    def __pow__(self, p):
        return self.with_values(self.values**p)

    def conj(self) -> Field:
        return self.with_values(np.conj(self.values))

    def abs(self) -> Field:
        return self.with_values(np.abs(self.values))

    @property
    def real(self) -> Field:
        return self.with_values(np.real(self.values))

    @property
    def imag(self) -> Field:
        return self.with_values(np.imag(self.values))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def rms(self) -> float:
        return float(np.sqrt(np.mean(np.abs(self.values) ** 2)))

    def component(self, k: int) -> Field:
        return self.with_values(self.values[..., k])

    def z(self) -> np.ndarray:
        """Complex chart coordinate ``x + iy`` on this field's grid."""
        X, Y = np.meshgrid(self.x, self.y, indexing="ij")
        return X + 1j * Y


def _broadcast(a: np.ndarray, b: np.ndarray):
    while a.ndim < b.ndim:
        a = a[..., None]
    while b.ndim < a.ndim:
        b = b[..., None]
    return a, b


def align(*fields: Field) -> tuple[Field, ...]:
    """Crop every field to the largest margin among them."""
    first = fields[0]
    for f in fields[1:]:
        if f.periodic != first.periodic or not np.allclose(f.spacing, first.spacing, rtol=1e-12, atol=0):
            raise ValueError("fields live on different grids")
    m = max(f.margin for f in fields)
    return tuple(f.crop(m) for f in fields)


def grid_field(values, x, y, periodic=(False, False)) -> Field:
    """Wrap a full-grid array (margin 0) as a :class:`Field`."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    hx = float(x[1] - x[0])
    hy = float(y[1] - y[0])
    return Field(np.asarray(values), x, y, (hx, hy), 0, tuple(periodic))


def sample_function(func, n: int, bounds=(-1.0, 1.0, -1.0, 1.0)) -> Field:
    """Evaluate ``func(z)`` on an ``n x n`` grid over ``bounds``."""
    x = np.linspace(bounds[0], bounds[1], n)
    y = np.linspace(bounds[2], bounds[3], n)
    X, Y = np.meshgrid(x, y, indexing="ij")
    return grid_field(func(X + 1j * Y), x, y)


# stencils -------------------------------------------------------------------
def _apply_axis(values: np.ndarray, axis: int, weights: np.ndarray, periodic: bool) -> np.ndarray:
    r = len(weights) // 2
    n = values.shape[axis]
    if periodic:
        out = np.zeros_like(values, dtype=np.result_type(values, weights))
        for k, w in zip(range(-r, r + 1), weights):
            if w != 0.0:
                out = out + w * np.roll(values, -k, axis=axis)
        return out
    if n - 2 * r < 1:
        raise MarginError(f"axis of length {n} cannot take a stencil of radius {r}")
    out = 0.0
    for k, w in zip(range(-r, r + 1), weights):
        if w != 0.0:
            sl = [slice(None)] * values.ndim
            sl[axis] = slice(r + k, n - r + k)
            out = out + w * values[tuple(sl)]
    return out


def _finish(field: Field, values: np.ndarray, r: int, cropped_axes: tuple[bool, bool]) -> Field:
    """Crop the axes the stencil did not already consume and advance the margin."""
    x, y = field.x, field.y
    if not field.periodic[0]:
        if not cropped_axes[0]:
            if values.shape[0] - 2 * r < 1:
                raise MarginError("field too small for stencil")
            values = values[r:-r]
        x = x[r:-r]
    if not field.periodic[1]:
        if not cropped_axes[1]:
            if values.shape[1] - 2 * r < 1:
                raise MarginError("field too small for stencil")
            values = values[:, r:-r]
        y = y[r:-r]
    return Field(values, x, y, field.spacing, field.margin + r, field.periodic)


def d1(field: Field, axis: int, order: int = 2) -> Field:
    """Central first derivative along ``axis`` (0 = x, 1 = y)."""
    r = stencil_radius(order)
    w = FIRST_DERIVATIVE[order] / field.spacing[axis]
    vals = _apply_axis(field.values, axis, w, field.periodic[axis])
    return _finish(field, vals, r, (axis == 0, axis == 1))


def d2(field: Field, axis: int, order: int = 2) -> Field:
    """Central second derivative along ``axis``."""
    r = stencil_radius(order)
    w = SECOND_DERIVATIVE[order] / field.spacing[axis] ** 2
    vals = _apply_axis(field.values, axis, w, field.periodic[axis])
    return _finish(field, vals, r, (axis == 0, axis == 1))


def dxy(field: Field, order: int = 2) -> Field:
    """Mixed derivative as a tensor-product stencil; consumes radius r once."""
    r = stencil_radius(order)
    w = FIRST_DERIVATIVE[order]
    vals = _apply_axis(field.values, 0, w / field.spacing[0], field.periodic[0])
    vals = _apply_axis(vals, 1, w / field.spacing[1], field.periodic[1])
    return _finish(field, vals, r, (True, True))


def laplacian(field: Field, order: int = 2) -> Field:
    a, b = d2(field, 0, order), d2(field, 1, order)
    return a + b


def wirtinger_dz(field: Field, order: int = 2) -> Field:
    """``(D_x - i D_y) / 2``."""
    return 0.5 * (d1(field, 0, order) - 1j * d1(field, 1, order))


def wirtinger_dzbar(field: Field, order: int = 2) -> Field:
    """``(D_x + i D_y) / 2``."""
    return 0.5 * (d1(field, 0, order) + 1j * d1(field, 1, order))


@dataclass(frozen=True, eq=False)
class SymTensorField:
    """Symmetric 2x2 tensor per grid point, stored as its three entries."""

    t11: Field
    t12: Field
    t22: Field

    def __post_init__(self):
        a, b, c = align(self.t11, self.t12, self.t22)
        object.__setattr__(self, "t11", a)
        object.__setattr__(self, "t12", b)
        object.__setattr__(self, "t22", c)

    @property
    def margin(self) -> int:
        return self.t11.margin

    def entry(self, i: int, j: int) -> Field:
        if (i, j) == (0, 0):
            return self.t11
        if (i, j) in ((0, 1), (1, 0)):
            return self.t12
        if (i, j) == (1, 1):
            return self.t22
        raise IndexError((i, j))

    def matrix(self) -> np.ndarray:
        """Shape ``(nx, ny, 2, 2)``; off-diagonals share storage so t12 == t21 exactly."""
        a, b, c = self.t11.values, self.t12.values, self.t22.values
        return np.stack([np.stack([a, b], -1), np.stack([b, c], -1)], -2)

    def crop(self, margin: int) -> SymTensorField:
        return SymTensorField(self.t11.crop(margin), self.t12.crop(margin), self.t22.crop(margin))
