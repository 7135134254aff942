"""Synthetic complex fields with known zero sets, on ``[-1, 1]^2``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fields import Field, sample_function


@dataclass(frozen=True)
class SyntheticCase:
    name: str
    func: Callable[[np.ndarray], np.ndarray]
    points: tuple[tuple[float, float, int, int], ...] = ()  # (x, y, order, winding)
    curves: int = 0
    description: str = ""

    def field(self, n: int) -> Field:
        return sample_function(self.func, n)


def _line(z):
    return z.real * (1 + 1j)


def _curved_line(z):
    return z.real * (1 + 1j) * (1 + 0.2 * np.sin(z.imag))


SUITE: dict[str, SyntheticCase] = {
    c.name: c
    for c in (
        SyntheticCase("z1", lambda z: z, ((0.0, 0.0, 1, 1),), description="simple zero"),
        SyntheticCase("z2", lambda z: z**2, ((0.0, 0.0, 2, 2),), description="double zero"),
        SyntheticCase("z3", lambda z: z**3, ((0.0, 0.0, 3, 3),), description="triple zero"),
        SyntheticCase("zbar", np.conj, ((0.0, 0.0, 1, -1),), description="antiholomorphic simple zero"),
        SyntheticCase(
            "z2_times_shift",
            lambda z: z * (z - 0.5),
            ((0.0, 0.0, 1, 1), (0.5, 0.0, 1, 1)),
            description="two simple zeros",
        ),
        SyntheticCase("line", _line, curves=1, description="zero along x = 0"),
        SyntheticCase("curved_line", _curved_line, curves=1, description="zero along x = 0, modulated"),
    )
}


def synthetic_field(name: str, n: int) -> Field:
    try:
        return SUITE[name].field(n)
    except KeyError:
        raise KeyError(f"unknown synthetic field {name!r}; known: {sorted(SUITE)}") from None
