"""Concentric-disk geometry shared by the mesh, solver, and analysis layers."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Geometry:
    """Radii of the data disk (r1), target disk (r2) and computational disk (r3).

    The data region omega is the disk of radius ``r1``, the continuation
    target B is the disk of radius ``r2`` and the computational domain is the
    disk of radius ``r3``.  Closed-form norm computations support ``dim == 3``;
    all finite element operations require ``dim == 2``.
    """

    r1: float
    r2: float
    r3: float
    dim: int = 2

    def __post_init__(self):
        if not (0.0 < self.r1 < self.r2 < self.r3):
            raise ValueError(
                "geometry radii must satisfy 0 < r1 < r2 < r3, got "
                f"({self.r1}, {self.r2}, {self.r3})"
            )
        if self.dim not in (2, 3):
            raise ValueError(f"geometry dim must be 2 or 3, got {self.dim}")

    @property
    def radii(self) -> tuple[float, float, float]:
        return (self.r1, self.r2, self.r3)
