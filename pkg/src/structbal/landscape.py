"""Dissonance over the sphere of symmetric zero-diagonal 3 x 3 matrices.

A symmetric zero-diagonal 3 x 3 matrix is determined by (x12, x23, x31) and
``D = -trace(X^3) = -6 x12 x23 x31``. The default grid lives on the
coordinate sphere ``x12^2 + x23^2 + x31^2 = 1``, whose matrices have
Frobenius norm sqrt(2); ``matrix_norm=True`` rescales to unit Frobenius norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

# sign patterns (x12, x23, x31) of the balanced triangles
BALANCED_SIGNS = ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1))


@dataclass(frozen=True, eq=False)
class LandscapeGrid:
    lon: np.ndarray    # (n_lat, n_lon)
    lat: np.ndarray
    coords: np.ndarray  # (n_lat, n_lon, 3): x12, x23, x31
    d: np.ndarray
    matrix_norm: bool
    stereo: Optional[np.ndarray] = None  # (n_lat, n_lon, 2)

    @property
    def shape(self) -> tuple[int, int]:
        return self.d.shape

    def rows(self):
        """Yield one tuple per grid point in row-major (latitude, longitude) order."""
        n_lat, n_lon = self.shape
        for j in range(n_lat):
            for i in range(n_lon):
                row = (self.lon[j, i], self.lat[j, i], *self.coords[j, i], self.d[j, i])
                if self.stereo is not None:
                    row = row + tuple(self.stereo[j, i])
                yield row

    def header(self) -> list[str]:
        h = ["lon", "lat", "x12", "x23", "x31", "D"]
        return h + ["u", "v"] if self.stereo is not None else h


def landscape_grid(n_lon: int = 400, n_lat: int = 200, stereographic: bool = False,
                   matrix_norm: bool = False) -> LandscapeGrid:
    """Cell-centered longitude/latitude grid with D at every point.

    Stereographic coordinates are taken from the north pole (0, 0, 1) of the
    unit coordinate sphere: ``(u, v) = (x12, x23) / (1 - x31)``.
    """
    if n_lon < 4 or n_lat < 2:
        raise ValueError("grid too coarse")
    lon = -math.pi + 2 * math.pi * (np.arange(n_lon) + 0.5) / n_lon
    lat = -math.pi / 2 + math.pi * (np.arange(n_lat) + 0.5) / n_lat
    LON, LAT = np.meshgrid(lon, lat)
    unit = np.stack([np.cos(LAT) * np.cos(LON), np.cos(LAT) * np.sin(LON), np.sin(LAT)],
                    axis=-1)
    coords = unit / math.sqrt(2.0) if matrix_norm else unit
    d = -6.0 * coords[..., 0] * coords[..., 1] * coords[..., 2]
    stereo = None
    if stereographic:
        denom = 1.0 - unit[..., 2]
        stereo = np.stack([unit[..., 0] / denom, unit[..., 1] / denom], axis=-1)
    return LandscapeGrid(LON, LAT, coords, d, matrix_norm, stereo)


def local_minima(grid: LandscapeGrid) -> list[tuple[int, int]]:
    """(lat index, lon index) of points no larger than their 8 neighbours.

    Longitude wraps around; latitude rows at the poles have no outer
    neighbours. Sorted by D, then by index.
    """
    d = grid.d
    n_lat, n_lon = d.shape
    padded = np.pad(d, ((1, 1), (0, 0)), constant_values=np.inf)
    is_min = np.ones_like(d, dtype=bool)
    for dj in (-1, 0, 1):
        for di in (-1, 0, 1):
            if dj == 0 and di == 0:
                continue
            nb = np.roll(padded, (-dj, -di), axis=(0, 1))[1:-1]
            is_min &= d <= nb
    pts = [(int(j), int(i)) for j, i in np.argwhere(is_min)]
    return sorted(pts, key=lambda p: (d[p], p))


def balanced_directions() -> np.ndarray:
    """Unit coordinate vectors (+-1, +-1, +-1)/sqrt(3) of the balanced triangles."""
    return np.array(BALANCED_SIGNS, dtype=float) / math.sqrt(3.0)


def _cell_of(v: np.ndarray, n_lon: int, n_lat: int) -> tuple[float, float]:
    lon = math.atan2(v[1], v[0])
    lat = math.asin(max(-1.0, min(1.0, v[2])))
    return ((lat + math.pi / 2) / math.pi * n_lat - 0.5,
            (lon + math.pi) / (2 * math.pi) * n_lon - 0.5)


def _cell_distance(j, i, cj, ci, n_lon):
    dlon = abs(i - ci) % n_lon
    return abs(j - cj), min(dlon, n_lon - dlon)


def minima_vs_balanced(grid: LandscapeGrid) -> dict:
    """Compare grid local minima of D with the four balanced directions.

    Returns ``{"matches": [...], "stray_minima": [...]}``. Each match gives
    a target sign pattern, its nearest local minimum and the distance in
    grid cells along latitude and longitude. ``stray_minima`` lists local
    minima farther than one cell from every balanced direction.
    """
    n_lat, n_lon = grid.shape
    mins = local_minima(grid)
    cells = [_cell_of(t, n_lon, n_lat) for t in balanced_directions()]
    matches = []
    for signs, (cj, ci) in zip(BALANCED_SIGNS, cells):
        best = min(mins, key=lambda p: (max(_cell_distance(*p, cj, ci, n_lon)), p))
        dlat, dlon = _cell_distance(*best, cj, ci, n_lon)
        matches.append({"signs": list(signs), "lat_index": best[0], "lon_index": best[1],
                        "cells_lat": dlat, "cells_lon": dlon,
                        "D": float(grid.d[best])})
    stray = [
        {"lat_index": j, "lon_index": i, "D": float(grid.d[j, i])}
        for j, i in mins
        if all(max(_cell_distance(j, i, cj, ci, n_lon)) > 1.0 for cj, ci in cells)
    ]
    return {"matches": matches, "stray_minima": stray}
