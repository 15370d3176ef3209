"""Normalization sums and the incremental attraction field.

``total_rate`` is the sum of ``norm(u)**-alpha`` over all nonzero sites: the
total transmission rate out of any single vertex, and the normalization that
scales every limit theorem in this package.  ``WeightField`` maintains, for a
growing discovered set, the attraction weight of every undiscovered site

    W(z) = sum_i norm(z - v_i)**-alpha

together with its aggregate ``total``, which equals the jump rate of the
exploration process at every step.  Updates cost O(n) per discovery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List

import numpy as np

from . import torus
from .errors import ConfigError, EnumerationCapError, InvariantViolation
from .torus import Site, TorusConfig

#: Cadence of the full re-summation consistency check inside WeightField.
RESUM_INTERVAL = 100
#: Tolerance scale for the re-summation check: 1e-9 * n * max summand.
RESUM_RTOL = 1e-9


@lru_cache(maxsize=64)
def _weight_table(cfg: TorusConfig) -> np.ndarray:
    """Flat array of norm(u)**-alpha per site; 0 at the origin.

    Read-only shared cache; callers must not mutate the returned array.
    """
    norms = torus.norm_table(cfg)
    o = torus.origin_index(cfg)
    if cfg.alpha == 0.0:
        w = np.ones_like(norms)
    else:
        with np.errstate(divide="ignore"):
            w = norms**-cfg.alpha
    w[o] = 0.0
    w.setflags(write=False)
    return w


@lru_cache(maxsize=64)
def total_rate(cfg: TorusConfig) -> float:
    """Sum of norm(u)**-alpha over all n-1 nonzero sites (exactly rounded).

    Uses ``math.fsum``, so the result is the correctly rounded value of the
    exact real sum regardless of summation order.
    """
    return math.fsum(_weight_table(cfg))


@lru_cache(maxsize=64)
def _sorted_weights(cfg: TorusConfig) -> np.ndarray:
    """Weights of the nonzero sites in sites_by_distance order (nearest first)."""
    order = torus.sorted_order(cfg)
    w = _weight_table(cfg)[order]
    # The origin sorts first (norm 0, weight slot 0); drop it.
    return w[1:]


@lru_cache(maxsize=64)
def nearest_prefix_sums(cfg: TorusConfig) -> np.ndarray:
    """prefix[k] = sum of the k nearest nonzero-site weights, k = 0 .. n-1."""
    out = np.zeros(cfg.n, dtype=np.float64)
    np.cumsum(_sorted_weights(cfg), out=out[1:])
    out.setflags(write=False)
    return out


def nearest_rate_sum(cfg: TorusConfig, k: int) -> float:
    """Sum of norm(u)**-alpha over the k nearest nonzero sites.

    Ties at the cut are resolved by the deterministic sites_by_distance order.
    """
    if not (1 <= k <= cfg.n - 1):
        raise ConfigError(f"k must be in [1, n-1] = [1, {cfg.n - 1}], got {k}")
    return math.fsum(_sorted_weights(cfg)[:k])


def subtorus_rate_diagnostic(cfg: TorusConfig, k: int) -> float:
    """Diagnostic only: total rate of the sub-torus with volume k.

    Requires k to be a perfect d-th power.  This alternative reading of the
    partial sum is never used in any bound; the nearest-k prefix sum is.
    """
    side = round(k ** (1.0 / cfg.d))
    if side**cfg.d != k:
        raise ConfigError(f"k = {k} is not a perfect {cfg.d}-th power")
    return total_rate(TorusConfig(cfg.d, side, cfg.p, cfg.alpha))


@dataclass
class WeightField:
    """Attraction weights of undiscovered sites for one exploration run.

    Single-writer mutable state: one run owns one field.  ``values[i]`` is
    W(site i) for undiscovered i and exactly 0.0 for discovered i; ``total``
    is the Kahan-compensated sum of ``values`` and equals the exploration
    jump rate at every step.
    """

    cfg: TorusConfig
    values: np.ndarray
    discovered_mask: np.ndarray
    discovered_order: List[int]
    total: float
    _comp: float = 0.0
    _since_resum: int = 0

    @classmethod
    def initial(cls, source: Site, cfg: TorusConfig) -> "WeightField":
        """Field with only ``source`` discovered; total equals total_rate(cfg)."""
        if cfg.n > torus.ENUMERATION_CAP:
            raise EnumerationCapError(
                f"n = {cfg.n} exceeds the dense field cap {torus.ENUMERATION_CAP}"
            )
        src = torus.site_to_index(source, cfg)
        values = _rolled_weights(cfg, src).copy()
        mask = np.zeros(cfg.n, dtype=bool)
        mask[src] = True
        total = math.fsum(values)
        return cls(
            cfg=cfg,
            values=values,
            discovered_mask=mask,
            discovered_order=[src],
            total=total,
        )

    @property
    def n_discovered(self) -> int:
        return len(self.discovered_order)

    def _kahan_add(self, delta: float) -> None:
        y = delta - self._comp
        t = self.total + y
        self._comp = (t - self.total) - y
        self.total = t

    def discover(self, z: Site) -> None:
        self.discover_index(torus.site_to_index(z, self.cfg))

    def discover_index(self, z: int) -> None:
        """Move site z from undiscovered to discovered and update all weights."""
        if self.discovered_mask[z]:
            raise ConfigError(f"site index {z} is already discovered")
        w_z = float(self.values[z])
        self.discovered_mask[z] = True
        self.discovered_order.append(z)
        self.values[z] = 0.0
        # Every remaining undiscovered y gains norm(y - z)**-alpha.
        add = np.where(self.discovered_mask, 0.0, _rolled_weights(self.cfg, z))
        self.values += add
        self._kahan_add(float(np.sum(add)) - w_z)
        self._since_resum += 1
        if self._since_resum >= RESUM_INTERVAL:
            self._since_resum = 0
            self.check_resummation()

    def check_resummation(self) -> None:
        """Assert |total - sum(values)| <= 1e-9 * n * max summand."""
        fresh = float(np.sum(self.values))
        peak = float(self.values.max()) if self.values.size else 0.0
        tol = RESUM_RTOL * self.cfg.n * max(peak, 1.0)
        if abs(self.total - fresh) > tol:
            raise InvariantViolation(
                f"weight-field drift: total={self.total!r} resum={fresh!r} tol={tol!r}"
            )

    def discovered_sites(self) -> List[Site]:
        return [torus.index_to_site(i, self.cfg) for i in self.discovered_order]


@lru_cache(maxsize=8)
def _grid_shape(cfg: TorusConfig):
    return (cfg.m,) * cfg.d


def _rolled_weights(cfg: TorusConfig, center: int) -> np.ndarray:
    """Weight of every site toward ``center``: the origin table rolled by it.

    Entry y is norm(y - center)**-alpha (0 at y == center), obtained by a
    circular shift of the origin-centered table, O(n) per call.
    """
    base = _weight_table(cfg)
    shift = tuple(torus.index_to_site(center, cfg).coords)
    if all(s == 0 for s in shift):
        return base
    grid = base.reshape(_grid_shape(cfg))
    return np.roll(grid, shift, axis=tuple(range(cfg.d))).ravel()


def rate_bounds(cfg: TorusConfig, j: int) -> tuple[float, float]:
    """Deterministic sandwich for the jump rate from a j-vertex cluster.

    Lower bound j * (total_rate - nearest_rate_sum(j)), upper bound
    j * total_rate; every exploration step must land inside (up to 1e-9
    relative float slack).
    """
    rn = total_rate(cfg)
    rj = float(nearest_prefix_sums(cfg)[j])
    return j * (rn - rj), j * rn
